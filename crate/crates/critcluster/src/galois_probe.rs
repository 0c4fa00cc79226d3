//! Probe of the hidden symmetry of the curve γ: second-order Taylor coefficients of the
//! squared distances of γ(x) lie in Q[p_x], and the relabeling ς = (B,C)(D,F) composed
//! with the conjugation p_x ↦ −p_x maps the coefficient table onto itself.
//!
//! Coefficients are computed with second-order jets in the two perturbation parameters of
//! each pair, so they carry only rounding error. Recognition in Q[p_x] is a bounded
//! search and is evidence, not proof.

use std::collections::BTreeMap;

use num_integer::Roots;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::cyl_clusters::{gamma_cluster, C6_LABELS};
use crate::geom3::Vec3;
use crate::{Error, Result};

/// Residual allowed per unit denominator when matching `c·r ≈ a_num + q·p`.
pub const RECOVERY_TOL: f64 = 1e-13;
pub const DEFAULT_DEN_BOUND: i64 = 1000;
/// ς = (B,C)(D,F) on the line indices A..F.
pub const SIGMA: [usize; 6] = [0, 2, 1, 5, 4, 3];

fn check_open_unit(x: Rational64) -> Result<()> {
    if x <= Rational64::zero() || x >= Rational64::from_integer(1) {
        return Err(Error::Domain(format!("x = {x} must lie in (0, 1)")));
    }
    Ok(())
}

fn radicand(x: Rational64) -> Rational64 {
    let one = Rational64::from_integer(1);
    (one + x) * (one + Rational64::from_integer(3) * x) / Rational64::from_integer(3)
}

fn rational_sqrt(q: Rational64) -> Option<Rational64> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (*q.numer(), *q.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    (rn * rn == n && rd * rd == d).then(|| Rational64::new(rn, rd))
}

fn to_f64(q: Rational64) -> f64 {
    q.to_f64().expect("i64 ratios convert")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Px {
    pub value: f64,
    /// `Some` when the radicand is the square of a rational.
    #[serde(serialize_with = "ser_opt_ratio")]
    pub rational: Option<Rational64>,
}

/// `p_x = √((1+x)(1+3x)/3)`, with a perfect-square test on the rational radicand.
pub fn p_x(x: Rational64) -> Result<Px> {
    if x <= Rational64::zero() || x > Rational64::from_integer(1) {
        return Err(Error::Domain(format!("x = {x} must lie in (0, 1]")));
    }
    let r = radicand(x);
    Ok(Px { value: to_f64(r).sqrt(), rational: rational_sqrt(r) })
}

/// θ_δ = √((1+x) / (3x(1−x)(1+7x+4x²))).
pub fn theta_delta(x: Rational64) -> Result<f64> {
    let one = Rational64::from_integer(1);
    if x == Rational64::zero() || x == one {
        return Err(Error::Domain(format!("θ_δ has a pole at x = {x}")));
    }
    check_open_unit(x)?;
    let den = Rational64::from_integer(3) * x * (one - x) * (one + Rational64::from_integer(7) * x + Rational64::from_integer(4) * x * x);
    Ok(to_f64((one + x) / den).sqrt())
}

/// `a + b·p` with rational `a`, `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFieldElement {
    #[serde(serialize_with = "ser_ratio")]
    pub a: Rational64,
    #[serde(serialize_with = "ser_ratio")]
    pub b: Rational64,
    pub p: f64,
}

impl QuadraticFieldElement {
    pub fn value(&self) -> f64 {
        to_f64(self.a) + to_f64(self.b) * self.p
    }

    pub fn conjugate(&self) -> Self {
        QuadraticFieldElement { b: -self.b, ..*self }
    }

    pub fn denominator(&self) -> i64 {
        num_integer::lcm(*self.a.denom(), *self.b.denom())
    }
}

fn ser_ratio<S: serde::Serializer>(q: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn ser_opt_ratio<S: serde::Serializer>(q: &Option<Rational64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&q.to_string()),
        None => s.serialize_none(),
    }
}

/// Best rational approximation with denominator at most `bound`, by continued fractions.
pub fn best_rational(c: f64, bound: i64) -> Option<Rational64> {
    if !c.is_finite() || c.abs() > 1e15 {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = c;
    let mut best = None;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a.checked_mul(h1)?.checked_add(h0)?, a.checked_mul(k1)?.checked_add(k0)?);
        if k2 > bound {
            break;
        }
        best = Some(Rational64::new(h2, k2));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        v = 1.0 / frac;
    }
    best
}

/// Finds `c ≈ a + b·p` with `a = n/r`, `b = q/r`, `r ≤ den_bound`, `|q| ≤ 16r`, taking the
/// smallest denominator, then the smallest `|q|`.
pub fn rational_recover(c: f64, p: f64, den_bound: i64) -> Result<Option<QuadraticFieldElement>> {
    if let Some(q) = best_rational(p, den_bound) {
        if (to_f64(q) - p).abs() < 1e-13 * p.abs().max(1.0) {
            return Err(Error::Domain(format!("p = {p} is numerically rational ({q})")));
        }
    }
    let scale = c.abs().max(1.0);
    for r in 1..=den_bound {
        let rf = r as f64;
        let tol = RECOVERY_TOL * rf * scale;
        for k in 0..=16 * r {
            for q in if k == 0 { vec![0] } else { vec![k, -k] } {
                let rest = c * rf - q as f64 * p;
                let n = rest.round();
                if (rest - n).abs() < tol {
                    return Ok(Some(QuadraticFieldElement {
                        a: Rational64::new(n as i64, r),
                        b: Rational64::new(q, r),
                        p,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Value, gradient and Hessian in two variables, truncated at second order.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    g: [f64; 2],
    h: [[f64; 2]; 2],
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet { v, g: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    fn scale(self, s: f64) -> Self {
        Jet { v: self.v * s, g: self.g.map(|x| x * s), h: self.h.map(|r| r.map(|x| x * s)) }
    }

    /// `(cos θs, sin θs)` for the variable `s_i`.
    fn cos_sin(i: usize, theta: f64) -> (Jet, Jet) {
        let mut c = Jet::constant(1.0);
        c.h[i][i] = -theta * theta;
        let mut s = Jet::constant(0.0);
        s.g[i] = theta;
        (c, s)
    }

    fn recip(self) -> Self {
        let f = 1.0 / self.v;
        let mut out = Jet { v: f, g: [0.0; 2], h: [[0.0; 2]; 2] };
        for a in 0..2 {
            out.g[a] = -f * f * self.g[a];
            for b in 0..2 {
                out.h[a][b] = 2.0 * f * f * f * self.g[a] * self.g[b] - f * f * self.h[a][b];
            }
        }
        out
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for a in 0..2 {
            r.g[a] += o.g[a];
            for b in 0..2 {
                r.h[a][b] += o.h[a][b];
            }
        }
        r
    }
}

impl std::ops::Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o.scale(-1.0)
    }
}

impl std::ops::Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for a in 0..2 {
            r.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in 0..2 {
                r.h[a][b] = self.h[a][b] * o.v + self.v * o.h[a][b] + self.g[a] * o.g[b] + self.g[b] * o.g[a];
            }
        }
        r
    }
}

type JetVec = [Jet; 3];

fn jet_dir(tau: &Vec3, w: &Vec3, i: usize, theta: f64) -> JetVec {
    let (c, s) = Jet::cos_sin(i, theta);
    [0, 1, 2].map(|k| c.scale(tau[k]) + s.scale(w[k]))
}

fn jet_cross(a: &JetVec, b: &JetVec) -> JetVec {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn jet_dot(a: &JetVec, b: &JetVec) -> Jet {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Second-order Taylor coefficients `[c_kk, c_kl, c_ll]` of the squared distance between
/// lines `k` and `l` when each turns about its radius by `θ·s`.
fn pair_coefficients(points: &[Vec3], dirs: &[Vec3], k: usize, l: usize, theta: f64) -> Result<[f64; 3]> {
    let dk = jet_dir(&dirs[k], &points[k].cross(&dirs[k]), 0, theta);
    let dl = jet_dir(&dirs[l], &points[l].cross(&dirs[l]), 1, theta);
    let n = jet_cross(&dk, &dl);
    let delta = points[l] - points[k];
    let nd = n[0].scale(delta.x) + n[1].scale(delta.y) + n[2].scale(delta.z);
    let nn = jet_dot(&n, &n);
    if nn.v < 1e-20 {
        return Err(Error::Numerical(format!("lines {k} and {l} are parallel")));
    }
    let d2 = nd * nd * nn.recip();
    Ok([0.5 * d2.h[0][0], d2.h[0][1], 0.5 * d2.h[1][1]])
}

/// Coefficient of `s_i·s_j` (i ≤ j) in the squared distance of the pair `(k, l)`, k < l.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoefficientKey {
    pub pair: (usize, usize),
    pub monomial: (usize, usize),
}

impl CoefficientKey {
    fn new(k: usize, l: usize, i: usize, j: usize) -> Self {
        CoefficientKey { pair: (k.min(l), k.max(l)), monomial: (i.min(j), i.max(j)) }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = |i: usize| perm[i];
        CoefficientKey::new(m(self.pair.0), m(self.pair.1), m(self.monomial.0), m(self.monomial.1))
    }

    pub fn label(&self) -> String {
        let c = |i: usize| C6_LABELS[i];
        format!("d2({}{})[s{}*s{}]", c(self.pair.0), c(self.pair.1), c(self.monomial.0), c(self.monomial.1))
    }
}

/// All 45 second-order coefficients of the 15 squared distances of γ(x) under
/// θ_δ-normalized turns of each line.
pub fn second_order_table(x: Rational64) -> Result<BTreeMap<CoefficientKey, f64>> {
    check_open_unit(x)?;
    let theta = theta_delta(x)?;
    let c = gamma_cluster(to_f64(x))?;
    let points: Vec<Vec3> = c.lines().iter().map(|l| l.point()).collect();
    let dirs: Vec<Vec3> = c.lines().iter().map(|l| l.direction()).collect();
    let mut table = BTreeMap::new();
    for k in 0..6 {
        for l in k + 1..6 {
            let [ckk, ckl, cll] = pair_coefficients(&points, &dirs, k, l, theta)?;
            table.insert(CoefficientKey::new(k, l, k, k), ckk);
            table.insert(CoefficientKey::new(k, l, k, l), ckl);
            table.insert(CoefficientKey::new(k, l, l, l), cll);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Symmetric,
    NotSymmetric,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientEntry {
    pub label: String,
    pub value: f64,
    pub recovered: Option<QuadraticFieldElement>,
}

/// Recognition of `T(e) + T(ςe)` in Q and `(T(e) − T(ςe))/p` in Q by continued fractions,
/// which ς∘conjugation invariance predicts and which reaches far larger denominators than
/// the joint search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatePairEvidence {
    pub den_bound: i64,
    pub all_rational: bool,
    pub max_denominator: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    pub x: String,
    pub p: f64,
    pub theta_delta: f64,
    pub den_bound: i64,
    pub verdict: Verdict,
    /// Whether ς alone maps the coefficient values onto themselves.
    pub sigma_alone_invariant: bool,
    pub entries: Vec<CoefficientEntry>,
    /// Labels of the coefficients with no fit at `den_bound`.
    pub failures: Vec<String>,
    /// Labels whose recovered image under ς differs from the conjugate.
    pub mismatches: Vec<String>,
    pub conjugate_pairs: ConjugatePairEvidence,
}

pub const PAIR_EVIDENCE_BOUND: i64 = 10_000_000;

pub fn sigma_conjugation_check(x: Rational64, den_bound: i64) -> Result<SigmaReport> {
    check_open_unit(x)?;
    let px = p_x(x)?;
    if let Some(q) = px.rational {
        return Err(Error::Domain(format!("p_x = {q} is rational at x = {x}")));
    }
    let p = px.value;
    let table = second_order_table(x)?;
    let items: Vec<(CoefficientKey, f64)> = table.iter().map(|(k, v)| (*k, *v)).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    let fits: Vec<Result<Option<QuadraticFieldElement>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let items = &items;
                scope.spawn(move || {
                    (w..items.len()).step_by(workers).map(|i| (i, rational_recover(items[i].1, p, den_bound))).collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().expect("recovery worker")).collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
    });
    let mut entries = Vec::with_capacity(table.len());
    let mut recovered = BTreeMap::new();
    let mut failures = Vec::new();
    for ((key, value), r) in items.into_iter().zip(fits) {
        let r = r?;
        match r {
            Some(e) => {
                recovered.insert(key, e);
            }
            None => failures.push(key.label()),
        }
        entries.push(CoefficientEntry { label: key.label(), value, recovered: r });
    }
    let scale = table.values().fold(1.0f64, |m, v| m.max(v.abs()));
    let sigma_alone_invariant = table.iter().all(|(k, v)| (table[&k.permuted(&SIGMA)] - v).abs() < 1e-9 * scale);

    let mut mismatches = Vec::new();
    for (k, e) in &recovered {
        if let Some(img) = recovered.get(&k.permuted(&SIGMA)) {
            let c = e.conjugate();
            if img.a != c.a || img.b != c.b {
                mismatches.push(k.label());
            }
        }
    }
    let verdict = if !failures.is_empty() {
        Verdict::Inconclusive
    } else if mismatches.is_empty() {
        Verdict::Symmetric
    } else {
        Verdict::NotSymmetric
    };

    let mut all_rational = true;
    let mut max_denominator = 1;
    for (k, v) in &table {
        let w = table[&k.permuted(&SIGMA)];
        for t in [v + w, (v - w) / p] {
            match best_rational(t, PAIR_EVIDENCE_BOUND) {
                Some(q) if (to_f64(q) - t).abs() < 1e-13 * t.abs().max(1.0) => {
                    max_denominator = max_denominator.max(*q.denom());
                }
                _ => all_rational = false,
            }
        }
    }

    Ok(SigmaReport {
        x: x.to_string(),
        p,
        theta_delta: theta_delta(x)?,
        den_bound,
        verdict,
        sigma_alone_invariant,
        entries,
        failures,
        mismatches,
        conjugate_pairs: ConjugatePairEvidence { den_bound: PAIR_EVIDENCE_BOUND, all_rational, max_denominator },
    })
}

/// The unperturbed distance table of γ(x), used to anchor the labeling: at x = 1 the
/// cluster is the regular hexagon and ς is one of its reflections.
pub fn distance_table(x: f64) -> Result<BTreeMap<(usize, usize), f64>> {
    let c = gamma_cluster(x)?;
    Ok(c.pair_distances().into_iter().map(|(i, j, d)| ((i, j), d)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyl_clusters::perturb;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn p_x_examples() {
        let h = p_x(q(1, 2)).unwrap();
        assert!((h.value - 5f64.sqrt() / 2.0).abs() < 1e-15 && h.rational.is_none());
        assert!((p_x(q(1, 1)).unwrap().value - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((p_x(q(1, 1_000_000)).unwrap().value - 1.0 / 3f64.sqrt()).abs() < 2e-6);
        assert_eq!(p_x(q(1, 5)).unwrap().rational, Some(q(4, 5)));
    }

    #[test]
    fn theta_delta_examples() {
        assert!((theta_delta(q(1, 2)).unwrap() - 2.0 / 11f64.sqrt()).abs() < 1e-15);
        let expect = ((5.0 / 4.0) / (3.0 * 0.25 * 0.75 * 48.0 / 16.0f64)).sqrt();
        assert!((theta_delta(q(1, 4)).unwrap() - expect).abs() < 1e-14);
        assert!(theta_delta(q(0, 1)).is_err() && theta_delta(q(1, 1)).is_err());
    }

    #[test]
    fn recover_examples() {
        let p = 5f64.sqrt() / 2.0;
        let e = rational_recover(1.0 / 3.0 + 2.0 * p, p, 100).unwrap().unwrap();
        assert_eq!((e.a, e.b), (q(1, 3), q(2, 1)));
        assert!(rational_recover(std::f64::consts::PI, p, 1000).unwrap().is_none());
        assert!(rational_recover(1.0, 0.8, 100).is_err());
    }

    #[test]
    fn jets_match_finite_differences() {
        let x = q(1, 2);
        let table = second_order_table(x).unwrap();
        let theta = theta_delta(x).unwrap();
        let c = gamma_cluster(0.5).unwrap();
        let d2 = |v: &DVector<f64>, i: usize, j: usize| perturb(&c, v, 1.0).unwrap().pair_distance(i, j).powi(2);
        let h = 1e-3;
        for (k, l) in [(0, 1), (0, 3), (1, 5), (2, 4)] {
            let mut v = DVector::zeros(18);
            let f0 = d2(&v, k, l);
            v[3 * k + 2] = theta * h;
            let fp = d2(&v, k, l);
            v[3 * k + 2] = -theta * h;
            let fm = d2(&v, k, l);
            let ckk = (fp - 2.0 * f0 + fm) / (2.0 * h * h);
            assert!((ckk - table[&CoefficientKey::new(k, l, k, k)]).abs() < 1e-5, "{k}{l}");
        }
    }

    #[test]
    fn hexagon_is_sigma_symmetric() {
        let t = distance_table(1.0).unwrap();
        for (&(i, j), d) in &t {
            let (a, b) = (SIGMA[i].min(SIGMA[j]), SIGMA[i].max(SIGMA[j]));
            assert!((t[&(a, b)] - d).abs() < 1e-10);
        }
    }

    #[test]
    fn rational_p_is_rejected() {
        assert!(matches!(sigma_conjugation_check(q(1, 5), 100), Err(Error::Domain(_))));
    }

    #[test]
    fn sigma_alone_breaks_on_the_curve() {
        let r = sigma_conjugation_check(q(1, 2), 10).unwrap();
        assert!(!r.sigma_alone_invariant);
        assert!(r.conjugate_pairs.all_rational, "{:?}", r.conjugate_pairs);
    }

    proptest! {
        #[test]
        fn recover_round_trips(an in -20i64..=20, bn in -8i64..=8, ad in 1i64..=5, bd in 1i64..=5) {
            let p = 5f64.sqrt() / 2.0;
            let (a, b) = (q(an, ad), q(bn, bd));
            let c = to_f64(a) + to_f64(b) * p;
            let e = rational_recover(c, p, 50).unwrap().unwrap();
            prop_assert_eq!((e.a, e.b), (a, b));
        }

        #[test]
        fn radicand_identity(n in 1i64..200, d in 1i64..200) {
            prop_assume!(n < d);
            let x = q(n, d);
            let r = radicand(x);
            prop_assert_eq!(r * Rational64::from_integer(3), (Rational64::from_integer(1) + x) * (Rational64::from_integer(1) + Rational64::from_integer(3) * x));
            let p = p_x(x).unwrap();
            prop_assert!((p.value * p.value * 3.0 - to_f64(r) * 3.0).abs() < 1e-12);
        }
    }
}
