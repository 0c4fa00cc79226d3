//! Touch-point configurations of equal balls around the unit ball.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion};
use serde::Serialize;

use crate::geom3::{SpherePoint, Vec3};
use crate::min_morse::{self, bundle_from_ball_config};
use crate::optimize::loglog_slope;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BallTouchConfig {
    points: Vec<Vec3>,
    pub label: Option<String>,
}

impl BallTouchConfig {
    pub fn new(points: Vec<SpherePoint>) -> Result<Self> {
        BallTouchConfig::from_vectors(points.iter().map(|p| p.embed()).collect())
    }

    /// Points are normalized onto the unit sphere.
    pub fn from_vectors(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Domain(format!("a configuration needs at least 2 points, got {}", points.len())));
        }
        let mut out = Vec::with_capacity(points.len());
        for p in points {
            let n = p.norm();
            if !(n > 1e-12) || !n.is_finite() {
                return Err(Error::Domain("touch points must be nonzero finite vectors".into()));
            }
            out.push(p / n);
        }
        Ok(BallTouchConfig { points: out, label: None })
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// δ: minimum chordal distance between touch points.
    pub fn delta(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                d = d.min((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }

    pub fn contact_pairs(&self, tol: f64) -> Vec<(usize, usize)> {
        let d = self.delta();
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if (self.points[i] - self.points[j]).norm() <= d + tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> Self {
        BallTouchConfig { points: self.points.iter().map(|p| r * p).collect(), label: self.label.clone() }
    }

    /// Ball radius at which neighbours at distance δ touch.
    pub fn touching_radius(&self) -> Result<f64> {
        crate::geom3::ball_radius_from_angle(2.0 * (self.delta() / 2.0).min(1.0).asin())
    }
}

pub fn delta(p: &BallTouchConfig) -> f64 {
    p.delta()
}

/// Orthonormal tangent frame at a unit vector, continuous away from the switch at |z| = 0.9.
pub fn tangent_frame(x: &Vec3) -> (Vec3, Vec3) {
    let a = if x.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let e1 = a.cross(x).normalize();
    (e1, x.cross(&e1))
}

/// Moves `x` along the geodesic with initial velocity `a·e1 + b·e2`.
pub fn perturb_point(x: &Vec3, a: f64, b: f64) -> Vec3 {
    let (e1, e2) = tangent_frame(x);
    let w = e1 * a + e2 * b;
    Rotation3::new(x.cross(&w)) * x
}

pub fn perturb(p: &BallTouchConfig, v: &DVector<f64>, t: f64) -> Result<BallTouchConfig> {
    if v.len() != 2 * p.len() {
        return Err(Error::Domain(format!("chart vector has length {}, expected {}", v.len(), 2 * p.len())));
    }
    let points = p.points.iter().enumerate().map(|(i, x)| perturb_point(x, t * v[2 * i], t * v[2 * i + 1])).collect();
    Ok(BallTouchConfig { points, label: p.label.clone() })
}

pub fn rotation_generators(p: &BallTouchConfig) -> Vec<DVector<f64>> {
    [Vec3::x(), Vec3::y(), Vec3::z()]
        .iter()
        .map(|w| {
            let mut g = DVector::zeros(2 * p.len());
            for (i, x) in p.points.iter().enumerate() {
                let (e1, e2) = tangent_frame(x);
                let m = w.cross(x);
                g[2 * i] = m.dot(&e1);
                g[2 * i + 1] = m.dot(&e2);
            }
            g
        })
        .collect()
}

/// Two-sided Hausdorff distance between the embedded point sets.
pub fn hausdorff_distance(p: &BallTouchConfig, q: &BallTouchConfig) -> f64 {
    hausdorff(&p.points, &q.points)
}

fn hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
    let one_sided = |a: &[Vec3], b: &[Vec3]| {
        a.iter().map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

pub const QUOTIENT_STARTS: usize = 32;

/// Upper bound on `inf_g hausdorff(p, g·q)`, from the identity plus `starts` random
/// rotations, each refined by nearest-neighbour Procrustes steps and a compass search.
pub fn quotient_distance(p: &BallTouchConfig, q: &BallTouchConfig, starts: usize, seed: u64) -> f64 {
    let mut rng = rng::seeded(seed, 0x9d);
    let mut best = hausdorff(&p.points, &q.points);
    for s in 0..=starts {
        let start = if s == 0 {
            UnitQuaternion::identity()
        } else {
            random_rotation(&mut rng)
        };
        best = best.min(refine_alignment(&p.points, &q.points, start));
    }
    best
}

fn random_rotation(rng: &mut rand_chacha::ChaCha8Rng) -> UnitQuaternion<f64> {
    let v = rng::gaussian_vector(rng, 4);
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(v[0], v[1], v[2], v[3]))
}

fn refine_alignment(p: &[Vec3], q: &[Vec3], start: UnitQuaternion<f64>) -> f64 {
    let apply = |r: &UnitQuaternion<f64>| q.iter().map(|y| r * y).collect::<Vec<_>>();
    let mut r = start;
    let mut best = hausdorff(p, &apply(&r));
    for _ in 0..20 {
        let moved = apply(&r);
        let mut h = Matrix3::zeros();
        for x in p {
            let k = (0..moved.len()).min_by(|&a, &b| (x - moved[a]).norm().total_cmp(&(x - moved[b]).norm())).unwrap();
            h += x * q[k].transpose();
        }
        let svd = h.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut d = Matrix3::identity();
        d[(2, 2)] = (u * vt).determinant().signum();
        let cand = UnitQuaternion::from_matrix(&(u * d * vt));
        let val = hausdorff(p, &apply(&cand));
        if val < best - 1e-15 {
            best = val;
            r = cand;
        } else {
            break;
        }
    }
    let mut step = 0.05;
    while step > 1e-10 {
        let mut improved = false;
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            for sgn in [1.0, -1.0] {
                let cand = UnitQuaternion::new(axis * (sgn * step)) * r;
                let val = hausdorff(p, &apply(&cand));
                if val < best {
                    best = val;
                    r = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BallClusterName {
    I12,
    A66,
    Necklace12,
    Fcc,
    Hcp,
    T3,
    Flex5,
}

impl BallClusterName {
    pub const ALL: [BallClusterName; 7] = [
        BallClusterName::I12,
        BallClusterName::A66,
        BallClusterName::Necklace12,
        BallClusterName::Fcc,
        BallClusterName::Hcp,
        BallClusterName::T3,
        BallClusterName::Flex5,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BallClusterName::I12 => "I12",
            BallClusterName::A66 => "A66",
            BallClusterName::Necklace12 => "necklace12",
            BallClusterName::Fcc => "FCC",
            BallClusterName::Hcp => "HCP",
            BallClusterName::T3 => "T3",
            BallClusterName::Flex5 => "flex5",
        }
    }
}

impl FromStr for BallClusterName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BallClusterName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

fn equator(n: usize, offset: f64) -> Vec<Vec3> {
    (0..n).map(|k| {
        let a = offset + 2.0 * PI * k as f64 / n as f64;
        Vec3::new(a.cos(), a.sin(), 0.0)
    }).collect()
}

pub const GOLDEN: f64 = 1.618_033_988_749_895;

pub fn icosahedron_vertices() -> Vec<Vec3> {
    let g = GOLDEN;
    let mut v = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            v.push(Vec3::new(0.0, s1, s2 * g));
            v.push(Vec3::new(s1, s2 * g, 0.0));
            v.push(Vec3::new(s2 * g, 0.0, s1));
        }
    }
    v
}

/// Latitude of the rings of the uniform hexagonal antiprism inscribed in the unit sphere.
pub fn antiprism_latitude() -> f64 {
    let ring = |phi: f64| phi.cos();
    let cross = |phi: f64| {
        let (s, c) = phi.sin_cos();
        (2.0 - 2.0 * (c * c * (PI / 6.0).cos() - s * s)).sqrt()
    };
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    // ring - cross is positive at 0 and negative at π/2
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if ring(mid) - cross(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn named_ball_cluster(name: BallClusterName) -> BallTouchConfig {
    let pts = match name {
        BallClusterName::I12 => icosahedron_vertices(),
        BallClusterName::A66 => {
            let phi = antiprism_latitude();
            let (s, c) = phi.sin_cos();
            let upper = equator(6, 0.0).into_iter().map(|v| Vec3::new(c * v.x, c * v.y, s));
            let lower = equator(6, PI / 6.0).into_iter().map(|v| Vec3::new(c * v.x, c * v.y, -s));
            upper.chain(lower).collect()
        }
        BallClusterName::Necklace12 => equator(12, 0.0),
        BallClusterName::Fcc => {
            let mut v = Vec::with_capacity(12);
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    v.push(Vec3::new(s1, s2, 0.0));
                    v.push(Vec3::new(s1, 0.0, s2));
                    v.push(Vec3::new(0.0, s1, s2));
                }
            }
            v
        }
        BallClusterName::Hcp => {
            let mut v = equator(6, 0.0);
            let (r, z) = (1.0 / 3f64.sqrt(), (2.0f64 / 3.0).sqrt());
            for a in [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI] {
                for sz in [1.0, -1.0] {
                    v.push(Vec3::new(r * a.cos(), r * a.sin(), sz * z));
                }
            }
            v
        }
        BallClusterName::T3 => equator(3, 0.0),
        BallClusterName::Flex5 => {
            let mut v = vec![Vec3::z(), -Vec3::z()];
            v.extend(equator(3, 0.0));
            v
        }
    };
    BallTouchConfig::from_vectors(pts).expect("named clusters are valid").with_label(name.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Slope of log(mean decay) against log(mean distance) over a halving radius ladder.
    pub exponent: f64,
}

/// Samples random rotation-free perturbations at distance ≈ `radius` and reports
/// `(δ(p) − δ(p′)) / d(p, p′)` with `d` the quotient distance.
pub fn pl_maximality_probe(p: &BallTouchConfig, samples: usize, radius: f64, seed: u64) -> Result<DecayReport> {
    if samples == 0 || !(radius > 0.0) {
        return Err(Error::Domain("need at least one sample and a positive radius".into()));
    }
    let base = p.delta();
    let gauge = rotation_generators(p);
    let mut rng = rng::seeded(seed, 0x71);
    let dirs: Vec<DVector<f64>> = (0..samples).map(|_| gauge_free_unit(&mut rng, &gauge, 2 * p.len())).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let ladder = [1.0, 0.5, 0.25, 0.125];
    let mut logs = Vec::new();
    for (k, scale) in ladder.iter().enumerate() {
        let (mut sd, mut sr) = (0.0, 0.0);
        for (s, v) in dirs.iter().enumerate() {
            let q = perturb(p, v, radius * scale)?;
            // q is within `radius` of p, so the identity start already lies in the optimal basin
            let d = quotient_distance(p, &q, 0, seed ^ s as u64);
            let decay = base - q.delta();
            sd += decay;
            sr += d;
            if k == 0 {
                lo = lo.min(decay / d);
                hi = hi.max(decay / d);
            }
        }
        logs.push((sr / samples as f64, sd / samples as f64));
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
    Ok(DecayReport { samples, min_ratio: lo, max_ratio: hi, exponent: loglog_slope(&ts, &ys)? })
}

pub(crate) fn gauge_free_unit(rng: &mut rand_chacha::ChaCha8Rng, gauge: &[DVector<f64>], n: usize) -> DVector<f64> {
    let q = orthonormal_columns(gauge, n);
    loop {
        let mut v = rng::gaussian_vector(rng, n);
        if q.ncols() > 0 {
            v -= &q * (q.transpose() * &v);
        }
        let norm = v.norm();
        if norm > 1e-9 {
            return v / norm;
        }
    }
}

/// Orthonormal basis of the span of `vs`.
pub(crate) fn orthonormal_columns(vs: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    if vs.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let a = DMatrix::from_columns(vs);
    let svd = a.svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > min_morse::RANK_TOL * smax)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnlockReport {
    /// Representative of the unlocking direction that fixes the most points.
    pub direction: Vec<f64>,
    /// Representative orthogonal to the rotation generators.
    pub orthogonal_direction: Vec<f64>,
    pub motions: Vec<f64>,
    pub fixed_count: usize,
    pub contact_pairs: Vec<(usize, usize)>,
    /// Fitted growth exponent per contact pair; `None` for pairs whose both ends stay fixed.
    pub growth_exponents: Vec<Option<f64>>,
    pub all_grow: bool,
}

pub const FIXED_TOL: f64 = 1e-9;

/// Unique unlocking direction of a configuration whose null space mod rotations is a line.
pub fn unlock_direction(p: &BallTouchConfig) -> Result<UnlockReport> {
    let cb = bundle_from_ball_config(p, 1e-9)?;
    let e = cb.bundle.null_space();
    let reduced = cb.bundle.reduced_null_space(&cb.gauge);
    if reduced.ncols() != 1 {
        return Err(Error::Structure(format!("null space mod rotations has dimension {}, not 1", reduced.ncols())));
    }
    let n = 2 * p.len();
    let gq = orthonormal_columns(&cb.gauge, n);
    let off_gauge = |w: &DVector<f64>| (w - &gq * (gq.transpose() * w)).norm();
    let orth = reduced.column(0).into_owned();
    let direction = max_fixed_representative(p.len(), &e, &off_gauge).unwrap_or_else(|| orth.clone());
    let motions: Vec<f64> = (0..p.len()).map(|i| direction[2 * i].hypot(direction[2 * i + 1])).collect();
    let fixed_count = motions.iter().filter(|&&m| m < FIXED_TOL).count();

    let ts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let base = p.delta();
    let moved: Vec<BallTouchConfig> = ts.iter().map(|&t| perturb(p, &direction, t)).collect::<Result<_>>()?;
    let mut growth_exponents = Vec::with_capacity(cb.pairs.len());
    let mut all_grow = true;
    for &(i, j) in &cb.pairs {
        if motions[i] < FIXED_TOL && motions[j] < FIXED_TOL {
            growth_exponents.push(None);
            continue;
        }
        let ys: Vec<f64> = moved.iter().map(|q| (q.points()[i] - q.points()[j]).norm() - base).collect();
        if ys.iter().any(|&y| y <= 0.0) {
            all_grow = false;
            growth_exponents.push(Some(f64::NAN));
            continue;
        }
        let slope = loglog_slope(&ts, &ys)?;
        all_grow &= (1.8..=2.2).contains(&slope);
        growth_exponents.push(Some(slope));
    }
    Ok(UnlockReport {
        direction: direction.iter().copied().collect(),
        orthogonal_direction: orth.iter().copied().collect(),
        motions,
        fixed_count,
        contact_pairs: cb.pairs,
        growth_exponents,
        all_grow,
    })
}

/// Searches subsets of points, largest first, for a null-space vector off the rotation
/// span that leaves the whole subset in place.
fn max_fixed_representative<F: Fn(&DVector<f64>) -> f64>(
    npts: usize,
    e: &DMatrix<f64>,
    off_gauge: &F,
) -> Option<DVector<f64>> {
    if npts > 16 {
        return None;
    }
    let mut masks: Vec<u32> = (1..(1u32 << npts)).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for mask in masks {
        let rows: Vec<_> = (0..npts)
            .filter(|i| mask & (1 << i) != 0)
            .flat_map(|i| [e.row(2 * i).into_owned(), e.row(2 * i + 1).into_owned()])
            .collect();
        let ker = min_morse::kernel(&DMatrix::from_rows(&rows));
        for c in ker.column_iter() {
            let w = e * c;
            if off_gauge(&w) > 1e-6 {
                return Some(&w / w.norm());
            }
        }
    }
    None
}

/// Random rotation, exposed for tests and probes.
pub fn random_rotation_seeded(seed: u64) -> Rotation3<f64> {
    let mut rng = rng::seeded(seed, 0xabc);
    random_rotation(&mut rng).to_rotation_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn named(s: &str) -> BallTouchConfig {
        named_ball_cluster(s.parse().unwrap())
    }

    #[test]
    fn delta_examples() {
        assert!((named("T3").delta() - 3f64.sqrt()).abs() < 1e-15);
        let i12 = 2.0 * ((1.0 / 5f64.sqrt()).acos() / 2.0).sin();
        assert!((named("I12").delta() - i12).abs() < 1e-14);
        assert!((named("necklace12").delta() - 2.0 * (PI / 12.0).sin()).abs() < 1e-14);
        assert!((named("FCC").delta() - 1.0).abs() < 1e-15);
        assert!((named("HCP").delta() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn contact_multiplicities() {
        for tol in [1e-9, 1e-8, 1e-7] {
            assert_eq!(named("FCC").contact_pairs(tol).len(), 24);
            assert_eq!(named("HCP").contact_pairs(tol).len(), 24);
            assert_eq!(named("I12").contact_pairs(tol).len(), 30);
        }
    }

    #[test]
    fn radii() {
        assert!((named("I12").touching_radius().unwrap() - 1.1085085).abs() < 1e-6);
        assert!(named("A66").touching_radius().unwrap() < 1.0);
        let s3 = 3f64.sqrt();
        assert!((named("T3").touching_radius().unwrap() - s3 / (2.0 - s3)).abs() < 1e-12);
        let s2 = 2f64.sqrt();
        let neck = (s3 - 1.0) / (2.0 * s2 - s3 + 1.0);
        assert!((named("necklace12").touching_radius().unwrap() - neck).abs() < 1e-12);
    }

    #[test]
    fn antiprism_edges_are_equal() {
        let a = named("A66");
        let pairs = a.contact_pairs(1e-9);
        // 12 ring edges and 12 cross edges
        assert_eq!(pairs.len(), 24);
    }

    #[test]
    fn flex5_contacts_and_flex() {
        let f = named("flex5");
        let r = 1.0 + 2f64.sqrt();
        assert!(((PI / 4.0).sin() - r / (1.0 + r)).abs() < 1e-15);
        assert!((f.touching_radius().unwrap() - r).abs() < 1e-12);
        let pairs = f.contact_pairs(1e-12);
        for s in 0..50 {
            let a = 0.01 * s as f64;
            let mut pts = f.points().to_vec();
            pts[2] = Vec3::new(a.cos(), a.sin(), 0.0);
            let g = BallTouchConfig::from_vectors(pts).unwrap();
            for &(i, j) in &pairs {
                assert!(((g.points()[i] - g.points()[j]).norm() - f.delta()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hausdorff_examples() {
        let i12 = named("I12");
        assert_eq!(hausdorff_distance(&i12, &i12), 0.0);
        let n = BallTouchConfig::from_vectors(vec![Vec3::z(), Vec3::z()]).unwrap();
        let s = BallTouchConfig::from_vectors(vec![-Vec3::z(), -Vec3::z()]).unwrap();
        assert!((hausdorff_distance(&n, &s) - 2.0).abs() < 1e-15);
        let r = Rotation3::from_axis_angle(&Vec3::z_axis(), 1f64.to_radians());
        let moved = i12.rotated(&r);
        let brute = i12
            .points()
            .iter()
            .map(|x| moved.points().iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert!((hausdorff_distance(&i12, &moved) - brute).abs() < 1e-15);
    }

    #[test]
    fn quotient_examples() {
        let i12 = named("I12");
        let g0 = random_rotation_seeded(7);
        assert!(quotient_distance(&i12, &i12.rotated(&g0), QUOTIENT_STARTS, 1) < 1e-6);
        let mut pts = i12.points().to_vec();
        pts[0] = perturb_point(&pts[0], 1e-2, 0.0);
        let q = BallTouchConfig::from_vectors(pts).unwrap();
        let d = quotient_distance(&i12, &q, QUOTIENT_STARTS, 1);
        assert!(d > 0.0 && d <= 1e-2 + 1e-6);
        assert!(d <= hausdorff_distance(&i12, &q));
        assert!(quotient_distance(&i12, &q, 8, 1) >= d);
    }

    #[test]
    fn i12_and_a66_decay_linearly() {
        for name in ["I12", "A66"] {
            let r = pl_maximality_probe(&named(name), 24, 1e-3, 42).unwrap();
            assert!(r.min_ratio > 0.0, "{name}: {r:?}");
            assert!((r.exponent - 1.0).abs() < 0.1, "{name}: {r:?}");
        }
    }

    #[test]
    fn t3_decays_quadratically_along_latitude() {
        let t3 = named("T3");
        let ts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t: &f64| {
                let mut pts = t3.points().to_vec();
                pts[0] = Vec3::new(t.cos(), 0.0, t.sin());
                let chord2 = (pts[0] - pts[1]).norm_squared();
                assert!((chord2 - (2.0 + t.cos())).abs() < 1e-14);
                t3.delta() - BallTouchConfig::from_vectors(pts).unwrap().delta()
            })
            .collect();
        assert!((loglog_slope(&ts, &ys).unwrap() - 2.0).abs() < 0.05);
    }

    #[test]
    fn fcc_unlock_fixes_six() {
        let r = unlock_direction(&named("FCC")).unwrap();
        assert_eq!(r.fixed_count, 6);
        assert!(r.all_grow, "{:?}", r.growth_exponents);
    }

    #[test]
    fn necklace_is_not_a_line_case() {
        assert!(matches!(unlock_direction(&named("necklace12")), Err(Error::Structure(_))));
    }

    #[test]
    fn unknown_name() {
        assert!(matches!("dodecahedral".parse::<BallClusterName>(), Err(Error::UnknownName(_))));
    }

    proptest! {
        #[test]
        fn delta_rotation_and_permutation_invariant(a in -PI..PI, b in -PI..PI, c in -PI..PI, k in 0usize..12) {
            let p = named("I12");
            let r = Rotation3::from_euler_angles(a, b, c);
            prop_assert!((p.delta() - p.rotated(&r).delta()).abs() < 1e-12);
            let mut pts = p.points().to_vec();
            pts.rotate_left(k);
            prop_assert!((p.delta() - BallTouchConfig::from_vectors(pts).unwrap().delta()).abs() < 1e-12);
        }
    }
}
