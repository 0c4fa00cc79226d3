//! Derivative-free ascent of D, perturbation probes and decay-order scans.
//!
//! The ascent is a pattern search on a shrinking mesh. Each iteration first tries a search
//! step along the steepest ascent direction of the ε-active components (the minimum-norm
//! element of the convex hull of their difference gradients), then polls the coordinate
//! directions, and finally an escape poll: seeded random directions on the mesh sphere,
//! the best of which seed short ascents. The escape poll is what leaves saddles whose
//! ascent region is a horn around a curve, invisible to any straight poll direction.
//!
//! Straight-ray probes share that blindness in the other direction: a probe that finds no
//! increase along rays is evidence of maximality, not a certificate (see `min_morse`).

use nalgebra::{DVector, Vector3};
use serde::Serialize;

use crate::ball_clusters::{gauge_free_unit, orthonormal_columns};
use crate::cyl_clusters::{self, c6_configuration, perturb, rotation_generators, LineCluster};
use crate::min_morse::min_norm_point;
use crate::rng;
use crate::{Error, Result};

pub const FAMILY_BUDGET: usize = 100_000;
pub const FULL_BUDGET: usize = 1_000_000;
pub const INITIAL_STEP: f64 = 0.1;
pub const MIN_STEP: f64 = 1e-9;
const EPS_START: f64 = 1e-2;

/// Least-squares slope of `ln y` against `ln t`.
pub fn loglog_slope(ts: &[f64], ys: &[f64]) -> Result<f64> {
    if ts.len() != ys.len() || ts.len() < 2 {
        return Err(Error::Domain("need at least two matching samples".into()));
    }
    if ts.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive samples".into()));
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub evaluations: usize,
    pub value: f64,
    pub step: f64,
    pub kind: MoveKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Start,
    Search,
    Poll,
    Escape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub points: Vec<TracePoint>,
    pub evaluations: usize,
    pub converged: bool,
    pub budget_exhausted: bool,
    /// Escape ascents that came back to the current value at a configuration that is
    /// not a rotation of the current one.
    pub flat_moves: usize,
}

impl Trace {
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].value >= w[0].value)
    }

    /// CSV with a header and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("evaluations,value,step,kind\n");
        for p in &self.points {
            s.push_str(&format!("{},{:.16e},{:.16e},{:?}\n", p.evaluations, p.value, p.step, p.kind));
        }
        s
    }
}

/// Objective interface: the components whose minimum is maximized, a chart move, and the
/// projection that removes gauge directions from chart vectors.
trait Landscape {
    type State: Clone;
    fn dim(&self) -> usize;
    fn components(&self, s: &Self::State) -> Vec<f64>;
    fn moved(&self, s: &Self::State, v: &DVector<f64>) -> Self::State;
    fn project(&self, _s: &Self::State, v: DVector<f64>) -> DVector<f64> {
        v
    }
    /// Invariant signature used to tell genuinely new configurations from rotated copies.
    fn signature(&self, s: &Self::State) -> Vec<f64> {
        let mut c = self.components(s);
        c.sort_by(|a, b| a.total_cmp(b));
        c
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

struct Ascent<'a, L: Landscape> {
    land: &'a L,
    budget: usize,
    evals: usize,
    escape_dirs: usize,
    escape_seeds: usize,
    escape_budget: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl<'a, L: Landscape> Ascent<'a, L> {
    fn eval(&mut self, s: &L::State) -> Vec<f64> {
        self.evals += 1;
        self.land.components(s)
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.budget
    }

    /// One ε-active steepest-ascent step with a halving line search from `len`.
    fn search_step(&mut self, s: &L::State, fs: f64, eps: f64, len: f64) -> Option<(L::State, f64, f64)> {
        let n = self.land.dim();
        let base = self.eval(s);
        let active: Vec<usize> = (0..base.len()).filter(|&u| base[u] <= fs + eps).collect();
        let h = 1e-7;
        let mut grads = vec![DVector::zeros(n); active.len()];
        for i in 0..n {
            let e = DVector::from_fn(n, |k, _| if k == i { h } else { 0.0 });
            let plus = self.eval(&self.land.moved(s, &e));
            let minus = self.eval(&self.land.moved(s, &(-e)));
            for (a, &u) in active.iter().enumerate() {
                grads[a][i] = (plus[u] - minus[u]) / (2.0 * h);
            }
        }
        let grads: Vec<DVector<f64>> = grads.into_iter().map(|g| self.land.project(s, g)).collect();
        let (d, _) = min_norm_point(&grads);
        let nd = d.norm();
        if nd < 1e-10 {
            return None;
        }
        let d = self.land.project(s, d / nd);
        let mut t = len;
        while t > 1e-14 && !self.exhausted() {
            let cand = self.land.moved(s, &(&d * t));
            let fc = min_of(&self.eval(&cand));
            if fc > fs {
                return Some((cand, fc, t));
            }
            t *= 0.5;
        }
        None
    }

    /// Search steps with ε shrinking by 4 on failure; ε carries over between calls.
    fn climb(&mut self, s: &L::State, fs: f64, step: f64, eps: &mut f64, limit: usize) -> Option<(L::State, f64, f64)> {
        let stop = self.evals.saturating_add(limit);
        while *eps >= 1e-14 && self.evals < stop && !self.exhausted() {
            if let Some(r) = self.search_step(s, fs, *eps, step) {
                return Some(r);
            }
            *eps /= 4.0;
        }
        None
    }

    fn coordinate_poll(&mut self, s: &L::State, fs: f64, step: f64) -> Option<(L::State, f64)> {
        let n = self.land.dim();
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let e = DVector::from_fn(n, |k, _| if k == i { sgn * step } else { 0.0 });
                let e = self.land.project(s, e);
                if e.norm() < 1e-3 * step {
                    continue;
                }
                let cand = self.land.moved(s, &e);
                let fc = min_of(&self.eval(&cand));
                if fc > fs {
                    return Some((cand, fc));
                }
            }
        }
        None
    }

    /// Random directions on the mesh sphere; the best few seed short ascents.
    fn escape_poll(&mut self, s: &L::State, fs: f64, step: f64, flat: &mut usize) -> Option<(L::State, f64)> {
        let n = self.land.dim();
        let mut cands: Vec<(f64, L::State)> = Vec::with_capacity(self.escape_dirs);
        for _ in 0..self.escape_dirs {
            if self.exhausted() {
                return None;
            }
            let v = self.land.project(s, rng::unit_vector(&mut self.rng, n));
            let nv = v.norm();
            if nv < 1e-9 {
                continue;
            }
            let cand = self.land.moved(s, &(v * (step / nv)));
            let fc = min_of(&self.eval(&cand));
            if fc > fs {
                return Some((cand, fc));
            }
            cands.push((fc, cand));
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let sig = self.land.signature(s);
        for (fc, c) in cands.into_iter().take(self.escape_seeds) {
            let (mut cur, mut fcur) = (c, fc);
            let stop = self.evals + self.escape_budget;
            let mut len = step;
            let mut eps = EPS_START;
            while self.evals < stop && !self.exhausted() {
                match self.climb(&cur, fcur, len, &mut eps, stop - self.evals) {
                    Some((next, fnext, t)) => {
                        cur = next;
                        fcur = fnext;
                        len = (2.0 * t).min(step);
                        if fcur > fs {
                            return Some((cur, fcur));
                        }
                    }
                    None => break,
                }
            }
            if fcur >= fs - 1e-9 * fs.abs().max(1.0) {
                let other = self.land.signature(&cur);
                let moved = sig.iter().zip(&other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if moved > 1e-6 {
                    *flat += 1;
                }
            }
        }
        None
    }

    fn run(&mut self, start: L::State) -> (L::State, f64, Trace) {
        let mut s = start;
        let mut fs = min_of(&self.eval(&s));
        let mut step = INITIAL_STEP;
        let mut flat = 0;
        let mut points = vec![TracePoint { evaluations: self.evals, value: fs, step, kind: MoveKind::Start }];
        let mut len = step;
        let mut eps = EPS_START;
        while step >= MIN_STEP && !self.exhausted() {
            if let Some((next, fnext, t)) = self.climb(&s, fs, len, &mut eps, usize::MAX) {
                s = next;
                fs = fnext;
                len = (2.0 * t).min(INITIAL_STEP);
                points.push(TracePoint { evaluations: self.evals, value: fs, step, kind: MoveKind::Search });
                continue;
            }
            if let Some((next, fnext)) = self.coordinate_poll(&s, fs, step) {
                s = next;
                fs = fnext;
                len = step;
                eps = EPS_START;
                points.push(TracePoint { evaluations: self.evals, value: fs, step, kind: MoveKind::Poll });
                continue;
            }
            if let Some((next, fnext)) = self.escape_poll(&s, fs, step, &mut flat) {
                s = next;
                fs = fnext;
                len = step;
                eps = EPS_START;
                points.push(TracePoint { evaluations: self.evals, value: fs, step, kind: MoveKind::Escape });
                continue;
            }
            step *= 0.5;
            len = step;
            eps = EPS_START;
        }
        let budget_exhausted = self.exhausted() && step >= MIN_STEP;
        let trace = Trace {
            points,
            evaluations: self.evals,
            converged: step < MIN_STEP,
            budget_exhausted,
            flat_moves: flat,
        };
        (s, fs, trace)
    }
}

struct Family;

impl Landscape for Family {
    type State = Vector3<f64>;

    fn dim(&self) -> usize {
        3
    }

    fn components(&self, s: &Self::State) -> Vec<f64> {
        match c6_configuration(s[0], s[1], s[2]) {
            Ok(c) => c.pair_distances().into_iter().map(|p| p.2).collect(),
            Err(_) => vec![f64::NEG_INFINITY],
        }
    }

    fn moved(&self, s: &Self::State, v: &DVector<f64>) -> Self::State {
        s + Vector3::new(v[0], v[1], v[2])
    }
}

struct Full {
    dim: usize,
}

impl Landscape for Full {
    type State = LineCluster;

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self, s: &LineCluster) -> Vec<f64> {
        s.pair_distances().into_iter().map(|p| p.2).collect()
    }

    fn moved(&self, s: &LineCluster, v: &DVector<f64>) -> LineCluster {
        perturb(s, v, 1.0).expect("chart vector has the cluster's dimension")
    }

    fn project(&self, s: &LineCluster, v: DVector<f64>) -> DVector<f64> {
        let q = orthonormal_columns(&rotation_generators(s), self.dim);
        &v - &q * (q.transpose() * &v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyAscent {
    pub argmax: (f64, f64, f64),
    pub value: f64,
    pub trace: Trace,
}

/// Maximizes `(φ, δ, κ) ↦ D(c6_configuration(φ, δ, κ))`.
pub fn ascend_family(start: (f64, f64, f64), budget: usize, seed: u64) -> Result<FamilyAscent> {
    c6_configuration(start.0, start.1, start.2)?;
    let mut a = Ascent {
        land: &Family,
        budget,
        evals: 0,
        escape_dirs: 256,
        escape_seeds: 4,
        escape_budget: 600,
        rng: rng::seeded(seed, 0xfa),
    };
    let (s, value, trace) = a.run(Vector3::new(start.0, start.1, start.2));
    Ok(FamilyAscent { argmax: (s[0], s[1], s[2]), value, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullAscent {
    pub cluster: LineCluster,
    pub value: f64,
    pub trace: Trace,
}

/// Ascent over the full product chart with rotation directions projected out.
pub fn ascend_full(start: &LineCluster, budget: usize, seed: u64) -> Result<FullAscent> {
    if !(start.min_distance() > 0.0) {
        return Err(Error::Domain("start cluster has intersecting lines".into()));
    }
    let land = Full { dim: 3 * start.len() };
    let mut a = Ascent {
        land: &land,
        budget,
        evals: 0,
        escape_dirs: 256,
        escape_seeds: 4,
        escape_budget: 3_000,
        rng: rng::seeded(seed, 0xf0),
    };
    let (cluster, value, trace) = a.run(start.clone());
    Ok(FullAscent { cluster, value, trace })
}

/// Largest gauge component of a chart step, for auditing `ascend_full`.
pub fn gauge_component(c: &LineCluster, v: &DVector<f64>) -> f64 {
    let q = orthonormal_columns(&rotation_generators(c), 3 * c.len());
    (q.transpose() * v).amax()
}

pub fn project_out_gauge(c: &LineCluster, v: &DVector<f64>) -> DVector<f64> {
    Full { dim: 3 * c.len() }.project(c, v.clone())
}

/// `c` moved a chart distance `t` along a seeded random direction orthogonal to the
/// rotation generators.
pub fn random_perturbation(c: &LineCluster, t: f64, seed: u64) -> Result<LineCluster> {
    let mut r = rng::seeded(seed, 0x2000);
    let v = gauge_free_unit(&mut r, &rotation_generators(c), 3 * c.len());
    perturb(c, &v, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub t: f64,
    pub base: f64,
    pub max: f64,
    /// Minimum, lower quartile, median, upper quartile, maximum.
    pub quartiles: [f64; 5],
    /// Samples with D strictly above the base value.
    pub above_base: usize,
}

/// D along `samples` seeded random unit chart directions orthogonal to the rotation
/// generators, at distance `t`. Sample `i` draws from its own stream, so the result does
/// not depend on evaluation order.
pub fn perturbation_probe(c: &LineCluster, samples: usize, t: f64, seed: u64) -> Result<ProbeReport> {
    if !(t > 0.0) || samples == 0 {
        return Err(Error::Domain("probe needs t > 0 and at least one sample".into()));
    }
    let base = c.min_distance();
    let gauge = rotation_generators(c);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut r = rng::seeded(seed, 0x1000 + i as u64);
        let v = gauge_free_unit(&mut r, &gauge, 3 * c.len());
        values.push(perturb(c, &v, t)?.min_distance());
    }
    let above_base = values.iter().filter(|&&v| v > base).count();
    values.sort_by(|a, b| a.total_cmp(b));
    let q = |f: f64| values[((values.len() - 1) as f64 * f).round() as usize];
    Ok(ProbeReport {
        samples,
        t,
        base,
        max: values[values.len() - 1],
        quartiles: [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)],
        above_base,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayScan {
    pub ts: Vec<f64>,
    pub decays: Vec<f64>,
    /// Fitted exponent; `None` when some decay is not positive.
    pub slope: Option<f64>,
    /// A non-positive decay: the base is not a strict maximum along this ray.
    pub refuted: bool,
}

/// `log(D(c) − D(perturb(c, v, t)))` against `log t`.
pub fn decay_order_scan(c: &LineCluster, v: &DVector<f64>, ts: &[f64]) -> Result<DecayScan> {
    scan(c, v, ts, |k| k.min_distance())
}

/// As `decay_order_scan`, with D replaced by the minimum over the given pairs only.
pub fn decay_order_scan_on_pairs(c: &LineCluster, v: &DVector<f64>, ts: &[f64], pairs: &[(usize, usize)])
    -> Result<DecayScan> {
    if pairs.is_empty() {
        return Err(Error::Domain("no pairs to scan".into()));
    }
    scan(c, v, ts, |k| pairs.iter().map(|&(i, j)| k.pair_distance(i, j)).fold(f64::INFINITY, f64::min))
}

fn scan(c: &LineCluster, v: &DVector<f64>, ts: &[f64], f: impl Fn(&LineCluster) -> f64) -> Result<DecayScan> {
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("direction must be a unit vector".into()));
    }
    let base = f(c);
    let decays: Vec<f64> = ts.iter().map(|&t| perturb(c, v, t).map(|p| base - f(&p))).collect::<Result<_>>()?;
    let refuted = decays.iter().any(|&d| d <= 0.0);
    let slope = if refuted { None } else { Some(loglog_slope(ts, &decays)?) };
    Ok(DecayScan { ts: ts.to_vec(), decays, slope, refuted })
}

/// Nine log-spaced values from 1e-2 down to 1e-4.
pub fn default_t_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-2.0 - 0.25 * k as f64)).collect()
}

/// Directions inside E and directions orthogonal to it.
pub type DirectionSplit = (Vec<DVector<f64>>, Vec<DVector<f64>>);

/// Random unit vectors in the null space mod rotations and in its orthogonal complement
/// (inside the gauge-free subspace).
pub fn null_space_directions(c: &LineCluster, tol: f64, count: usize, seed: u64) -> Result<DirectionSplit> {
    let cb = crate::min_morse::bundle_from_line_cluster(c, tol)?;
    let e = cb.bundle.reduced_null_space(&cb.gauge);
    let n = 3 * c.len();
    let mut span: Vec<DVector<f64>> = cb.gauge.clone();
    span.extend(e.column_iter().map(|col| col.into_owned()));
    let blocked = orthonormal_columns(&span, n);
    let mut r = rng::seeded(seed, 0xde);
    let inside = (0..count)
        .map(|_| {
            let w = &e * rng::unit_vector(&mut r, e.ncols());
            &w / w.norm()
        })
        .collect();
    let outside = (0..count)
        .map(|_| {
            let v = rng::gaussian_vector(&mut r, n);
            let w = &v - &blocked * (blocked.transpose() * &v);
            &w / w.norm()
        })
        .collect();
    Ok((inside, outside))
}

pub fn c6_start_cluster() -> LineCluster {
    cyl_clusters::c6_configuration(0.0, 0.0, 0.0).expect("equator is in the chart")
}
