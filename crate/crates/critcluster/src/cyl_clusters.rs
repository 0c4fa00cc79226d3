//! Clusters of tangent lines (cylinder axes), the distance function D and the named clusters.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

use nalgebra::{DVector, Rotation3};
use serde::Serialize;

use crate::geom3::{line_distance, SpherePoint, TangentLine, Vec3};
use crate::{Error, Result};

/// Ordered tuple of tangent lines.
#[derive(Debug, Clone, PartialEq)]
pub struct LineCluster {
    lines: Vec<TangentLine>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactGraph {
    pub edges: Vec<(usize, usize)>,
    pub tolerance: f64,
}

impl LineCluster {
    pub fn new(lines: Vec<TangentLine>) -> Result<Self> {
        if lines.len() < 2 {
            return Err(Error::Domain(format!("a cluster needs at least 2 lines, got {}", lines.len())));
        }
        Ok(LineCluster { lines, label: None })
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn lines(&self) -> &[TangentLine] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        line_distance(&self.lines[i], &self.lines[j])
    }

    /// All pairs `(i, j, d_ij)` with `i < j`.
    pub fn pair_distances(&self) -> Vec<(usize, usize, f64)> {
        let n = self.lines.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push((i, j, self.pair_distance(i, j)));
            }
        }
        out
    }

    /// D: the minimum pairwise line distance.
    pub fn min_distance(&self) -> f64 {
        self.pair_distances().into_iter().map(|(_, _, d)| d).fold(f64::INFINITY, f64::min)
    }

    pub fn contact_graph(&self, tol: f64) -> ContactGraph {
        let pairs = self.pair_distances();
        let d = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        let edges = pairs.into_iter().filter(|p| p.2 <= d + tol).map(|p| (p.0, p.1)).collect();
        ContactGraph { edges, tolerance: tol }
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> Self {
        LineCluster { lines: self.lines.iter().map(|l| l.rotated(r)).collect(), label: self.label.clone() }
    }

    pub fn without(&self, drop: &[usize]) -> Result<Self> {
        let lines = self.lines.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, l)| *l).collect();
        LineCluster::new(lines)
    }

    /// Unoriented line-set equality by greedy matching.
    pub fn same_line_set(&self, other: &LineCluster, tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        self.lines.iter().all(|l| {
            match other.lines.iter().enumerate().position(|(k, m)| !used[k] && l.same_line(m, tol)) {
                Some(k) => {
                    used[k] = true;
                    true
                }
                None => false,
            }
        })
    }
}

pub fn min_distance(c: &LineCluster) -> f64 {
    c.min_distance()
}

pub fn contact_graph(c: &LineCluster, tol: f64) -> ContactGraph {
    c.contact_graph(tol)
}

pub const C6_LABELS: [char; 6] = ['A', 'B', 'C', 'D', 'E', 'F'];

/// The six-line family: lines A, B, C at latitude φ and D, E, F at −φ, all turned by δ.
pub fn c6_configuration(phi: f64, delta: f64, kappa: f64) -> Result<LineCluster> {
    let up = [(FRAC_PI_6, 1.0), (5.0 * FRAC_PI_6, 1.0), (3.0 * FRAC_PI_2, 1.0)];
    let down = [(FRAC_PI_2, -1.0), (7.0 * FRAC_PI_6, -1.0), (11.0 * FRAC_PI_6, -1.0)];
    let mut lines = Vec::with_capacity(6);
    for (lon, sign) in up {
        lines.push(TangentLine::from_angles(phi, lon - sign * kappa, delta)?);
    }
    for (lon, sign) in down {
        lines.push(TangentLine::from_angles(-phi, lon - sign * kappa, delta)?);
    }
    Ok(LineCluster::new(lines)?.with_label("c6"))
}

/// Parameters (φ, δ, κ) of the unlocking curve γ at `x ∈ (0, 1]`.
pub fn gamma(x: f64) -> Result<(f64, f64, f64)> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("γ parameter {x} outside (0, 1]")));
    }
    let w = 1.0 + 7.0 * x + 4.0 * x * x;
    let phi = (2.0 * ((1.0 - x) * x * (1.0 + x) / w).sqrt()).min(1.0).asin();
    let delta = ((1.0 - x) * (1.0 + 3.0 * x) / (x * w)).sqrt().atan();
    let kappa = ((x - 1.0) / ((1.0 + x) * (1.0 + 3.0 * x)).sqrt()).atan();
    Ok((phi, delta, kappa))
}

pub fn gamma_cluster(x: f64) -> Result<LineCluster> {
    let (p, d, k) = gamma(x)?;
    Ok(c6_configuration(p, d, k)?.with_label("gamma"))
}

/// The record cluster C_m = γ(1/2).
pub fn record_cluster() -> LineCluster {
    gamma_cluster(0.5).expect("1/2 lies on the curve").with_label("cm")
}

pub const TETRAHEDRON: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

/// Tangent lines at the octahedron vertices: tetrahedron edges turned by π/4.
pub fn o6_configuration() -> LineCluster {
    let v: Vec<Vec3> = TETRAHEDRON.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
    let mut lines = Vec::with_capacity(6);
    for i in 0..4 {
        for j in i + 1..4 {
            let edge = TangentLine::from_vectors((v[i] + v[j]) * 0.5, v[j] - v[i]).expect("edge midpoint is nonzero");
            lines.push(edge.twisted(FRAC_PI_4));
        }
    }
    LineCluster::new(lines).expect("six lines").with_label("o6")
}

/// O6 without its two lines through the poles.
pub fn c4_saddle() -> LineCluster {
    let o6 = o6_configuration();
    let polar: Vec<usize> = (0..6).filter(|&i| o6.lines()[i].point().z.abs() > 0.5).collect();
    o6.without(&polar).expect("four lines remain").with_label("c4_saddle")
}

pub fn c4_parallel() -> LineCluster {
    let lines = (0..4)
        .map(|k| TangentLine::from_angles(0.0, k as f64 * FRAC_PI_2, 0.0).expect("equator is in the chart"))
        .collect();
    LineCluster::new(lines).expect("four lines").with_label("c4_parallel")
}

/// Moves one line in its exponential chart `(a, b, c)`: the touch point travels along the
/// geodesic with initial velocity `a·τ + b·(x×τ)`, carrying the direction by parallel
/// transport, after which the direction turns by `c` about the new radius.
pub fn perturb_line(l: &TangentLine, a: f64, b: f64, c: f64) -> TangentLine {
    let x = l.point();
    let tau = l.direction();
    let w = tau * a + x.cross(&tau) * b;
    let r = Rotation3::new(x.cross(&w));
    let moved = TangentLine::from_vectors(r * x, r * tau).expect("rotation keeps the frame");
    moved.twisted(c)
}

/// `c` displaced by `t·v` in the product of the per-line exponential charts.
pub fn perturb(c: &LineCluster, v: &DVector<f64>, t: f64) -> Result<LineCluster> {
    check_chart_len(c, v)?;
    let lines = c
        .lines
        .iter()
        .enumerate()
        .map(|(i, l)| perturb_line(l, t * v[3 * i], t * v[3 * i + 1], t * v[3 * i + 2]))
        .collect();
    Ok(LineCluster { lines, label: c.label.clone() })
}

/// `c` displaced by `t·v` in the per-line (Δφ, Δκ, Δα) angle chart.
pub fn perturb_angles(c: &LineCluster, v: &DVector<f64>, t: f64) -> Result<LineCluster> {
    check_chart_len(c, v)?;
    let mut lines = Vec::with_capacity(c.len());
    for (i, l) in c.lines.iter().enumerate() {
        let p = l.sphere_point();
        let alpha = l.alpha()?;
        let phi = p.phi + t * v[3 * i];
        if phi.abs() >= FRAC_PI_2 - crate::geom3::POLE_MARGIN {
            return Err(Error::Chart(format!("line {i} crosses a pole")));
        }
        let np = SpherePoint::new(phi, p.kappa + t * v[3 * i + 1])?;
        lines.push(TangentLine::new(np, alpha + t * v[3 * i + 2])?);
    }
    Ok(LineCluster { lines, label: c.label.clone() })
}

fn check_chart_len(c: &LineCluster, v: &DVector<f64>) -> Result<()> {
    if v.len() != 3 * c.len() {
        return Err(Error::Domain(format!("chart vector has length {}, expected {}", v.len(), 3 * c.len())));
    }
    Ok(())
}

/// Images of the three infinitesimal rotations about the coordinate axes in the exponential chart.
pub fn rotation_generators(c: &LineCluster) -> Vec<DVector<f64>> {
    [Vec3::x(), Vec3::y(), Vec3::z()]
        .iter()
        .map(|w| {
            let mut g = DVector::zeros(3 * c.len());
            for (i, l) in c.lines.iter().enumerate() {
                let (x, tau) = (l.point(), l.direction());
                let m = w.cross(&x);
                g[3 * i] = m.dot(&tau);
                g[3 * i + 1] = m.dot(&x.cross(&tau));
                g[3 * i + 2] = w.dot(&x);
            }
            g
        })
        .collect()
}

/// Sorted representatives of `values`, merging entries closer than `tol`.
pub fn distinct_values(values: &[f64], tol: f64) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::new();
    for v in sorted {
        if out.last().is_none_or(|&l| v - l > tol) {
            out.push(v);
        }
    }
    out
}

/// Symmetries of every member of the six-line family: the 120° turn about the z axis, and
/// the half turns about the x axis and about the equatorial axis at longitude 60°.
pub fn d3_generators() -> [Rotation3<f64>; 3] {
    let sixty = nalgebra::Unit::new_normalize(Vec3::new(0.5, 0.75f64.sqrt(), 0.0));
    [
        Rotation3::from_axis_angle(&Vec3::z_axis(), 2.0 * PI / 3.0),
        Rotation3::from_axis_angle(&Vec3::x_axis(), PI),
        Rotation3::from_axis_angle(&sixty, PI),
    ]
}
