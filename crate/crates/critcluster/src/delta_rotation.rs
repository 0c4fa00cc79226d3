//! Tangent lines along the edges of Platonic solids, turned in place by a common angle δ.
//!
//! The unit sphere touches every edge at its midpoint, so each edge spans a tangent line.
//! Turning each line about the radius through its touch point traces a one-parameter
//! family of clusters; at δ = π/2 the edges become those of the dual solid.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::ball_clusters::{icosahedron_vertices, GOLDEN};
use crate::cyl_clusters::{LineCluster, TETRAHEDRON};
use crate::geom3::{closest_midpoint, TangentLine, Vec3};
use crate::{Error, Result};

/// Degeneracy tolerance on line distance for skeleton detection.
pub const SKELETON_TOL: f64 = 1e-7;
/// Width of the refined bracket around each sweep extremum.
pub const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatonicKind {
    Tetrahedron,
    Octahedron,
    Cube,
    Icosahedron,
    Dodecahedron,
}

impl PlatonicKind {
    pub const ALL: [PlatonicKind; 5] = [
        PlatonicKind::Tetrahedron,
        PlatonicKind::Octahedron,
        PlatonicKind::Cube,
        PlatonicKind::Icosahedron,
        PlatonicKind::Dodecahedron,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlatonicKind::Tetrahedron => "tetrahedron",
            PlatonicKind::Octahedron => "octahedron",
            PlatonicKind::Cube => "cube",
            PlatonicKind::Icosahedron => "icosahedron",
            PlatonicKind::Dodecahedron => "dodecahedron",
        }
    }

    pub fn edge_count(self) -> usize {
        match self {
            PlatonicKind::Tetrahedron => 6,
            PlatonicKind::Octahedron | PlatonicKind::Cube => 12,
            PlatonicKind::Icosahedron | PlatonicKind::Dodecahedron => 30,
        }
    }
}

impl fmt::Display for PlatonicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlatonicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlatonicKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// A Platonic solid scaled so that its edge midpoints lie on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatonicSolid {
    pub kind: PlatonicKind,
    pub vertices: Vec<Vec3>,
    /// Vertex index pairs, in lexicographic order.
    pub edges: Vec<(usize, usize)>,
}

impl PlatonicSolid {
    pub fn new(kind: PlatonicKind) -> Self {
        let raw: Vec<Vec3> = match kind {
            PlatonicKind::Tetrahedron => TETRAHEDRON.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            PlatonicKind::Octahedron => (0..3)
                .flat_map(|i| [1.0, -1.0].map(|s| Vec3::from_fn(|k, _| if k == i { s } else { 0.0 })))
                .collect(),
            PlatonicKind::Cube => sign_triples(),
            PlatonicKind::Icosahedron => icosahedron_vertices(),
            PlatonicKind::Dodecahedron => {
                let (g, h) = (GOLDEN, 1.0 / GOLDEN);
                let mut v = sign_triples();
                for a in [h, -h] {
                    for b in [g, -g] {
                        v.push(Vec3::new(0.0, b, a));
                        v.push(Vec3::new(a, 0.0, b));
                        v.push(Vec3::new(b, a, 0.0));
                    }
                }
                v
            }
        };
        let edges = shortest_pairs(&raw);
        let (i, j) = edges[0];
        let scale = 1.0 / ((raw[i] + raw[j]) * 0.5).norm();
        let vertices = raw.into_iter().map(|v| v * scale).collect();
        PlatonicSolid { kind, vertices, edges }
    }

    pub fn edge_midpoints(&self) -> Vec<Vec3> {
        self.edges.iter().map(|&(i, j)| (self.vertices[i] + self.vertices[j]) * 0.5).collect()
    }
}

fn sign_triples() -> Vec<Vec3> {
    (0..8).map(|i| Vec3::from_fn(|k, _| if i >> k & 1 == 0 { 1.0 } else { -1.0 })).collect()
}

fn shortest_pairs(v: &[Vec3]) -> Vec<(usize, usize)> {
    let mut best = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.min((v[i] - v[j]).norm());
        }
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (v[i] - v[j]).norm() < best * (1.0 + 1e-9) {
                out.push((i, j));
            }
        }
    }
    out
}

/// One tangent line per edge: through the edge midpoint, along the edge.
pub fn edge_lines(s: &PlatonicSolid) -> LineCluster {
    let lines = s
        .edges
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (s.vertices[i], s.vertices[j]);
            TangentLine::from_vectors((a + b) * 0.5, b - a).expect("edge midpoints are on the sphere")
        })
        .collect();
    LineCluster::new(lines).expect("every solid has at least six edges").with_label(s.kind.as_str())
}

/// Turns every line by δ, counterclockwise seen from outside the sphere at its touch point.
pub fn rotate_edges(c: &LineCluster, delta: f64) -> LineCluster {
    let lines = c.lines().iter().map(|l| l.twisted(delta)).collect();
    let out = LineCluster::new(lines).expect("same number of lines");
    match &c.label {
        Some(l) => out.with_label(l),
        None => out,
    }
}

/// `rotate_edges` with the sense flipped when `mirror` is set.
pub fn rotate_edges_oriented(c: &LineCluster, delta: f64, mirror: bool) -> LineCluster {
    rotate_edges(c, if mirror { -delta } else { delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub delta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub solid: PlatonicKind,
    pub mirror: bool,
    /// `(δ, D)` on the uniform grid.
    pub samples: Vec<(f64, f64)>,
    pub extrema: Vec<Extremum>,
}

impl SweepResult {
    pub fn extrema_of(&self, kind: ExtremumKind) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(move |e| e.kind == kind)
    }

    /// Extremum of the given kind closest to `delta`.
    pub fn nearest(&self, kind: ExtremumKind, delta: f64) -> Option<&Extremum> {
        self.extrema_of(kind).min_by(|a, b| (a.delta - delta).abs().total_cmp(&(b.delta - delta).abs()))
    }
}

pub fn sweep(s: &PlatonicSolid, from: f64, to: f64, samples: usize) -> Result<SweepResult> {
    sweep_oriented(s, from, to, samples, false)
}

/// D on a uniform δ-grid; interior grid extrema are refined by golden-section search.
pub fn sweep_oriented(s: &PlatonicSolid, from: f64, to: f64, samples: usize, mirror: bool) -> Result<SweepResult> {
    if samples < 2 {
        return Err(Error::Domain(format!("a sweep needs at least 2 samples, got {samples}")));
    }
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(Error::Domain(format!("bad δ range [{from}, {to}]")));
    }
    let base = edge_lines(s);
    let d = |delta: f64| rotate_edges_oriented(&base, delta, mirror).min_distance();
    let h = (to - from) / (samples - 1) as f64;
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let delta = if i + 1 == samples { to } else { from + h * i as f64 };
            (delta, d(delta))
        })
        .collect();
    let mut extrema: Vec<Extremum> = Vec::new();
    for i in 1..samples.saturating_sub(1) {
        let (l, m, r) = (pts[i - 1].1, pts[i].1, pts[i + 1].1);
        let kind = if m >= l && m > r {
            ExtremumKind::Max
        } else if m <= l && m < r {
            ExtremumKind::Min
        } else {
            continue;
        };
        let sign = if kind == ExtremumKind::Max { 1.0 } else { -1.0 };
        let delta = golden_section(|x| sign * d(x), pts[i - 1].0, pts[i + 1].0, REFINE_TOL);
        let e = Extremum { kind, delta, value: d(delta) };
        if !extrema.iter().any(|o| o.kind == kind && (o.delta - delta).abs() < 1e-8) {
            extrema.push(e);
        }
    }
    Ok(SweepResult { solid: s.kind, mirror, samples: pts, extrema })
}

/// Maximizer of a unimodal `f` on `[a, b]`, to bracket width `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonComponent {
    pub lines: Vec<usize>,
    /// Distinct pairwise intersection points.
    pub points: Vec<[f64; 3]>,
    /// Sorted distances between the intersection points.
    pub segment_lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skeleton {
    pub tolerance: f64,
    pub components: Vec<SkeletonComponent>,
}

/// Groups of mutually meeting lines in a degenerate cluster and the figure their
/// intersection points span.
pub fn skeleton_structure(c: &LineCluster, tol: f64) -> Result<Skeleton> {
    let d = c.min_distance();
    if !(d < tol) {
        return Err(Error::Domain(format!("cluster is not degenerate: D = {d} ≥ {tol}")));
    }
    let n = c.len();
    let meets: Vec<(usize, usize)> = c.pair_distances().into_iter().filter(|p| p.2 < tol).map(|p| (p.0, p.1)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for &(i, j) in &meets {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        parent[a.max(b)] = a.min(b);
    }
    let mut components = Vec::new();
    for r in 0..n {
        let lines: Vec<usize> = (0..n).filter(|&i| root(&mut parent, i) == r).collect();
        if lines.len() < 2 {
            continue;
        }
        let mut points: Vec<Vec3> = Vec::new();
        for &(i, j) in meets.iter().filter(|&&(i, _)| root(&mut parent, i) == r) {
            if let Some(p) = closest_midpoint(&c.lines()[i], &c.lines()[j]) {
                if !points.iter().any(|q| (q - p).norm() < 1e-6) {
                    points.push(p);
                }
            }
        }
        let mut segment_lengths = Vec::new();
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                segment_lengths.push((points[a] - points[b]).norm());
            }
        }
        segment_lengths.sort_by(|a, b| a.total_cmp(b));
        components.push(SkeletonComponent { lines, points: points.iter().map(|p| [p.x, p.y, p.z]).collect(), segment_lengths });
    }
    Ok(Skeleton { tolerance: tol, components })
}
