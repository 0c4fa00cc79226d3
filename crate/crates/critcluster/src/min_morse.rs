//! Criticality analysis for `F = min{F_1, ..., F_m}` near a point where every `F_u` vanishes.
//!
//! Each `F_u` is modelled to second order as `l_u·x + xᵀ q_u x`. Note that `q_u` is the
//! quadratic form itself, i.e. half the Hessian.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ball_clusters::{self, BallTouchConfig};
use crate::cyl_clusters::{self, LineCluster};
use crate::geom3::line_distance;
use crate::rng;
use crate::{Error, Result};

/// Relative singular-value cutoff for every rank decision.
pub const RANK_TOL: f64 = 1e-8;
/// Relative tolerance on `‖Σ λ_u l_u‖` for accepting a convex relation.
pub const RELATION_TOL: f64 = 1e-9;
/// Relative threshold on `sup M` for the certificate.
pub const CERT_TOL: f64 = 1e-8;
/// Largest null-space dimension the sphere sampler accepts.
pub const MAX_SAMPLED_DIM: usize = 12;
/// Finite-difference step for bundles built from clusters.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearQuadraticBundle {
    n: usize,
    l: Vec<DVector<f64>>,
    q: Vec<DMatrix<f64>>,
}

impl LinearQuadraticBundle {
    pub fn new(n: usize, forms: Vec<(DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        if n == 0 || forms.is_empty() {
            return Err(Error::Domain("a bundle needs n ≥ 1 and m ≥ 1".into()));
        }
        let mut l = Vec::with_capacity(forms.len());
        let mut q = Vec::with_capacity(forms.len());
        for (u, (lu, qu)) in forms.into_iter().enumerate() {
            if lu.len() != n || qu.nrows() != n || qu.ncols() != n {
                return Err(Error::Domain(format!("form {u} has the wrong dimension")));
            }
            let asym = (&qu - qu.transpose()).amax();
            if asym > 1e-10 * qu.amax().max(1.0) {
                return Err(Error::Domain(format!("quadratic form {u} is not symmetric ({asym:e})")));
            }
            l.push(lu);
            q.push((&qu + qu.transpose()) * 0.5);
        }
        Ok(LinearQuadraticBundle { n, l, q })
    }

    /// Bundle with vanishing quadratic parts.
    pub fn linear(n: usize, forms: Vec<DVector<f64>>) -> Result<Self> {
        LinearQuadraticBundle::new(n, forms.into_iter().map(|l| (l, DMatrix::zeros(n, n))).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    pub fn linear_form(&self, u: usize) -> &DVector<f64> {
        &self.l[u]
    }

    pub fn quadratic_form(&self, u: usize) -> &DMatrix<f64> {
        &self.q[u]
    }

    /// All forms multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        LinearQuadraticBundle {
            n: self.n,
            l: self.l.iter().map(|v| v * c).collect(),
            q: self.q.iter().map(|m| m * c).collect(),
        }
    }

    /// Gradients as the columns of an n×m matrix.
    pub fn gradient_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.l)
    }

    fn linear_scale(&self) -> f64 {
        self.l.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Δ(v) = min_u l_u(v).
    pub fn pl_differential(&self, v: &DVector<f64>) -> f64 {
        self.l.iter().map(|l| l.dot(v)).fold(f64::INFINITY, f64::min)
    }

    /// The second-order model `min_u (l_u(y) + q_u(y))`.
    pub fn model(&self, y: &DVector<f64>) -> f64 {
        self.l.iter().zip(&self.q).map(|(l, q)| l.dot(y) + y.dot(&(q * y))).fold(f64::INFINITY, f64::min)
    }

    pub fn is_critical(&self) -> CriticalWitness {
        let scale = self.linear_scale();
        if scale == 0.0 {
            return CriticalWitness {
                critical: true,
                lambda: DVector::from_element(self.len(), 1.0 / self.len() as f64),
                residual: 0.0,
            };
        }
        let (point, weights) = min_norm_point(&self.l);
        let residual = point.norm();
        let critical = residual <= RELATION_TOL * scale;
        let mut lambda = DVector::zeros(self.len());
        if critical {
            for (u, w) in weights {
                if w > 1e-9 {
                    lambda[u] = w;
                }
            }
            lambda /= lambda.sum();
        }
        CriticalWitness { critical, lambda, residual: residual / scale }
    }

    /// Orthonormal basis of `E = ∩ ker l_u`, as the columns of an n×e matrix.
    pub fn null_space(&self) -> DMatrix<f64> {
        let rows = DMatrix::from_rows(&self.l.iter().map(|v| v.transpose()).collect::<Vec<_>>());
        kernel(&rows)
    }

    pub fn null_index(&self) -> usize {
        self.null_space().ncols()
    }

    pub fn detect_partition(&self) -> Result<Partition> {
        if !self.is_critical().critical {
            return Err(Error::Structure("bundle is not critical".into()));
        }
        let v = self.gradient_matrix();
        let m = self.len();
        let relations = kernel(&v);
        let k = relations.ncols();
        let rows = rref(&relations.transpose());
        let mut uf = UnionFind::new(m);
        let mut covered = vec![false; m];
        for r in rows.row_iter() {
            let support: Vec<usize> = (0..m).filter(|&u| r[u] != 0.0).collect();
            for &u in &support {
                covered[u] = true;
                uf.union(support[0], u);
            }
        }
        let mut block_of = vec![usize::MAX; m];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for u in 0..m {
            if !covered[u] {
                continue;
            }
            let root = uf.find(u);
            if block_of[root] == usize::MAX {
                block_of[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[block_of[root]].push(u);
        }
        let mut per_block = vec![Vec::new(); blocks.len()];
        for r in rows.row_iter() {
            if let Some(u) = (0..m).find(|&u| r[u] != 0.0) {
                per_block[block_of[uf.find(u)]].push(r.transpose());
            }
        }
        if per_block.iter().any(|rs| rs.len() != 1) {
            let dims: Vec<usize> = per_block.iter().map(|rs| rs.len()).collect();
            return Err(Error::Structure(format!(
                "relation space of dimension {k} has no disjoint-support basis with one relation per block (block dimensions {dims:?})"
            )));
        }
        let mut lambdas = Vec::with_capacity(blocks.len());
        let mut lambda_positive = Vec::with_capacity(blocks.len());
        for (b, rs) in blocks.iter().zip(&per_block) {
            let mut lam = rs[0].clone();
            let s = lam.sum();
            lam /= s;
            lambda_positive.push(b.iter().all(|&u| lam[u] > 0.0));
            lambdas.push(lam);
        }
        let total_rank = rank(&columns(&v, &covered_indices(&covered)));
        let block_ranks: usize = blocks.iter().map(|b| rank(&columns(&v, b))).sum();
        let uncovered: Vec<usize> = (0..m).filter(|&u| !covered[u]).collect();
        let uncovered_independent = rank(&v) == total_rank + uncovered.len();
        Ok(Partition {
            k,
            blocks,
            lambdas,
            lambda_positive,
            rank_additive: block_ranks == total_rank,
            uncovered,
            uncovered_independent,
        })
    }

    /// Orthonormal basis of `E` with the directions of `gauge` removed.
    pub fn reduced_null_space(&self, gauge: &[DVector<f64>]) -> DMatrix<f64> {
        let e = self.null_space();
        if gauge.is_empty() || e.ncols() == 0 {
            return e;
        }
        let g = DMatrix::from_columns(gauge);
        let ge = e.transpose() * g;
        let inner = kernel(&ge.transpose());
        &e * inner
    }

    /// Combined forms `Q_p = Σ_{u ∈ block p} λ_u q_u` restricted to the basis `b`.
    fn block_forms(&self, part: &Partition, b: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        part.blocks
            .iter()
            .zip(&part.lambdas)
            .map(|(blk, lam)| {
                let mut qp = DMatrix::zeros(self.n, self.n);
                for &u in blk {
                    qp += &self.q[u] * lam[u];
                }
                b.transpose() * qp * b
            })
            .collect()
    }

    pub fn certify_local_max(&self, gauge: &[DVector<f64>], seed: u64) -> Result<Certification> {
        let part = self.detect_partition()?;
        if !part.lambda_positive.iter().all(|&p| p) {
            return Err(Error::Structure("a relation block has coefficients of both signs".into()));
        }
        if !part.rank_additive {
            return Err(Error::Structure("relation blocks have overlapping gradient spans".into()));
        }
        let b = self.reduced_null_space(gauge);
        let e = b.ncols();
        if e > MAX_SAMPLED_DIM {
            return Err(Error::Domain(format!("null space of dimension {e} is too large to sample")));
        }
        if e == 0 {
            return Ok(Certification { status: Certificate::CertifiedMax, margin: None, sup_m: None, witness: None });
        }
        let forms = self.block_forms(&part, &b);
        let scale = forms.iter().map(|q| q.norm()).fold(0.0, f64::max);
        let (xi, sup_m) = maximize_min_of_forms(&forms, seed);
        if scale == 0.0 {
            return Ok(Certification { status: Certificate::NotCertified, margin: Some(0.0), sup_m: Some(0.0), witness: None });
        }
        let margin = Some(-sup_m / scale);
        if sup_m < -CERT_TOL * scale {
            return Ok(Certification { status: Certificate::CertifiedMax, margin, sup_m: Some(sup_m), witness: None });
        }
        if sup_m > CERT_TOL * scale {
            if let Some(w) = self.ascent_witness(&part, &b, &forms, &xi) {
                return Ok(Certification {
                    status: Certificate::Refuted,
                    margin,
                    sup_m: Some(sup_m),
                    witness: Some(w),
                });
            }
        }
        Ok(Certification { status: Certificate::NotCertified, margin, sup_m: Some(sup_m), witness: None })
    }

    /// A point `y = sξ + z` with positive model value, `z ⟂ E` chosen so that the linear
    /// parts cancel the spread of the quadratic parts inside each block.
    fn ascent_witness(
        &self,
        part: &Partition,
        b: &DMatrix<f64>,
        forms: &[DMatrix<f64>],
        xi: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        let lmat = self.gradient_matrix().transpose();
        let svd = lmat.clone().svd(true, true);
        let dir = b * xi;
        let mut s = 1.0;
        while s > 1e-6 {
            let y0 = &dir * s;
            let mut target = DVector::zeros(self.len());
            let floor = forms.iter().map(|q| xi.dot(&(q * xi))).fold(f64::INFINITY, f64::min) * s * s;
            for (p, blk) in part.blocks.iter().enumerate() {
                let cp = s * s * xi.dot(&(&forms[p] * xi));
                for &u in blk {
                    target[u] = cp - y0.dot(&(&self.q[u] * &y0));
                }
            }
            for &u in &part.uncovered {
                target[u] = floor - y0.dot(&(&self.q[u] * &y0));
            }
            let z = svd.solve(&target, RANK_TOL * svd.singular_values.max()).ok()?;
            let y = &y0 + z;
            if self.model(&y) > 0.0 {
                return Some(y);
            }
            s *= 0.5;
        }
        None
    }

    pub fn k1_negative_definite(&self, gauge: &[DVector<f64>]) -> Result<bool> {
        let part = self.detect_partition()?;
        if part.k != 1 {
            return Err(Error::Structure(format!("expected a single relation, found k = {}", part.k)));
        }
        let b = self.reduced_null_space(gauge);
        if b.ncols() == 0 {
            return Ok(true);
        }
        let q = &self.block_forms(&part, &b)[0];
        let scale = self.q.iter().map(|m| m.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let eig = q.clone().symmetric_eigen();
        Ok(eig.eigenvalues.iter().all(|&l| l < -CERT_TOL * scale))
    }

    /// Full report: criticality, relations, null space and certificate.
    pub fn analyze(&self, gauge: &[DVector<f64>], seed: u64) -> CriticalityReport {
        let w = self.is_critical();
        let e = self.null_space();
        let reduced = self.reduced_null_space(gauge);
        let mut report = CriticalityReport {
            is_critical: w.critical,
            lambda: w.lambda.iter().copied().collect(),
            k: None,
            partition: Vec::new(),
            relation_basis: Vec::new(),
            lambda_positive: Vec::new(),
            rank_additive: None,
            uncovered: Vec::new(),
            e_basis: e.column_iter().map(|c| c.iter().copied().collect()).collect(),
            null_index: e.ncols(),
            null_index_mod_gauge: reduced.ncols(),
            q_forms: Vec::new(),
            certificate: None,
            margin: None,
            witness: None,
            inconclusive: None,
        };
        if !w.critical {
            return report;
        }
        match self.detect_partition() {
            Ok(part) => {
                report.k = Some(part.k);
                report.partition = part.blocks.clone();
                report.relation_basis = part.lambdas.iter().map(|l| l.iter().copied().collect()).collect();
                report.lambda_positive = part.lambda_positive.clone();
                report.rank_additive = Some(part.rank_additive);
                report.uncovered = part.uncovered.clone();
                report.q_forms = self
                    .block_forms(&part, &reduced)
                    .iter()
                    .map(|q| q.row_iter().map(|r| r.iter().copied().collect()).collect())
                    .collect();
                match self.certify_local_max(gauge, seed) {
                    Ok(c) => {
                        report.certificate = Some(c.status);
                        report.margin = c.margin;
                        report.witness = c.witness.map(|w| w.iter().copied().collect());
                    }
                    Err(e) => report.inconclusive = Some(e.to_string()),
                }
            }
            Err(e) => report.inconclusive = Some(e.to_string()),
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalWitness {
    pub critical: bool,
    /// Convex weights, zero off the support; meaningful only when critical.
    pub lambda: DVector<f64>,
    /// Distance from 0 to the hull of the gradients, relative to the largest gradient.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub k: usize,
    pub blocks: Vec<Vec<usize>>,
    /// One relation per block, normalized to unit sum, zero off the block.
    pub lambdas: Vec<DVector<f64>>,
    pub lambda_positive: Vec<bool>,
    pub rank_additive: bool,
    /// Indices carried by no relation.
    pub uncovered: Vec<usize>,
    pub uncovered_independent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    CertifiedMax,
    NotCertified,
    Refuted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub status: Certificate,
    /// `-sup M / ‖Q‖`, positive when certified; absent when E is trivial.
    pub margin: Option<f64>,
    pub sup_m: Option<f64>,
    /// Point with positive model value, shipped with refutations.
    pub witness: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub is_critical: bool,
    pub lambda: Vec<f64>,
    pub k: Option<usize>,
    pub partition: Vec<Vec<usize>>,
    pub relation_basis: Vec<Vec<f64>>,
    pub lambda_positive: Vec<bool>,
    pub rank_additive: Option<bool>,
    pub uncovered: Vec<usize>,
    pub e_basis: Vec<Vec<f64>>,
    pub null_index: usize,
    pub null_index_mod_gauge: usize,
    pub q_forms: Vec<Vec<Vec<f64>>>,
    pub certificate: Option<Certificate>,
    pub margin: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub inconclusive: Option<String>,
}

pub fn pl_differential(b: &LinearQuadraticBundle, v: &DVector<f64>) -> f64 {
    b.pl_differential(v)
}

pub fn is_critical(b: &LinearQuadraticBundle) -> CriticalWitness {
    b.is_critical()
}

pub fn null_space(b: &LinearQuadraticBundle) -> (DMatrix<f64>, usize) {
    let e = b.null_space();
    let n = e.ncols();
    (e, n)
}

pub fn detect_partition(b: &LinearQuadraticBundle) -> Result<Partition> {
    b.detect_partition()
}

pub fn certify_local_max(b: &LinearQuadraticBundle) -> Result<Certification> {
    b.certify_local_max(&[], crate::DEFAULT_SEED)
}

pub fn k1_negative_definite(b: &LinearQuadraticBundle) -> Result<bool> {
    b.k1_negative_definite(&[])
}

/// Orthonormal basis (columns) of the kernel of `a`, with singular values below
/// `RANK_TOL · σ_max` counted as zero.
pub fn kernel(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| smax == 0.0 || svd.singular_values[i] < RANK_TOL * smax)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    a.ncols() - kernel(a).ncols()
}

fn columns(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    if idx.is_empty() {
        return DMatrix::zeros(a.nrows(), 0);
    }
    DMatrix::from_columns(&idx.iter().map(|&i| a.column(i).into_owned()).collect::<Vec<_>>())
}

fn covered_indices(covered: &[bool]) -> Vec<usize> {
    (0..covered.len()).filter(|&u| covered[u]).collect()
}

/// Reduced row echelon form with partial pivoting; entries below `1e-9·max` are zeroed.
fn rref(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = a.clone();
    let tol = 1e-9 * m.amax().max(f64::MIN_POSITIVE);
    let (rows, cols) = m.shape();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows).map(|i| (i, m[(i, c)].abs())).fold((r, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if best <= tol {
            continue;
        }
        m.swap_rows(r, p);
        let piv = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= piv;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        m[(i, j)] -= f * m[(r, j)];
                    }
                }
            }
        }
        r += 1;
    }
    m.apply(|x| {
        if x.abs() <= 1e-9 {
            *x = 0.0
        }
    });
    m
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut u: usize) -> usize {
        while self.0[u] != u {
            self.0[u] = self.0[self.0[u]];
            u = self.0[u];
        }
        u
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[rb] = ra;
        }
    }
}

/// Wolfe's algorithm for the minimum-norm point of the convex hull of `pts`.
/// Returns the point and its convex weights.
pub fn min_norm_point(pts: &[DVector<f64>]) -> (DVector<f64>, Vec<(usize, f64)>) {
    let scale2 = pts.iter().map(|p| p.norm_squared()).fold(0.0, f64::max);
    let eps = 1e-14 * scale2;
    let start = (0..pts.len()).min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared())).unwrap();
    let mut set: Vec<usize> = vec![start];
    let mut w: Vec<f64> = vec![1.0];
    let mut x = pts[start].clone();
    for _ in 0..1000 {
        let (j, xj) = (0..pts.len()).map(|i| (i, x.dot(&pts[i]))).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if x.norm_squared() - xj <= eps || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        loop {
            let alpha = affine_min_norm(pts, &set);
            if alpha.iter().all(|&a| a > 1e-15) {
                w = alpha;
                break;
            }
            let theta = set
                .iter()
                .enumerate()
                .filter(|&(i, _)| alpha[i] <= 1e-15)
                .map(|(i, _)| if w[i] - alpha[i] > 0.0 { w[i] / (w[i] - alpha[i]) } else { 0.0 })
                .fold(1.0, f64::min);
            for i in 0..set.len() {
                w[i] = theta * alpha[i] + (1.0 - theta) * w[i];
            }
            let keep: Vec<usize> = (0..set.len()).filter(|&i| w[i] > 1e-15).collect();
            set = keep.iter().map(|&i| set[i]).collect();
            w = keep.iter().map(|&i| w[i]).collect();
            if set.len() == 1 {
                w = vec![1.0];
                break;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        x = set.iter().zip(&w).fold(DVector::zeros(pts[0].len()), |acc, (&i, &wi)| acc + &pts[i] * wi);
    }
    (x, set.into_iter().zip(w).collect())
}

/// Weights of the minimum-norm point of the affine hull of the selected points.
fn affine_min_norm(pts: &[DVector<f64>], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    let p0 = &pts[set[0]];
    if k == 1 {
        return vec![1.0];
    }
    let d = DMatrix::from_fn(p0.len(), k - 1, |r, c| pts[set[c + 1]][r] - p0[r]);
    let svd = d.svd(true, true);
    let tol = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let c = svd.solve(&(-p0), tol).expect("factors requested");
    let mut w = Vec::with_capacity(k);
    w.push(1.0 - c.sum());
    w.extend(c.iter().copied());
    w
}

/// Approximate `sup_{|ξ|=1} min_p ξᵀ Q_p ξ` by dense sampling plus local refinement.
fn maximize_min_of_forms(forms: &[DMatrix<f64>], seed: u64) -> (DVector<f64>, f64) {
    let e = forms[0].nrows();
    let eval = |v: &DVector<f64>| forms.iter().map(|q| v.dot(&(q * v))).fold(f64::INFINITY, f64::min);
    if e == 1 {
        let v = DVector::from_element(1, 1.0);
        let m = eval(&v);
        return (v, m);
    }
    let samples = 200_000;
    let mut rng = rng::seeded(seed, 0x5eed);
    let keep = 16;
    let mut best: Vec<(f64, DVector<f64>)> = Vec::with_capacity(keep + 1);
    for _ in 0..samples {
        let v = rng::unit_vector(&mut rng, e);
        let m = eval(&v);
        if best.len() < keep || m > best[best.len() - 1].0 {
            best.push((m, v));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(keep);
        }
    }
    let mut top = best[0].clone();
    for (m0, v0) in best {
        let (v, m) = refine_on_sphere(&eval, v0, m0);
        if m > top.0 {
            top = (m, v);
        }
    }
    (top.1, top.0)
}

fn refine_on_sphere<F: Fn(&DVector<f64>) -> f64>(f: &F, mut v: DVector<f64>, mut fv: f64) -> (DVector<f64>, f64) {
    let e = v.len();
    let mut step = 0.1;
    while step > 1e-12 {
        let mut improved = false;
        for i in 0..e {
            for sgn in [1.0, -1.0] {
                let mut w = v.clone();
                w[i] += sgn * step;
                w.normalize_mut();
                let fw = f(&w);
                if fw > fv {
                    v = w;
                    fv = fw;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (v, fv)
}

/// Central-difference gradient and Hessian of `f` at 0 with one Richardson step.
pub fn fd_gradient_hessian<F: Fn(&DVector<f64>) -> f64>(f: &F, n: usize, h: f64) -> (DVector<f64>, DMatrix<f64>) {
    let (g1, h1) = fd_plain(f, n, h);
    let (g2, h2) = fd_plain(f, n, h / 2.0);
    ((g2 * 4.0 - g1) / 3.0, (h2 * 4.0 - h1) / 3.0)
}

fn fd_plain<F: Fn(&DVector<f64>) -> f64>(f: &F, n: usize, h: f64) -> (DVector<f64>, DMatrix<f64>) {
    let at = |pairs: &[(usize, f64)]| {
        let mut v = DVector::zeros(n);
        for &(i, s) in pairs {
            v[i] += s;
        }
        f(&v)
    };
    let f0 = at(&[]);
    let mut g = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = at(&[(i, h)]);
        let fm = at(&[(i, -h)]);
        g[i] = (fp - fm) / (2.0 * h);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let v = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    (g, hess)
}

/// Active-pair bundle of a cluster together with its rotation generators.
#[derive(Debug, Clone)]
pub struct ClusterBundle {
    pub bundle: LinearQuadraticBundle,
    pub pairs: Vec<(usize, usize)>,
    pub gauge: Vec<DVector<f64>>,
    pub value: f64,
}

fn embed_pair(local_dim: usize, total: usize, i: usize, j: usize, g: &DVector<f64>, h: &DMatrix<f64>)
    -> (DVector<f64>, DMatrix<f64>) {
    let k = local_dim;
    let idx: Vec<usize> = (0..k).map(|a| k * i + a).chain((0..k).map(|a| k * j + a)).collect();
    let mut l = DVector::zeros(total);
    let mut q = DMatrix::zeros(total, total);
    for (a, &ia) in idx.iter().enumerate() {
        l[ia] = g[a];
        for (b, &ib) in idx.iter().enumerate() {
            q[(ia, ib)] = 0.5 * h[(a, b)];
        }
    }
    (l, q)
}

/// `F_u(v) = d_ij(perturb(c, v)) − D(c)` for each pair within `tol` of the minimum.
pub fn bundle_from_line_cluster(c: &LineCluster, tol: f64) -> Result<ClusterBundle> {
    let d0 = c.min_distance();
    if d0 <= 1e-12 {
        return Err(Error::Domain("intersecting lines: the distance is not smooth there".into()));
    }
    let pairs = c.contact_graph(tol).edges;
    let n = 3 * c.len();
    let mut forms = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let (li, lj) = (c.lines()[i], c.lines()[j]);
        let f = |v: &DVector<f64>| {
            let a = cyl_clusters::perturb_line(&li, v[0], v[1], v[2]);
            let b = cyl_clusters::perturb_line(&lj, v[3], v[4], v[5]);
            line_distance(&a, &b) - d0
        };
        let (g, h) = fd_gradient_hessian(&f, 6, FD_STEP);
        forms.push(embed_pair(3, n, i, j, &g, &h));
    }
    Ok(ClusterBundle {
        bundle: LinearQuadraticBundle::new(n, forms)?,
        pairs,
        gauge: cyl_clusters::rotation_generators(c),
        value: d0,
    })
}

/// `F_u(v) = |x_i' − x_j'| − δ(p)` for each pair within `tol` of the minimum.
pub fn bundle_from_ball_config(p: &BallTouchConfig, tol: f64) -> Result<ClusterBundle> {
    let d0 = p.delta();
    if d0 <= 1e-12 {
        return Err(Error::Domain("coincident touch points".into()));
    }
    let pairs = p.contact_pairs(tol);
    let n = 2 * p.len();
    let mut forms = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let (xi, xj) = (p.points()[i], p.points()[j]);
        let f = |v: &DVector<f64>| {
            let a = ball_clusters::perturb_point(&xi, v[0], v[1]);
            let b = ball_clusters::perturb_point(&xj, v[2], v[3]);
            (a - b).norm() - d0
        };
        let (g, h) = fd_gradient_hessian(&f, 4, FD_STEP);
        forms.push(embed_pair(2, n, i, j, &g, &h));
    }
    Ok(ClusterBundle {
        bundle: LinearQuadraticBundle::new(n, forms)?,
        pairs,
        gauge: ball_clusters::rotation_generators(p),
        value: d0,
    })
}
