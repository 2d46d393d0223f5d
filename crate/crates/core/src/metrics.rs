//! Vertex metrics `H_i = (ρ_i ρ_i*)⁻¹`, the Ricci tangent metric and Grassmannian checks.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::linalg::{eye, herm_apply, herm_eigen, herm_from_eigen, op_norm, spd_inverse, try_inverse};
use crate::quiver::{paths_into, topological_order, FramedQuiver, Path};
use crate::representation::{act, in_domain_mcirc, is_stable, FramedRep, GaugeElement, RepError};
use crate::scalar::{frob_inner, gaussian_matrix, matrix_to_json, Scalar};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("representation is not stable")]
    NotStable,
    #[error("representation is outside the convergence domain: {0}")]
    OutsideDomain(String),
    #[error("gram matrix at vertex `{vertex}` is not positive definite (min eigenvalue {min_eig:.3e})")]
    SingularGram { vertex: String, min_eig: f64 },
    #[error(transparent)]
    Rep(#[from] RepError),
}

/// Options for [`vertex_metrics`].
#[derive(Debug, Clone, Copy)]
pub struct MetricOptions {
    /// Fixed truncation length; `None` picks `|Q₀|−1` (acyclic) or the certified length (cyclic).
    pub max_len: Option<usize>,
    /// Target tail bound for cyclic quivers.
    pub tol: f64,
    /// Hard cap on the cyclic truncation length.
    pub max_truncation: usize,
    /// Smallest admissible eigenvalue of a gram matrix.
    pub pd_tol: f64,
    /// Skip the stability test (callers that already know the point is stable).
    pub assume_stable: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions { max_len: None, tol: 1e-10, max_truncation: 100_000, pd_tol: 1e-13, assume_stable: false }
    }
}

/// The matrix `ρ_i = (V_γ e_{t(γ)})_γ` over paths into vertex `i`.
#[derive(Debug, Clone)]
pub struct RhoMatrix<S: Scalar = f64> {
    pub vertex: usize,
    pub paths: Vec<Path>,
    /// `blocks[k] = V_γ e_{t(γ)}` for `γ = paths[k]`.
    pub blocks: Vec<DMatrix<S>>,
    pub matrix: DMatrix<S>,
    pub max_len: usize,
}

/// `V_γ` for a path, as a `d_head × d_tail` matrix.
pub fn path_matrix<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, p: &Path) -> DMatrix<S> {
    let mut m = eye::<S>(fq.d(p.start));
    for &a in &p.arrows {
        m = &r.v[a] * m;
    }
    m
}

fn hcat<S: Scalar>(rows: usize, blocks: &[DMatrix<S>]) -> DMatrix<S> {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::<S>::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((0, off), (rows, b.ncols())).copy_from(b);
        off += b.ncols();
    }
    out
}

/// Assembles `ρ_i` with columns ordered as [`paths_into`].
pub fn assemble_rho<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, i: usize, max_len: usize) -> RhoMatrix<S> {
    let paths = paths_into(&fq.quiver, i, max_len);
    let blocks: Vec<DMatrix<S>> = paths.iter().map(|p| path_matrix(fq, r, p) * &r.e[p.start]).collect();
    let matrix = hcat(fq.d(i), &blocks);
    RhoMatrix { vertex: i, paths, blocks, matrix, max_len }
}

/// Per-vertex metrics and their gram inverses.
#[derive(Debug, Clone)]
pub struct MetricSet<S: Scalar = f64> {
    pub h: Vec<DMatrix<S>>,
    pub gram: Vec<DMatrix<S>>,
    pub h_sqrt: Vec<DMatrix<S>>,
    pub min_eig: Vec<f64>,
    /// Longest path length included.
    pub truncation: usize,
    /// Bound on the operator norm of the omitted tail of every gram matrix.
    pub tail_bound: f64,
}

impl<S: Scalar> MetricSet<S> {
    /// Builds `H`, `H^{1/2}` from gram matrices, checking positive definiteness.
    pub fn from_gram(
        fq: &FramedQuiver,
        gram: Vec<DMatrix<S>>,
        truncation: usize,
        tail_bound: f64,
        pd_tol: f64,
    ) -> Result<Self, MetricError> {
        let mut h = Vec::with_capacity(gram.len());
        let mut h_sqrt = Vec::with_capacity(gram.len());
        let mut min_eig = Vec::with_capacity(gram.len());
        for (i, g) in gram.iter().enumerate() {
            let (vals, vecs) = herm_eigen(g);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(0.0, f64::max);
            if g.nrows() > 0 && !(lo > pd_tol * hi.max(1.0)) {
                return Err(MetricError::SingularGram { vertex: fq.quiver.vertex_id(i).into(), min_eig: lo });
            }
            h.push(herm_from_eigen(&vals, &vecs, |x| 1.0 / x));
            h_sqrt.push(herm_from_eigen(&vals, &vecs, |x| 1.0 / x.sqrt()));
            min_eig.push(lo);
        }
        Ok(MetricSet { h, gram, h_sqrt, min_eig, truncation, tail_bound })
    }

    pub fn to_json(&self, fq: &FramedQuiver) -> Value {
        let mut h = Map::new();
        let mut gram = Map::new();
        let mut order: Vec<usize> = (0..fq.num_vertices()).collect();
        order.sort_by(|&x, &y| fq.quiver.vertex_id(x).cmp(fq.quiver.vertex_id(y)));
        for i in order {
            h.insert(fq.quiver.vertex_id(i).into(), matrix_to_json(&self.h[i]));
            gram.insert(fq.quiver.vertex_id(i).into(), matrix_to_json(&self.gram[i]));
        }
        serde_json::json!({
            "H": h,
            "gram": gram,
            "truncation": self.truncation,
            "tail_bound": self.tail_bound,
        })
    }
}

/// Computes `H_i = (ρ_i ρ_i*)⁻¹` at every vertex.
///
/// Acyclic quivers use the exact path sum. Cyclic quivers sum the layers
/// `X_{k+1} = T(X_k)`, `T(G)_i = Σ_{h(a)=i} V_a G_{t(a)} V_a*`, until a rigorous tail bound
/// drops below `opts.tol`.
pub fn vertex_metrics<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    opts: &MetricOptions,
) -> Result<MetricSet<S>, MetricError> {
    r.check_shapes(fq)?;
    if !opts.assume_stable && !is_stable(fq, r) {
        return Err(MetricError::NotStable);
    }
    if topological_order(&fq.quiver).is_ok() {
        let longest = fq.num_vertices().saturating_sub(1);
        let len = opts.max_len.unwrap_or(longest);
        let gram = acyclic_gram(fq, r, len.min(longest));
        let tail = if len >= longest { 0.0 } else { truncated_tail_estimate(fq, r, len, longest) };
        return MetricSet::from_gram(fq, gram, len.min(longest), tail, opts.pd_tol);
    }
    if !in_domain_mcirc(fq, r) {
        return Err(MetricError::OutsideDomain("an oriented cycle has operator norm ≥ 1".into()));
    }
    let (gram, len, tail) = cyclic_gram(fq, r, opts)?;
    MetricSet::from_gram(fq, gram, len, tail, opts.pd_tol)
}

/// Exact path-sum gram `Σ_{|γ| ≤ len} (V_γ e)(V_γ e)*`, accumulated layer by layer.
fn acyclic_gram<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, len: usize) -> Vec<DMatrix<S>> {
    let mut layer: Vec<DMatrix<S>> = r.e.iter().map(|e| e * e.adjoint()).collect();
    let mut total = layer.clone();
    for _ in 0..len {
        layer = transfer(fq, r, &layer);
        for (t, x) in total.iter_mut().zip(&layer) {
            *t += x;
        }
    }
    total
}

/// Operator-norm size of the omitted layers of an acyclic sum truncated early.
fn truncated_tail_estimate<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, len: usize, longest: usize) -> f64 {
    let mut layer: Vec<DMatrix<S>> = r.e.iter().map(|e| e * e.adjoint()).collect();
    let mut tail = 0.0;
    for k in 1..=longest {
        layer = transfer(fq, r, &layer);
        if k > len {
            tail += layer.iter().map(op_norm).fold(0.0, f64::max);
        }
    }
    tail
}

/// `T(G)_i = Σ_{h(a)=i} V_a G_{t(a)} V_a*`.
pub fn transfer<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, g: &[DMatrix<S>]) -> Vec<DMatrix<S>> {
    let mut out: Vec<DMatrix<S>> = (0..fq.num_vertices()).map(|i| DMatrix::zeros(fq.d(i), fq.d(i))).collect();
    for (a, v) in fq.quiver.arrows().iter().zip(&r.v) {
        out[a.head] += v * &g[a.tail] * v.adjoint();
    }
    out
}

fn max_norm<S: Scalar>(x: &[DMatrix<S>]) -> f64 {
    x.iter().map(op_norm).fold(0.0, f64::max)
}

/// Layer sum for cyclic quivers.
///
/// `T` is positive, so `T^m(G) ≤ ‖G‖ T^m(I)` and `θ_m = max_i ‖T^m(I)_i‖ < 1` bounds the
/// remainder after `L` layers by `θ_m/(1−θ_m) · Σ_{k=L−m+1}^{L} ‖X_k‖`.
fn cyclic_gram<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    opts: &MetricOptions,
) -> Result<(Vec<DMatrix<S>>, usize, f64), MetricError> {
    let nv = fq.num_vertices();
    let ident: Vec<DMatrix<S>> = (0..nv).map(|i| eye(fq.d(i))).collect();
    let mut power = ident;
    let mut best: Option<(usize, f64)> = None;
    for m in 1..=4 * nv.max(1) {
        power = transfer(fq, r, &power);
        let theta = max_norm(&power);
        if theta < 1.0 {
            let rate = theta.powf(1.0 / m as f64);
            if best.is_none_or(|(bm, bt)| rate < bt.powf(1.0 / bm as f64)) {
                best = Some((m, theta));
            }
        }
    }
    let (m, theta) = best.ok_or_else(|| {
        MetricError::OutsideDomain("path series could not be certified convergent".into())
    })?;
    let factor = theta / (1.0 - theta);

    let mut layer: Vec<DMatrix<S>> = r.e.iter().map(|e| e * e.adjoint()).collect();
    let mut total = layer.clone();
    let mut norms = vec![max_norm(&layer)];
    let bound_at = |norms: &[f64], len: usize, total: &[DMatrix<S>]| {
        let lo = (len + 1).saturating_sub(m);
        let window: f64 = norms[lo..=len].iter().sum();
        // Allowance for rounding in the accumulated sum.
        factor * window + (len as f64 + 1.0) * f64::EPSILON * max_norm(total)
    };
    let mut len = 0;
    loop {
        let bound = if len + 1 >= m { bound_at(&norms, len, &total) } else { f64::INFINITY };
        match opts.max_len {
            Some(target) if len >= target => return Ok((total, len, bound)),
            None if bound < opts.tol => return Ok((total, len, bound)),
            _ => {}
        }
        if len >= opts.max_truncation {
            return Err(MetricError::OutsideDomain(format!(
                "tail bound {bound:.3e} still above tolerance after {len} layers"
            )));
        }
        layer = transfer(fq, r, &layer);
        for (t, x) in total.iter_mut().zip(&layer) {
            *t += x;
        }
        norms.push(max_norm(&layer));
        len += 1;
    }
}

/// `max_i ‖gram_i − e_i e_i* − Σ_{h(a)=i} V_a gram_{t(a)} V_a*‖_F`.
pub fn gram_recursion_check<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, m: &MetricSet<S>) -> f64 {
    let t = transfer(fq, r, &m.gram);
    (0..fq.num_vertices())
        .map(|i| (&m.gram[i] - &r.e[i] * r.e[i].adjoint() - &t[i]).norm())
        .fold(0.0, f64::max)
}

/// `max_i ‖H_i(g·r) − (g_i*)⁻¹ H_i(r) g_i⁻¹‖_F`, relative to `‖H_i(g·r)‖_F`.
pub fn equivariance_check<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    g: &GaugeElement<S>,
    opts: &MetricOptions,
) -> Result<f64, MetricError> {
    let m0 = vertex_metrics(fq, r, opts)?;
    let moved = act(fq, g, r)?;
    let m1 = vertex_metrics(fq, &moved, opts)?;
    let inv = g.inverse(fq)?;
    Ok((0..fq.num_vertices())
        .map(|i| {
            let pushed = inv.g[i].adjoint() * &m0.h[i] * &inv.g[i];
            (&m1.h[i] - pushed).norm() / m1.h[i].norm().max(1.0)
        })
        .fold(0.0, f64::max))
}

/// A tangent vector to `R_{n,d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent<S: Scalar = f64> {
    pub dv: Vec<DMatrix<S>>,
    pub de: Vec<DMatrix<S>>,
}

impl<S: Scalar> Tangent<S> {
    pub fn zeros(fq: &FramedQuiver) -> Self {
        let z = FramedRep::<S>::zeros(fq);
        Tangent { dv: z.v, de: z.e }
    }

    pub fn random<R: Rng + ?Sized>(fq: &FramedQuiver, rng: &mut R) -> Self {
        let z = FramedRep::<S>::random(fq, rng);
        Tangent { dv: z.v, de: z.e }
    }

    pub fn scale(&self, s: S) -> Self {
        Tangent { dv: self.dv.iter().map(|m| m * s).collect(), de: self.de.iter().map(|m| m * s).collect() }
    }

    pub fn axpy(&self, s: S, other: &Self) -> Self {
        Tangent {
            dv: self.dv.iter().zip(&other.dv).map(|(a, b)| a + b * s).collect(),
            de: self.de.iter().zip(&other.de).map(|(a, b)| a + b * s).collect(),
        }
    }

    /// Euclidean inner product on `R_{n,d}`.
    pub fn dot(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for (a, b) in self.dv.iter().chain(&self.de).zip(other.dv.iter().chain(&other.de)) {
            acc += frob_inner(a, b);
        }
        acc
    }
}

/// Infinitesimal gauge direction `δV_a = X_h V_a − V_a X_t`, `δe_i = X_i e_i`.
pub fn gauge_direction<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, x: &[DMatrix<S>]) -> Tangent<S> {
    let dv = fq
        .quiver
        .arrows()
        .iter()
        .zip(&r.v)
        .map(|(a, v)| &x[a.head] * v - v * &x[a.tail])
        .collect();
    let de = x.iter().zip(&r.e).map(|(x, e)| x * e).collect();
    Tangent { dv, de }
}

/// Basis of gauge directions from elementary matrices `E_{pq}` (and `i·E_{pq}` over ℂ).
pub fn gauge_basis<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> Vec<Tangent<S>> {
    let mut out = Vec::new();
    let units = S::units();
    for i in 0..fq.num_vertices() {
        for p in 0..fq.d(i) {
            for q in 0..fq.d(i) {
                for &u in &units {
                    let mut x: Vec<DMatrix<S>> = (0..fq.num_vertices()).map(|j| DMatrix::zeros(fq.d(j), fq.d(j))).collect();
                    x[i][(p, q)] = u;
                    out.push(gauge_direction(fq, r, &x));
                }
            }
        }
    }
    out
}

/// `∂_v ρ_i` by the Leibniz rule over each path column block.
pub fn rho_derivative<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    rho: &RhoMatrix<S>,
    v: &Tangent<S>,
) -> DMatrix<S> {
    let blocks: Vec<DMatrix<S>> = rho
        .paths
        .iter()
        .map(|p| {
            let k = p.arrows.len();
            // prefix[j] = V_{a_j}⋯V_{a_1}, suffix[j] = V_{a_k}⋯V_{a_{j+1}}.
            let mut prefix = vec![eye::<S>(fq.d(p.start))];
            for &a in &p.arrows {
                let next = &r.v[a] * prefix.last().expect("nonempty");
                prefix.push(next);
            }
            let head = p.head(&fq.quiver);
            let mut suffix = vec![eye::<S>(fq.d(head)); k + 1];
            for j in (0..k).rev() {
                suffix[j] = &suffix[j + 1] * &r.v[p.arrows[j]];
            }
            let mut d = &prefix[k] * &v.de[p.start];
            for j in 0..k {
                let a = p.arrows[j];
                d += &suffix[j + 1] * &v.dv[a] * &prefix[j] * &r.e[p.start];
            }
            d
        })
        .collect();
    hcat(fq.d(rho.vertex), &blocks)
}

/// Evaluator for the Ricci tangent metric `H_T` at a fixed point.
pub struct TangentMetric<'a, S: Scalar = f64> {
    fq: &'a FramedQuiver,
    r: &'a FramedRep<S>,
    metrics: &'a MetricSet<S>,
    rho: Vec<RhoMatrix<S>>,
}

impl<'a, S: Scalar> TangentMetric<'a, S> {
    pub fn new(fq: &'a FramedQuiver, r: &'a FramedRep<S>, metrics: &'a MetricSet<S>) -> Self {
        let rho = (0..fq.num_vertices()).map(|i| assemble_rho(fq, r, i, metrics.truncation)).collect();
        TangentMetric { fq, r, metrics, rho }
    }

    /// Per-vertex pairs `(A_v, B_v)` with `A = H^{1/2} ∂_vρ`, `B = A ρ* H^{1/2}`.
    fn factors(&self, v: &Tangent<S>) -> Vec<(DMatrix<S>, DMatrix<S>)> {
        (0..self.fq.num_vertices())
            .map(|i| {
                let d = rho_derivative(self.fq, self.r, &self.rho[i], v);
                let a = &self.metrics.h_sqrt[i] * d;
                let b = &a * self.rho[i].matrix.adjoint() * &self.metrics.h_sqrt[i];
                (a, b)
            })
            .collect()
    }

    fn pair(fv: &[(DMatrix<S>, DMatrix<S>)], fw: &[(DMatrix<S>, DMatrix<S>)]) -> S {
        let mut acc = S::zero();
        for ((av, bv), (aw, bw)) in fv.iter().zip(fw) {
            acc += frob_inner(av, aw) - frob_inner(bv, bw);
        }
        acc
    }

    /// `H_T(v, w) = Σ_i tr((∂_vρ)* H_i ∂_wρ) − tr((∂_vρ ρ* H_i^{1/2})* H_i (∂_wρ ρ* H_i^{1/2}))`.
    pub fn eval(&self, v: &Tangent<S>, w: &Tangent<S>) -> S {
        Self::pair(&self.factors(v), &self.factors(w))
    }

    /// Gram matrix `H_T(v_p, v_q)`.
    pub fn gram(&self, dirs: &[Tangent<S>]) -> DMatrix<S> {
        let f: Vec<_> = dirs.iter().map(|v| self.factors(v)).collect();
        let n = dirs.len();
        let mut g = DMatrix::<S>::zeros(n, n);
        for p in 0..n {
            for q in p..n {
                let x = Self::pair(&f[p], &f[q]);
                g[(p, q)] = x;
                g[(q, p)] = x.conjugate();
            }
        }
        g
    }
}

/// One-shot `H_T(v, w)`.
pub fn tangent_metric<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    metrics: &MetricSet<S>,
    v: &Tangent<S>,
    w: &Tangent<S>,
) -> S {
    TangentMetric::new(fq, r, metrics).eval(v, w)
}

/// Removes the Euclidean projection onto the span of gauge directions.
pub fn transverse_part<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, v: &Tangent<S>) -> Tangent<S> {
    let basis = gauge_basis(fq, r);
    let n = basis.len();
    if n == 0 {
        return v.clone();
    }
    let mut g = DMatrix::<S>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<S>::zeros(n);
    for p in 0..n {
        for q in 0..n {
            g[(p, q)] = basis[p].dot(&basis[q]);
        }
        rhs[p] = basis[p].dot(v);
    }
    // Pseudo-inverse handles gauge directions that vanish at this point.
    let coeffs = g.pseudo_inverse(1e-12).map(|pinv| pinv * rhs).unwrap_or_else(|_| nalgebra::DVector::zeros(n));
    let mut out = v.clone();
    for (k, b) in basis.iter().enumerate() {
        out = out.axpy(-coeffs[k], b);
    }
    out
}

/// Grassmannian chart of a framing `e = (b | p)` with `b` square.
#[derive(Debug, Clone)]
pub struct GrassmannChart<S: Scalar = f64> {
    /// `k × k` block.
    pub b: DMatrix<S>,
    /// `k × (n−k)` block.
    pub p: DMatrix<S>,
    pub zeta_h: DMatrix<S>,
    pub zeta_u: DMatrix<S>,
}

impl<S: Scalar> GrassmannChart<S> {
    /// Splits `e` (`k × n`) into `(b | p)`; `None` when `b` is singular.
    pub fn from_frame(e: &DMatrix<S>) -> Option<Self> {
        let k = e.nrows();
        let n = e.ncols();
        if n < k {
            return None;
        }
        let b = e.columns(0, k).into_owned();
        let p = e.columns(k, n - k).into_owned();
        let binv = try_inverse(&b, 1e-10)?;
        let zeta_h = &binv * &p;
        let bb = b.adjoint() * &b;
        let zeta_u = herm_apply(&bb, f64::sqrt) * &zeta_h;
        Some(GrassmannChart { b, p, zeta_h, zeta_u })
    }

    /// A random framing rescaled onto `e e* = I`.
    pub fn random_on_level<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Self {
        loop {
            let e: DMatrix<S> = gaussian_matrix(k, n, rng);
            let ee = &e * e.adjoint();
            let level = herm_apply(&ee, |x| 1.0 / x.sqrt()) * e;
            if let Some(c) = GrassmannChart::from_frame(&level) {
                return c;
            }
        }
    }

    /// `‖b b* + p p* − I‖_F`.
    pub fn moment_residual(&self) -> f64 {
        let k = self.b.nrows();
        (&self.b * self.b.adjoint() + &self.p * self.p.adjoint() - eye::<S>(k)).norm()
    }
}

/// `‖(I + ζ_h ζ_h*)⁻¹ − b* b‖_F`.
pub fn grassmann_metric_check<S: Scalar>(c: &GrassmannChart<S>) -> f64 {
    let k = c.b.nrows();
    let m = spd_inverse(&(eye::<S>(k) + &c.zeta_h * c.zeta_h.adjoint()));
    (m - c.b.adjoint() * &c.b).norm()
}

/// `‖b* b + ζ_u ζ_u* − I‖_F`.
pub fn grassmann_unitary_check<S: Scalar>(c: &GrassmannChart<S>) -> f64 {
    let k = c.b.nrows();
    (c.b.adjoint() * &c.b + &c.zeta_u * c.zeta_u.adjoint() - eye::<S>(k)).norm()
}

/// Summary of the metric property suite over random stable reps.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub samples: usize,
    pub min_h_eigen: f64,
    pub max_equivariance_residual: f64,
    pub max_unitary_frame_residual: f64,
    pub max_gram_recursion_residual: f64,
    pub min_level_excess_eigen: f64,
    pub max_level_residual: f64,
}

/// Per-sample metric checks, parallel over samples, deterministic per seed.
pub fn property_suite(fq: &FramedQuiver, samples: usize, seed: u64) -> Result<SuiteReport, MetricError> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let opts = MetricOptions::default();
    let rows: Vec<Result<[f64; 6], MetricError>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64));
            let r = FramedRep::<f64>::random_stable(fq, &mut rng)?;
            let m = vertex_metrics(fq, &r, &opts)?;
            let min_h = m.h.iter().map(crate::linalg::min_eigenvalue).fold(f64::INFINITY, f64::min);
            let g = GaugeElement::random(fq, 0.5, &mut rng);
            let eq = equivariance_check(fq, &r, &g, &opts)?;
            let u: Vec<DMatrix<f64>> =
                (0..fq.num_vertices()).map(|i| crate::representation::random_unitary(fq.n(i), &mut rng)).collect();
            let mu = vertex_metrics(fq, &r.act_frame(&u), &opts)?;
            let uf = m.h.iter().zip(&mu.h).map(|(a, b)| (a - b).norm() / a.norm().max(1.0)).fold(0.0, f64::max);
            let rec = gram_recursion_check(fq, &r, &m);
            let lvl = crate::representation::project_to_moment_level(fq, &r, 1e-10)?;
            let ml = vertex_metrics(fq, &lvl.rep, &opts)?;
            let excess = ml
                .gram
                .iter()
                .map(|g| crate::linalg::min_eigenvalue(&(g - eye::<f64>(g.nrows()))))
                .fold(f64::INFINITY, f64::min);
            Ok([min_h, eq, uf, rec, excess, lvl.residual])
        })
        .collect();
    let mut rep = SuiteReport {
        samples,
        min_h_eigen: f64::INFINITY,
        max_equivariance_residual: 0.0,
        max_unitary_frame_residual: 0.0,
        max_gram_recursion_residual: 0.0,
        min_level_excess_eigen: f64::INFINITY,
        max_level_residual: 0.0,
    };
    for row in rows {
        let [a, b, c, d, e, f] = row?;
        rep.min_h_eigen = rep.min_h_eigen.min(a);
        rep.max_equivariance_residual = rep.max_equivariance_residual.max(b);
        rep.max_unitary_frame_residual = rep.max_unitary_frame_residual.max(c);
        rep.max_gram_recursion_residual = rep.max_gram_recursion_residual.max(d);
        rep.min_level_excess_eigen = rep.min_level_excess_eigen.min(e);
        rep.max_level_residual = rep.max_level_residual.max(f);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::{DimVectors, Quiver};
    use crate::representation::{from_chart, ChartPoint};
    use crate::scalar::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn a3(d: [usize; 3]) -> FramedQuiver {
        FramedQuiver::new(Quiver::chain(3), DimVectors::plus_one(&d)).unwrap()
    }

    fn single_loop(v: f64, e: f64) -> (FramedQuiver, FramedRep<f64>) {
        let fq = FramedQuiver::new(Quiver::bouquet(1), DimVectors::new(vec![1], vec![1])).unwrap();
        let r = FramedRep { v: vec![DMatrix::from_element(1, 1, v)], e: vec![DMatrix::from_element(1, 1, e)] };
        (fq, r)
    }

    #[test]
    fn rho_blocks_on_a3_vertex_two() {
        let fq = a3([1, 2, 1]);
        let r = FramedRep::<f64>::random(&fq, &mut ChaCha8Rng::seed_from_u64(1));
        let rho = assemble_rho(&fq, &r, 1, 2);
        assert_eq!(rho.blocks.len(), 2);
        assert_eq!(rho.blocks[0], r.e[1]);
        assert_eq!(rho.blocks[1], &r.v[0] * &r.e[0]);
        assert_eq!(rho.matrix.shape(), (2, 5));
    }

    #[test]
    fn rho_on_loop_is_powers() {
        let (fq, r) = single_loop(0.5, 2.0);
        let rho = assemble_rho(&fq, &r, 0, 2);
        let got: Vec<f64> = rho.matrix.iter().copied().collect();
        assert_eq!(got, vec![2.0, 1.0, 0.5]);
    }

    #[test]
    fn single_vertex_on_level_has_identity_metric() {
        let fq = FramedQuiver::new(Quiver::chain(1), DimVectors::new(vec![1], vec![2])).unwrap();
        let r = FramedRep { v: vec![], e: vec![DMatrix::from_row_slice(1, 2, &[0.6, 0.8])] };
        let m = vertex_metrics(&fq, &r, &MetricOptions::default()).unwrap();
        assert!((m.h[0][(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(gram_recursion_check(&fq, &r, &m), 0.0);
    }

    #[test]
    fn a3_chart_metric_matches_closed_form() {
        let fq = a3([2, 3, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r0 = FramedRep::<f64>::random(&fq, &mut rng);
        let mut c = ChartPoint::zeros(&fq);
        c.w = r0.v.clone();
        c.b = (0..3).map(|i| r0.e[i].columns(fq.d(i), 1).into_owned()).collect();
        let r = from_chart(&fq, &c).unwrap();
        let m = vertex_metrics(&fq, &r, &MetricOptions::default()).unwrap();
        let w1 = &c.w[0];
        let g1 = eye::<f64>(2) + &c.b[0] * c.b[0].transpose();
        let h2 = (eye::<f64>(3) + &c.b[1] * c.b[1].transpose() + w1 * &g1 * w1.transpose()).try_inverse().unwrap();
        assert!((&m.h[1] - h2).norm() < 1e-10);
    }

    #[test]
    fn loop_gram_matches_geometric_series() {
        let (fq, r) = single_loop(0.5, 1.0);
        let m = vertex_metrics(&fq, &r, &MetricOptions::default()).unwrap();
        let exact = 1.0 / (1.0 - 0.25);
        assert!((m.gram[0][(0, 0)] - exact).abs() <= m.tail_bound);
        assert!(m.tail_bound < 1e-10);
        for l in [10, 20, 40] {
            let opts = MetricOptions { max_len: Some(l), ..Default::default() };
            let m = vertex_metrics(&fq, &r, &opts).unwrap();
            assert_eq!(m.truncation, l);
            assert!((m.gram[0][(0, 0)] - exact).abs() <= m.tail_bound, "L = {l}");
        }
    }

    #[test]
    fn layer_route_matches_explicit_rho_on_cyclic_quiver() {
        let fq = FramedQuiver::new(
            Quiver::from_parts(&["1", "2"], &[("a", "1", "2"), ("b", "2", "1"), ("c", "1", "1")]).unwrap(),
            DimVectors::new(vec![2, 1], vec![3, 2]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = FramedRep::<f64>::random(&fq, &mut rng);
        for v in r.v.iter_mut() {
            *v *= 0.3;
        }
        let opts = MetricOptions { max_len: Some(6), ..Default::default() };
        let m = vertex_metrics(&fq, &r, &opts).unwrap();
        for i in 0..2 {
            let rho = assemble_rho(&fq, &r, i, 6);
            let g = &rho.matrix * rho.matrix.transpose();
            assert!((&m.gram[i] - g).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_recursion_residual_shrinks_with_truncation() {
        let (fq, r) = single_loop(0.7, 1.3);
        let m10 = vertex_metrics(&fq, &r, &MetricOptions { max_len: Some(10), ..Default::default() }).unwrap();
        let m15 = vertex_metrics(&fq, &r, &MetricOptions { max_len: Some(15), ..Default::default() }).unwrap();
        let r10 = gram_recursion_check(&fq, &r, &m10);
        let r15 = gram_recursion_check(&fq, &r, &m15);
        assert!(r15 < r10);
        assert!(r10 <= m10.tail_bound * 2.0);
    }

    #[test]
    fn two_loops_below_one_each_can_diverge() {
        let fq = FramedQuiver::new(Quiver::bouquet(2), DimVectors::new(vec![1], vec![1])).unwrap();
        let r = FramedRep {
            v: vec![DMatrix::from_element(1, 1, 0.8), DMatrix::from_element(1, 1, 0.8)],
            e: vec![DMatrix::from_element(1, 1, 1.0)],
        };
        assert!(in_domain_mcirc(&fq, &r));
        assert!(matches!(vertex_metrics(&fq, &r, &MetricOptions::default()), Err(MetricError::OutsideDomain(_))));
    }

    #[test]
    fn errors_for_unstable_and_outside_domain() {
        let fq = a3([1, 1, 1]);
        assert_eq!(
            vertex_metrics(&fq, &FramedRep::<f64>::zeros(&fq), &MetricOptions::default()).unwrap_err(),
            MetricError::NotStable
        );
        let (fq, r) = single_loop(1.5, 1.0);
        assert!(matches!(vertex_metrics(&fq, &r, &MetricOptions::default()), Err(MetricError::OutsideDomain(_))));
    }

    #[test]
    fn rho_derivative_matches_finite_difference() {
        let fq = a3([2, 2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = FramedRep::<f64>::random(&fq, &mut rng);
        let v = Tangent::<f64>::random(&fq, &mut rng);
        let h = 1e-6;
        let shift = |s: f64| FramedRep {
            v: r.v.iter().zip(&v.dv).map(|(a, b)| a + b * s).collect(),
            e: r.e.iter().zip(&v.de).map(|(a, b)| a + b * s).collect(),
        };
        for i in 0..3 {
            let rho = assemble_rho(&fq, &r, i, 2);
            let d = rho_derivative(&fq, &r, &rho, &v);
            let fd = (assemble_rho(&fq, &shift(h), i, 2).matrix - assemble_rho(&fq, &shift(-h), i, 2).matrix) / (2.0 * h);
            assert!((d - fd).norm() < 1e-7);
        }
    }

    #[test]
    fn tangent_metric_kills_gauge_directions() {
        let fq = a3([2, 3, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = FramedRep::<f64>::random_stable(&fq, &mut rng).unwrap();
        let m = vertex_metrics(&fq, &r, &MetricOptions::default()).unwrap();
        let tm = TangentMetric::new(&fq, &r, &m);
        let v = Tangent::<f64>::random(&fq, &mut rng);
        for g in gauge_basis(&fq, &r) {
            assert!(tm.eval(&g, &g).abs() < 1e-8);
            assert!(tm.eval(&g, &v).abs() < 1e-8);
        }
        assert_eq!(tm.eval(&Tangent::zeros(&fq), &v), 0.0);
    }

    #[test]
    fn tangent_metric_complex_is_hermitian_and_gauge_blind() {
        let fq = a3([1, 2, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = FramedRep::<Complex<f64>>::random_stable(&fq, &mut rng).unwrap();
        let m = vertex_metrics(&fq, &r, &MetricOptions::default()).unwrap();
        let tm = TangentMetric::new(&fq, &r, &m);
        let v = Tangent::<Complex<f64>>::random(&fq, &mut rng);
        let w = Tangent::<Complex<f64>>::random(&fq, &mut rng);
        assert!((tm.eval(&v, &w) - tm.eval(&w, &v).conj()).norm() < 1e-10);
        for g in gauge_basis(&fq, &r) {
            assert!(tm.eval(&g, &g).norm() < 1e-8);
        }
        let t = transverse_part(&fq, &r, &v);
        assert!(tm.eval(&t, &t).re > 0.0);
    }

    #[test]
    fn grassmann_examples() {
        let e = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let c = GrassmannChart::from_frame(&e).unwrap();
        assert!(grassmann_metric_check(&c) < 1e-15);
        // A point of P^1 with |z1|^2 + |z2|^2 = 1.
        let (z1, z2) = (0.6, 0.8);
        let c = GrassmannChart::from_frame(&DMatrix::from_row_slice(1, 2, &[z1, z2])).unwrap();
        let zeta: f64 = z2 / z1;
        assert!((z1 * z1 - 1.0 / (1.0 + zeta * zeta)).abs() < 1e-15);
        assert!(grassmann_metric_check(&c) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = GrassmannChart::<f64>::random_on_level(2, 4, &mut rng);
        assert!(c.moment_residual() < 1e-12);
        assert!(grassmann_metric_check(&c) < 1e-10);
        assert!(grassmann_unitary_check(&c) < 1e-10);
    }
}
