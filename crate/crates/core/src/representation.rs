//! Framed representations, the gauge action, the moment map, stability and the chart `U`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::linalg::{self, column_space, eye, herm_eigen, herm_from_eigen, op_norm, try_inverse};
use crate::quiver::{oriented_cycles, FramedQuiver, QuiverError};
use crate::scalar::{gaussian_matrix, matrix_from_json, matrix_to_json, Scalar};

/// Reciprocal condition number below which a matrix counts as singular.
pub const INVERTIBILITY_RCOND: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RepError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("gauge element is singular at vertex `{vertex}`")]
    SingularGauge { vertex: String },
    #[error("square framing block is singular at vertex `{vertex}`")]
    SingularFrame { vertex: String },
    #[error("moment-level projection did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("no stable representation found after {0} draws")]
    SamplingFailed(usize),
    #[error("malformed representation JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
}

/// A point of `R_{n,d}`: one matrix per arrow and one framing per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedRep<S: Scalar = f64> {
    /// `v[a]` has shape `d_head × d_tail`.
    pub v: Vec<DMatrix<S>>,
    /// `e[i]` has shape `d_i × n_i`.
    pub e: Vec<DMatrix<S>>,
}

impl<S: Scalar> FramedRep<S> {
    pub fn zeros(fq: &FramedQuiver) -> Self {
        let v = (0..fq.num_arrows())
            .map(|a| {
                let (r, c) = fq.arrow_shape(a);
                linalg::zeros(r, c)
            })
            .collect();
        let e = (0..fq.num_vertices()).map(|i| linalg::zeros(fq.d(i), fq.n(i))).collect();
        FramedRep { v, e }
    }

    /// I.i.d. standard Gaussian entries.
    pub fn random<R: Rng + ?Sized>(fq: &FramedQuiver, rng: &mut R) -> Self {
        let v = (0..fq.num_arrows())
            .map(|a| {
                let (r, c) = fq.arrow_shape(a);
                gaussian_matrix(r, c, rng)
            })
            .collect();
        let e = (0..fq.num_vertices()).map(|i| gaussian_matrix(fq.d(i), fq.n(i), rng)).collect();
        FramedRep { v, e }
    }

    /// Gaussian draws rejected until stable.
    pub fn random_stable<R: Rng + ?Sized>(fq: &FramedQuiver, rng: &mut R) -> Result<Self, RepError> {
        const TRIES: usize = 100;
        for _ in 0..TRIES {
            let r = FramedRep::random(fq, rng);
            if is_stable(fq, &r) {
                return Ok(r);
            }
        }
        Err(RepError::SamplingFailed(TRIES))
    }

    pub fn check_shapes(&self, fq: &FramedQuiver) -> Result<(), RepError> {
        if self.v.len() != fq.num_arrows() || self.e.len() != fq.num_vertices() {
            return Err(RepError::Shape(format!(
                "expected {} arrow and {} vertex matrices, got {} and {}",
                fq.num_arrows(),
                fq.num_vertices(),
                self.v.len(),
                self.e.len()
            )));
        }
        for (a, m) in self.v.iter().enumerate() {
            if m.shape() != fq.arrow_shape(a) {
                return Err(RepError::Shape(format!(
                    "arrow `{}` has shape {:?}, expected {:?}",
                    fq.quiver.arrow(a).id,
                    m.shape(),
                    fq.arrow_shape(a)
                )));
            }
        }
        for (i, m) in self.e.iter().enumerate() {
            if m.shape() != (fq.d(i), fq.n(i)) {
                return Err(RepError::Shape(format!(
                    "framing at `{}` has shape {:?}, expected {:?}",
                    fq.quiver.vertex_id(i),
                    m.shape(),
                    (fq.d(i), fq.n(i))
                )));
            }
        }
        Ok(())
    }

    /// Squared norm `Σ‖V_a‖² + Σ‖e_i‖²`.
    pub fn norm_squared(&self) -> f64 {
        self.v.iter().chain(self.e.iter()).map(|m| m.norm_squared()).sum()
    }

    /// Right action `e_j ↦ e_j u_j` on framings (by `U(n)` when `u` is unitary).
    pub fn act_frame(&self, u: &[DMatrix<S>]) -> Self {
        FramedRep { v: self.v.clone(), e: self.e.iter().zip(u).map(|(e, u)| e * u).collect() }
    }

    pub fn to_json(&self, fq: &FramedQuiver) -> Value {
        let mut v = Map::new();
        let mut order: Vec<usize> = (0..fq.num_arrows()).collect();
        order.sort_by(|&x, &y| fq.quiver.arrow(x).id.cmp(&fq.quiver.arrow(y).id));
        for a in order {
            v.insert(fq.quiver.arrow(a).id.clone(), matrix_to_json(&self.v[a]));
        }
        let mut e = Map::new();
        let mut order: Vec<usize> = (0..fq.num_vertices()).collect();
        order.sort_by(|&x, &y| fq.quiver.vertex_id(x).cmp(fq.quiver.vertex_id(y)));
        for i in order {
            e.insert(fq.quiver.vertex_id(i).to_string(), matrix_to_json(&self.e[i]));
        }
        let mut out = Map::new();
        out.insert("V".into(), Value::Object(v));
        out.insert("e".into(), Value::Object(e));
        Value::Object(out)
    }

    pub fn from_json(fq: &FramedQuiver, value: &Value) -> Result<Self, RepError> {
        let get = |key: &str| -> Result<BTreeMap<String, Value>, RepError> {
            match value.get(key) {
                Some(Value::Object(m)) => Ok(m.clone().into_iter().collect()),
                None if key == "V" && fq.num_arrows() == 0 => Ok(BTreeMap::new()),
                _ => Err(RepError::Json(format!("missing object `{key}`"))),
            }
        };
        let vs = get("V")?;
        let es = get("e")?;
        let mut out = FramedRep::<S>::zeros(fq);
        for (a, arrow) in fq.quiver.arrows().iter().enumerate() {
            let (r, c) = fq.arrow_shape(a);
            let m = vs.get(&arrow.id).ok_or_else(|| RepError::Json(format!("missing arrow `{}`", arrow.id)))?;
            out.v[a] = matrix_from_json(m, r, c)
                .ok_or_else(|| RepError::Json(format!("bad matrix for arrow `{}`", arrow.id)))?;
        }
        for i in 0..fq.num_vertices() {
            let id = fq.quiver.vertex_id(i);
            let m = es.get(id).ok_or_else(|| RepError::Json(format!("missing framing `{id}`")))?;
            out.e[i] = matrix_from_json(m, fq.d(i), fq.n(i))
                .ok_or_else(|| RepError::Json(format!("bad framing for vertex `{id}`")))?;
        }
        Ok(out)
    }
}

/// An element of `GL(d) = ∏ GL(d_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeElement<S: Scalar = f64> {
    pub g: Vec<DMatrix<S>>,
}

impl<S: Scalar> GaugeElement<S> {
    pub fn identity(fq: &FramedQuiver) -> Self {
        GaugeElement { g: (0..fq.num_vertices()).map(|i| eye(fq.d(i))).collect() }
    }

    /// `I + scale·X` with Gaussian `X`, redrawn until well conditioned.
    pub fn random<R: Rng + ?Sized>(fq: &FramedQuiver, scale: f64, rng: &mut R) -> Self {
        let g = (0..fq.num_vertices())
            .map(|i| loop {
                let x: DMatrix<S> = gaussian_matrix(fq.d(i), fq.d(i), rng);
                let m = eye::<S>(fq.d(i)) + x * S::real_scalar(scale);
                if linalg::rcond(&m) > 1e-3 {
                    break m;
                }
            })
            .collect();
        GaugeElement { g }
    }

    /// Haar-like unitary element (QR of a Gaussian matrix).
    pub fn random_unitary<R: Rng + ?Sized>(fq: &FramedQuiver, rng: &mut R) -> Self {
        GaugeElement { g: (0..fq.num_vertices()).map(|i| random_unitary(fq.d(i), rng)).collect() }
    }

    pub fn inverse(&self, fq: &FramedQuiver) -> Result<Self, RepError> {
        let g = self
            .g
            .iter()
            .enumerate()
            .map(|(i, g)| {
                try_inverse(g, INVERTIBILITY_RCOND)
                    .ok_or_else(|| RepError::SingularGauge { vertex: fq.quiver.vertex_id(i).into() })
            })
            .collect::<Result<_, _>>()?;
        Ok(GaugeElement { g })
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        GaugeElement { g: self.g.iter().zip(&other.g).map(|(a, b)| a * b).collect() }
    }
}

/// Unitary (orthogonal in the real case) matrix from QR of a Gaussian draw.
pub fn random_unitary<S: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<S> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let qr = gaussian_matrix::<S, R>(n, n, rng).qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let m = d.modulus();
        if m > 0.0 {
            let phase = d.unscale(m);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `V_a ↦ g_h V_a g_t⁻¹`, `e_i ↦ g_i e_i`.
pub fn act<S: Scalar>(fq: &FramedQuiver, g: &GaugeElement<S>, r: &FramedRep<S>) -> Result<FramedRep<S>, RepError> {
    r.check_shapes(fq)?;
    if g.g.len() != fq.num_vertices() || g.g.iter().enumerate().any(|(i, m)| m.shape() != (fq.d(i), fq.d(i))) {
        return Err(RepError::Shape("gauge element does not match the dimension vector".into()));
    }
    let inv = g.inverse(fq)?;
    let v = fq
        .quiver
        .arrows()
        .iter()
        .zip(&r.v)
        .map(|(a, m)| &g.g[a.head] * m * &inv.g[a.tail])
        .collect();
    let e = g.g.iter().zip(&r.e).map(|(g, e)| g * e).collect();
    Ok(FramedRep { v, e })
}

/// `μ_i = e_i e_i* − Σ_{t(a)=i} V_a* V_a + Σ_{h(a)=i} V_a V_a*`.
pub fn moment_map<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> Vec<DMatrix<S>> {
    let mut mu: Vec<DMatrix<S>> = r.e.iter().map(|e| e * e.adjoint()).collect();
    for (a, m) in fq.quiver.arrows().iter().zip(&r.v) {
        mu[a.tail] -= m.adjoint() * m;
        mu[a.head] += m * m.adjoint();
    }
    mu
}

/// `max_i ‖μ_i − I‖_F`.
pub fn moment_residual<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> f64 {
    moment_map(fq, r)
        .iter()
        .map(|m| (m - eye::<S>(m.nrows())).norm())
        .fold(0.0, f64::max)
}

/// Result of [`project_to_moment_level`].
#[derive(Debug, Clone)]
pub struct LevelProjection<S: Scalar = f64> {
    pub rep: FramedRep<S>,
    /// Accumulated gauge with `rep = gauge · input`.
    pub gauge: GaugeElement<S>,
    pub iterations: usize,
    pub residual: f64,
}

const LEVEL_MAX_ITER: usize = 500;

/// Moves `r` inside its `GL(d)` orbit onto `μ = I` by descending the Kempf–Ness functional
/// `F(g) = ½‖g·r‖² − Σ log|det g_i|` with Hermitian updates `g_i = exp(−s X_i)`.
pub fn project_to_moment_level<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    tol: f64,
) -> Result<LevelProjection<S>, RepError> {
    r.check_shapes(fq)?;
    let nv = fq.num_vertices();
    let mut cur = r.clone();
    let mut gauge = GaugeElement::identity(fq);
    let mut norm = cur.norm_squared();
    for it in 0..LEVEL_MAX_ITER {
        let mu = moment_map(fq, &cur);
        let residual = mu.iter().map(|m| (m - eye::<S>(m.nrows())).norm()).fold(0.0, f64::max);
        if residual <= tol {
            return Ok(LevelProjection { rep: cur, gauge, iterations: it, residual });
        }
        if let Some((step, trial)) = newton_step(fq, &cur, &mu, residual) {
            gauge = step.compose(&gauge);
            norm = trial.norm_squared();
            cur = trial;
            continue;
        }
        // X_i = ½ log μ_i when μ_i > 0, else ½(μ_i − I); both give tr((μ−I)X) > 0.
        let mut xs = Vec::with_capacity(nv);
        let mut slope = 0.0;
        for m in &mu {
            let (vals, vecs) = herm_eigen(m);
            let x = if vals.iter().all(|&l| l > 1e-12) {
                herm_from_eigen(&vals, &vecs, |l| 0.5 * l.ln())
            } else {
                (m - eye::<S>(m.nrows())) * S::real_scalar(0.5)
            };
            slope += crate::scalar::frob_inner(&(m - eye::<S>(m.nrows())), &x).real();
            xs.push((x.clone(), herm_eigen(&x)));
        }
        let trace_x: f64 = xs.iter().map(|(x, _)| x.trace().real()).sum();
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let step = GaugeElement {
                g: xs.iter().map(|(_, (vals, vecs))| herm_from_eigen(vals, vecs, |l| (-s * l).exp())).collect(),
            };
            let trial = match act(fq, &step, &cur) {
                Ok(t) => t,
                Err(RepError::SingularGauge { .. }) => {
                    s *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let trial_norm = trial.norm_squared();
            let delta = 0.5 * (trial_norm - norm) + s * trace_x;
            // Near the level the decrease of F drowns in rounding; fall back to the slope and residual.
            let detectable = s * slope > 1e-10 * norm.max(1.0);
            let armijo = detectable && delta.is_finite() && delta <= -1e-4 * s * slope;
            // F is convex along the geodesic, so a nonpositive slope at the trial point means F decreased.
            let trial_slope: f64 = moment_map(fq, &trial)
                .iter()
                .zip(&xs)
                .map(|(m, (x, _))| crate::scalar::frob_inner(&(m - eye::<S>(m.nrows())), x).real())
                .sum();
            if armijo || trial_slope >= 0.0 || moment_residual(fq, &trial) <= (1.0 - 1e-4 * s) * residual {
                accepted = Some((step, trial, trial_norm));
                break;
            }
            s *= 0.5;
        }
        match accepted {
            Some((step, trial, trial_norm)) => {
                gauge = step.compose(&gauge);
                cur = trial;
                norm = trial_norm;
            }
            None => return Err(RepError::NonConvergence { iterations: it, residual }),
        }
    }
    let residual = moment_residual(fq, &cur);
    if residual <= tol {
        return Ok(LevelProjection { rep: cur, gauge, iterations: LEVEL_MAX_ITER, residual });
    }
    Err(RepError::NonConvergence { iterations: LEVEL_MAX_ITER, residual })
}

/// Real basis of the Hermitian `d × d` matrices.
fn hermitian_basis<S: Scalar>(d: usize) -> Vec<DMatrix<S>> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in i..d {
            for (k, u) in S::units().into_iter().enumerate() {
                if i == j && k > 0 {
                    continue;
                }
                let mut m = DMatrix::<S>::zeros(d, d);
                m[(i, j)] = u;
                m[(j, i)] += u.conjugate();
                out.push(m);
            }
        }
    }
    out
}

/// Derivative of `μ(exp(−sX)·r)` at `s = 0`.
fn linearized_moment<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>, x: &[DMatrix<S>]) -> Vec<DMatrix<S>> {
    let mut out: Vec<DMatrix<S>> = r
        .e
        .iter()
        .zip(x)
        .map(|(e, x)| {
            let de = -(x * e);
            &de * e.adjoint() + e * de.adjoint()
        })
        .collect();
    for (a, m) in fq.quiver.arrows().iter().zip(&r.v) {
        let dv = m * &x[a.tail] - &x[a.head] * m;
        out[a.head] += &dv * m.adjoint() + m * dv.adjoint();
        out[a.tail] -= dv.adjoint() * m + m.adjoint() * &dv;
    }
    out
}

/// Damped Newton step for `μ = I` in Hermitian coordinates; `None` if it fails to reduce the residual.
fn newton_step<S: Scalar>(
    fq: &FramedQuiver,
    r: &FramedRep<S>,
    mu: &[DMatrix<S>],
    residual: f64,
) -> Option<(GaugeElement<S>, FramedRep<S>)> {
    let nv = fq.num_vertices();
    let bases: Vec<Vec<DMatrix<S>>> = (0..nv).map(|i| hermitian_basis::<S>(fq.d(i))).collect();
    let index: Vec<(usize, usize)> = (0..nv).flat_map(|i| (0..bases[i].len()).map(move |k| (i, k))).collect();
    let dim = index.len();
    if dim == 0 {
        return None;
    }
    let coord = |ms: &[DMatrix<S>], (i, k): (usize, usize)| crate::scalar::frob_inner(&bases[i][k], &ms[i]).real();
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    for (col, &(i, k)) in index.iter().enumerate() {
        let mut x: Vec<DMatrix<S>> = (0..nv).map(|v| DMatrix::zeros(fq.d(v), fq.d(v))).collect();
        x[i] = bases[i][k].clone();
        let l = linearized_moment(fq, r, &x);
        for (row, &rk) in index.iter().enumerate() {
            jac[(row, col)] = coord(&l, rk);
        }
    }
    let target: Vec<DMatrix<S>> = mu.iter().map(|m| eye::<S>(m.nrows()) - m).collect();
    let rhs = DVector::from_iterator(dim, index.iter().map(|&rk| coord(&target, rk)));
    let sol = jac.lu().solve(&rhs)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    let mut xs: Vec<DMatrix<S>> = (0..nv).map(|v| DMatrix::zeros(fq.d(v), fq.d(v))).collect();
    for (&(i, k), c) in index.iter().zip(sol.iter()) {
        xs[i] += &bases[i][k] * S::real_scalar(*c);
    }
    let eig: Vec<_> = xs.iter().map(herm_eigen).collect();
    let mut s = 1.0;
    for _ in 0..8 {
        let step = GaugeElement { g: eig.iter().map(|(vals, vecs)| herm_from_eigen(vals, vecs, |l| (-s * l).exp())).collect() };
        if let Ok(trial) = act(fq, &step, r) {
            if moment_residual(fq, &trial) <= (1.0 - 0.25 * s) * residual {
                return Some((step, trial));
            }
        }
        s *= 0.5;
    }
    None
}

const RANK_RTOL: f64 = 1e-10;

/// Stability: the smallest arrow-invariant family of subspaces containing every `Im e_i`
/// must be everything.
pub fn is_stable<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> bool {
    let nv = fq.num_vertices();
    let mut basis: Vec<DMatrix<S>> = (0..nv).map(|i| column_space(&r.e[i], RANK_RTOL)).collect();
    loop {
        let mut changed = false;
        for i in 0..nv {
            let mut blocks = vec![basis[i].clone()];
            for &a in fq.quiver.incoming(i) {
                let t = fq.quiver.arrow(a).tail;
                if basis[t].ncols() > 0 {
                    blocks.push(&r.v[a] * &basis[t]);
                }
            }
            let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
            let mut stacked = DMatrix::<S>::zeros(fq.d(i), cols);
            let mut off = 0;
            for b in &blocks {
                stacked.view_mut((0, off), (fq.d(i), b.ncols())).copy_from(b);
                off += b.ncols();
            }
            let nb = column_space(&stacked, RANK_RTOL);
            if nb.ncols() > basis[i].ncols() {
                basis[i] = nb;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..nv).all(|i| basis[i].ncols() == fq.d(i))
}

/// Coordinates in the chart `U` where every square framing block is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint<S: Scalar = f64> {
    /// `w[a]` has shape `d_head × d_tail`.
    pub w: Vec<DMatrix<S>>,
    /// `b[i]` has shape `d_i × (n_i − d_i)`: the framing columns after the square block.
    pub b: Vec<DMatrix<S>>,
}

impl<S: Scalar> ChartPoint<S> {
    pub fn zeros(fq: &FramedQuiver) -> Self {
        let r = FramedRep::<S>::zeros(fq);
        ChartPoint {
            w: r.v,
            b: (0..fq.num_vertices()).map(|i| linalg::zeros(fq.d(i), fq.n(i).saturating_sub(fq.d(i)))).collect(),
        }
    }

    /// Number of real coordinates (complex entries count once).
    pub fn num_params(&self) -> usize {
        self.w.iter().chain(&self.b).map(|m| m.len()).sum()
    }

    /// Flattens `W` (row-major, arrow order) then `b` (row-major, vertex order).
    pub fn to_vec(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.num_params());
        for m in self.w.iter().chain(&self.b) {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.push(m[(i, j)]);
                }
            }
        }
        out
    }

    /// Inverse of [`ChartPoint::to_vec`] using the shapes of `self`.
    pub fn with_vec(&self, theta: &[S]) -> Self {
        let mut out = self.clone();
        let mut k = 0;
        for m in out.w.iter_mut().chain(out.b.iter_mut()) {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    m[(i, j)] = theta[k];
                    k += 1;
                }
            }
        }
        out
    }
}

/// Gauge `g_i = E_i⁻¹` (square framing block inverse) taking `r` into the chart.
pub fn chart_gauge<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> Result<GaugeElement<S>, RepError> {
    let g = (0..fq.num_vertices())
        .map(|i| {
            let singular = || RepError::SingularFrame { vertex: fq.quiver.vertex_id(i).into() };
            if fq.n(i) < fq.d(i) {
                return Err(singular());
            }
            let block = r.e[i].columns(0, fq.d(i)).into_owned();
            try_inverse(&block, INVERTIBILITY_RCOND).ok_or_else(singular)
        })
        .collect::<Result<_, _>>()?;
    Ok(GaugeElement { g })
}

/// Chart coordinates `W_a = E_h⁻¹ V_a E_t`, `b_i = E_i⁻¹ (trailing framing columns)`.
pub fn to_chart<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> Result<ChartPoint<S>, RepError> {
    r.check_shapes(fq)?;
    let g = chart_gauge(fq, r)?;
    let moved = act(fq, &g, r)?;
    let b = (0..fq.num_vertices())
        .map(|i| moved.e[i].columns(fq.d(i), fq.n(i) - fq.d(i)).into_owned())
        .collect();
    Ok(ChartPoint { w: moved.v, b })
}

/// Chart representative: `V_a = W_a`, `e_i = (I | b_i)`.
pub fn from_chart<S: Scalar>(fq: &FramedQuiver, c: &ChartPoint<S>) -> Result<FramedRep<S>, RepError> {
    let mut e = Vec::with_capacity(fq.num_vertices());
    for i in 0..fq.num_vertices() {
        let (d, n) = (fq.d(i), fq.n(i));
        if n < d {
            return Err(RepError::SingularFrame { vertex: fq.quiver.vertex_id(i).into() });
        }
        if c.b[i].shape() != (d, n - d) {
            return Err(RepError::Shape(format!("bias at `{}` must be {}×{}", fq.quiver.vertex_id(i), d, n - d)));
        }
        let mut m = DMatrix::<S>::zeros(d, n);
        m.view_mut((0, 0), (d, d)).copy_from(&eye::<S>(d));
        m.view_mut((0, d), (d, n - d)).copy_from(&c.b[i]);
        e.push(m);
    }
    let r = FramedRep { v: c.w.clone(), e };
    r.check_shapes(fq)?;
    Ok(r)
}

/// Membership in `M°`: every simple oriented cycle has operator norm `< 1`.
pub fn in_domain_mcirc<S: Scalar>(fq: &FramedQuiver, r: &FramedRep<S>) -> bool {
    oriented_cycles(&fq.quiver, fq.num_vertices()).iter().all(|c| {
        let start = fq.d(c.start);
        let mut m = eye::<S>(start);
        for &a in &c.arrows {
            m = &r.v[a] * m;
        }
        op_norm(&m) < 1.0
    })
}

/// True when every entry is exactly zero.
pub fn is_zero<S: Scalar>(m: &DMatrix<S>) -> bool {
    m.iter().all(|x| x.is_zero())
}
