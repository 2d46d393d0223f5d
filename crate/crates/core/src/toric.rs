//! Activations from toric moment maps: the simplex map `σ`, the disc map `ψ`, their bundle
//! versions, and tropical limits over fans.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ToricError {
    #[error("point is on the boundary of the polytope (facet {facet})")]
    OnBoundary { facet: usize },
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty point set")]
    EmptyPointSet,
}

/// A facet inequality `ℓ(x) = v·x − c ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub v: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Standard simplex `x_i ≥ 0, Σ x_i ≤ 1`.
    Pd,
    /// Orthant `x_i ≥ 0`.
    Cd,
    /// Cube `0 ≤ x_i ≤ 1`.
    P1d,
}

/// Polytope `{x : v_j·x ≥ c_j}`, optionally with a lattice point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentPolytope {
    pub dim: usize,
    pub facets: Vec<Facet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
}

fn unit(dim: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = s;
    v
}

impl MomentPolytope {
    /// Moment polytope of `ℙᵈ`: facets `x_i ≥ 0` and `1 − Σx_i ≥ 0`.
    pub fn projective(dim: usize) -> Self {
        let mut facets: Vec<Facet> = (0..dim).map(|i| Facet { v: unit(dim, i, 1.0), c: 0.0 }).collect();
        facets.push(Facet { v: vec![-1.0; dim], c: -1.0 });
        let mut points = vec![vec![0.0; dim]];
        points.extend((0..dim).map(|i| unit(dim, i, 1.0)));
        MomentPolytope { dim, facets, points: Some(points), preset: Some(Preset::Pd) }
    }

    /// Moment polyhedron of `ℂᵈ`.
    pub fn affine(dim: usize) -> Self {
        let facets = (0..dim).map(|i| Facet { v: unit(dim, i, 1.0), c: 0.0 }).collect();
        MomentPolytope { dim, facets, points: None, preset: Some(Preset::Cd) }
    }

    /// Moment polytope of `(ℙ¹)ᵈ`.
    pub fn product_p1(dim: usize) -> Self {
        let mut facets = Vec::new();
        for i in 0..dim {
            facets.push(Facet { v: unit(dim, i, 1.0), c: 0.0 });
            facets.push(Facet { v: unit(dim, i, -1.0), c: -1.0 });
        }
        let points = (0..1usize << dim)
            .map(|mask| (0..dim).map(|i| ((mask >> i) & 1) as f64).collect())
            .collect();
        MomentPolytope { dim, facets, points: Some(points), preset: Some(Preset::P1d) }
    }

    /// Expands a preset named in JSON when facets are omitted.
    pub fn normalized(self) -> Self {
        if !self.facets.is_empty() {
            return self;
        }
        match self.preset {
            Some(Preset::Pd) => Self::projective(self.dim),
            Some(Preset::Cd) => Self::affine(self.dim),
            Some(Preset::P1d) => Self::product_p1(self.dim),
            None => self,
        }
    }

    /// `ℓ_j(x)` for every facet.
    pub fn ell(&self, x: &[f64]) -> Vec<f64> {
        self.facets.iter().map(|f| f.v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - f.c).collect()
    }

    /// Inverse of the Legendre map for the shipped presets.
    pub fn sigma(&self, r: &[f64]) -> Option<Vec<f64>> {
        match self.preset? {
            Preset::Pd => Some(sigma_simplex(r)),
            Preset::Cd => Some(r.iter().map(|x| (2.0 * x).exp()).collect()),
            Preset::P1d => Some(r.iter().map(|&x| sigma_simplex(&[x])[0]).collect()),
        }
    }
}

/// `½ Σ_j v_j log ℓ_j(x)`, the gradient of the Guillemin potential.
pub fn legendre_map(p: &MomentPolytope, x: &[f64]) -> Result<Vec<f64>, ToricError> {
    if x.len() != p.dim {
        return Err(ToricError::Dimension(format!("expected {} coordinates, got {}", p.dim, x.len())));
    }
    let ell = p.ell(x);
    let mut out = vec![0.0; p.dim];
    for (j, (f, l)) in p.facets.iter().zip(&ell).enumerate() {
        if !(*l > 0.0) {
            return Err(ToricError::OnBoundary { facet: j });
        }
        let lg = 0.5 * l.ln();
        for (o, v) in out.iter_mut().zip(&f.v) {
            *o += v * lg;
        }
    }
    Ok(out)
}

/// `σ_i(r) = e^{2r_i} / (1 + Σ_j e^{2r_j})`, evaluated with a max shift.
pub fn sigma_simplex(r: &[f64]) -> Vec<f64> {
    let m = r.iter().copied().fold(0.0, f64::max);
    let base = (-2.0 * m).exp();
    let exps: Vec<f64> = r.iter().map(|x| (2.0 * (x - m)).exp()).collect();
    let denom = base + exps.iter().sum::<f64>();
    exps.iter().map(|e| e / denom).collect()
}

/// Jacobian of [`sigma_simplex`]: `2(diag σ − σσᵀ)`.
pub fn sigma_simplex_jacobian(s: &[f64]) -> DMatrix<f64> {
    let n = s.len();
    DMatrix::from_fn(n, n, |i, j| 2.0 * (if i == j { s[i] } else { 0.0 } - s[i] * s[j]))
}

/// `σ(r) = Σ e^{2⟨u_i,r⟩} u_i / Σ e^{2⟨u_j,r⟩}` over the given points.
pub fn sigma_general(points: &[Vec<f64>], r: &[f64]) -> Result<Vec<f64>, ToricError> {
    let first = points.first().ok_or(ToricError::EmptyPointSet)?;
    let dim = first.len();
    let logits: Vec<f64> = points.iter().map(|u| 2.0 * u.iter().zip(r).map(|(a, b)| a * b).sum::<f64>()).collect();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut out = vec![0.0; dim];
    for (u, wi) in points.iter().zip(&w) {
        for (o, ui) in out.iter_mut().zip(u) {
            *o += wi * ui / z;
        }
    }
    Ok(out)
}

/// `ψ(z) = z / √(1 + ‖z‖²)`.
pub fn psi_disc(z: &[f64]) -> Vec<f64> {
    let s = (1.0 + z.iter().map(|x| x * x).sum::<f64>()).sqrt();
    z.iter().map(|x| x / s).collect()
}

/// `ψ_H(v) = v / √(1 + vᵀHv)`.
pub fn psi_bundle(v: &DVector<f64>, h: &DMatrix<f64>) -> Result<DVector<f64>, ToricError> {
    if h.nrows() != v.len() || h.ncols() != v.len() {
        return Err(ToricError::Dimension("metric and vector sizes differ".into()));
    }
    if h.nrows() > 0 && ((h - h.transpose()).norm() > 1e-10 * h.norm().max(1.0) || h.clone().cholesky().is_none()) {
        return Err(ToricError::NotPositiveDefinite);
    }
    Ok(psi_bundle_unchecked(v, h))
}

/// [`psi_bundle`] without the positivity check.
pub fn psi_bundle_unchecked(v: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
    let q = 1.0 + v.dot(&(h * v));
    v / q.sqrt()
}

/// Base self-map of `ℝ^{n_i}` used by [`sigma_bundle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseMap {
    Identity,
    /// [`sigma_simplex`] on all coordinates.
    Simplex,
}

impl BaseMap {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            BaseMap::Identity => z.to_vec(),
            BaseMap::Simplex => sigma_simplex(z),
        }
    }

    /// Jacobian at `z` given the output `s = apply(z)`.
    pub fn jacobian(&self, z: &[f64], s: &[f64]) -> DMatrix<f64> {
        match self {
            BaseMap::Identity => DMatrix::identity(z.len(), z.len()),
            BaseMap::Simplex => sigma_simplex_jacobian(s),
        }
    }
}

/// `Σ_k σ_k(H(e_1,v), …, H(e_n,v)) e_k = e · σ(eᵀHv)`.
pub fn sigma_bundle(v: &DVector<f64>, h: &DMatrix<f64>, e: &DMatrix<f64>, base: BaseMap) -> DVector<f64> {
    let z = e.transpose() * (h * v);
    let s = base.apply(z.as_slice());
    e * DVector::from_vec(s)
}

/// Fans with `|Σ| = ℝᵈ` (and the orthant fan of `ℂᵈ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fan {
    Projective { dim: usize },
    ProductP1 { dim: usize },
    Affine { dim: usize },
    /// Simplicial maximal cones given by generators (columns) and their limit points.
    Explicit { cones: Vec<Cone> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub rays: Vec<Vec<f64>>,
    pub limit: Vec<f64>,
}

/// Result of [`sigma_infinity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FanLimit {
    /// Limit point `p_C` of the open cone containing `x`.
    Point(Vec<f64>),
    /// `x` lies within tolerance of a wall without being on it.
    Boundary,
    /// `x` is outside the support of the fan.
    Outside,
}

/// Tolerances for [`sigma_infinity`]: values closer than `tie` (relative) are equal;
/// values closer than `wall` but not tied report [`FanLimit::Boundary`].
#[derive(Debug, Clone, Copy)]
pub struct WallTolerance {
    pub tie: f64,
    pub wall: f64,
}

impl Default for WallTolerance {
    fn default() -> Self {
        WallTolerance { tie: 1e-12, wall: 1e-9 }
    }
}

/// Limit of `σ(t x)` as `t → +∞`.
pub fn sigma_infinity(fan: &Fan, x: &[f64], tol: WallTolerance) -> FanLimit {
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tie = tol.tie * scale;
    let wall = tol.wall * scale;
    match fan {
        Fan::Projective { dim } => {
            if x.len() != *dim {
                return FanLimit::Outside;
            }
            let mut y = vec![0.0];
            y.extend_from_slice(x);
            let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = (0..y.len()).filter(|&j| m - y[j] <= tie).collect();
            if y.iter().any(|&v| m - v > tie && m - v < wall) {
                return FanLimit::Boundary;
            }
            let mut p = vec![0.0; *dim];
            let l = tied.len() as f64;
            for &j in &tied {
                if j > 0 {
                    p[j - 1] = 1.0 / l;
                }
            }
            FanLimit::Point(p)
        }
        Fan::ProductP1 { dim } => {
            if x.len() != *dim {
                return FanLimit::Outside;
            }
            let mut p = Vec::with_capacity(*dim);
            for &v in x {
                if v.abs() <= tie {
                    p.push(0.5);
                } else if v.abs() < wall {
                    return FanLimit::Boundary;
                } else {
                    p.push(if v > 0.0 { 1.0 } else { 0.0 });
                }
            }
            FanLimit::Point(p)
        }
        Fan::Affine { dim } => {
            if x.len() != *dim {
                return FanLimit::Outside;
            }
            let mut p = Vec::with_capacity(*dim);
            for &v in x {
                if v > wall {
                    return FanLimit::Outside;
                } else if v.abs() <= tie {
                    p.push(1.0);
                } else if v > -wall {
                    return FanLimit::Boundary;
                } else {
                    p.push(0.0);
                }
            }
            FanLimit::Point(p)
        }
        Fan::Explicit { cones } => {
            let xv = DVector::from_column_slice(x);
            for cone in cones {
                if cone.rays.len() != x.len() {
                    continue;
                }
                let m = DMatrix::from_fn(x.len(), x.len(), |i, j| cone.rays[j][i]);
                let Some(lambda) = m.lu().solve(&xv) else { continue };
                let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
                if lo > wall {
                    return FanLimit::Point(cone.limit.clone());
                }
                if lo > -wall {
                    return FanLimit::Boundary;
                }
            }
            FanLimit::Outside
        }
    }
}

/// Maps whose area-form pullback is compared with the Fubini–Study density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullbackMap {
    /// `z ↦ ψ(z)` into the unit disc with `dx∧dy`.
    PsiDisc,
    /// `(r, θ) ↦ (σ(r), θ)` into `(0,1) × S¹` with `dx∧dθ`.
    SigmaCylinder,
}

/// Fubini–Study area density `1/(1+|z|²)²` in the coordinate `z = x + iy`.
pub fn fubini_study_density(x: f64, y: f64) -> f64 {
    let q = 1.0 + x * x + y * y;
    1.0 / (q * q)
}

/// Largest relative deviation between the finite-difference Jacobian determinant of the map
/// and the Fubini–Study density at the samples.
///
/// For `SigmaCylinder` the sample is `(r, θ)` with `z = e^{r+iθ}`; the density of
/// `ω_{ℙ¹}` normalized to moment polytope `[0,1]` is `2|z|²/(1+|z|²)²` in `dr∧dθ`.
pub fn sympl_pullback_check(map: PullbackMap, samples: &[(f64, f64)], h: f64) -> f64 {
    let f = |x: f64, y: f64| -> (f64, f64) {
        match map {
            PullbackMap::PsiDisc => {
                let p = psi_disc(&[x, y]);
                (p[0], p[1])
            }
            PullbackMap::SigmaCylinder => (sigma_simplex(&[x])[0], y),
        }
    };
    samples
        .iter()
        .map(|&(x, y)| {
            let (ax, ay) = f(x + h, y);
            let (bx, by) = f(x - h, y);
            let (cx, cy) = f(x, y + h);
            let (dx, dy) = f(x, y - h);
            let j = ((ax - bx) * (cy - dy) - (ay - by) * (cx - dx)) / (4.0 * h * h);
            let target = match map {
                PullbackMap::PsiDisc => fubini_study_density(x, y),
                PullbackMap::SigmaCylinder => {
                    let z2 = (2.0 * x).exp();
                    2.0 * z2 * fubini_study_density(z2.sqrt(), 0.0)
                }
            };
            (j - target).abs() / target
        })
        .fold(0.0, f64::max)
}

/// The softplus `x = log(1 + e^{2y})`.
pub fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        2.0 * y + (-2.0 * y).exp().ln_1p()
    } else {
        (2.0 * y).exp().ln_1p()
    }
}

/// Inverse softplus `y = ½ log(eˣ − 1)`.
pub fn softplus_inverse(x: f64) -> f64 {
    0.5 * x.exp_m1().ln()
}

/// `h′(x) = ½ log((eˣ − 1)/x)` in closed form.
pub fn softplus_h_prime(x: f64) -> f64 {
    0.5 * (x.exp_m1() / x).ln()
}

/// `h′(x) = ½ log(1 + Σ_{k≥1} x^k/(k+1)!)`, smooth through `x = 0`.
pub fn softplus_h_prime_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= x / (k as f64 + 1.0);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    0.5 * sum.ln_1p()
}

/// `|closed form − series|` of `h′` at `x > 0`.
pub fn softplus_potential_check(x: f64) -> f64 {
    (softplus_h_prime(x) - softplus_h_prime_series(x)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn legendre_examples() {
        assert!(close(&legendre_map(&MomentPolytope::projective(1), &[0.5]).unwrap(), &[0.0], 1e-15));
        assert!(close(&legendre_map(&MomentPolytope::affine(3), &[1.0; 3]).unwrap(), &[0.0; 3], 1e-15));
        let x = [0.3, 2.0];
        assert!(close(
            &legendre_map(&MomentPolytope::affine(2), &x).unwrap(),
            &[0.5 * 0.3f64.ln(), 0.5 * 2.0f64.ln()],
            1e-15
        ));
        assert!(close(&legendre_map(&MomentPolytope::projective(2), &[1.0 / 3.0; 2]).unwrap(), &[0.0; 2], 1e-15));
        assert_eq!(
            legendre_map(&MomentPolytope::projective(2), &[0.0, 0.5]),
            Err(ToricError::OnBoundary { facet: 0 })
        );
    }

    #[test]
    fn sigma_examples() {
        assert!(close(&sigma_simplex(&[0.0, 0.0]), &[1.0 / 3.0; 2], 1e-15));
        assert!(close(&sigma_simplex(&[3f64.ln() / 2.0]), &[0.75], 1e-15));
        let s = sigma_simplex(&[400.0, -400.0, 399.0]);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!(s.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn sigma_inverts_legendre_on_presets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [MomentPolytope::projective(3), MomentPolytope::affine(2), MomentPolytope::product_p1(2)] {
            for _ in 0..100 {
                let x: Vec<f64> = match p.preset.unwrap() {
                    Preset::Pd => {
                        let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
                        let t: f64 = w.iter().sum();
                        w[..3].iter().map(|v| v / t).collect()
                    }
                    Preset::Cd => (0..2).map(|_| rng.random_range(0.01..5.0)).collect(),
                    Preset::P1d => (0..2).map(|_| rng.random_range(0.01..0.99)).collect(),
                };
                let back = p.sigma(&legendre_map(&p, &x).unwrap()).unwrap();
                assert!(close(&back, &x, 1e-10));
            }
        }
    }

    #[test]
    fn sigma_general_specializations() {
        let p = MomentPolytope::projective(2);
        let r = [0.3, -0.7];
        assert!(close(&sigma_general(p.points.as_ref().unwrap(), &r).unwrap(), &sigma_simplex(&r), 1e-15));
        assert_eq!(sigma_general(&[vec![2.0, 5.0]], &r).unwrap(), vec![2.0, 5.0]);
        let cube = MomentPolytope::product_p1(2);
        let expect = [sigma_simplex(&[r[0]])[0], sigma_simplex(&[r[1]])[0]];
        assert!(close(&sigma_general(cube.points.as_ref().unwrap(), &r).unwrap(), &expect, 1e-12));
        assert_eq!(sigma_general(&[], &r), Err(ToricError::EmptyPointSet));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_disc(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert!((psi_disc(&[1.0])[0] - 0.5f64.sqrt()).abs() < 1e-15);
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let v = DVector::from_vec(vec![3.0, -1.0]);
        let out = psi_bundle(&v, &h).unwrap();
        assert!(out.dot(&(&h * &out)) < 1.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(psi_bundle(&v, &bad), Err(ToricError::NotPositiveDefinite));
    }

    #[test]
    fn sigma_bundle_examples() {
        let v = DVector::from_vec(vec![0.2, -0.4, 1.0]);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(sigma_bundle(&v, &id, &id, BaseMap::Identity), v);
        let s = sigma_bundle(&v, &id, &id, BaseMap::Simplex);
        assert!(close(s.as_slice(), &sigma_simplex(v.as_slice()), 1e-15));
    }

    #[test]
    fn tropical_limits_on_p2() {
        let fan = Fan::Projective { dim: 2 };
        let t = WallTolerance::default();
        assert_eq!(sigma_infinity(&fan, &[1.0, 0.0], t), FanLimit::Point(vec![1.0, 0.0]));
        assert_eq!(sigma_infinity(&fan, &[1.0, 1.0], t), FanLimit::Point(vec![0.5, 0.5]));
        assert_eq!(sigma_infinity(&fan, &[-1.0, -1.0], t), FanLimit::Point(vec![0.0, 0.0]));
        assert_eq!(sigma_infinity(&fan, &[0.0, 0.0], t), FanLimit::Point(vec![1.0 / 3.0, 1.0 / 3.0]));
        assert_eq!(sigma_infinity(&fan, &[1.0, 1.0 - 1e-10], t), FanLimit::Boundary);
    }

    #[test]
    fn tropical_limit_sign_convention() {
        // σ(t x) approaches p_C as t grows, not as t → −∞.
        let x = [0.7, -0.2];
        let FanLimit::Point(p) = sigma_infinity(&Fan::Projective { dim: 2 }, &x, WallTolerance::default()) else {
            panic!("interior point")
        };
        let at = |t: f64| sigma_simplex(&[t * x[0], t * x[1]]);
        let dist = |s: Vec<f64>| s.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dist(at(50.0)) < 1e-12);
        assert!(dist(at(-50.0)) > 0.5);
    }

    #[test]
    fn other_fans() {
        let t = WallTolerance::default();
        assert_eq!(sigma_infinity(&Fan::ProductP1 { dim: 2 }, &[2.0, -1.0], t), FanLimit::Point(vec![1.0, 0.0]));
        assert_eq!(sigma_infinity(&Fan::Affine { dim: 2 }, &[-2.0, -1.0], t), FanLimit::Point(vec![0.0, 0.0]));
        assert_eq!(sigma_infinity(&Fan::Affine { dim: 1 }, &[1.0], t), FanLimit::Outside);
        let explicit = Fan::Explicit {
            cones: vec![
                Cone { rays: vec![vec![1.0, 0.0], vec![0.0, 1.0]], limit: vec![1.0, 1.0] },
                Cone { rays: vec![vec![-1.0, 0.0], vec![0.0, 1.0]], limit: vec![0.0, 1.0] },
            ],
        };
        assert_eq!(sigma_infinity(&explicit, &[-1.0, 2.0], t), FanLimit::Point(vec![0.0, 1.0]));
        assert_eq!(sigma_infinity(&explicit, &[0.0, 2.0], t), FanLimit::Boundary);
        assert_eq!(sigma_infinity(&explicit, &[0.0, -2.0], t), FanLimit::Outside);
    }

    #[test]
    fn pullback_examples() {
        assert!(sympl_pullback_check(PullbackMap::PsiDisc, &[(0.0, 0.0)], 1e-5) < 1e-6);
        assert!(sympl_pullback_check(PullbackMap::PsiDisc, &[(1.0, 0.0)], 1e-5) < 1e-5);
        assert!((fubini_study_density(1.0, 0.0) - 0.25).abs() < 1e-15);
        assert!(sympl_pullback_check(PullbackMap::SigmaCylinder, &[(0.3, 1.0), (-2.0, 0.0)], 1e-5) < 1e-5);
    }

    #[test]
    fn softplus_examples() {
        assert!(softplus_h_prime_series(1e-12).abs() < 1e-12);
        assert!((softplus_h_prime(1.0) - 0.5 * (std::f64::consts::E - 1.0).ln()).abs() < 1e-15);
        assert!(softplus_potential_check(1.0) < 1e-14);
        assert!(softplus_potential_check(1e-6) < 1e-10);
        for y in [-3.0, -0.1, 0.2, 4.0, 15.0] {
            assert!((softplus_inverse(softplus(y)) - y).abs() < 1e-10);
        }
    }
}
