//! Gradient-flow training in the chart `U`: raw differentials, the Euclidean and Ricci
//! metrics, explicit Euler and minibatch steps, and symmetry-reduced training.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::herm_eigen;
use crate::metrics::{vertex_metrics, MetricOptions, Tangent, TangentMetric};
use crate::network::{Dataset, Network, NetworkError, OutputNorm};
use crate::quiver::FramedQuiver;
use crate::representation::{from_chart, ChartPoint};
use crate::scalar::matrix_to_json;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("tangent metric is not positive definite on the chart directions (min eigenvalue {min_eig:.3e})")]
    SingularMetric { min_eig: f64 },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("symmetry reduction not allowed: {0}")]
    AdjacencyViolation(String),
    #[error("objective has no analytic gradient")]
    AnalyticUnsupported,
}

/// Metric used to raise the differential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    #[default]
    EuclideanChart,
    RicciHt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub metric: MetricMode,
    pub gradient: GradientMode,
    /// `None` trains full batch with step halving; `Some(k)` draws minibatches of size `k`.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Arrow ids constrained to the `(D | W′)` form.
    pub symmetry_reduction: Vec<String>,
    /// Stop once the raised gradient norm drops below this.
    pub tol: f64,
    pub init_scale: f64,
    pub output_norm: OutputNorm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            lr: 1e-2,
            metric: MetricMode::EuclideanChart,
            gradient: GradientMode::Analytic,
            batch_size: None,
            seed: 0,
            symmetry_reduction: Vec::new(),
            tol: 1e-8,
            init_scale: 0.1,
            output_norm: OutputNorm::Metric,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(TrainError::InvalidConfig("step size must be positive".into()));
        }
        if let GradientMode::FiniteDifference { h } = self.gradient {
            if !(1e-8..=1e-3).contains(&h) {
                return Err(TrainError::InvalidConfig(format!("finite-difference step {h} outside [1e-8, 1e-3]")));
            }
        }
        if self.batch_size == Some(0) {
            return Err(TrainError::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.tol >= 0.0) || !(self.init_scale >= 0.0) {
            return Err(TrainError::InvalidConfig("tolerance and init scale must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A smooth function on the chart.
pub trait Objective: Sync {
    fn framed_quiver(&self) -> &FramedQuiver;

    fn value(&self, c: &ChartPoint<f64>) -> Result<f64, TrainError>;

    /// Value and gradient in the `to_vec` layout.
    fn value_and_gradient(&self, _c: &ChartPoint<f64>) -> Result<(f64, Vec<f64>), TrainError> {
        Err(TrainError::AnalyticUnsupported)
    }
}

/// The loss of a network on a dataset.
pub struct NetworkObjective<'a> {
    pub net: &'a Network,
    pub data: &'a Dataset,
    pub norm: OutputNorm,
}

impl Objective for NetworkObjective<'_> {
    fn framed_quiver(&self) -> &FramedQuiver {
        &self.net.fq
    }

    fn value(&self, c: &ChartPoint<f64>) -> Result<f64, TrainError> {
        Ok(self.net.loss_chart(c, self.data, self.norm)?)
    }

    fn value_and_gradient(&self, c: &ChartPoint<f64>) -> Result<(f64, Vec<f64>), TrainError> {
        Ok(self.net.loss_gradient_chart(c, self.data, self.norm)?)
    }
}

/// Raw differential and the direction obtained by raising it with the chosen metric.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub value: f64,
    pub raw: Vec<f64>,
    pub direction: Vec<f64>,
}

/// Central finite differences of `obj` in every chart coordinate.
pub fn finite_difference<O: Objective + ?Sized>(obj: &O, c: &ChartPoint<f64>, h: f64) -> Result<Vec<f64>, TrainError> {
    let theta = c.to_vec();
    (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            Ok((obj.value(&c.with_vec(&tp))? - obj.value(&c.with_vec(&tm))?) / (2.0 * h))
        })
        .collect()
}

/// Tangent to `R_{n,d}` of the `k`-th chart coordinate.
pub fn chart_direction(fq: &FramedQuiver, c: &ChartPoint<f64>, k: usize) -> Tangent<f64> {
    let mut t = Tangent::zeros(fq);
    let mut idx = k;
    for (a, w) in c.w.iter().enumerate() {
        if idx < w.len() {
            t.dv[a][(idx / w.ncols(), idx % w.ncols())] = 1.0;
            return t;
        }
        idx -= w.len();
    }
    for (i, b) in c.b.iter().enumerate() {
        if idx < b.len() {
            t.de[i][(idx / b.ncols(), fq.d(i) + idx % b.ncols())] = 1.0;
            return t;
        }
        idx -= b.len();
    }
    panic!("chart coordinate {k} out of range");
}

/// Gram matrix of `H_T` over the chart coordinate directions.
pub fn ricci_gram(fq: &FramedQuiver, c: &ChartPoint<f64>) -> Result<DMatrix<f64>, TrainError> {
    let rep = from_chart(fq, c).map_err(NetworkError::from)?;
    let opts = MetricOptions { assume_stable: true, ..MetricOptions::default() };
    let m = vertex_metrics(fq, &rep, &opts).map_err(NetworkError::from)?;
    let dirs: Vec<Tangent<f64>> = (0..c.num_params()).map(|k| chart_direction(fq, c, k)).collect();
    Ok(TangentMetric::new(fq, &rep, &m).gram(&dirs))
}

/// Solves `G x = g` for a positive definite `G`.
fn raise(g: &DMatrix<f64>, raw: &[f64]) -> Result<Vec<f64>, TrainError> {
    let (vals, _) = herm_eigen(g);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(0.0, f64::max);
    if !(lo > 1e-12 * hi.max(1e-300)) {
        return Err(TrainError::SingularMetric { min_eig: lo });
    }
    let chol = g.clone().cholesky().ok_or(TrainError::SingularMetric { min_eig: lo })?;
    Ok(chol.solve(&DVector::from_column_slice(raw)).iter().copied().collect())
}

/// `d𝓔` at `c`, raised by the inverse of the configured metric.
pub fn gradient<O: Objective + ?Sized>(obj: &O, c: &ChartPoint<f64>, cfg: &TrainConfig) -> Result<Gradient, TrainError> {
    let (value, raw) = match cfg.gradient {
        GradientMode::Analytic => obj.value_and_gradient(c)?,
        GradientMode::FiniteDifference { h } => (obj.value(c)?, finite_difference(obj, c, h)?),
    };
    let direction = match cfg.metric {
        MetricMode::EuclideanChart => raw.clone(),
        MetricMode::RicciHt => raise(&ricci_gram(obj.framed_quiver(), c)?, &raw)?,
    };
    Ok(Gradient { value, raw, direction })
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    StepBudget,
    NonFinite,
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub loss: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub wall_time_s: f64,
    pub final_point: ChartPoint<f64>,
    pub termination: Termination,
    pub final_lr: f64,
    pub steps_taken: usize,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.loss[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss.last().expect("trace holds the initial loss")
    }

    /// Report without the wall time, which lives in a separate field for callers.
    pub fn to_json(&self, fq: &FramedQuiver) -> serde_json::Value {
        let w: serde_json::Map<String, serde_json::Value> = fq
            .quiver
            .arrows()
            .iter()
            .zip(&self.final_point.w)
            .map(|(a, m)| (a.id.clone(), matrix_to_json(m)))
            .collect();
        let b: serde_json::Map<String, serde_json::Value> = (0..fq.num_vertices())
            .map(|i| (fq.quiver.vertex_id(i).to_string(), matrix_to_json(&self.final_point.b[i])))
            .collect();
        serde_json::json!({
            "loss_trace": self.loss,
            "grad_norm_trace": self.grad_norm,
            "initial_loss": self.initial_loss(),
            "final_loss": self.final_loss(),
            "termination": self.termination,
            "steps_taken": self.steps_taken,
            "final_lr": self.final_lr,
            "final_point": { "W": w, "b": b },
        })
    }

    /// `step,loss,grad_norm`; the gradient norm is empty where it was not computed.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,loss,grad_norm\n");
        for (k, l) in self.loss.iter().enumerate() {
            match self.grad_norm.get(k) {
                Some(g) => out.push_str(&format!("{k},{l},{g}\n")),
                None => out.push_str(&format!("{k},{l},\n")),
            }
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian chart point with the configured scale.
pub fn initial_point(fq: &FramedQuiver, cfg: &TrainConfig) -> ChartPoint<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = ChartPoint::zeros(fq);
    let theta: Vec<f64> = (0..c.num_params()).map(|_| cfg.init_scale * rng.sample::<f64, _>(StandardNormal)).collect();
    c.with_vec(&theta)
}

/// Trains from the seeded Gaussian initial point.
pub fn train(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, TrainError> {
    train_from(net, data, cfg, initial_point(&net.fq, cfg))
}

/// Explicit Euler on `dr/dt = −∇𝓔` starting at `start`.
///
/// Full batch halves the step whenever the loss would increase; minibatch mode keeps it fixed.
pub fn train_from(net: &Network, data: &Dataset, cfg: &TrainConfig, start: ChartPoint<f64>) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    let clock = Instant::now();
    let reduction = if cfg.symmetry_reduction.is_empty() {
        None
    } else {
        let arrows = cfg
            .symmetry_reduction
            .iter()
            .map(|id| net.fq.quiver.arrow_by_id(id).map_err(|e| TrainError::Network(e.into())))
            .collect::<Result<Vec<_>, _>>()?;
        Some(symmetry_reduce(net, &start, &arrows)?)
    };
    let mut point = reduction.as_ref().map_or(start, |r| r.point.clone());
    let full = NetworkObjective { net, data, norm: cfg.output_norm };
    let mut loss = full.value(&point)?;
    let mut trace = vec![loss];
    let mut gnorms = Vec::new();
    let mut lr = cfg.lr;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let mut termination = Termination::StepBudget;
    let mut steps_taken = 0;
    if !loss.is_finite() {
        termination = Termination::NonFinite;
    }
    while termination == Termination::StepBudget && steps_taken < cfg.steps {
        let batch;
        let obj = match cfg.batch_size {
            Some(k) if k < data.len() => {
                let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..data.len())).collect();
                batch = data.subset(&idx);
                NetworkObjective { net, data: &batch, norm: cfg.output_norm }
            }
            _ => NetworkObjective { net, data, norm: cfg.output_norm },
        };
        let mut g = gradient(&obj, &point, cfg)?;
        if let Some(r) = &reduction {
            r.project(&mut g.direction);
        }
        let gn = norm(&g.direction);
        gnorms.push(gn);
        if !gn.is_finite() {
            termination = Termination::NonFinite;
            break;
        }
        if gn < cfg.tol {
            termination = Termination::Converged;
            break;
        }
        let theta = point.to_vec();
        let step_to = |lr: f64| {
            let t: Vec<f64> = theta.iter().zip(&g.direction).map(|(x, d)| x - lr * d).collect();
            point.with_vec(&t)
        };
        if cfg.batch_size.is_some_and(|k| k < data.len()) {
            point = step_to(lr);
            loss = full.value(&point)?;
        } else {
            let mut accepted = false;
            for _ in 0..60 {
                let trial = step_to(lr);
                let l = full.value(&trial)?;
                if l.is_finite() && l <= loss + 1e-12 {
                    point = trial;
                    loss = l;
                    accepted = true;
                    break;
                }
                lr *= 0.5;
            }
            if !accepted {
                termination = Termination::StepUnderflow;
                break;
            }
        }
        steps_taken += 1;
        trace.push(loss);
        if !loss.is_finite() {
            termination = Termination::NonFinite;
        }
    }
    Ok(TrainReport {
        loss: trace,
        grad_norm: gnorms,
        wall_time_s: clock.elapsed().as_secs_f64(),
        final_point: point,
        termination,
        final_lr: lr,
        steps_taken,
    })
}

/// A chart point on `U′` and the coordinate mask keeping tangents on `U′`.
#[derive(Debug, Clone)]
pub struct SymmetryReduction {
    pub point: ChartPoint<f64>,
    /// `false` for coordinates fixed to zero on `U′`.
    pub free: Vec<bool>,
}

impl SymmetryReduction {
    pub fn project(&self, v: &mut [f64]) {
        for (x, &f) in v.iter_mut().zip(&self.free) {
            if !f {
                *x = 0.0;
            }
        }
    }
}

/// Moves `c` along its orbit under orthogonal gauges at the endpoints of `arrows` so that each
/// chosen `W_a` becomes `(D | W′)` (or its transpose) with `D` diagonal and descending.
pub fn symmetry_reduce(net: &Network, c: &ChartPoint<f64>, arrows: &[usize]) -> Result<SymmetryReduction, TrainError> {
    let fq = &net.fq;
    let q = &fq.quiver;
    let io: Vec<usize> = net.io.inputs.iter().chain(&net.io.outputs).copied().collect();
    let mut used: Vec<usize> = Vec::new();
    for &a in arrows {
        let ar = q.arrow(a);
        for v in [ar.tail, ar.head] {
            if io.contains(&v) {
                return Err(TrainError::AdjacencyViolation(format!("arrow `{}` touches input/output `{}`", ar.id, q.vertex_id(v))));
            }
            if used.contains(&v) {
                return Err(TrainError::AdjacencyViolation(format!("arrow `{}` shares vertex `{}` with another chosen arrow", ar.id, q.vertex_id(v))));
            }
        }
        if ar.tail == ar.head {
            return Err(TrainError::AdjacencyViolation(format!("arrow `{}` is a loop", ar.id)));
        }
        used.extend([ar.tail, ar.head]);
    }
    let mut u: Vec<DMatrix<f64>> = (0..fq.num_vertices()).map(|i| DMatrix::identity(fq.d(i), fq.d(i))).collect();
    for &a in arrows {
        let ar = q.arrow(a);
        let w = &c.w[a];
        if in_reduced_form(w) {
            continue;
        }
        let svd = w.clone().svd(true, true);
        let (uu, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let k = svd.singular_values.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        let full_u = complete_columns(&uu, &order);
        let full_v = complete_columns(&vt.transpose(), &order);
        u[ar.head] = full_u.transpose();
        u[ar.tail] = full_v.transpose();
    }
    // Orthogonal change at each vertex: W ↦ u_h W u_tᵀ, b ↦ u b.
    let mut point = c.clone();
    for (a, w) in point.w.iter_mut().enumerate() {
        let ar = q.arrow(a);
        *w = &u[ar.head] * &*w * u[ar.tail].transpose();
    }
    for (i, b) in point.b.iter_mut().enumerate() {
        *b = &u[i] * &*b;
    }
    let mut free = vec![true; c.num_params()];
    let mut off = 0;
    for (a, w) in point.w.iter_mut().enumerate() {
        if arrows.contains(&a) {
            let k = w.nrows().min(w.ncols());
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    if i < k && j < k && i != j {
                        w[(i, j)] = 0.0;
                        free[off + i * w.ncols() + j] = false;
                    }
                }
            }
        }
        off += w.len();
    }
    Ok(SymmetryReduction { point, free })
}

/// Leading square block diagonal with nonnegative, nonincreasing entries.
fn in_reduced_form(w: &DMatrix<f64>) -> bool {
    let k = w.nrows().min(w.ncols());
    (0..k).all(|i| (0..k).all(|j| i == j || w[(i, j)] == 0.0))
        && (0..k).all(|i| w[(i, i)] >= 0.0 && (i == 0 || w[(i, i)] <= w[(i - 1, i - 1)]))
}

/// Reorders orthonormal columns and completes them to a square orthogonal matrix.
fn complete_columns(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = order.iter().map(|&k| m.column(k).into_owned()).collect();
    for k in 0..m.ncols() {
        if !order.contains(&k) {
            cols.push(m.column(k).into_owned());
        }
    }
    let q = DMatrix::from_columns(&cols);
    crate::linalg::complete_orthonormal(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::gauge_basis;
    use crate::network::ActivationKind;
    use crate::toric::BaseMap;

    struct Quadratic {
        fq: FramedQuiver,
        target: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn framed_quiver(&self) -> &FramedQuiver {
            &self.fq
        }

        fn value(&self, c: &ChartPoint<f64>) -> Result<f64, TrainError> {
            Ok(c.to_vec().iter().zip(&self.target).map(|(x, t)| (x - t).powi(2)).sum())
        }

        fn value_and_gradient(&self, c: &ChartPoint<f64>) -> Result<(f64, Vec<f64>), TrainError> {
            let th = c.to_vec();
            Ok((self.value(c)?, th.iter().zip(&self.target).map(|(x, t)| 2.0 * (x - t)).collect()))
        }
    }

    fn sin_data(points: usize) -> Dataset {
        let x: Vec<Vec<f64>> = (0..points).map(|k| vec![k as f64 / (points - 1) as f64]).collect();
        let y = x.iter().map(|p| vec![(2.0 * std::f64::consts::PI * p[0]).sin()]).collect();
        Dataset::from_samples(x, y).unwrap()
    }

    #[test]
    fn quadratic_gradients() {
        let net = Network::chain(&[2, 3, 1], ActivationKind::Identity).unwrap();
        let c = initial_point(&net.fq, &TrainConfig { seed: 3, init_scale: 1.0, ..TrainConfig::default() });
        let target: Vec<f64> = (0..c.num_params()).map(|k| 0.1 * k as f64).collect();
        let obj = Quadratic { fq: net.fq.clone(), target: target.clone() };
        let expect: Vec<f64> = c.to_vec().iter().zip(&target).map(|(x, t)| 2.0 * (x - t)).collect();
        let an = gradient(&obj, &c, &TrainConfig::default()).unwrap();
        assert!(an.direction.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-12));
        let fd_cfg = TrainConfig { gradient: GradientMode::FiniteDifference { h: 1e-5 }, ..TrainConfig::default() };
        let fd = gradient(&obj, &c, &fd_cfg).unwrap();
        assert!(fd.direction.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-6));
        let flat = Quadratic { fq: net.fq.clone(), target: c.to_vec() };
        assert!(gradient(&flat, &c, &TrainConfig::default()).unwrap().direction.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { lr: 0.0, ..TrainConfig::default() }.validate().is_err());
        let bad_h = TrainConfig { gradient: GradientMode::FiniteDifference { h: 1e-2 }, ..TrainConfig::default() };
        assert!(bad_h.validate().is_err());
        let parsed: TrainConfig = serde_json::from_str(r#"{"steps": 5, "metric": "ricci_ht", "gradient": {"finite_difference": {"h": 1e-5}}}"#).unwrap();
        assert_eq!(parsed.steps, 5);
        assert_eq!(parsed.metric, MetricMode::RicciHt);
    }

    #[test]
    fn analytic_matches_fd_on_a3() {
        let net = Network::chain(&[1, 4, 1], ActivationKind::Sigma(BaseMap::Simplex)).unwrap();
        let data = sin_data(16);
        let c = initial_point(&net.fq, &TrainConfig { seed: 11, init_scale: 0.5, ..TrainConfig::default() });
        let obj = NetworkObjective { net: &net, data: &data, norm: OutputNorm::Metric };
        let an = gradient(&obj, &c, &TrainConfig::default()).unwrap().raw;
        let fd = finite_difference(&obj, &c, 1e-5).unwrap();
        let dev = norm(&an.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&an);
        assert!(dev < 1e-4, "{dev}");
    }

    #[test]
    fn zero_target_terminates_immediately() {
        let net = Network::chain(&[1, 3, 1], ActivationKind::Psi).unwrap();
        let x: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64 / 7.0]).collect();
        let data = Dataset::from_samples(x, vec![vec![0.0]; 8]).unwrap();
        let cfg = TrainConfig { init_scale: 0.0, steps: 50, ..TrainConfig::default() };
        let rep = train(&net, &data, &cfg).unwrap();
        assert_eq!(rep.initial_loss(), 0.0);
        assert_eq!(rep.termination, Termination::Converged);
        assert_eq!(rep.steps_taken, 0);
    }

    #[test]
    fn replay_is_bitwise_and_full_batch_descends() {
        let net = Network::chain(&[1, 4, 1], ActivationKind::Sigma(BaseMap::Simplex)).unwrap();
        let data = sin_data(32);
        let cfg = TrainConfig { steps: 40, lr: 0.5, seed: 2, ..TrainConfig::default() };
        let a = train(&net, &data, &cfg).unwrap();
        let b = train(&net, &data, &cfg).unwrap();
        assert_eq!(a.loss, b.loss);
        assert!(a.loss.len() <= cfg.steps + 1);
        assert!(a.loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let sgd = TrainConfig { batch_size: Some(8), ..cfg.clone() };
        assert_eq!(train(&net, &data, &sgd).unwrap().loss, train(&net, &data, &sgd).unwrap().loss);
    }

    #[test]
    fn ricci_direction_is_gauge_blind() {
        let net = Network::chain(&[1, 3, 1], ActivationKind::Sigma(BaseMap::Simplex)).unwrap();
        let data = sin_data(16);
        let c = initial_point(&net.fq, &TrainConfig { seed: 5, init_scale: 0.3, ..TrainConfig::default() });
        let obj = NetworkObjective { net: &net, data: &data, norm: OutputNorm::Metric };
        let cfg = TrainConfig { metric: MetricMode::RicciHt, ..TrainConfig::default() };
        let g = gradient(&obj, &c, &cfg).unwrap();
        let rep = from_chart(&net.fq, &c).unwrap();
        let m = vertex_metrics(&net.fq, &rep, &MetricOptions::default()).unwrap();
        let mut t = Tangent::zeros(&net.fq);
        for (k, x) in g.direction.iter().enumerate() {
            t = t.axpy(*x, &chart_direction(&net.fq, &c, k));
        }
        let tm = TangentMetric::new(&net.fq, &rep, &m);
        for gd in gauge_basis(&net.fq, &rep) {
            assert!(tm.eval(&gd, &t).abs() < 1e-6);
        }
        // H_T(T, ∂_k) recovers the raw differential.
        for k in 0..g.raw.len() {
            let lhs = tm.eval(&t, &chart_direction(&net.fq, &c, k));
            assert!((lhs - g.raw[k]).abs() < 1e-8 * (1.0 + g.raw[k].abs()));
        }
    }

    #[test]
    fn symmetry_reduce_examples() {
        let net = Network::chain(&[1, 3, 2, 1], ActivationKind::Psi).unwrap();
        let mut c = initial_point(&net.fq, &TrainConfig { seed: 9, init_scale: 1.0, ..TrainConfig::default() });
        let a2 = net.fq.quiver.arrow_by_id("a2").unwrap();
        let red = symmetry_reduce(&net, &c, &[a2]).unwrap();
        let w = &red.point.w[a2];
        let sv = c.w[a2].clone().svd(false, false).singular_values;
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(w.shape(), (2, 3));
        assert!((w[(0, 0)].abs() - sv[0]).abs() < 1e-12 && (w[(1, 1)].abs() - sv[1]).abs() < 1e-12);
        assert!(w[(0, 1)] == 0.0 && w[(1, 0)] == 0.0);
        let data = sin_data(8);
        let before = net.loss_chart(&c, &data, OutputNorm::Metric).unwrap();
        let after = net.loss_chart(&red.point, &data, OutputNorm::Metric).unwrap();
        assert!((before - after).abs() < 1e-10);
        assert!(matches!(symmetry_reduce(&net, &c, &[0]), Err(TrainError::AdjacencyViolation(_))));

        c.w[a2] = DMatrix::from_row_slice(2, 3, &[2.0, 0.0, 0.3, 0.0, 1.0, -0.4]);
        let same = symmetry_reduce(&net, &c, &[a2]).unwrap();
        assert!((&same.point.w[a2] - &c.w[a2]).norm() < 1e-12);
    }
}
