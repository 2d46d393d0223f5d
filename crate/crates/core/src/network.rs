//! Network expressions over a framed quiver, their evaluation at a representation, the
//! input/output maps `L_γ` and `f̃`, datasets and the loss functional.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{vertex_metrics, MetricError, MetricOptions, MetricSet};
use crate::quiver::{shortest_path, topological_order, DimVectors, FramedQuiver, Quiver, QuiverError};
use crate::representation::{from_chart, ChartPoint, FramedRep, RepError};
use crate::toric::{sigma_simplex, BaseMap};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid network expression: {0}")]
    Expr(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no metric available at vertex `{0}`")]
    MissingMetric(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset: {0}")]
    Data(String),
    #[error("analytic gradients need an acyclic quiver")]
    AnalyticUnsupported,
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Activation arrow kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Identity,
    /// `v ↦ v / √(1 + H(v,v))`.
    Psi,
    /// `v ↦ e · σ(eᵀHv)` with the given base map.
    Sigma(BaseMap),
}

/// An element of the semiring generated by arrows and activation arrows, applied to inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkExpr {
    /// The fiber at an input vertex.
    Input(usize),
    /// Affine arrow map `v ↦ V_a v + β_{h(a)}`.
    Arrow { arrow: usize, child: Box<NetworkExpr> },
    /// Activation loop at `vertex`.
    Activation { vertex: usize, kind: ActivationKind, child: Box<NetworkExpr> },
    /// Scalar combination of expressions with a common head.
    Sum(Vec<(f64, NetworkExpr)>),
}

impl NetworkExpr {
    pub fn arrow(arrow: usize, child: NetworkExpr) -> Self {
        NetworkExpr::Arrow { arrow, child: Box::new(child) }
    }

    pub fn activation(vertex: usize, kind: ActivationKind, child: NetworkExpr) -> Self {
        NetworkExpr::Activation { vertex, kind, child: Box::new(child) }
    }

    /// Head vertex, validating that every node composes head to tail.
    pub fn head(&self, q: &Quiver) -> Result<usize, NetworkError> {
        match self {
            NetworkExpr::Input(i) => {
                if *i >= q.num_vertices() {
                    return Err(NetworkError::Expr(format!("input vertex {i} out of range")));
                }
                Ok(*i)
            }
            NetworkExpr::Arrow { arrow, child } => {
                if *arrow >= q.num_arrows() {
                    return Err(NetworkError::Expr(format!("arrow {arrow} out of range")));
                }
                let a = q.arrow(*arrow);
                let h = child.head(q)?;
                if h != a.tail {
                    return Err(NetworkError::Expr(format!(
                        "arrow `{}` starts at `{}` but follows `{}`",
                        a.id,
                        q.vertex_id(a.tail),
                        q.vertex_id(h)
                    )));
                }
                Ok(a.head)
            }
            NetworkExpr::Activation { vertex, child, .. } => {
                let h = child.head(q)?;
                if h != *vertex {
                    return Err(NetworkError::Expr(format!(
                        "activation at `{}` follows `{}`",
                        q.vertex_id(*vertex),
                        q.vertex_id(h)
                    )));
                }
                Ok(*vertex)
            }
            NetworkExpr::Sum(terms) => {
                let mut head = None;
                for (_, t) in terms {
                    if matches!(t, NetworkExpr::Activation { .. }) {
                        return Err(NetworkError::Expr("an activation output cannot enter a sum directly".into()));
                    }
                    let h = t.head(q)?;
                    if head.is_some_and(|x| x != h) {
                        return Err(NetworkError::Expr("sum terms have different heads".into()));
                    }
                    head = Some(h);
                }
                head.ok_or_else(|| NetworkError::Expr("empty sum".into()))
            }
        }
    }

    /// Input vertices used by the expression, sorted and deduplicated.
    pub fn inputs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_inputs(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_inputs(&self, out: &mut Vec<usize>) {
        match self {
            NetworkExpr::Input(i) => out.push(*i),
            NetworkExpr::Arrow { child, .. } | NetworkExpr::Activation { child, .. } => child.collect_inputs(out),
            NetworkExpr::Sum(terms) => terms.iter().for_each(|(_, t)| t.collect_inputs(out)),
        }
    }

    /// The same expression with every activation removed.
    pub fn strip_activations(&self) -> Self {
        match self {
            NetworkExpr::Input(i) => NetworkExpr::Input(*i),
            NetworkExpr::Arrow { arrow, child } => NetworkExpr::arrow(*arrow, child.strip_activations()),
            NetworkExpr::Activation { child, .. } => child.strip_activations(),
            NetworkExpr::Sum(terms) => NetworkExpr::Sum(terms.iter().map(|(c, t)| (*c, t.strip_activations())).collect()),
        }
    }

    pub fn activation_count(&self) -> usize {
        match self {
            NetworkExpr::Input(_) => 0,
            NetworkExpr::Arrow { child, .. } => child.activation_count(),
            NetworkExpr::Activation { child, .. } => 1 + child.activation_count(),
            NetworkExpr::Sum(terms) => terms.iter().map(|(_, t)| t.activation_count()).sum(),
        }
    }

    /// Written in composition order, e.g. `a2·𝔬2·a1`.
    pub fn label(&self, q: &Quiver) -> String {
        match self {
            NetworkExpr::Input(i) => format!("e{}", q.vertex_id(*i)),
            NetworkExpr::Arrow { arrow, child } => match child.as_ref() {
                NetworkExpr::Input(_) => q.arrow(*arrow).id.clone(),
                c => format!("{}·{}", q.arrow(*arrow).id, c.label(q)),
            },
            NetworkExpr::Activation { vertex, child, .. } => format!("𝔬{}·{}", q.vertex_id(*vertex), child.label(q)),
            NetworkExpr::Sum(terms) => {
                let parts: Vec<String> = terms.iter().map(|(c, t)| format!("{c}·({})", t.label(q))).collect();
                parts.join(" + ")
            }
        }
    }
}

/// `a_k·𝔬_{h(a_{k−1})}·…·𝔬_{h(a_1)}·a_1` along consecutive layer vertices.
pub fn feedforward_expr(q: &Quiver, layers: &[usize], kind: ActivationKind) -> Result<NetworkExpr, NetworkError> {
    let first = *layers.first().ok_or_else(|| NetworkError::Expr("no layers".into()))?;
    let mut expr = NetworkExpr::Input(first);
    for (k, w) in layers.windows(2).enumerate() {
        let a = q
            .outgoing(w[0])
            .iter()
            .copied()
            .find(|&a| q.arrow(a).head == w[1])
            .ok_or_else(|| {
                NetworkError::Expr(format!("no arrow from `{}` to `{}`", q.vertex_id(w[0]), q.vertex_id(w[1])))
            })?;
        if k > 0 {
            expr = NetworkExpr::activation(w[0], kind, expr);
        }
        expr = NetworkExpr::arrow(a, expr);
    }
    Ok(expr)
}

/// Dense feed-forward expression of an acyclic quiver: the value at a vertex is the activation
/// of the sum of its incoming arrow maps, and input vertices carry their fibers.
pub fn dag_expr(
    q: &Quiver,
    inputs: &[usize],
    output: usize,
    kind: ActivationKind,
) -> Result<NetworkExpr, NetworkError> {
    topological_order(q)?;
    fn build(q: &Quiver, inputs: &[usize], i: usize, kind: ActivationKind, top: bool) -> Option<NetworkExpr> {
        if inputs.contains(&i) {
            return Some(NetworkExpr::Input(i));
        }
        let terms: Vec<(f64, NetworkExpr)> = q
            .incoming(i)
            .iter()
            .filter_map(|&a| build(q, inputs, q.arrow(a).tail, kind, false).map(|c| (1.0, NetworkExpr::arrow(a, c))))
            .collect();
        let body = match terms.len() {
            0 => return None,
            1 => terms.into_iter().next().map(|(_, t)| t)?,
            _ => NetworkExpr::Sum(terms),
        };
        Some(if top { body } else { NetworkExpr::activation(i, kind, body) })
    }
    build(q, inputs, output, kind, true)
        .ok_or_else(|| NetworkError::Expr(format!("output `{}` is not reachable from the inputs", q.vertex_id(output))))
}

/// Input and output vertices with one expression per output vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct IoSpec {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub exprs: Vec<NetworkExpr>,
}

/// How the loss measures output errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputNorm {
    /// `EᵀHE` at each output vertex.
    #[default]
    Metric,
    Euclidean,
}

/// A framed quiver with an input/output specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub fq: FramedQuiver,
    pub io: IoSpec,
}

/// Per-sample forward values needed by the reverse pass.
#[derive(Debug, Clone)]
enum Trace {
    Input,
    Arrow { x: DVector<f64>, child: Box<Trace> },
    Identity { child: Box<Trace> },
    Psi { x: DVector<f64>, child: Box<Trace> },
    Sigma { x: DVector<f64>, z: DVector<f64>, s: DVector<f64>, child: Box<Trace> },
    Sum(Vec<Trace>),
}

/// Adjoints of the representation and the vertex metrics.
#[derive(Debug, Clone)]
pub struct RepAdjoint {
    pub v: Vec<DMatrix<f64>>,
    pub e: Vec<DMatrix<f64>>,
    pub h: Vec<DMatrix<f64>>,
}

impl RepAdjoint {
    fn zeros(fq: &FramedQuiver) -> Self {
        RepAdjoint {
            v: (0..fq.num_arrows())
                .map(|a| {
                    let (r, c) = fq.arrow_shape(a);
                    DMatrix::zeros(r, c)
                })
                .collect(),
            e: (0..fq.num_vertices()).map(|i| DMatrix::zeros(fq.d(i), fq.n(i))).collect(),
            h: (0..fq.num_vertices()).map(|i| DMatrix::zeros(fq.d(i), fq.d(i))).collect(),
        }
    }

    fn add(mut self, other: &Self) -> Self {
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += b;
        }
        for (a, b) in self.e.iter_mut().zip(&other.e) {
            *a += b;
        }
        for (a, b) in self.h.iter_mut().zip(&other.h) {
            *a += b;
        }
        self
    }
}

struct Ctx<'a> {
    fq: &'a FramedQuiver,
    rep: &'a FramedRep<f64>,
    h: &'a [DMatrix<f64>],
}

impl Ctx<'_> {
    fn bias(&self, i: usize) -> Option<DVector<f64>> {
        let (d, n) = (self.fq.d(i), self.fq.n(i));
        (n > d).then(|| self.rep.e[i].column(d).into_owned())
    }

    fn forward(&self, expr: &NetworkExpr, fibers: &[Option<DVector<f64>>]) -> Result<(DVector<f64>, Trace), NetworkError> {
        let vid = |i: usize| self.fq.quiver.vertex_id(i).to_string();
        match expr {
            NetworkExpr::Input(i) => {
                let v = fibers
                    .get(*i)
                    .and_then(|f| f.clone())
                    .ok_or_else(|| NetworkError::Shape(format!("no input fiber at `{}`", vid(*i))))?;
                if v.len() != self.fq.d(*i) {
                    return Err(NetworkError::Shape(format!("input fiber at `{}` must have length {}", vid(*i), self.fq.d(*i))));
                }
                Ok((v, Trace::Input))
            }
            NetworkExpr::Arrow { arrow, child } => {
                let (x, t) = self.forward(child, fibers)?;
                let head = self.fq.quiver.arrow(*arrow).head;
                let mut y = &self.rep.v[*arrow] * &x;
                if let Some(b) = self.bias(head) {
                    y += b;
                }
                Ok((y, Trace::Arrow { x, child: Box::new(t) }))
            }
            NetworkExpr::Activation { vertex, kind, child } => {
                let (x, t) = self.forward(child, fibers)?;
                let child = Box::new(t);
                if *kind == ActivationKind::Identity {
                    return Ok((x, Trace::Identity { child }));
                }
                let h = self.h.get(*vertex).ok_or_else(|| NetworkError::MissingMetric(vid(*vertex)))?;
                match kind {
                    ActivationKind::Psi => {
                        let q = 1.0 + x.dot(&(h * &x));
                        Ok((&x / q.sqrt(), Trace::Psi { x, child }))
                    }
                    ActivationKind::Sigma(base) => {
                        let e = &self.rep.e[*vertex];
                        let z = e.transpose() * (h * &x);
                        let s = DVector::from_vec(base.apply(z.as_slice()));
                        Ok((e * &s, Trace::Sigma { x, z, s, child }))
                    }
                    ActivationKind::Identity => unreachable!(),
                }
            }
            NetworkExpr::Sum(terms) => {
                let mut acc: Option<DVector<f64>> = None;
                let mut traces = Vec::with_capacity(terms.len());
                for (c, t) in terms {
                    let (y, tr) = self.forward(t, fibers)?;
                    acc = Some(match acc {
                        Some(a) => a + y * *c,
                        None => y * *c,
                    });
                    traces.push(tr);
                }
                let y = acc.ok_or_else(|| NetworkError::Expr("empty sum".into()))?;
                Ok((y, Trace::Sum(traces)))
            }
        }
    }

    fn backward(
        &self,
        expr: &NetworkExpr,
        trace: &Trace,
        ybar: DVector<f64>,
        adj: &mut RepAdjoint,
        fiber_bar: &mut [Option<DVector<f64>>],
    ) {
        match (expr, trace) {
            (NetworkExpr::Input(i), Trace::Input) => {
                let slot = &mut fiber_bar[*i];
                *slot = Some(match slot.take() {
                    Some(a) => a + ybar,
                    None => ybar,
                });
            }
            (NetworkExpr::Arrow { arrow, child }, Trace::Arrow { x, child: t }) => {
                let head = self.fq.quiver.arrow(*arrow).head;
                let d = self.fq.d(head);
                if self.fq.n(head) > d {
                    let mut col = adj.e[head].column_mut(d);
                    col += &ybar;
                }
                adj.v[*arrow] += &ybar * x.transpose();
                let xbar = self.rep.v[*arrow].transpose() * ybar;
                self.backward(child, t, xbar, adj, fiber_bar);
            }
            (NetworkExpr::Activation { child, .. }, Trace::Identity { child: t }) => {
                self.backward(child, t, ybar, adj, fiber_bar);
            }
            (NetworkExpr::Activation { vertex, child, .. }, Trace::Psi { x, child: t }) => {
                let h = &self.h[*vertex];
                let hx = h * x;
                let q = 1.0 + x.dot(&hx);
                let yx = ybar.dot(x);
                let xbar = &ybar / q.sqrt() - hx * (yx / q.powf(1.5));
                adj.h[*vertex] -= x * x.transpose() * (yx / (2.0 * q.powf(1.5)));
                self.backward(child, t, xbar, adj, fiber_bar);
            }
            (NetworkExpr::Activation { vertex, kind, child }, Trace::Sigma { x, z, s, child: t }) => {
                let ActivationKind::Sigma(base) = kind else { unreachable!() };
                let h = &self.h[*vertex];
                let e = &self.rep.e[*vertex];
                adj.e[*vertex] += &ybar * s.transpose();
                let sbar = e.transpose() * &ybar;
                let zbar = base.jacobian(z.as_slice(), s.as_slice()).transpose() * sbar;
                let u = h * x;
                adj.e[*vertex] += u * zbar.transpose();
                let ubar = e * zbar;
                adj.h[*vertex] += &ubar * x.transpose();
                let xbar = h * ubar;
                self.backward(child, t, xbar, adj, fiber_bar);
            }
            (NetworkExpr::Sum(terms), Trace::Sum(traces)) => {
                for ((c, t), tr) in terms.iter().zip(traces) {
                    self.backward(t, tr, &ybar * *c, adj, fiber_bar);
                }
            }
            _ => unreachable!("trace does not match expression"),
        }
    }
}

/// Output metric `E′ᵀ H E′` on the first `d_j` framing coordinates.
fn output_metric(e: &DMatrix<f64>, h: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let ep = e.columns(0, d);
    ep.transpose() * h * ep
}

impl Network {
    pub fn new(fq: FramedQuiver, io: IoSpec) -> Result<Self, NetworkError> {
        if io.outputs.len() != io.exprs.len() {
            return Err(NetworkError::Expr("one expression per output vertex is required".into()));
        }
        if io.inputs.is_empty() || io.outputs.is_empty() {
            return Err(NetworkError::Expr("inputs and outputs must be nonempty".into()));
        }
        for (&j, ex) in io.outputs.iter().zip(&io.exprs) {
            if ex.head(&fq.quiver)? != j {
                return Err(NetworkError::Expr(format!("expression for `{}` ends elsewhere", fq.quiver.vertex_id(j))));
            }
            if let Some(i) = ex.inputs().into_iter().find(|i| !io.inputs.contains(i)) {
                return Err(NetworkError::Expr(format!("`{}` is not an input vertex", fq.quiver.vertex_id(i))));
            }
        }
        Ok(Network { fq, io })
    }

    /// Chain network `1 → 2 → … → k` with framing `n = d` at the ends and `d + 1` inside.
    pub fn chain(d: &[usize], kind: ActivationKind) -> Result<Self, NetworkError> {
        let k = d.len();
        if k < 2 {
            return Err(NetworkError::Expr("a chain network needs at least two layers".into()));
        }
        let n = d.iter().enumerate().map(|(i, &x)| if i == 0 || i + 1 == k { x } else { x + 1 }).collect();
        let fq = FramedQuiver::new(Quiver::chain(k), DimVectors::new(d.to_vec(), n))?;
        let layers: Vec<usize> = (0..k).collect();
        let expr = feedforward_expr(&fq.quiver, &layers, kind)?;
        Network::new(fq, IoSpec { inputs: vec![0], outputs: vec![k - 1], exprs: vec![expr] })
    }

    /// Single input and output joined by a shortest path.
    pub fn along_shortest_path(fq: FramedQuiver, input: usize, output: usize, kind: ActivationKind) -> Result<Self, NetworkError> {
        let layers = shortest_path(&fq.quiver, input, output).ok_or_else(|| {
            NetworkError::Expr(format!(
                "no path from `{}` to `{}`",
                fq.quiver.vertex_id(input),
                fq.quiver.vertex_id(output)
            ))
        })?;
        let expr = feedforward_expr(&fq.quiver, &layers, kind)?;
        Network::new(fq, IoSpec { inputs: vec![input], outputs: vec![output], exprs: vec![expr] })
    }

    pub fn input_dim(&self) -> usize {
        self.io.inputs.iter().map(|&i| self.fq.d(i)).sum()
    }

    pub fn output_dim(&self) -> usize {
        self.io.outputs.iter().map(|&j| self.fq.d(j)).sum()
    }

    /// The network with activations removed, computing `L_γ`.
    pub fn linearized(&self) -> Network {
        let io = IoSpec { exprs: self.io.exprs.iter().map(|e| e.strip_activations()).collect(), ..self.io.clone() };
        Network { fq: self.fq.clone(), io }
    }

    /// Representation and metrics at a chart point.
    pub fn state(&self, c: &ChartPoint<f64>) -> Result<(FramedRep<f64>, MetricSet<f64>), NetworkError> {
        let rep = from_chart(&self.fq, c)?;
        let opts = MetricOptions { assume_stable: true, ..MetricOptions::default() };
        let m = vertex_metrics(&self.fq, &rep, &opts)?;
        Ok((rep, m))
    }

    fn input_fibers(&self, rep: &FramedRep<f64>, s: &[f64]) -> Result<Vec<Option<DVector<f64>>>, NetworkError> {
        if s.len() != self.input_dim() {
            return Err(NetworkError::Shape(format!("expected {} input coordinates, got {}", self.input_dim(), s.len())));
        }
        let mut fibers = vec![None; self.fq.num_vertices()];
        let mut off = 0;
        for &i in &self.io.inputs {
            let d = self.fq.d(i);
            let coords = DVector::from_column_slice(&s[off..off + d]);
            fibers[i] = Some(rep.e[i].columns(0, d) * coords);
            off += d;
        }
        Ok(fibers)
    }

    /// Value of the fiber-bundle morphism of one output expression on given input fibers.
    pub fn eval_expr(
        &self,
        expr: &NetworkExpr,
        rep: &FramedRep<f64>,
        metrics: &MetricSet<f64>,
        fibers: &[Option<DVector<f64>>],
    ) -> Result<DVector<f64>, NetworkError> {
        let ctx = Ctx { fq: &self.fq, rep, h: &metrics.h };
        Ok(ctx.forward(expr, fibers)?.0)
    }

    fn forward(
        &self,
        rep: &FramedRep<f64>,
        metrics: &MetricSet<f64>,
        s: &[f64],
    ) -> Result<(Vec<DVector<f64>>, Vec<Trace>), NetworkError> {
        let fibers = self.input_fibers(rep, s)?;
        let ctx = Ctx { fq: &self.fq, rep, h: &metrics.h };
        let mut ws = Vec::new();
        let mut traces = Vec::new();
        for ex in &self.io.exprs {
            let (w, t) = ctx.forward(ex, &fibers)?;
            ws.push(w);
            traces.push(t);
        }
        Ok((ws, traces))
    }

    fn pair_outputs(&self, rep: &FramedRep<f64>, metrics: &MetricSet<f64>, ws: &[DVector<f64>]) -> Result<Vec<f64>, NetworkError> {
        let mut out = Vec::with_capacity(self.output_dim());
        for (&j, w) in self.io.outputs.iter().zip(ws) {
            let h = metrics.h.get(j).ok_or_else(|| NetworkError::MissingMetric(self.fq.quiver.vertex_id(j).into()))?;
            let y = rep.e[j].columns(0, self.fq.d(j)).transpose() * (h * w);
            out.extend(y.iter());
        }
        Ok(out)
    }

    /// `f̃(s)`: output coordinates `e_pᵀ H_j w_j` of the activation-bearing expression.
    pub fn eval_f_tilde(&self, rep: &FramedRep<f64>, metrics: &MetricSet<f64>, s: &[f64]) -> Result<Vec<f64>, NetworkError> {
        let (ws, _) = self.forward(rep, metrics, s)?;
        self.pair_outputs(rep, metrics, &ws)
    }

    /// `L_γ(s)`: as [`Network::eval_f_tilde`] with activations removed.
    pub fn eval_l(&self, rep: &FramedRep<f64>, metrics: &MetricSet<f64>, s: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.linearized().eval_f_tilde(rep, metrics, s)
    }

    fn output_metrics(&self, rep: &FramedRep<f64>, metrics: &MetricSet<f64>, norm: OutputNorm) -> Vec<DMatrix<f64>> {
        self.io
            .outputs
            .iter()
            .map(|&j| match norm {
                OutputNorm::Metric => output_metric(&rep.e[j], &metrics.h[j], self.fq.d(j)),
                OutputNorm::Euclidean => DMatrix::identity(self.fq.d(j), self.fq.d(j)),
            })
            .collect()
    }

    fn check_data(&self, data: &Dataset) -> Result<(), NetworkError> {
        if data.is_empty() {
            return Err(NetworkError::EmptyDataset);
        }
        if data.input_dim() != self.input_dim() || data.output_dim() != self.output_dim() {
            return Err(NetworkError::Data(format!(
                "dataset is {}→{}, network is {}→{}",
                data.input_dim(),
                data.output_dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// `Σ_k w_k ‖y_k − f̃(x_k)‖²` with the chosen output norm.
    pub fn loss(
        &self,
        rep: &FramedRep<f64>,
        metrics: &MetricSet<f64>,
        data: &Dataset,
        norm: OutputNorm,
    ) -> Result<f64, NetworkError> {
        self.check_data(data)?;
        let ms = self.output_metrics(rep, metrics, norm);
        let terms: Vec<f64> = (0..data.len())
            .into_par_iter()
            .map(|k| {
                let y = self.eval_f_tilde(rep, metrics, &data.x[k])?;
                Ok(data.w[k] * self.weighted_sq(&ms, &y, &data.y[k]))
            })
            .collect::<Result<_, NetworkError>>()?;
        Ok(terms.iter().sum())
    }

    fn weighted_sq(&self, ms: &[DMatrix<f64>], y: &[f64], t: &[f64]) -> f64 {
        let mut off = 0;
        let mut acc = 0.0;
        for (&j, m) in self.io.outputs.iter().zip(ms) {
            let d = self.fq.d(j);
            let r = DVector::from_iterator(d, (0..d).map(|p| y[off + p] - t[off + p]));
            acc += r.dot(&(m * &r));
            off += d;
        }
        acc
    }

    /// Loss and its adjoint with respect to `V`, `e` (explicit dependence) and `H`.
    fn loss_adjoint(
        &self,
        rep: &FramedRep<f64>,
        metrics: &MetricSet<f64>,
        data: &Dataset,
        norm: OutputNorm,
    ) -> Result<(f64, RepAdjoint), NetworkError> {
        self.check_data(data)?;
        let ms = self.output_metrics(rep, metrics, norm);
        let ctx = Ctx { fq: &self.fq, rep, h: &metrics.h };
        let parts: Vec<(f64, RepAdjoint)> = (0..data.len())
            .into_par_iter()
            .map(|k| {
                let wk = data.w[k];
                let fibers = self.input_fibers(rep, &data.x[k])?;
                let mut adj = RepAdjoint::zeros(&self.fq);
                let mut fiber_bar = vec![None; self.fq.num_vertices()];
                let mut loss = 0.0;
                let mut off = 0;
                for (o, (&j, ex)) in self.io.outputs.iter().zip(&self.io.exprs).enumerate() {
                    let d = self.fq.d(j);
                    let (w, trace) = ctx.forward(ex, &fibers)?;
                    let h = &metrics.h[j];
                    let ep = rep.e[j].columns(0, d).into_owned();
                    let u = h * &w;
                    let y = ep.transpose() * &u;
                    let r = DVector::from_iterator(d, (0..d).map(|p| y[p] - data.y[k][off + p]));
                    let mr = &ms[o] * &r;
                    loss += wk * r.dot(&mr);
                    let ybar = mr * (2.0 * wk);
                    if norm == OutputNorm::Metric {
                        // Dependence of M = E′ᵀHE′ on E′ and H.
                        let hep = h * &ep;
                        let rr = &r * r.transpose() * wk;
                        let mut eb = adj.e[j].columns_mut(0, d);
                        eb += hep * &rr * 2.0;
                        adj.h[j] += &ep * rr * ep.transpose();
                    }
                    {
                        let mut eb = adj.e[j].columns_mut(0, d);
                        eb += &u * ybar.transpose();
                    }
                    let ubar = &ep * ybar;
                    adj.h[j] += &ubar * w.transpose();
                    let wbar = h * ubar;
                    ctx.backward(ex, &trace, wbar, &mut adj, &mut fiber_bar);
                    off += d;
                }
                let mut off = 0;
                for &i in &self.io.inputs {
                    let d = self.fq.d(i);
                    if let Some(fb) = &fiber_bar[i] {
                        let s = DVector::from_column_slice(&data.x[k][off..off + d]);
                        let mut eb = adj.e[i].columns_mut(0, d);
                        eb += fb * s.transpose();
                    }
                    off += d;
                }
                Ok((loss, adj))
            })
            .collect::<Result<_, NetworkError>>()?;
        let mut total = 0.0;
        let mut adj = RepAdjoint::zeros(&self.fq);
        for (l, a) in &parts {
            total += l;
            adj = adj.add(a);
        }
        Ok((total, adj))
    }

    /// Loss and full adjoint `(V̄, ē)` including the dependence of `H` on the representation.
    ///
    /// `G_i = e_i e_iᵀ + Σ_{a: t → i} V_a G_t V_aᵀ` is differentiated in reverse topological order.
    pub fn loss_gradient_rep(
        &self,
        rep: &FramedRep<f64>,
        metrics: &MetricSet<f64>,
        data: &Dataset,
        norm: OutputNorm,
    ) -> Result<(f64, RepAdjoint), NetworkError> {
        let order = topological_order(&self.fq.quiver).map_err(|_| NetworkError::AnalyticUnsupported)?;
        let (loss, mut adj) = self.loss_adjoint(rep, metrics, data, norm)?;
        let mut gbar: Vec<DMatrix<f64>> =
            (0..self.fq.num_vertices()).map(|i| -(&metrics.h[i] * &adj.h[i] * &metrics.h[i])).collect();
        for &i in order.iter().rev() {
            let sym = &gbar[i] + gbar[i].transpose();
            adj.e[i] += &sym * &rep.e[i];
            for &a in self.fq.quiver.incoming(i) {
                let t = self.fq.quiver.arrow(a).tail;
                adj.v[a] += &sym * &rep.v[a] * &metrics.gram[t];
                let contrib = rep.v[a].transpose() * &gbar[i] * &rep.v[a];
                gbar[t] += contrib;
            }
        }
        Ok((loss, adj))
    }

    /// Loss and gradient in chart coordinates (`W` row-major, then `b` row-major).
    pub fn loss_gradient_chart(
        &self,
        c: &ChartPoint<f64>,
        data: &Dataset,
        norm: OutputNorm,
    ) -> Result<(f64, Vec<f64>), NetworkError> {
        let (rep, m) = self.state(c)?;
        let (loss, adj) = self.loss_gradient_rep(&rep, &m, data, norm)?;
        let mut g = Vec::with_capacity(c.num_params());
        for vb in &adj.v {
            for i in 0..vb.nrows() {
                for j in 0..vb.ncols() {
                    g.push(vb[(i, j)]);
                }
            }
        }
        for (i, eb) in adj.e.iter().enumerate() {
            let d = self.fq.d(i);
            for r in 0..d {
                for col in d..self.fq.n(i) {
                    g.push(eb[(r, col)]);
                }
            }
        }
        Ok((loss, g))
    }

    /// Loss at a chart point.
    pub fn loss_chart(&self, c: &ChartPoint<f64>, data: &Dataset, norm: OutputNorm) -> Result<f64, NetworkError> {
        let (rep, m) = self.state(c)?;
        self.loss(&rep, &m, data, norm)
    }
}

/// `f^U(s) = W₂ σ(W₁ s + b)`.
pub fn eval_f_u(
    w1: &DMatrix<f64>,
    w2: &DMatrix<f64>,
    b: &DVector<f64>,
    sigma: &dyn Fn(&[f64]) -> Vec<f64>,
    s: &[f64],
) -> Result<DVector<f64>, NetworkError> {
    if w1.ncols() != s.len() || w1.nrows() != b.len() || w2.ncols() != b.len() {
        return Err(NetworkError::Shape("W₁, b, W₂ and the input do not compose".into()));
    }
    let z = w1 * DVector::from_column_slice(s) + b;
    let a = sigma(z.as_slice());
    if a.len() != b.len() {
        return Err(NetworkError::Shape("activation changed the dimension".into()));
    }
    Ok(w2 * DVector::from_vec(a))
}

/// First `d` coordinates of the simplex map applied to `(z, 0)`.
pub fn padded_sigma_simplex(z: &[f64]) -> Vec<f64> {
    let mut padded = z.to_vec();
    padded.push(0.0);
    let mut s = sigma_simplex(&padded);
    s.truncate(z.len());
    s
}

/// Weighted samples `(x_k, y_k, w_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub w: Vec<f64>,
}

/// Sampling of a box for the loss integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// Midpoint grid with this many points per axis.
    Grid { per_axis: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Quadrature {
    /// Grid for dimension ≤ 2, seeded Monte Carlo with 4096 samples above.
    pub fn default_for(dim: usize, seed: u64) -> Self {
        if dim <= 2 {
            Quadrature::Grid { per_axis: 64 }
        } else {
            Quadrature::MonteCarlo { samples: 4096, seed }
        }
    }
}

impl Dataset {
    /// Uniform weights `1/N`.
    pub fn from_samples(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self, NetworkError> {
        if x.len() != y.len() {
            return Err(NetworkError::Data("inputs and targets differ in length".into()));
        }
        if x.is_empty() {
            return Err(NetworkError::EmptyDataset);
        }
        let (di, dout) = (x[0].len(), y[0].len());
        if x.iter().any(|r| r.len() != di) || y.iter().any(|r| r.len() != dout) {
            return Err(NetworkError::Data("ragged rows".into()));
        }
        let w = vec![1.0 / x.len() as f64; x.len()];
        Ok(Dataset { x, y, w })
    }

    /// Samples `f` on the box `bounds`, weighting so that the sum approximates `∫_K`.
    pub fn from_function(
        bounds: &[(f64, f64)],
        quad: Quadrature,
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self, NetworkError> {
        let vol: f64 = bounds.iter().map(|(a, b)| b - a).product();
        let x: Vec<Vec<f64>> = match quad {
            Quadrature::Grid { per_axis } => {
                let mut pts = vec![Vec::new()];
                for &(a, b) in bounds {
                    let step = (b - a) / per_axis as f64;
                    pts = pts
                        .into_iter()
                        .flat_map(|p| {
                            (0..per_axis).map(move |k| {
                                let mut q = p.clone();
                                q.push(a + (k as f64 + 0.5) * step);
                                q
                            })
                        })
                        .collect();
                }
                pts
            }
            Quadrature::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..samples).map(|_| bounds.iter().map(|&(a, b)| rng.random_range(a..b)).collect()).collect()
            }
        };
        if x.is_empty() || x[0].is_empty() {
            return Err(NetworkError::EmptyDataset);
        }
        let y: Vec<Vec<f64>> = x.iter().map(|p| f(p)).collect();
        let mut ds = Dataset::from_samples(x, y)?;
        let n = ds.len() as f64;
        ds.w.iter_mut().for_each(|w| *w = vol / n);
        Ok(ds)
    }

    /// CSV with a header row, `d_in` input columns then the target columns.
    pub fn from_csv<R: Read>(reader: R, d_in: usize) -> Result<Self, NetworkError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| NetworkError::Data(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| NetworkError::Data(format!("row {}: bad number `{f}`", line + 1))))
                .collect::<Result<_, _>>()?;
            if vals.len() <= d_in {
                return Err(NetworkError::Data(format!("row {}: expected more than {d_in} columns", line + 1)));
            }
            x.push(vals[..d_in].to_vec());
            y.push(vals[d_in..].to_vec());
        }
        Dataset::from_samples(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.x.first().map_or(0, |r| r.len())
    }

    pub fn output_dim(&self) -> usize {
        self.y.first().map_or(0, |r| r.len())
    }

    /// Subset with weights rescaled to keep the total weight.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let total: f64 = self.w.iter().sum();
        let picked: f64 = idx.iter().map(|&k| self.w[k]).sum();
        let scale = if picked > 0.0 { total / picked } else { 0.0 };
        Dataset {
            x: idx.iter().map(|&k| self.x[k].clone()).collect(),
            y: idx.iter().map(|&k| self.y[k].clone()).collect(),
            w: idx.iter().map(|&k| self.w[k] * scale).collect(),
        }
    }
}
