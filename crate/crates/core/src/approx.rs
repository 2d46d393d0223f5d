//! Constructive universal approximation: centered webs, their lifts into the fan of
//! `ℙᵈ`, polytope embeddings into simplices, and the assembled two-layer network.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

use crate::network::{eval_f_u, NetworkError};
use crate::toric::{sigma_infinity, sigma_simplex, Fan, FanLimit, WallTolerance};

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("webs are implemented in dimensions 1 and 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("step {step}: {reason}")]
    InvalidSpec { step: usize, reason: String },
    #[error("step {step}: the new center lies outside the compact chambers")]
    CenterOutsideChambers { step: usize },
    #[error("step {step}: cut is not transverse ({reason})")]
    NonTransverseCut { step: usize, reason: String },
    #[error("lift failed at step {step}: {reason}")]
    LiftFailure { step: usize, reason: String },
    #[error("origin is not interior to the polytope (facet {0})")]
    OriginNotInterior(usize),
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("scale t must be positive, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

const EPS: f64 = 1e-10;

/// One inductive step: cut the outer chamber `chamber` (the one opposite outer ray
/// `chamber`) by the hyperplane through the points at distances `cut` along its adjacent
/// rays, then move the center by `-t` times the direction of ray `chamber`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberSpec {
    pub chamber: usize,
    pub cut: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRay {
    pub base: usize,
    pub dir: Vec<f64>,
}

/// Chambers are numbered with the `n + 1` outer chambers first (outer chamber `j` is the
/// one not adjacent to ray `j`), then the compact chambers in creation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteredWeb {
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
    /// Compact chambers: counter-clockwise polygons for `n = 2`, `[left, right]` for `n = 1`.
    pub compact: Vec<Vec<usize>>,
    pub rays: Vec<OuterRay>,
    /// Boundary of outer chamber `j` between its two rays, counter-clockwise (`n = 2`).
    pub chains: Vec<Vec<usize>>,
    pub centers: Vec<Vec<f64>>,
    pub steps: Vec<ChamberSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WallShape {
    Point(f64),
    Segment(Vec<f64>, Vec<f64>),
    Ray(Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub chambers: (usize, usize),
    pub shape: WallShape,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(a: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + s * y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: &[f64]) -> Vec<f64> {
    let l = norm(a);
    a.iter().map(|x| x / l).collect()
}

fn cross(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn left_normal(d: &[f64]) -> Vec<f64> {
    vec![-d[1], d[0]]
}

fn dist_segment(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let s = (dot(&sub(x, a), &ab) / dot(&ab, &ab)).clamp(0.0, 1.0);
    norm(&sub(x, &axpy(a, s, &ab)))
}

fn dist_ray(x: &[f64], base: &[f64], dir: &[f64]) -> f64 {
    let s = dot(&sub(x, base), dir).max(0.0);
    norm(&sub(x, &axpy(base, s, dir)))
}

impl CenteredWeb {
    /// The web with no compact chambers: the walls of the fan of `ℙⁿ` centered at the origin.
    pub fn base(n: usize) -> Result<Self, ApproxError> {
        let dirs = match n {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => vec![unit(&[1.0, 1.0]), vec![-1.0, 0.0], vec![0.0, -1.0]],
            _ => return Err(ApproxError::UnsupportedDimension(n)),
        };
        let origin = vec![0.0; n];
        Ok(CenteredWeb {
            n,
            vertices: vec![origin.clone()],
            compact: Vec::new(),
            rays: dirs.into_iter().map(|dir| OuterRay { base: 0, dir }).collect(),
            chains: vec![vec![0]; n + 1],
            centers: vec![origin],
            steps: Vec::new(),
        })
    }

    pub fn num_compact(&self) -> usize {
        self.compact.len()
    }

    pub fn num_chambers(&self) -> usize {
        self.n + 1 + self.compact.len()
    }

    /// Target dimension `d = n + N` of the lift.
    pub fn lift_dim(&self) -> usize {
        self.n + self.compact.len()
    }

    pub fn center(&self) -> &[f64] {
        self.centers.last().expect("a web always has a center")
    }

    /// The web after its first `k` steps.
    pub fn prefix(&self, k: usize) -> Result<Self, ApproxError> {
        build_web(self.n, &self.steps[..k.min(self.steps.len())])
    }

    fn step(&mut self, spec: &ChamberSpec, idx: usize) -> Result<(), ApproxError> {
        let n = self.n;
        if spec.chamber > n {
            return Err(ApproxError::InvalidSpec { step: idx, reason: format!("no outer chamber {}", spec.chamber) });
        }
        if spec.cut.len() != n {
            return Err(ApproxError::InvalidSpec { step: idx, reason: format!("expected {n} cut distances") });
        }
        if !spec.t.is_finite() {
            return Err(ApproxError::InvalidSpec { step: idx, reason: "non-finite center shift".into() });
        }
        if let Some(&s) = spec.cut.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(ApproxError::NonTransverseCut { step: idx, reason: format!("cut distance {s} along a ray") });
        }
        let j = spec.chamber;
        let new_center = axpy(self.center(), -spec.t, &self.rays[j].dir);
        if n == 1 {
            let a = (j + 1) % 2;
            let base = self.vertices[self.rays[a].base].clone();
            let v = axpy(&base, spec.cut[0], &self.rays[a].dir);
            let id = self.vertices.len();
            self.vertices.push(v.clone());
            let pair = if v[0] > base[0] { vec![self.rays[a].base, id] } else { vec![id, self.rays[a].base] };
            self.compact.push(pair);
            self.rays[a].base = id;
            self.chains[j] = vec![id];
            let lo = self.vertices.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = self.vertices.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let c = new_center[0];
            if !(c > lo - EPS && c < hi + EPS) || (v[0] - c) * self.rays[a].dir[0] <= EPS {
                return Err(ApproxError::CenterOutsideChambers { step: idx });
            }
            self.centers.push(new_center);
            self.steps.push(spec.clone());
            return Ok(());
        }

        let a = (j + 1) % 3;
        let b = (j + 2) % 3;
        let va = axpy(&self.vertices[self.rays[a].base], spec.cut[0], &self.rays[a].dir);
        let vb = axpy(&self.vertices[self.rays[b].base], spec.cut[1], &self.rays[b].dir);
        let closing = sub(&vb, &va);
        if norm(&closing) < EPS {
            return Err(ApproxError::NonTransverseCut { step: idx, reason: "cut points coincide".into() });
        }
        for &p in &self.chains[j] {
            if cross(&closing, &sub(&self.vertices[p], &va)) <= EPS * norm(&closing) {
                return Err(ApproxError::NonTransverseCut {
                    step: idx,
                    reason: "the cutting line meets the boundary of the chamber".into(),
                });
            }
        }
        let ia = self.vertices.len();
        let ib = ia + 1;
        self.vertices.push(va.clone());
        self.vertices.push(vb.clone());
        let mut poly = vec![ib];
        poly.extend_from_slice(&self.chains[j]);
        poly.push(ia);
        self.compact.push(poly);
        self.chains[j] = vec![ib, ia];
        self.chains[a].push(ib);
        self.chains[b].insert(0, ia);
        if !self.compact.iter().any(|poly| self.in_polygon(poly, &new_center)) {
            return Err(ApproxError::CenterOutsideChambers { step: idx });
        }
        for (r, v, id) in [(a, &va, ia), (b, &vb, ib)] {
            let d = sub(v, &new_center);
            if norm(&d) < EPS {
                return Err(ApproxError::CenterOutsideChambers { step: idx });
            }
            self.rays[r] = OuterRay { base: id, dir: unit(&d) };
        }
        self.centers.push(new_center);
        self.steps.push(spec.clone());
        self.check_convex().map_err(|reason| ApproxError::NonTransverseCut { step: idx, reason })
    }

    fn in_polygon(&self, poly: &[usize], x: &[f64]) -> bool {
        (0..poly.len()).all(|k| {
            let p = &self.vertices[poly[k]];
            let q = &self.vertices[poly[(k + 1) % poly.len()]];
            cross(&sub(q, p), &sub(x, p)) >= -EPS
        })
    }

    fn outer_directions(&self, j: usize) -> Vec<Vec<f64>> {
        let inward: Vec<f64> = self.rays[(j + 2) % 3].dir.iter().map(|x| -x).collect();
        let mut dirs = vec![inward];
        for w in self.chains[j].windows(2) {
            dirs.push(unit(&sub(&self.vertices[w[1]], &self.vertices[w[0]])));
        }
        dirs.push(self.rays[(j + 1) % 3].dir.clone());
        dirs
    }

    fn check_convex(&self) -> Result<(), String> {
        for (k, poly) in self.compact.iter().enumerate() {
            let m = poly.len();
            for i in 0..m {
                let p = &self.vertices[poly[i]];
                let q = &self.vertices[poly[(i + 1) % m]];
                let r = &self.vertices[poly[(i + 2) % m]];
                if cross(&sub(q, p), &sub(r, q)) <= EPS {
                    return Err(format!("compact chamber {k} is not strictly convex"));
                }
            }
        }
        for j in 0..3 {
            let dirs = self.outer_directions(j);
            let mut total = 0.0;
            for w in dirs.windows(2) {
                let turn = cross(&w[0], &w[1]).atan2(dot(&w[0], &w[1]));
                if turn <= EPS {
                    return Err(format!("outer chamber {j} is not convex"));
                }
                total += turn;
            }
            if total >= PI - EPS {
                return Err(format!("outer chamber {j} is not convex"));
            }
        }
        Ok(())
    }

    /// Inward half-spaces `(ν, c)` with `C = {x : ν·x ≥ c}`.
    pub fn chamber_constraints(&self, id: usize) -> Vec<(Vec<f64>, f64)> {
        let n = self.n;
        if n == 1 {
            if id <= n {
                let ray = &self.rays[(id + 1) % 2];
                let b = &self.vertices[ray.base];
                return vec![(ray.dir.clone(), dot(&ray.dir, b))];
            }
            let pair = &self.compact[id - n - 1];
            let (lo, hi) = (self.vertices[pair[0]][0], self.vertices[pair[1]][0]);
            return vec![(vec![1.0], lo), (vec![-1.0], -hi)];
        }
        let mut out = Vec::new();
        let mut edge = |p: &[f64], d: &[f64]| {
            let nu = left_normal(d);
            let c = dot(&nu, p);
            out.push((nu, c));
        };
        if id <= n {
            let j = id;
            let rin = &self.rays[(j + 2) % 3];
            let rout = &self.rays[(j + 1) % 3];
            let inward: Vec<f64> = rin.dir.iter().map(|x| -x).collect();
            edge(&self.vertices[rin.base], &inward);
            for w in self.chains[j].windows(2) {
                edge(&self.vertices[w[0]], &sub(&self.vertices[w[1]], &self.vertices[w[0]]));
            }
            edge(&self.vertices[rout.base], &rout.dir);
        } else {
            let poly = &self.compact[id - n - 1];
            for k in 0..poly.len() {
                let p = &self.vertices[poly[k]];
                let q = &self.vertices[poly[(k + 1) % poly.len()]];
                edge(p, &sub(q, p));
            }
        }
        out
    }

    fn slack(&self, id: usize, x: &[f64]) -> f64 {
        self.chamber_constraints(id)
            .iter()
            .map(|(nu, c)| (dot(nu, x) - c) / norm(nu))
            .fold(f64::INFINITY, f64::min)
    }

    /// The chamber containing `x`; on walls the one with the larger slack wins.
    pub fn chamber_of(&self, x: &[f64]) -> Option<usize> {
        let (best, s) = (0..self.num_chambers())
            .map(|id| (id, self.slack(id, x)))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        (s >= -1e-9).then_some(best)
    }

    /// A point in the interior of chamber `id`.
    pub fn interior_point(&self, id: usize) -> Vec<f64> {
        let n = self.n;
        if id > n {
            let poly = &self.compact[id - n - 1];
            let mut c = vec![0.0; n];
            for &v in poly {
                c = axpy(&c, 1.0 / poly.len() as f64, &self.vertices[v]);
            }
            return c;
        }
        if n == 1 {
            let ray = &self.rays[(id + 1) % 2];
            return axpy(&self.vertices[ray.base], 1.0, &ray.dir);
        }
        let chain = &self.chains[id];
        let mut c = vec![0.0; 2];
        for &v in chain {
            c = axpy(&c, 1.0 / chain.len() as f64, &self.vertices[v]);
        }
        let bis = unit(&axpy(&self.rays[(id + 1) % 3].dir, 1.0, &self.rays[(id + 2) % 3].dir));
        let scale = 1.0 + self.vertices.iter().map(|v| norm(&sub(v, &c))).fold(0.0, f64::max);
        axpy(&c, scale, &bis)
    }

    /// Codimension-one cells with the two chambers they separate.
    pub fn walls(&self) -> Vec<Wall> {
        let n = self.n;
        if n == 1 {
            let mut ids: Vec<usize> = (0..self.num_chambers()).collect();
            ids.sort_by(|&a, &b| self.interior_point(a)[0].total_cmp(&self.interior_point(b)[0]));
            let mut xs: Vec<f64> = self.vertices.iter().map(|v| v[0]).collect();
            xs.sort_by(f64::total_cmp);
            return xs
                .iter()
                .enumerate()
                .map(|(k, &x)| Wall { chambers: (ids[k], ids[k + 1]), shape: WallShape::Point(x) })
                .collect();
        }
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut add = |p: usize, q: usize, c: usize| edges.entry((p.min(q), p.max(q))).or_default().push(c);
        for (k, poly) in self.compact.iter().enumerate() {
            for i in 0..poly.len() {
                add(poly[i], poly[(i + 1) % poly.len()], n + 1 + k);
            }
        }
        for (j, chain) in self.chains.iter().enumerate() {
            for w in chain.windows(2) {
                add(w[0], w[1], j);
            }
        }
        let mut walls: Vec<Wall> = edges
            .into_iter()
            .filter(|(_, cs)| cs.len() == 2)
            .map(|((p, q), cs)| Wall {
                chambers: (cs[0], cs[1]),
                shape: WallShape::Segment(self.vertices[p].clone(), self.vertices[q].clone()),
            })
            .collect();
        for (k, ray) in self.rays.iter().enumerate() {
            walls.push(Wall {
                chambers: ((k + 1) % 3, (k + 2) % 3),
                shape: WallShape::Ray(self.vertices[ray.base].clone(), ray.dir.clone()),
            });
        }
        walls
    }

    /// Distance from `x` to the union of the walls.
    pub fn wall_distance(&self, x: &[f64]) -> f64 {
        self.walls()
            .iter()
            .map(|w| match &w.shape {
                WallShape::Point(p) => (x[0] - p).abs(),
                WallShape::Segment(a, b) => dist_segment(x, a, b),
                WallShape::Ray(b, d) => dist_ray(x, b, d),
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Every web vertex meets exactly three edges.
    pub fn check_trivalent(&self) -> Result<(), String> {
        if self.n == 1 {
            return Ok(());
        }
        let mut degree = vec![0usize; self.vertices.len()];
        let mut seen = std::collections::BTreeSet::new();
        let polys = self.compact.iter().map(|p| (p, true)).chain(self.chains.iter().map(|c| (c, false)));
        for (cells, closed) in polys {
            let m = cells.len();
            let count = if closed { m } else { m.saturating_sub(1) };
            for i in 0..count {
                let (p, q) = (cells[i], cells[(i + 1) % m]);
                if seen.insert((p.min(q), p.max(q))) {
                    degree[p] += 1;
                    degree[q] += 1;
                }
            }
        }
        for ray in &self.rays {
            degree[ray.base] += 1;
        }
        match degree.iter().position(|&d| d != 3) {
            Some(v) => Err(format!("vertex {v} has degree {}", degree[v])),
            None => Ok(()),
        }
    }

    /// Axis-aligned box around the vertices and centers, padded by its own extent.
    pub fn bounding_box(&self) -> BoxDomain {
        let n = self.n;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in self.vertices.iter().chain(&self.centers) {
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let pad = (0..n).map(|i| hi[i] - lo[i]).fold(1.0, f64::max);
        BoxDomain { lo: lo.iter().map(|x| x - pad).collect(), hi: hi.iter().map(|x| x + pad).collect() }
    }
}

/// Runs the inductive construction from the fan of `ℙⁿ`.
pub fn build_web(n: usize, specs: &[ChamberSpec]) -> Result<CenteredWeb, ApproxError> {
    let mut web = CenteredWeb::base(n)?;
    for (k, spec) in specs.iter().enumerate() {
        web.step(spec, k + 1)?;
    }
    web.check_trivalent().map_err(|reason| ApproxError::NonTransverseCut { step: specs.len(), reason })?;
    Ok(web)
}

/// A 1-d web whose compact chambers are `[x_k, x_{k+1}]`, centers at the chamber midpoints.
pub fn web_from_breakpoints(xs: &[f64]) -> Result<CenteredWeb, ApproxError> {
    if xs.is_empty() || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ApproxError::InvalidDomain("breakpoints must be strictly increasing".into()));
    }
    let mut specs = Vec::new();
    let mut center = xs[0];
    for w in xs.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        specs.push(ChamberSpec { chamber: 1, cut: vec![w[1] - w[0]], t: mid - center });
        center = mid;
    }
    let mut web = build_web(1, &specs)?;
    if xs[0] != 0.0 {
        for v in web.vertices.iter_mut().chain(web.centers.iter_mut()) {
            v[0] += xs[0];
        }
    }
    Ok(web)
}

/// Web description accepted by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WebSpec {
    Breakpoints { breakpoints: Vec<f64> },
    Steps { n: usize, steps: Vec<ChamberSpec> },
}

impl WebSpec {
    pub fn build(&self) -> Result<CenteredWeb, ApproxError> {
        match self {
            WebSpec::Breakpoints { breakpoints } => web_from_breakpoints(breakpoints),
            WebSpec::Steps { n, steps } => build_web(*n, steps),
        }
    }
}

/// `x ↦ A x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineEmbedding {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineEmbedding {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x) + &self.offset).as_slice().to_vec()
    }

    pub fn rank(&self) -> usize {
        self.matrix.clone().svd(false, false).rank(1e-10 * self.matrix.norm().max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WebLift {
    pub embedding: AffineEmbedding,
    /// Fraction of off-wall grid points whose fan cone matches their chamber.
    pub consistency: f64,
    pub checked: usize,
}

/// Minimum-norm `y` with `a_k·y ≥ 1` for all `k` (Hildreth's method).
fn min_norm_feasible(rows: &[DVector<f64>], dim: usize) -> Option<DVector<f64>> {
    let mut y = DVector::zeros(dim);
    let mut lambda = vec![0.0; rows.len()];
    let sq: Vec<f64> = rows.iter().map(|a| a.norm_squared()).collect();
    if sq.iter().any(|&s| s < 1e-300) {
        return None;
    }
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for (k, a) in rows.iter().enumerate() {
            let delta = (1.0 - a.dot(&y)) / sq[k];
            let next = (lambda[k] + delta).max(0.0);
            let step = next - lambda[k];
            if step != 0.0 {
                y.axpy(step, a, 1.0);
                lambda[k] = next;
                change = change.max(step.abs() * sq[k].sqrt());
            }
        }
        if change < 1e-13 {
            break;
        }
    }
    rows.iter().all(|a| a.dot(&y) >= 1.0 - 1e-6).then_some(y)
}

fn null_space(e: &DMatrix<f64>) -> DMatrix<f64> {
    let m = e.transpose() * e;
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let cols: Vec<DVector<f64>> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] <= 1e-11 * top)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(e.ncols(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Affine heights `F_C` (gradient, constant), chamber 0 fixed at zero.
fn heights(web: &CenteredWeb) -> Result<Vec<(Vec<f64>, f64)>, String> {
    let n = web.n;
    let count = web.num_chambers();
    if n == 1 {
        let mut ids: Vec<usize> = (0..count).collect();
        ids.sort_by(|&a, &b| web.interior_point(a)[0].total_cmp(&web.interior_point(b)[0]));
        let mut xs: Vec<f64> = web.vertices.iter().map(|v| v[0]).collect();
        xs.sort_by(f64::total_cmp);
        let mut f = vec![(vec![0.0], 0.0); count];
        let mut c = 0.0;
        for (k, &id) in ids.iter().enumerate() {
            if k > 0 {
                c -= xs[k - 1];
            }
            f[id] = (vec![k as f64], c);
        }
        let (g0, c0) = f[0].clone();
        return Ok(f.into_iter().map(|(g, c)| (vec![g[0] - g0[0]], c - c0)).collect());
    }
    let unknowns = 3 * (count - 1);
    let coeff = |id: usize, p: &[f64], w: f64, row: &mut DVector<f64>, sign: f64| {
        if id > 0 {
            let o = 3 * (id - 1);
            row[o] += sign * p[0];
            row[o + 1] += sign * p[1];
            row[o + 2] += sign * w;
        }
    };
    let walls = web.walls();
    let mut eq_rows = Vec::new();
    let mut ineq = Vec::new();
    for wall in &walls {
        let (c1, c2) = wall.chambers;
        let (p, d) = match &wall.shape {
            WallShape::Segment(a, b) => (a.clone(), sub(b, a)),
            WallShape::Ray(b, d) => (b.clone(), d.clone()),
            WallShape::Point(_) => unreachable!("point walls only occur for n = 1"),
        };
        for (q, w) in [(&p, 1.0), (&d, 0.0)] {
            let mut row = DVector::zeros(unknowns);
            coeff(c1, q, w, &mut row, 1.0);
            coeff(c2, q, w, &mut row, -1.0);
            eq_rows.push(row.transpose());
        }
        for (hi, lo) in [(c1, c2), (c2, c1)] {
            let q = web.interior_point(hi);
            let mut row = DVector::zeros(unknowns);
            coeff(hi, &q, 1.0, &mut row, 1.0);
            coeff(lo, &q, 1.0, &mut row, -1.0);
            ineq.push(row);
        }
    }
    let e = DMatrix::from_rows(&eq_rows);
    let z = null_space(&e);
    if z.ncols() == 0 {
        return Err("no continuous piecewise-affine height".into());
    }
    let reduced: Vec<DVector<f64>> = ineq.iter().map(|a| z.transpose() * a).collect();
    let y = min_norm_feasible(&reduced, z.ncols()).ok_or("no convex height function")?;
    let x = z * y;
    let mut f = vec![(vec![0.0, 0.0], 0.0)];
    for id in 1..count {
        let o = 3 * (id - 1);
        f.push((vec![x[o], x[o + 1]], x[o + 2]));
    }
    Ok(f)
}

fn fan_label(p: &FanLimit) -> Option<usize> {
    match p {
        FanLimit::Point(p) => {
            let (k, m) = p.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            if m > 0.75 {
                Some(k + 1)
            } else if p.iter().all(|v| v.abs() < 0.25) {
                Some(0)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Grid check that `L⁻¹` of the maximal cones of `Σ_{ℙᵈ}` reproduces the chambers.
/// Points within `δ = 10⁻³·diam` of a wall are skipped.
pub fn verify_lift(web: &CenteredWeb, emb: &AffineEmbedding) -> (f64, usize) {
    let bbox = web.bounding_box();
    let delta = 1e-3 * bbox.diameter();
    let per_axis = if web.n == 1 { 10_000 } else { 100 };
    let fan = Fan::Projective { dim: emb.offset.len() };
    let points = bbox.grid(per_axis);
    let (good, total) = points
        .par_iter()
        .filter(|x| web.wall_distance(x) >= delta)
        .map(|x| {
            let ok = web.chamber_of(x) == fan_label(&sigma_infinity(&fan, &emb.apply(x), WallTolerance::default()));
            (ok as usize, 1usize)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    ((good as f64) / (total.max(1) as f64), total)
}

fn lift_once(web: &CenteredWeb) -> Result<WebLift, String> {
    let f = heights(web)?;
    let n = web.n;
    let walls = web.walls();
    let bend = walls
        .iter()
        .map(|w| norm(&sub(&f[w.chambers.0].0, &f[w.chambers.1].0)))
        .fold(f64::INFINITY, f64::min);
    if !(bend > 1e-12) {
        return Err("degenerate wall bend".into());
    }
    let d = web.lift_dim();
    let mut matrix = DMatrix::zeros(d, n);
    let mut offset = DVector::zeros(d);
    for i in 0..d {
        let (g, c) = &f[i + 1];
        for k in 0..n {
            matrix[(i, k)] = g[k] / bend;
        }
        offset[i] = c / bend;
    }
    let embedding = AffineEmbedding { matrix, offset };
    let (consistency, checked) = verify_lift(web, &embedding);
    if consistency < 0.999 {
        return Err(format!("grid consistency {consistency:.5} below 0.999"));
    }
    Ok(WebLift { embedding, consistency, checked })
}

/// Affine `L: ℝⁿ → ℝ^{n+N}` whose pullback of the fan of `ℙ^{n+N}` is the web, built one
/// compact chamber at a time. Chamber `i ≥ 1` maps to the cone with limit point `εᵢ` and
/// chamber 0 to the cone at the origin; the smallest bend across a wall is normalized to 1.
pub fn lift_web(web: &CenteredWeb) -> Result<WebLift, ApproxError> {
    let mut last = None;
    for k in 0..=web.steps.len() {
        let sub_web = web.prefix(k)?;
        last = Some(lift_once(&sub_web).map_err(|reason| ApproxError::LiftFailure { step: k, reason })?);
    }
    Ok(last.expect("at least the base web is lifted"))
}

/// Axis-aligned box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ApproxError> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(ApproxError::InvalidDomain("need lo < hi in every coordinate".into()));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        norm(&sub(&self.hi, &self.lo))
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| v.clamp(self.lo[i], self.hi[i])).collect()
    }

    /// Midpoints of a regular grid with `per_axis` cells per coordinate.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut k| {
                (0..n)
                    .map(|i| {
                        let idx = k % per_axis;
                        k /= per_axis;
                        self.lo[i] + (idx as f64 + 0.5) * (self.hi[i] - self.lo[i]) / per_axis as f64
                    })
                    .collect()
            })
            .collect()
    }
}

/// Radical inverse of `k` in `base`.
fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while k > 0 {
        out += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    out
}

fn halton(k: usize, dim: usize) -> Vec<f64> {
    const BASES: [usize; 2] = [2, 3];
    (0..dim).map(|i| radical_inverse(k + 1, BASES[i])).collect()
}

pub const CHAMBER_SAMPLES: usize = 256;

/// `s = Σ r_C δ_C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    pub values: Vec<f64>,
    /// `max |f − r_C|` over the chamber samples (0 for chambers missing `K`).
    pub sup_deviation: Vec<f64>,
    pub samples: Vec<usize>,
}

impl StepFunction {
    pub fn eval(&self, web: &CenteredWeb, x: &[f64]) -> f64 {
        web.chamber_of(x).map_or(0.0, |c| self.values[c])
    }
}

fn chamber_box(web: &CenteredWeb, id: usize, k: &BoxDomain) -> Option<BoxDomain> {
    let n = web.n;
    let (mut lo, mut hi) = (k.lo.clone(), k.hi.clone());
    if id > n {
        let pts: Vec<&Vec<f64>> = web.compact[id - n - 1].iter().map(|&v| &web.vertices[v]).collect();
        for i in 0..n {
            lo[i] = lo[i].max(pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min));
            hi[i] = hi[i].min(pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max));
        }
    } else if n == 1 {
        let ray = &web.rays[(id + 1) % 2];
        let b = web.vertices[ray.base][0];
        if ray.dir[0] > 0.0 {
            lo[0] = lo[0].max(b);
        } else {
            hi[0] = hi[0].min(b);
        }
    }
    (0..n).all(|i| hi[i] > lo[i]).then_some(BoxDomain { lo, hi })
}

/// Chamber means of `f` over `CHAMBER_SAMPLES` quasi-random points of `C ∩ K`. Chambers
/// that miss `K` take the value of `f` at the point of `K` nearest their interior point.
pub fn step_function_fit(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: &BoxDomain,
    web: &CenteredWeb,
) -> Result<StepFunction, ApproxError> {
    if k.dim() != web.n {
        return Err(ApproxError::InvalidDomain(format!("domain has dimension {}, web {}", k.dim(), web.n)));
    }
    let fits: Vec<(f64, f64, usize)> = (0..web.num_chambers())
        .into_par_iter()
        .map(|id| {
            let mut vals = Vec::with_capacity(CHAMBER_SAMPLES);
            if let Some(b) = chamber_box(web, id, k) {
                let mut idx = 0;
                while vals.len() < CHAMBER_SAMPLES && idx < CHAMBER_SAMPLES * 4096 {
                    let u = halton(idx, web.n);
                    idx += 1;
                    let x: Vec<f64> = (0..web.n).map(|i| b.lo[i] + u[i] * (b.hi[i] - b.lo[i])).collect();
                    if web.slack(id, &x) > 0.0 {
                        vals.push(f(&x));
                    }
                }
            }
            if vals.is_empty() {
                return (f(&k.clamp(&web.interior_point(id))), 0.0, 0);
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let dev = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            (mean, dev, vals.len())
        })
        .collect();
    Ok(StepFunction {
        values: fits.iter().map(|v| v.0).collect(),
        sup_deviation: fits.iter().map(|v| v.1).collect(),
        samples: fits.iter().map(|v| v.2).collect(),
    })
}

/// Quadrature cells per axis for `L²(K)` errors.
pub fn quadrature_per_axis(dim: usize) -> usize {
    if dim == 1 {
        4096
    } else {
        200
    }
}

/// `‖g − f‖_{L²(K)}` by the midpoint rule.
pub fn l2_distance(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: &BoxDomain,
) -> f64 {
    let pts = k.grid(quadrature_per_axis(k.dim()));
    let cell = k.volume() / pts.len() as f64;
    let sq: Vec<f64> = pts.par_iter().map(|x| (f(x) - g(x)).powi(2)).collect();
    (sq.iter().sum::<f64>() * cell).sqrt()
}

/// Assembled network `x ↦ W₂ σ(W₁ x + b) + r₀` and its measured error.
#[derive(Debug, Clone, PartialEq)]
pub struct UatResult {
    pub t: f64,
    pub w1: DMatrix<f64>,
    pub b: DVector<f64>,
    pub w2: DMatrix<f64>,
    /// `W₂(0) = r₀`.
    pub w2_offset: f64,
    pub l2_error: f64,
    pub f_norm: f64,
    pub step_error: f64,
    pub tail_error: f64,
    pub wall_error: f64,
    pub wall_margin: f64,
    /// `max |W₂(εᵢ) − rᵢ|` and `|W₂(0) − r₀|`.
    pub interpolation_residual: f64,
}

impl UatResult {
    pub fn relative_error(&self) -> f64 {
        self.l2_error / self.f_norm
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ApproxError> {
        let y = eval_f_u(&self.w1, &self.w2, &self.b, &|z: &[f64]| sigma_simplex(z), x)?;
        Ok(y[0] + self.w2_offset)
    }
}

/// `W₁ = tL`, `b = t·L(0)`, `W₂` the affine map with `εᵢ ↦ r_{Cᵢ}` and `0 ↦ r_{C₀}`.
/// The error is split as `‖f − s‖ + ‖g − s‖_{K∖U} + ‖g − s‖_U` with `U` the
/// `δ`-neighbourhood of the walls.
pub fn constructive_uat(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: &BoxDomain,
    web: &CenteredWeb,
    lift: &WebLift,
    t: f64,
) -> Result<UatResult, ApproxError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ApproxError::InvalidScale(t));
    }
    let step = step_function_fit(f, k, web)?;
    let d = web.lift_dim();
    let r0 = step.values[0];
    let w2 = DMatrix::from_fn(1, d, |_, i| step.values[i + 1] - r0);
    let mut residual = 0.0f64;
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        residual = residual.max(((&w2 * e)[0] + r0 - step.values[i + 1]).abs());
    }
    let w1 = &lift.embedding.matrix * t;
    let b = &lift.embedding.offset * t;
    let mut out = UatResult {
        t,
        w1,
        b,
        w2,
        w2_offset: r0,
        l2_error: 0.0,
        f_norm: 0.0,
        step_error: 0.0,
        tail_error: 0.0,
        wall_error: 0.0,
        wall_margin: 1e-3 * k.diameter(),
        interpolation_residual: residual,
    };
    let pts = k.grid(quadrature_per_axis(k.dim()));
    let cell = k.volume() / pts.len() as f64;
    let margin = out.wall_margin;
    let terms: Vec<[f64; 5]> = pts
        .par_iter()
        .map(|x| {
            let g = out.eval(x).unwrap_or(f64::NAN);
            let fx = f(x);
            let s = step.eval(web, x);
            let near = web.wall_distance(x) < margin;
            let gs = (g - s).powi(2);
            [(g - fx).powi(2), fx * fx, (fx - s).powi(2), if near { 0.0 } else { gs }, if near { gs } else { 0.0 }]
        })
        .collect();
    let mut acc = [0.0; 5];
    for t in &terms {
        for i in 0..5 {
            acc[i] += t[i];
        }
    }
    let [e, fnorm, se, te, we] = acc.map(|v| (v * cell).sqrt());
    out.l2_error = e;
    out.f_norm = fnorm;
    out.step_error = se;
    out.tail_error = te;
    out.wall_error = we;
    if !out.l2_error.is_finite() {
        return Err(ApproxError::LiftFailure { step: web.steps.len(), reason: "non-finite network output".into() });
    }
    Ok(out)
}

/// [`constructive_uat`] over several scales, in input order.
pub fn uat_sweep(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: &BoxDomain,
    web: &CenteredWeb,
    ts: &[f64],
) -> Result<Vec<UatResult>, ApproxError> {
    let lift = lift_web(web)?;
    ts.par_iter().map(|&t| constructive_uat(f, k, web, &lift, t)).collect()
}

/// `P = {x : vⱼ·x ≥ cⱼ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub facets: Vec<(Vec<f64>, f64)>,
}

impl Polytope {
    /// Regular `m`-gon with inradius `r` centered at the origin.
    pub fn regular_polygon(m: usize, r: f64) -> Self {
        let facets = (0..m)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / m as f64;
                (vec![-a.cos(), -a.sin()], -r)
            })
            .collect();
        Polytope { facets }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|(v, c)| dot(v, x) >= c - tol)
    }
}

/// `L` with `L(P) = S ∩ L(ℝⁿ)` for the simplex `S = {y : yᵢ ≤ 1, β·y ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexEmbedding {
    pub embedding: AffineEmbedding,
    /// Facet `order[i]` of `P` maps to facet `i` of `S`.
    pub order: Vec<usize>,
    pub beta: Vec<f64>,
}

impl SimplexEmbedding {
    /// Values of the `m` facet functionals of `S` at `y` (each `≤ 1` inside).
    pub fn facet_values(&self, y: &[f64]) -> Vec<f64> {
        let mut v = y.to_vec();
        v.push(dot(&self.beta, y));
        v
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.facet_values(y).iter().all(|&v| v <= 1.0 + tol)
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    m.clone().svd(false, false).rank(1e-10 * m.norm().max(1.0))
}

/// Embeds a polytope with the origin in its interior into a simplex of dimension `m − 1`.
pub fn polytope_to_simplex(p: &Polytope) -> Result<SimplexEmbedding, ApproxError> {
    let m = p.facets.len();
    let n = p.facets.first().map_or(0, |f| f.0.len());
    if n == 0 || p.facets.iter().any(|f| f.0.len() != n) {
        return Err(ApproxError::InvalidPolytope("facet normals must share a positive dimension".into()));
    }
    if m < n + 1 {
        return Err(ApproxError::InvalidPolytope(format!("{m} facets cannot bound a polytope in dimension {n}")));
    }
    if let Some(j) = p.facets.iter().position(|(_, c)| !(*c < 0.0)) {
        return Err(ApproxError::OriginNotInterior(j));
    }
    let nu: Vec<Vec<f64>> = p.facets.iter().map(|(v, c)| v.iter().map(|x| x / c).collect()).collect();
    let nmat = DMatrix::from_fn(n, m, |i, j| nu[j][i]);
    if rank(&nmat) < n {
        return Err(ApproxError::InvalidPolytope("facet normals do not span".into()));
    }
    let z = null_space(&nmat);
    if z.ncols() == 0 {
        return Err(ApproxError::InvalidPolytope("unbounded".into()));
    }
    let rows: Vec<DVector<f64>> = (0..m).map(|j| z.row(j).transpose()).collect();
    let y = min_norm_feasible(&rows, z.ncols()).ok_or(ApproxError::InvalidPolytope("unbounded".into()))?;
    let lambda = z * y;
    let last = (0..m)
        .rev()
        .find(|&l| {
            let rest = DMatrix::from_fn(n, m - 1, |i, j| nu[if j < l { j } else { j + 1 }][i]);
            rank(&rest) == n
        })
        .ok_or(ApproxError::InvalidPolytope("facet normals do not span".into()))?;
    let mut order: Vec<usize> = (0..m).filter(|&j| j != last).collect();
    order.push(last);
    let matrix = DMatrix::from_fn(m - 1, n, |i, k| nu[order[i]][k]);
    let beta = (0..m - 1).map(|i| -lambda[order[i]] / lambda[last]).collect();
    Ok(SimplexEmbedding { embedding: AffineEmbedding { matrix, offset: DVector::zeros(m - 1) }, order, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_web() -> CenteredWeb {
        build_web(
            2,
            &[
                ChamberSpec { chamber: 0, cut: vec![2.0, 2.0], t: 0.6 },
                ChamberSpec { chamber: 1, cut: vec![1.5, 1.5], t: 0.5 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn base_web_is_projective_fan() {
        for n in [1, 2] {
            let web = build_web(n, &[]).unwrap();
            assert_eq!(web.rays.len(), n + 1);
            let lift = lift_web(&web).unwrap();
            assert_eq!(lift.embedding.matrix.nrows(), n);
            assert_eq!(lift.embedding.rank(), n);
            assert!(lift.consistency >= 0.999);
        }
        let web = build_web(1, &[]).unwrap();
        assert_eq!(web.chamber_of(&[-1.0]), Some(0));
        assert_eq!(web.chamber_of(&[1.0]), Some(1));
    }

    #[test]
    fn one_chamber_segment() {
        let web = build_web(1, &[ChamberSpec { chamber: 1, cut: vec![2.0], t: 1.0 }]).unwrap();
        assert_eq!(web.num_compact(), 1);
        assert_eq!(web.center(), &[1.0]);
        let lift = lift_web(&web).unwrap();
        assert_eq!(lift.embedding.matrix.nrows(), 2);
        assert!(lift.checked > 9000 && lift.consistency >= 0.999);
        let err = build_web(1, &[ChamberSpec { chamber: 1, cut: vec![2.0], t: 3.0 }]).unwrap_err();
        assert!(matches!(err, ApproxError::CenterOutsideChambers { step: 1 }));
    }

    #[test]
    fn two_dim_web_combinatorics() {
        let web = fig_web();
        assert_eq!(web.num_compact(), 2);
        assert_eq!(web.rays.len(), 3);
        assert_eq!(web.num_chambers(), 5);
        assert_eq!(web.vertices.len(), 5);
        web.check_trivalent().unwrap();
        let segments = web.walls().iter().filter(|w| matches!(w.shape, WallShape::Segment(..))).count();
        assert_eq!(2 * segments + web.rays.len(), 3 * web.vertices.len());
        let lift = lift_web(&web).unwrap();
        assert_eq!(lift.embedding.matrix.shape(), (4, 2));
        assert!(lift.consistency >= 0.999, "{}", lift.consistency);
    }

    #[test]
    fn bad_cuts_and_centers() {
        let err = build_web(2, &[ChamberSpec { chamber: 0, cut: vec![1.0, 0.0], t: 0.1 }]).unwrap_err();
        assert!(matches!(err, ApproxError::NonTransverseCut { .. }));
        let err = build_web(2, &[ChamberSpec { chamber: 0, cut: vec![1.0, 1.0], t: 5.0 }]).unwrap_err();
        assert!(matches!(err, ApproxError::CenterOutsideChambers { step: 1 }));
        assert!(matches!(build_web(3, &[]), Err(ApproxError::UnsupportedDimension(3))));
    }

    #[test]
    fn breakpoint_web_chambers() {
        let web = web_from_breakpoints(&[0.0, 4.0, 8.0, 12.0]).unwrap();
        assert_eq!(web.num_compact(), 3);
        assert_eq!(web.chamber_of(&[2.0]), Some(2));
        assert_eq!(web.chamber_of(&[6.0]), Some(3));
        assert_eq!(web.chamber_of(&[13.0]), Some(1));
        assert_eq!(web.chamber_of(&[-1.0]), Some(0));
        let lift = lift_web(&web).unwrap();
        assert!(lift.consistency >= 0.999);
    }

    #[test]
    fn step_fit_linear_target() {
        let web = web_from_breakpoints(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let k = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let s = step_function_fit(&|x: &[f64]| x[0], &k, &web).unwrap();
        for c in 0..4 {
            let mid = 0.125 + 0.25 * c as f64;
            assert!((s.values[2 + c] - mid).abs() < 2e-3);
            assert!(s.sup_deviation[2 + c] <= 0.125 + 1e-12);
        }
    }

    #[test]
    fn constant_target_is_exact() {
        let web = web_from_breakpoints(&[0.0, 1.0, 2.0]).unwrap();
        let k = BoxDomain::new(vec![0.0], vec![2.0]).unwrap();
        let out = uat_sweep(&|_: &[f64]| 3.0, &k, &web, &[1.0, 4.0]).unwrap();
        for r in out {
            assert!(r.l2_error < 1e-9 && r.interpolation_residual <= 1e-10);
        }
    }

    #[test]
    fn polytopes_embed_in_simplices() {
        let square = Polytope::regular_polygon(4, 0.5);
        let hex = Polytope::regular_polygon(6, 1.0);
        let tri = Polytope::regular_polygon(3, 1.0);
        for p in [square, hex, tri] {
            let m = p.facets.len();
            let s = polytope_to_simplex(&p).unwrap();
            assert_eq!(s.embedding.matrix.nrows(), m - 1);
            assert_eq!(s.facet_values(&vec![0.0; m - 1]).len(), m);
            for k in 0..200 {
                let a = 2.0 * PI * k as f64 / 200.0;
                let dir = [a.cos(), a.sin()];
                let rmax = p.facets.iter().map(|(v, c)| c / dot(v, &dir)).filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
                let on = [rmax * dir[0], rmax * dir[1]];
                let vals = s.facet_values(&s.embedding.apply(&on));
                assert!(vals.iter().all(|&v| v <= 1.0 + 1e-9));
                assert!(vals.iter().any(|&v| (v - 1.0).abs() < 1e-9));
                let out = [1.05 * on[0], 1.05 * on[1]];
                assert!(!s.contains(&s.embedding.apply(&out), 1e-9));
            }
        }
        let bad = Polytope { facets: vec![(vec![1.0, 0.0], 0.5), (vec![0.0, 1.0], -1.0), (vec![-1.0, -1.0], -1.0)] };
        assert!(matches!(polytope_to_simplex(&bad), Err(ApproxError::OriginNotInterior(0))));
    }
}
