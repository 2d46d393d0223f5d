//! Topological invariants of framed moduli: q-binomials, Poincaré polynomials, Euler
//! characteristics, dimensions and the chain-quiver sweep.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quiver::{topological_order, DimVectors, FramedQuiver, Quiver, QuiverError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TopologyError {
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error("polynomial division by q^{0} - 1 is not exact")]
    InexactDivision(usize),
    #[error("invalid chain data: {0}")]
    BadChain(String),
}

/// Integer polynomial with coefficients in ascending degree and no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPolynomial::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        IntPolynomial { coeffs: vec![BigInt::one()] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return IntPolynomial::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::new(out)
    }

    /// `self · (q^a − 1)`.
    pub fn mul_q_pow_minus_one(&self, a: usize) -> Self {
        if self.is_zero() {
            return IntPolynomial::zero();
        }
        let n = self.coeffs.len();
        let out = (0..n + a)
            .map(|j| {
                let up = if j >= a { Some(&self.coeffs[j - a]) } else { None };
                let down = self.coeffs.get(j);
                match (up, down) {
                    (Some(u), Some(d)) => u - d,
                    (Some(u), None) => u.clone(),
                    (None, Some(d)) => -d,
                    (None, None) => BigInt::zero(),
                }
            })
            .collect();
        IntPolynomial::new(out)
    }

    /// Exact quotient `self / (q^k − 1)`, `None` if the remainder is nonzero.
    pub fn div_q_pow_minus_one(&self, k: usize) -> Option<Self> {
        assert!(k > 0, "division by q^0 - 1");
        if self.is_zero() {
            return Some(IntPolynomial::zero());
        }
        let n = self.coeffs.len();
        if n <= k {
            return None;
        }
        // From A = B (q^k − 1): A_j = B_{j−k} − B_j, so B_j = B_{j−k} − A_j.
        let m = n - k;
        let mut b: Vec<BigInt> = Vec::with_capacity(m);
        for j in 0..m {
            let prev = if j >= k { b[j - k].clone() } else { BigInt::zero() };
            b.push(prev - &self.coeffs[j]);
        }
        for j in m..n {
            let expect = if j >= k && j - k < m { &b[j - k] } else { return None };
            if &self.coeffs[j] != expect {
                return None;
            }
        }
        Some(IntPolynomial::new(b))
    }

    /// Substitutes `q ↦ q^k`.
    pub fn stretch(&self, k: usize) -> Self {
        if self.is_zero() || k == 1 {
            return self.clone();
        }
        let mut out = vec![BigInt::zero(); (self.coeffs.len() - 1) * k + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            out[j * k] = c.clone();
        }
        IntPolynomial::new(out)
    }

    pub fn eval_at_one(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    pub fn is_palindromic(&self) -> bool {
        let n = self.coeffs.len();
        (0..n / 2).all(|j| self.coeffs[j] == self.coeffs[n - 1 - j])
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| match j {
                0 => c.to_string(),
                1 => format!("{c}q"),
                _ => format!("{c}q^{j}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Gaussian binomial `[n choose d]_q`; zero when `d > n`.
pub fn q_binomial(n: usize, d: usize) -> IntPolynomial {
    if d > n {
        return IntPolynomial::zero();
    }
    let d = d.min(n - d);
    let mut p = IntPolynomial::one();
    for k in 1..=d {
        p = p
            .mul_q_pow_minus_one(n - d + k)
            .div_q_pow_minus_one(k)
            .expect("Gaussian binomial division is exact");
    }
    p
}

/// Small cache that reaches `[n choose d]_q` from a nearby cached entry by ratio steps.
#[derive(Debug, Default)]
pub struct QBinomialCache {
    entries: Vec<((usize, usize), IntPolynomial)>,
    capacity: usize,
}

impl QBinomialCache {
    pub fn new(capacity: usize) -> Self {
        QBinomialCache { entries: Vec::new(), capacity: capacity.max(1) }
    }

    pub fn get(&mut self, n: usize, d: usize) -> Result<IntPolynomial, TopologyError> {
        if d > n {
            return Ok(IntPolynomial::zero());
        }
        let reachable = |&(n0, d0): &(usize, usize)| n0 <= n && d0 <= d && n0 - d0 <= n - d;
        let start = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, (key, _))| reachable(key))
            .min_by_key(|(_, ((n0, _), _))| n - n0)
            .map(|(k, _)| k);
        let (mut cn, mut cd, mut p) = match start {
            Some(k) => {
                let ((n0, d0), p) = self.entries.remove(k);
                (n0, d0, p)
            }
            None => (n - d, 0, IntPolynomial::one()),
        };
        let step = |p: IntPolynomial, up: usize, down: usize| {
            p.mul_q_pow_minus_one(up).div_q_pow_minus_one(down).ok_or(TopologyError::InexactDivision(down))
        };
        // [n, d] -> [n+1, d+1] multiplies by [n+1]/[d+1].
        while cd < d {
            p = step(p, cn + 1, cd + 1)?;
            cn += 1;
            cd += 1;
        }
        // [n, d] -> [n+1, d] multiplies by [n+1]/[n+1−d].
        while cn < n {
            p = step(p, cn + 1, cn + 1 - cd)?;
            cn += 1;
        }
        if self.entries.len() >= self.capacity {
            self.entries.remove(0);
        }
        self.entries.push(((n, d), p.clone()));
        Ok(p)
    }
}

/// Binomial factors `(n_i + Σ_{j→i} d_j, d_i)` of the Poincaré polynomial (in `q²`).
pub fn poincare_factors(fq: &FramedQuiver) -> Result<Vec<(usize, usize)>, TopologyError> {
    topological_order(&fq.quiver)?;
    Ok((0..fq.num_vertices())
        .map(|i| {
            let incoming: usize = fq
                .quiver
                .incoming(i)
                .iter()
                .map(|&a| fq.quiver.arrow(a).tail)
                .filter(|&t| t != i)
                .map(|t| fq.d(t))
                .sum();
            (fq.n(i) + incoming, fq.d(i))
        })
        .collect())
}

/// `∏_i [n_i + Σ_{j→i} d_j choose d_i]_{q²}`.
pub fn poincare_polynomial(fq: &FramedQuiver) -> Result<IntPolynomial, TopologyError> {
    let mut p = IntPolynomial::one();
    for (n, d) in poincare_factors(fq)? {
        p = p.mul(&q_binomial(n, d).stretch(2));
    }
    Ok(p)
}

/// Ordinary binomial coefficient.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= BigUint::from(n - j);
        acc /= BigUint::from(j + 1);
    }
    acc
}

/// Euler characteristic from the product of ordinary binomials.
pub fn euler_characteristic(fq: &FramedQuiver) -> Result<BigUint, TopologyError> {
    Ok(poincare_factors(fq)?.into_iter().map(|(n, d)| binomial(n, d)).product())
}

/// Complex dimension `Σ_i d_i (n_i − d_i + Σ_{j→i, j≠i} d_j)` of the framed moduli.
pub fn dim_moduli(fq: &FramedQuiver) -> Result<u64, TopologyError> {
    Ok(poincare_factors(fq)?.into_iter().map(|(n, d)| (d * (n - d)) as u64).sum())
}

/// Chain families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChainKind {
    /// One arrow `i → i+1`.
    A,
    /// One arrow `i → j` for every `i < j`.
    Aprime,
}

/// The chain quiver on `d.len()` vertices with framing `n = d + 1`.
pub fn chain_quiver(kind: ChainKind, d: &[usize]) -> FramedQuiver {
    let q = match kind {
        ChainKind::A => Quiver::chain(d.len()),
        ChainKind::Aprime => Quiver::complete_chain(d.len()),
    };
    FramedQuiver::new(q, DimVectors::plus_one(d)).expect("dimension lengths match")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainInvariants {
    #[serde(serialize_with = "ser_biguint")]
    pub chi: BigUint,
    pub dim: u64,
}

fn ser_biguint<S: serde::Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Closed forms with `d_{−1} = 0`:
/// `A`: `χ = ∏ C(d_i + d_{i+1} + 1, d_{i+1})`, `D = Σ d_{i+1}(d_i + 1)`;
/// `A′`: `χ = ∏ C(Σ_{j≤i+1} d_j + 1, d_{i+1})`, `D = Σ d_{i+1}(Σ_{j≤i} d_j + 1)`.
pub fn chain_invariants(kind: ChainKind, d: &[usize]) -> Result<ChainInvariants, TopologyError> {
    if d.len() < 2 {
        return Err(TopologyError::BadChain("need at least two vertices (k ≥ 0)".into()));
    }
    let mut chi = BigUint::one();
    let mut dim = 0u64;
    let mut prefix = 0usize;
    let mut prev = 0usize;
    for &di in d {
        match kind {
            ChainKind::A => {
                chi *= binomial(prev + di + 1, di);
                dim += (di * (prev + 1)) as u64;
            }
            ChainKind::Aprime => {
                chi *= binomial(prefix + di + 1, di);
                dim += (di * (prefix + 1)) as u64;
            }
        }
        prefix += di;
        prev = di;
    }
    Ok(ChainInvariants { chi, dim })
}

/// Natural logarithm of a big integer, exact up to the final rounding.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits in u64");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// One point of a chain sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub kind: ChainKind,
    pub m: usize,
    pub d: Vec<usize>,
    pub dim: u64,
    pub log_chi: f64,
    #[serde(serialize_with = "ser_biguint")]
    pub chi: BigUint,
    /// Closed form equals the Poincaré polynomial at `q = 1`.
    pub routes_agree: bool,
    /// Closed-form dimension equals the quiver dimension.
    pub dims_agree: bool,
    /// Every q-binomial factor (hence the product) is palindromic with nonnegative coefficients.
    pub palindromic: bool,
}

/// Parses a template such as `600,m,m,m,10`.
pub fn parse_template(s: &str) -> Result<Vec<Option<usize>>, TopologyError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if t == "m" {
                Ok(None)
            } else {
                t.parse().map(Some).map_err(|_| TopologyError::BadChain(format!("bad entry `{t}`")))
            }
        })
        .collect()
}

/// Instantiates a template at `m`.
pub fn instantiate(template: &[Option<usize>], m: usize) -> Vec<usize> {
    template.iter().map(|x| x.unwrap_or(m)).collect()
}

/// Sweeps `m` over `ms` for one chain kind, computing both routes for every point.
pub fn chain_sweep(
    kind: ChainKind,
    template: &[Option<usize>],
    ms: &[usize],
) -> Result<Vec<SweepPoint>, TopologyError> {
    let mut cache = QBinomialCache::new(4 * template.len().max(1));
    let mut out = Vec::with_capacity(ms.len());
    for &m in ms {
        let d = instantiate(template, m);
        let closed = chain_invariants(kind, &d)?;
        let fq = chain_quiver(kind, &d);
        let factors = poincare_factors(&fq)?;
        let polys: Vec<IntPolynomial> = factors.iter().map(|&(n, k)| cache.get(n, k)).collect::<Result<_, _>>()?;
        let at_one: BigInt = polys.iter().map(|p| p.eval_at_one()).product();
        let palindromic = polys.iter().all(|p| p.is_palindromic() && p.is_nonnegative());
        out.push(SweepPoint {
            kind,
            m,
            log_chi: ln_biguint(&closed.chi),
            routes_agree: at_one == BigInt::from(closed.chi.clone()),
            dims_agree: dim_moduli(&fq)? == closed.dim,
            dim: closed.dim,
            chi: closed.chi,
            d,
            palindromic,
        });
    }
    Ok(out)
}

/// One CSV row: an `A′` point and the `A` point of nearest dimension.
#[derive(Debug, Clone, Serialize)]
pub struct ChiRow {
    #[serde(rename = "D")]
    pub dim: u64,
    #[serde(rename = "logchi_A")]
    pub log_chi_a: f64,
    #[serde(rename = "logchi_Aprime")]
    pub log_chi_aprime: f64,
}

/// Matches each `A′` point whose dimension lies in the `A` range to the nearest `A` point.
pub fn emit_chi_plot(a: &[SweepPoint], aprime: &[SweepPoint]) -> Vec<ChiRow> {
    let lo = a.iter().map(|p| p.dim).min().unwrap_or(0);
    let hi = a.iter().map(|p| p.dim).max().unwrap_or(0);
    aprime
        .iter()
        .filter(|p| p.dim >= lo && p.dim <= hi)
        .filter_map(|p| {
            let near = a.iter().min_by_key(|q| q.dim.abs_diff(p.dim))?;
            Some(ChiRow { dim: p.dim, log_chi_a: near.log_chi, log_chi_aprime: p.log_chi })
        })
        .collect()
}

/// CSV with header `D,logchi_A,logchi_Aprime`.
pub fn chi_rows_to_csv(rows: &[ChiRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    if rows.is_empty() {
        return "D,logchi_A,logchi_Aprime\n".into();
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Raw sweep CSV with one row per point of either kind.
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("kind,m,D,logchi\n");
    for p in points {
        let kind = match p.kind {
            ChainKind::A => "A",
            ChainKind::Aprime => "Aprime",
        };
        out.push_str(&format!("{kind},{},{},{}\n", p.m, p.dim, p.log_chi));
    }
    out
}

/// Both sweeps, run in parallel.
pub fn chain_comparison(
    template: &[Option<usize>],
    ms: &[usize],
) -> Result<(Vec<SweepPoint>, Vec<SweepPoint>), TopologyError> {
    let kinds = [ChainKind::A, ChainKind::Aprime];
    let mut res: Vec<_> = kinds.par_iter().map(|&k| chain_sweep(k, template, ms)).collect();
    let ap = res.pop().expect("two kinds")?;
    let a = res.pop().expect("two kinds")?;
    Ok((a, ap))
}
