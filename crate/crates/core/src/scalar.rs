//! Scalar fields supported by representations and metrics.

use nalgebra::{ComplexField, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

pub use nalgebra::Complex;

/// A real or complex scalar with `f64` real part.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    /// Whether the field is the complex numbers.
    const IS_COMPLEX: bool;

    /// Draws a standard Gaussian entry (unit variance in each real component).
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Builds a scalar from a real number.
    fn real_scalar(x: f64) -> Self {
        Self::from_real(x)
    }

    /// A real basis of the field: `[1]` or `[1, i]`.
    fn units() -> Vec<Self>;

    /// JSON encoding: a number for reals, `[re, im]` for complex.
    fn to_json(self) -> Value;

    /// Inverse of [`Scalar::to_json`].
    fn from_json(v: &Value) -> Option<Self>;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn units() -> Vec<Self> {
        vec![1.0]
    }

    fn to_json(self) -> Value {
        Value::from(self)
    }

    fn from_json(v: &Value) -> Option<Self> {
        v.as_f64()
    }
}

impl Scalar for Complex<f64> {
    const IS_COMPLEX: bool = true;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    fn units() -> Vec<Self> {
        vec![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]
    }

    fn to_json(self) -> Value {
        Value::from(vec![self.re, self.im])
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64().map(|re| Complex::new(re, 0.0)),
            Value::Array(a) if a.len() == 2 => Some(Complex::new(a[0].as_f64()?, a[1].as_f64()?)),
            _ => None,
        }
    }
}

/// Gaussian random matrix.
pub fn gaussian_matrix<S: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<S> {
    let mut m = DMatrix::<S>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = S::gaussian(rng);
        }
    }
    m
}

/// Row-major JSON array of arrays.
pub fn matrix_to_json<S: Scalar>(m: &DMatrix<S>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| m[(i, j)].to_json()).collect()))
            .collect(),
    )
}

/// Parses a row-major matrix with the expected shape.
pub fn matrix_from_json<S: Scalar>(v: &Value, rows: usize, cols: usize) -> Option<DMatrix<S>> {
    let mut m = DMatrix::<S>::zeros(rows, cols);
    if rows == 0 || cols == 0 {
        // `[]` and `[[], ...]` are both accepted for empty blocks.
        return match v {
            Value::Array(_) => Some(m),
            _ => None,
        };
    }
    let r = v.as_array()?;
    if r.len() != rows {
        return None;
    }
    for (i, row) in r.iter().enumerate() {
        let row = row.as_array()?;
        if row.len() != cols {
            return None;
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = S::from_json(x)?;
        }
    }
    Some(m)
}

/// Frobenius inner product `tr(a* b)`.
pub fn frob_inner<S: Scalar>(a: &DMatrix<S>, b: &DMatrix<S>) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conjugate() * *y;
    }
    acc
}
