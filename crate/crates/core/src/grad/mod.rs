//! Differentiation engine for the design path.
//!
//! Every computation between a [`DesignVector`](crate::stack::DesignVector) and
//! the figure of merit is written once, generic over [`Real`]. Running it with
//! `f64` gives the plain evaluation; running it with [`Var`] records a tape that
//! yields the exact gradient by reverse accumulation. Because [`Var`] computes
//! its values with the very same `f64` operations, both runs agree bit for bit.
//!
//! Complex quantities are carried as pairs of reals ([`Cx`]), so the adjoint of
//! a complex operation is simply the adjoint of its real and imaginary parts.

mod adam;
mod check;
mod complex;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use check::{finite_difference_check, FdEntry, FdNorm, FdReport};
pub use complex::Cx;
pub use tape::{Tape, Var};

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error("non-differentiable primitive encountered: {primitive}")]
    NonDifferentiable { primitive: String },
    #[error("non-finite {what} in differentiated computation")]
    NonFinite { what: &'static str },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

/// Scalar type the design path is generic over.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(x: f64) -> Self;
    fn value(&self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn asin(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn recip(self) -> Self;
    /// `1 / (1 + exp(-self))`, saturating to exactly 0 or 1 beyond |x| > 37.
    fn logistic(self) -> Self;

    /// `Σ coeffs[i] * xs[i]`, accumulated left to right from zero.
    fn linear_combination(coeffs: &[f64], xs: &[Self]) -> Self;
    /// `Σ xs[i]`, accumulated left to right from zero.
    fn sum(xs: &[Self]) -> Self;

    /// True when both scalars are the same quantity: equal bits, and for taped
    /// values the same tape node. Used to merge runs of equal samples safely.
    fn identical(&self, other: &Self) -> bool;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `c - self`.
    fn rsub(self, c: f64) -> Self {
        -self + c
    }

    /// `c / self`.
    fn rdiv(self, c: f64) -> Self {
        self.recip() * c
    }
}

/// Logistic value used by both scalar implementations.
#[inline]
pub(crate) fn logistic_f64(x: f64) -> f64 {
    if x > 37.0 {
        1.0
    } else if x < -37.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

impl Real for f64 {
    #[inline]
    fn constant(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn identical(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn asin(self) -> Self {
        f64::asin(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn logistic(self) -> Self {
        logistic_f64(self)
    }
    fn linear_combination(coeffs: &[f64], xs: &[Self]) -> Self {
        debug_assert_eq!(coeffs.len(), xs.len());
        let mut acc = 0.0;
        for (c, x) in coeffs.iter().zip(xs) {
            acc += c * x;
        }
        acc
    }
    fn sum(xs: &[Self]) -> Self {
        let mut acc = 0.0;
        for x in xs {
            acc += x;
        }
        acc
    }
    #[inline]
    fn rsub(self, c: f64) -> Self {
        c - self
    }
    #[inline]
    fn rdiv(self, c: f64) -> Self {
        c / self
    }
}

/// Value and gradient of a scalar function of the design vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentiableScalar {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Evaluates `f` at `point` on a fresh tape and returns its value with the exact gradient.
pub fn evaluate_with_gradient<F, E>(point: &[f64], f: F) -> Result<DifferentiableScalar, E>
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Result<Var<'t>, E>,
    E: From<GradError>,
{
    let tape = Tape::new();
    let inputs = tape.inputs(point);
    let out = f(&tape, &inputs)?;
    if let Some(primitive) = tape.fault() {
        return Err(GradError::NonDifferentiable { primitive }.into());
    }
    let value = out.value();
    if !value.is_finite() {
        return Err(GradError::NonFinite { what: "value" }.into());
    }
    let gradient = tape.gradient(out, &inputs);
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(GradError::NonFinite { what: "gradient" }.into());
    }
    Ok(DifferentiableScalar { value, gradient })
}
