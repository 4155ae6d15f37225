use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::Real;

/// Complex number over a [`Real`] scalar, differentiated as two independent reals.
#[derive(Debug, Clone, Copy)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Cx { re, im }
    }

    pub fn real(re: T) -> Self {
        Cx { re, im: T::zero() }
    }

    pub fn constant(re: f64, im: f64) -> Self {
        Cx { re: T::constant(re), im: T::constant(im) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Cx { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, k: T) -> Self {
        Cx { re: self.re * k, im: self.im * k }
    }

    pub fn scale_f64(self, k: f64) -> Self {
        Cx { re: self.re * k, im: self.im * k }
    }

    /// `exp(i * self)`.
    pub fn exp_i(self) -> Self {
        let damp = (-self.im).exp();
        Cx { re: self.re.cos() * damp, im: self.re.sin() * damp }
    }

    /// Principal square root of a real argument: real for `x >= 0`, positive imaginary otherwise.
    pub fn sqrt_of_real(x: T) -> Self {
        if x.value() >= 0.0 {
            Cx::real(x.sqrt())
        } else {
            Cx { re: T::zero(), im: (-x).sqrt() }
        }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl<T: Real> Add for Cx<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Cx { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<T: Real> Sub for Cx<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Cx { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<T: Real> Mul for Cx<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Cx { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl<T: Real> Div for Cx<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        let n = self * o.conj();
        Cx { re: n.re / d, im: n.im / d }
    }
}

impl<T: Real> Neg for Cx<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Cx { re: -self.re, im: -self.im }
    }
}

impl<T: Real> Add<f64> for Cx<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Cx { re: self.re + o, im: self.im }
    }
}
