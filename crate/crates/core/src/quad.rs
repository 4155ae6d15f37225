//! Quadrature on uniform grids.

use crate::grad::Real;

/// Trapezoidal rule over uniformly spaced samples.
pub fn trapz<T: Real>(samples: &[T], h: f64) -> T {
    match samples.len() {
        0 => T::zero(),
        1 => samples[0] * 0.0,
        n => {
            let mut coeffs = vec![h; n];
            coeffs[0] = 0.5 * h;
            coeffs[n - 1] = 0.5 * h;
            T::linear_combination(&coeffs, samples)
        }
    }
}

/// Scales `f` in place so that `trapz(f²) = 1`; returns the original norm.
pub fn normalize_unit_power(f: &mut [f64], h: f64) -> f64 {
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    let norm = trapz(&sq, h).sqrt();
    if norm > 0.0 {
        f.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// `f / sqrt(trapz(f²))` over any scalar type.
pub fn unit_power<T: Real>(f: &[T], h: f64) -> Vec<T> {
    let sq: Vec<T> = f.iter().map(|v| *v * *v).collect();
    let inv = trapz(&sq, h).sqrt().recip();
    f.iter().map(|v| *v * inv).collect()
}
