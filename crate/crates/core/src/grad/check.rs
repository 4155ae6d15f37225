/// How per-parameter discrepancies are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdNorm {
    MaxRelative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdEntry {
    pub propagated: f64,
    pub central: f64,
    /// Central difference at half the step; the spread between the two exposes truncation error.
    pub central_half: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
    pub max_relative_error: f64,
    /// True when halving the step changes some difference quotient by more than
    /// `STEP_SENSITIVITY_TOL` (relative), i.e. the comparison is truncation-limited.
    pub step_sensitive: bool,
}

pub const STEP_SENSITIVITY_TOL: f64 = 1e-4;

/// Compares a propagated gradient against central differences of `f`.
///
/// Each parameter is perturbed by `step * max(|v_i|, 1)`. The relative error of an
/// entry is `|propagated - central| / max(|propagated|, |central|, 1e-6 * max_j |central_j|)`,
/// so entries that are negligible against the largest component are judged on the
/// gradient's overall scale.
pub fn finite_difference_check<F>(f: F, v: &[f64], propagated: &[f64], step: f64, norm: FdNorm) -> FdReport
where
    F: Fn(&[f64]) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    assert_eq!(v.len(), propagated.len());
    let FdNorm::MaxRelative = norm;
    let mut point = v.to_vec();
    let mut quotient = |i: usize, h: f64| {
        let orig = point[i];
        point[i] = orig + h;
        let up = f(&point);
        point[i] = orig - h;
        let dn = f(&point);
        point[i] = orig;
        (up - dn) / (2.0 * h)
    };
    let raw: Vec<(f64, f64)> = (0..v.len())
        .map(|i| {
            let h = step * v[i].abs().max(1.0);
            (quotient(i, h), quotient(i, 0.5 * h))
        })
        .collect();
    let scale = raw.iter().fold(0.0_f64, |m, &(c, _)| m.max(c.abs()));
    let floor = (1e-6 * scale).max(f64::MIN_POSITIVE);
    let mut step_sensitive = false;
    let entries: Vec<FdEntry> = raw
        .into_iter()
        .zip(propagated)
        .map(|((central, central_half), &p)| {
            let denom = p.abs().max(central.abs()).max(floor);
            if (central - central_half).abs() / denom > STEP_SENSITIVITY_TOL {
                step_sensitive = true;
            }
            FdEntry { propagated: p, central, central_half, relative_error: (p - central).abs() / denom }
        })
        .collect();
    let max_relative_error = entries.iter().fold(0.0_f64, |m, e| m.max(e.relative_error));
    FdReport { entries, max_relative_error, step_sensitive }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact_to_rounding() {
        let f = |v: &[f64]| 3.0 * v[0] - 2.0 * v[1] + 0.5;
        let r = finite_difference_check(f, &[0.2, 1.7], &[3.0, -2.0], 1e-6, FdNorm::MaxRelative);
        assert!(r.max_relative_error < 1e-9, "{r:?}");
        assert!(!r.step_sensitive);
    }

    #[test]
    fn large_step_on_sharp_function_is_flagged() {
        // Lorentzian of width 1e-3: a step of 1e-2 straddles the whole resonance.
        let f = |v: &[f64]| 1.0 / (1.0 + (v[0] / 1e-3).powi(2));
        let x0 = 5e-4;
        let g = -2.0 * x0 / 1e-6 / (1.0 + (x0 / 1e-3f64).powi(2)).powi(2);
        let fine = finite_difference_check(f, &[x0], &[g], 1e-8, FdNorm::MaxRelative);
        let coarse = finite_difference_check(f, &[x0], &[g], 1e-2, FdNorm::MaxRelative);
        assert!(fine.max_relative_error < 1e-5);
        assert!(coarse.max_relative_error > fine.max_relative_error * 100.0);
        assert!(coarse.step_sensitive);
    }
}
