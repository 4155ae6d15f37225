//! Overlap figure of merit and the counterpropagating phase-matching relations.

use serde::{Deserialize, Serialize};

use super::DesignError;
use crate::grad::{Cx, Real};
use crate::quad::trapz;

/// Pump wavelength from energy conservation, `1/λp = 1/λs + 1/λi`.
pub fn pump_wavelength(lambda_s_nm: f64, lambda_i_nm: f64) -> f64 {
    lambda_s_nm * lambda_i_nm / (lambda_s_nm + lambda_i_nm)
}

/// `λp (n_TE/λ_TE − n_TM/λ_TM)`, the sine of the pump angle that closes the
/// longitudinal momentum balance.
pub fn phase_matching_sine<T: Real>(n_te: T, n_tm: T, lambda_te_nm: f64, lambda_tm_nm: f64, lambda_p_nm: f64) -> T {
    T::linear_combination(&[lambda_p_nm / lambda_te_nm, -lambda_p_nm / lambda_tm_nm], &[n_te, n_tm])
}

/// Pump incidence angle in degrees. Normal incidence (zero sine) is allowed.
pub fn phase_matching_angle(
    n_te: f64,
    n_tm: f64,
    lambda_te_nm: f64,
    lambda_tm_nm: f64,
    lambda_p_nm: f64,
) -> Result<f64, DesignError> {
    let s = phase_matching_sine(n_te, n_tm, lambda_te_nm, lambda_tm_nm, lambda_p_nm);
    if !(s >= 0.0 && s < 1.0) {
        return Err(DesignError::NoRealAngle { sine: s });
    }
    Ok(s.asin().to_degrees())
}

/// `(Γa/Γb)²`: conversion efficiency scales with the square of the overlap.
pub fn efficiency_ratio(gamma_a: f64, gamma_b: f64) -> Result<f64, DesignError> {
    if !(gamma_b > 0.0) {
        return Err(DesignError::Domain(format!("reference overlap must be positive, got {gamma_b}")));
    }
    Ok((gamma_a / gamma_b).powi(2))
}

/// `∫ χ² E_p E_TE E_TM dx` by the trapezoidal rule. All inputs share one grid.
pub fn overlap_integral<T: Real>(
    chi2: &[T],
    pump: &[Cx<T>],
    te: &[T],
    tm_e: &[T],
    h: f64,
) -> Result<Cx<T>, DesignError> {
    let n = chi2.len();
    if pump.len() != n || te.len() != n || tm_e.len() != n {
        return Err(DesignError::Shape(format!(
            "chi2 {n}, pump {}, te {}, tm {} samples",
            pump.len(),
            te.len(),
            tm_e.len()
        )));
    }
    let weight: Vec<T> = (0..n).map(|i| chi2[i] * te[i] * tm_e[i]).collect();
    let re: Vec<T> = (0..n).map(|i| weight[i] * pump[i].re).collect();
    let im: Vec<T> = (0..n).map(|i| weight[i] * pump[i].im).collect();
    Ok(Cx::new(trapz(&re, h), trapz(&im, h)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOfMerit {
    /// `|Γ|` in pm/V.
    pub gamma_abs: f64,
    pub gamma: (f64, f64),
    pub theta_deg: f64,
    /// Complex integrand per grid sample.
    pub integrand: Vec<(f64, f64)>,
}

/// Plain-valued overlap with its integrand record.
pub fn overlap_fom(
    chi2: &[f64],
    pump: &[Cx<f64>],
    te: &[f64],
    tm_e: &[f64],
    h: f64,
    theta_deg: f64,
) -> Result<FigureOfMerit, DesignError> {
    let g = overlap_integral(chi2, pump, te, tm_e, h)?;
    let integrand = (0..chi2.len())
        .map(|i| {
            let w = chi2[i] * te[i] * tm_e[i];
            (w * pump[i].re, w * pump[i].im)
        })
        .collect();
    Ok(FigureOfMerit { gamma_abs: g.abs(), gamma: (g.re, g.im), theta_deg, integrand })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pump_wavelength_of_ion_interface() {
        assert!((pump_wavelength(1092.0, 1550.0) - 640.651_021_953_065_8).abs() < 1e-9);
        assert!((pump_wavelength(1300.0, 1300.0) - 650.0).abs() < 1e-12);
        assert_eq!(pump_wavelength(1092.0, 1550.0), pump_wavelength(1550.0, 1092.0));
    }

    #[test]
    fn angle_cases() {
        assert!(phase_matching_angle(3.2, 3.2, 1300.0, 1300.0, 650.0).unwrap().abs() < 1e-9);
        let err = phase_matching_angle(3.0, 3.4, 1092.0, 1092.0, 546.0).unwrap_err();
        assert!(matches!(err, DesignError::NoRealAngle { sine } if sine < 0.0));
        // Sine relation inverted by hand for the HV angle near 33.66 degrees.
        let lp = pump_wavelength(1092.0, 1550.0);
        let n_tm = 3.02;
        let n_te = (33.66f64.to_radians().sin() / lp + n_tm / 1550.0) * 1092.0;
        assert!((phase_matching_angle(n_te, n_tm, 1092.0, 1550.0, lp).unwrap() - 33.66).abs() < 1e-9);
    }

    #[test]
    fn efficiency_scaling() {
        let r = efficiency_ratio(43.0, 7.0).unwrap();
        assert!((r - 37.734_693_877_551).abs() < 1e-9);
        assert_eq!(efficiency_ratio(5.0, 5.0).unwrap(), 1.0);
        assert_eq!(efficiency_ratio(10.0, 5.0).unwrap(), 4.0);
        assert!(efficiency_ratio(1.0, 0.0).is_err());
    }

    #[test]
    fn overlap_vanishes_without_chi2_and_for_odd_integrand() {
        let n = 401;
        let h = 1.0;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 - 200.0).collect();
        let pump: Vec<Cx<f64>> = xs.iter().map(|x| Cx::new((x / 50.0).cos(), 0.3)).collect();
        let te: Vec<f64> = xs.iter().map(|x| (-(x / 60.0).powi(2)).exp()).collect();
        let tm: Vec<f64> = xs.iter().map(|x| x / 60.0 * (-(x / 60.0).powi(2)).exp()).collect();
        let zero = vec![0.0; n];
        assert_eq!(overlap_fom(&zero, &pump, &te, &tm, h, 0.0).unwrap().gamma_abs, 0.0);
        let chi2 = vec![100.0; n];
        assert!(overlap_fom(&chi2, &pump, &te, &tm, h, 0.0).unwrap().gamma_abs < 1e-10);
        let scaled: Vec<f64> = chi2.iter().map(|c| -3.0 * c).collect();
        let a = overlap_fom(&chi2, &pump, &te, &te, h, 0.0).unwrap().gamma_abs;
        let b = overlap_fom(&scaled, &pump, &te, &te, h, 0.0).unwrap().gamma_abs;
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
        assert!(overlap_fom(&chi2[1..], &pump, &te, &tm, h, 0.0).is_err());
    }
}
