use std::collections::VecDeque;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{nm_of_omega, omega_of_nm, AnalysisError, ModeDispersion, Process, C_M_PER_S};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JsaConfig {
    pub pump_angles_deg: Vec<f64>,
    /// Intensity FWHM of the pump spectrum.
    pub pump_bandwidth_ghz: f64,
    pub length_mm: f64,
    /// Grid center on the signal axis; the idler center follows from energy conservation.
    pub center_signal_nm: f64,
    /// Points per axis.
    pub points: usize,
    pub step_ghz: f64,
}

impl Default for JsaConfig {
    fn default() -> Self {
        JsaConfig {
            pump_angles_deg: Vec::new(),
            pump_bandwidth_ghz: 1.0,
            length_mm: 1.0,
            center_signal_nm: 1092.0,
            points: 241,
            step_ghz: 5.0,
        }
    }
}

/// Joint spectral amplitudes of both processes on a shared `(ω₁, ω₂)` grid.
/// Cell `(i, j)` sits at `i * omega2.len() + j`, with `i` the signal index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub d_omega: f64,
    pub omega_pump: f64,
    pub phi_hv: Vec<Complex64>,
    pub phi_vh: Vec<Complex64>,
    pub pump_angles_deg: Vec<f64>,
    pub pump_bandwidth_ghz: f64,
    pub length_mm: f64,
}

impl JointSpectralAmplitude {
    pub fn rows(&self) -> usize {
        self.omega1.len()
    }

    pub fn cols(&self) -> usize {
        self.omega2.len()
    }

    /// `|φ_HV|² + |φ_VH|²` per cell.
    pub fn intensity(&self) -> Vec<f64> {
        self.phi_hv.iter().zip(&self.phi_vh).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }

    /// `ΣΣ (|φ_HV|² + |φ_VH|²) Δω²`.
    pub fn norm_sqr(&self) -> f64 {
        self.intensity().iter().sum::<f64>() * self.d_omega * self.d_omega
    }

    /// Scales both channels to unit joint norm.
    pub fn normalize(&mut self) -> Result<f64, AnalysisError> {
        let n = self.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(AnalysisError::Domain(format!("joint spectral amplitude has norm² {n}")));
        }
        let s = n.sqrt().recip();
        self.phi_hv.iter_mut().chain(self.phi_vh.iter_mut()).for_each(|v| *v *= s);
        Ok(n)
    }

    /// Intensity grid: first row holds ω₁, first column ω₂, both in rad/s.
    pub fn jsi_csv(&self) -> String {
        let inten = self.intensity();
        let mut out = String::from("omega2\\omega1");
        for w in &self.omega1 {
            let _ = write!(out, ",{w:e}");
        }
        out.push('\n');
        for (j, w2) in self.omega2.iter().enumerate() {
            let _ = write!(out, "{w2:e}");
            for i in 0..self.rows() {
                let _ = write!(out, ",{:e}", inten[i * self.cols() + j]);
            }
            out.push('\n');
        }
        out
    }
}

fn gaussian_envelope(detuning: f64, fwhm: f64) -> f64 {
    // Amplitude with an intensity FWHM of `fwhm`.
    (-2.0 * std::f64::consts::LN_2 * (detuning / fwhm).powi(2)).exp()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `φ(ω₁, ω₂) = Σ_θ α(ω₁ + ω₂) sinc(L Δβ / 2)` for both processes, normalized jointly.
pub fn jsa(disp: &ModeDispersion, cfg: &JsaConfig) -> Result<JointSpectralAmplitude, AnalysisError> {
    if cfg.points < 2 || !(cfg.step_ghz > 0.0) || !(cfg.length_mm > 0.0) || !(cfg.pump_bandwidth_ghz > 0.0) {
        return Err(AnalysisError::Domain("grid points, step, length and bandwidth must be positive".into()));
    }
    if cfg.pump_angles_deg.is_empty() {
        return Err(AnalysisError::Domain("no pump angles".into()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let d_omega = two_pi * cfg.step_ghz * 1e9;
    let width = two_pi * cfg.pump_bandwidth_ghz * 1e9;
    let length_m = cfg.length_mm * 1e-3;
    let omega_pump = omega_of_nm(disp.pump_nm);
    let c1 = omega_of_nm(cfg.center_signal_nm);
    let c2 = omega_pump - c1;
    if !(c2 > 0.0) {
        return Err(AnalysisError::Domain(format!(
            "signal center {} nm is above the pump frequency",
            cfg.center_signal_nm
        )));
    }
    let mid = (cfg.points - 1) as f64 / 2.0;
    let axis = |c: f64| -> Vec<f64> { (0..cfg.points).map(|k| c + (k as f64 - mid) * d_omega).collect() };
    let (omega1, omega2) = (axis(c1), axis(c2));

    let mut phis = Vec::with_capacity(2);
    for process in [Process::HV, Process::VH] {
        let (ps, pi) = process.polarizations();
        let ng = disp.n_group(ps, cfg.center_signal_nm)? + disp.n_group(pi, nm_of_omega(c2))?;
        // Zero-to-zero lobe width along the anti-diagonal.
        let lobe = 4.0 * std::f64::consts::PI * C_M_PER_S / (length_m * ng);
        let points_across = lobe / d_omega;
        if points_across < 8.0 {
            return Err(AnalysisError::Resolution { points_across });
        }
        // k-vectors per axis, in 1/m.
        let k1 = omega1
            .iter()
            .map(|&w| Ok(disp.n_eff(ps, nm_of_omega(w))? * w / C_M_PER_S))
            .collect::<Result<Vec<f64>, AnalysisError>>()?;
        let k2 = omega2
            .iter()
            .map(|&w| Ok(disp.n_eff(pi, nm_of_omega(w))? * w / C_M_PER_S))
            .collect::<Result<Vec<f64>, AnalysisError>>()?;
        let sines: Vec<f64> = cfg.pump_angles_deg.iter().map(|t| t.to_radians().sin()).collect();
        let mut phi = vec![Complex64::new(0.0, 0.0); cfg.points * cfg.points];
        for (i, &w1) in omega1.iter().enumerate() {
            for (j, &w2) in omega2.iter().enumerate() {
                let alpha = gaussian_envelope(w1 + w2 - omega_pump, width);
                if alpha == 0.0 {
                    continue;
                }
                let kp = (w1 + w2) / C_M_PER_S;
                let pm: f64 = sines.iter().map(|s| sinc(0.5 * length_m * (k1[i] - k2[j] - kp * s))).sum();
                phi[i * cfg.points + j] = Complex64::new(alpha * pm, 0.0);
            }
        }
        phis.push(phi);
    }
    let phi_vh = phis.pop().unwrap_or_default();
    let phi_hv = phis.pop().unwrap_or_default();
    let mut out = JointSpectralAmplitude {
        omega1,
        omega2,
        d_omega,
        omega_pump,
        phi_hv,
        phi_vh,
        pump_angles_deg: cfg.pump_angles_deg.clone(),
        pump_bandwidth_ghz: cfg.pump_bandwidth_ghz,
        length_mm: cfg.length_mm,
    };
    out.normalize()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredJsa {
    pub jsa: JointSpectralAmplitude,
    /// Share of the joint norm inside the window.
    pub kept_fraction: f64,
}

/// Zeroes amplitudes outside `window_signal × window_idler` (nm) and renormalizes.
pub fn filter_jsa(
    jsa: &JointSpectralAmplitude,
    window_signal_nm: (f64, f64),
    window_idler_nm: (f64, f64),
) -> Result<FilteredJsa, AnalysisError> {
    let inside = |w: f64, (a, b): (f64, f64)| {
        let l = nm_of_omega(w);
        l >= a.min(b) && l <= a.max(b)
    };
    let before = jsa.norm_sqr();
    let mut out = jsa.clone();
    let cols = jsa.cols();
    for (i, &w1) in jsa.omega1.iter().enumerate() {
        let keep_row = inside(w1, window_signal_nm);
        for (j, &w2) in jsa.omega2.iter().enumerate() {
            if !(keep_row && inside(w2, window_idler_nm)) {
                out.phi_hv[i * cols + j] = Complex64::new(0.0, 0.0);
                out.phi_vh[i * cols + j] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let kept = out.norm_sqr();
    if !(kept > 0.0) || !(before > 0.0) {
        return Err(AnalysisError::DegenerateFilter);
    }
    out.normalize()?;
    Ok(FilteredJsa { jsa: out, kept_fraction: kept / before })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalSample {
    pub omega: f64,
    pub lambda_nm: f64,
    /// Per unit angular frequency; `Σ density Δω = 1`.
    pub density: f64,
}

/// Joint intensity integrated over the other axis, at unit area.
pub fn marginal(jsa: &JointSpectralAmplitude, axis: Axis) -> Vec<MarginalSample> {
    let inten = jsa.intensity();
    let (rows, cols) = (jsa.rows(), jsa.cols());
    let (grid, sums): (&[f64], Vec<f64>) = match axis {
        Axis::Signal => (&jsa.omega1, (0..rows).map(|i| inten[i * cols..(i + 1) * cols].iter().sum()).collect()),
        Axis::Idler => (&jsa.omega2, (0..cols).map(|j| (0..rows).map(|i| inten[i * cols + j]).sum()).collect()),
    };
    let area: f64 = sums.iter().sum::<f64>() * jsa.d_omega;
    let scale = if area > 0.0 { area.recip() } else { 0.0 };
    grid.iter()
        .zip(&sums)
        .map(|(&w, &s)| MarginalSample { omega: w, lambda_nm: nm_of_omega(w), density: s * scale })
        .collect()
}

/// Number of 8-connected components of cells at or above `fraction` of the peak.
pub fn count_lobes(values: &[f64], rows: usize, cols: usize, fraction: f64) -> usize {
    assert_eq!(values.len(), rows * cols);
    let peak = values.iter().copied().fold(0.0f64, f64::max);
    if !(peak > 0.0) {
        return 0;
    }
    let cut = fraction * peak;
    let mut seen = vec![false; values.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..values.len() {
        if seen[start] || values[start] < cut {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (r, c) = ((k / cols) as isize, (k % cols) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    let n = rr as usize * cols + cc as usize;
                    if !seen[n] && values[n] >= cut {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lobes_join_diagonally() {
        #[rustfmt::skip]
        let g = [
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.5,
        ];
        assert_eq!(count_lobes(&g, 4, 4, 0.1), 2);
        assert_eq!(count_lobes(&g, 4, 4, 0.6), 1);
        assert_eq!(count_lobes(&[0.0; 4], 2, 2, 0.1), 0);
    }

    #[test]
    fn sinc_is_smooth_at_zero() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-15);
        assert!(sinc(std::f64::consts::PI).abs() < 1e-15);
    }
}
