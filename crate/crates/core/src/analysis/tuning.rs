use serde::{Deserialize, Serialize};

use super::{omega_of_nm, AnalysisError, ModeDispersion};
use crate::modes::Polarization;
use crate::parallel::par_map;

/// Polarization assignment of a pair, signal first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Process {
    /// TE signal, TM idler.
    HV,
    /// TM signal, TE idler.
    VH,
}

impl Process {
    pub fn polarizations(self) -> (Polarization, Polarization) {
        match self {
            Process::HV => (Polarization::TE, Polarization::TM),
            Process::VH => (Polarization::TM, Polarization::TE),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Process::HV => "HV",
            Process::VH => "VH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningSample {
    pub theta_deg: f64,
    pub lambda_signal_nm: f64,
    pub lambda_idler_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    pub process: Process,
    pub samples: Vec<TuningSample>,
    /// Angles at which no pair was found inside the tabulated window.
    pub gaps_deg: Vec<f64>,
}

impl TuningCurve {
    /// Relative residual of `1/λp = 1/λs + 1/λi`.
    pub fn energy_residual(pump_nm: f64, s: &TuningSample) -> f64 {
        ((1.0 / pump_nm - 1.0 / s.lambda_signal_nm - 1.0 / s.lambda_idler_nm) * pump_nm).abs()
    }

    /// Relative residual of `n_s/λs − n_i/λi = sin θ / λp`.
    pub fn momentum_residual(&self, disp: &ModeDispersion, s: &TuningSample) -> Result<f64, AnalysisError> {
        let (ps, pi) = self.process.polarizations();
        let lhs = disp.n_eff(ps, s.lambda_signal_nm)? / s.lambda_signal_nm
            - disp.n_eff(pi, s.lambda_idler_nm)? / s.lambda_idler_nm;
        let rhs = s.theta_deg.to_radians().sin() / disp.pump_nm;
        Ok((lhs - rhs).abs() / rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE))
    }
}

fn mismatch(disp: &ModeDispersion, process: Process, lambda_s: f64, sin_theta: f64) -> Result<f64, AnalysisError> {
    let (ps, pi) = process.polarizations();
    let lambda_i = 1.0 / (1.0 / disp.pump_nm - 1.0 / lambda_s);
    Ok(disp.n_eff(ps, lambda_s)? / lambda_s - disp.n_eff(pi, lambda_i)? / lambda_i - sin_theta / disp.pump_nm)
}

fn solve_signal(disp: &ModeDispersion, process: Process, theta_deg: f64) -> Result<Option<f64>, AnalysisError> {
    let s = theta_deg.to_radians().sin();
    let (mut lo, mut hi) = disp.signal_window_nm();
    let (mut flo, fhi) = (mismatch(disp, process, lo, s)?, mismatch(disp, process, hi, s)?);
    if flo == 0.0 {
        return Ok(Some(lo));
    }
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = mismatch(disp, process, mid, s)?;
        if f == 0.0 {
            return Ok(Some(mid));
        }
        if f.signum() == flo.signum() {
            lo = mid;
            flo = f;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Signal and idler wavelengths against pump angle for both processes, from energy
/// conservation and the forward-signal, backward-idler momentum balance.
pub fn tuning_curves(
    disp: &ModeDispersion,
    theta_range_deg: (f64, f64),
    n_points: usize,
) -> Result<(TuningCurve, TuningCurve), AnalysisError> {
    let (a, b) = theta_range_deg;
    if n_points == 0 || !(a.is_finite() && b.is_finite()) {
        return Err(AnalysisError::Domain(format!("bad angle scan ({a}, {b}) with {n_points} points")));
    }
    let thetas: Vec<f64> =
        (0..n_points).map(|i| if n_points == 1 { a } else { a + (b - a) * i as f64 / (n_points - 1) as f64 }).collect();
    let curve = |process: Process| -> Result<TuningCurve, AnalysisError> {
        let roots = par_map(thetas.clone(), |t| solve_signal(disp, process, t).map(|r| (t, r)));
        let mut samples = Vec::new();
        let mut gaps_deg = Vec::new();
        for r in roots {
            match r? {
                (t, Some(ls)) => samples.push(TuningSample {
                    theta_deg: t,
                    lambda_signal_nm: ls,
                    lambda_idler_nm: 1.0 / (1.0 / disp.pump_nm - 1.0 / ls),
                }),
                (t, None) => gaps_deg.push(t),
            }
        }
        Ok(TuningCurve { process, samples, gaps_deg })
    };
    Ok((curve(Process::HV)?, curve(Process::VH)?))
}

/// Pump angle phase matching `process` at the given signal wavelength.
pub fn crossing_angle_deg(
    disp: &ModeDispersion,
    process: Process,
    lambda_signal_nm: f64,
) -> Result<f64, AnalysisError> {
    let (ps, pi) = process.polarizations();
    let li = 1.0 / (1.0 / disp.pump_nm - 1.0 / lambda_signal_nm);
    let s = disp.pump_nm * (disp.n_eff(ps, lambda_signal_nm)? / lambda_signal_nm - disp.n_eff(pi, li)? / li);
    if !(0.0..=1.0).contains(&s) {
        return Err(AnalysisError::Domain(format!(
            "no real angle for {} at {lambda_signal_nm} nm: sin θ = {s}",
            process.as_str()
        )));
    }
    Ok(s.asin().to_degrees())
}

/// Signal angular-frequency offset `ω_HV − ω_VH` in rad/s at every angle where both branches exist.
pub fn branch_splitting(hv: &TuningCurve, vh: &TuningCurve) -> Vec<(f64, f64)> {
    hv.samples
        .iter()
        .filter_map(|a| {
            vh.samples
                .iter()
                .find(|b| b.theta_deg == a.theta_deg)
                .map(|b| (a.theta_deg, omega_of_nm(a.lambda_signal_nm) - omega_of_nm(b.lambda_signal_nm)))
        })
        .collect()
}
