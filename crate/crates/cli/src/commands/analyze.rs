use serde::{Deserialize, Serialize};

use nlwg::analysis::{
    count_lobes, crossing_angle_deg, filter_jsa, ion_photon_state, jsa, marginal, omega_of_nm, polarization_state,
    rate_budget, tuning_curves, Axis, BiphotonPolarizationState, IonPhotonState, JointSpectralAmplitude, JsaConfig,
    MarginalSample, ModeDispersion, Process, TuningCurve,
};

use crate::config::{load_stack, AnalyzeRun};
use crate::output::RunDir;
use crate::plot::{Heatmap, LinePlot, Series};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeSummary {
    pub theta_hv_deg: f64,
    pub theta_vh_deg: f64,
    pub splitting_deg: f64,
    /// Signal offset between the branches at the HV design angle.
    pub delta_omega_rad_per_s: Option<f64>,
    pub pump_angles_deg: Vec<f64>,
    pub lobes_unfiltered: usize,
    pub lobes_filtered: usize,
    pub kept_fraction: f64,
    pub marginal_peak_nm: f64,
    pub marginal_step_nm: f64,
    pub polarization: BiphotonPolarizationState,
    /// Same pipeline with the TM indices replaced by TE.
    pub ideal_concurrence: f64,
    pub ion: IonPhotonState,
    pub ion_concurrence: f64,
    pub rate_hz: f64,
    pub rate_caveat: Option<String>,
}

fn tuning_csv(out: &RunDir, curves: &[&TuningCurve]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(out.path("tuning.csv"))?;
    w.write_record(["process", "theta_deg", "lambda_signal_nm", "lambda_idler_nm", "status"])?;
    for c in curves {
        for s in &c.samples {
            w.write_record([
                c.process.as_str().to_string(),
                s.theta_deg.to_string(),
                s.lambda_signal_nm.to_string(),
                s.lambda_idler_nm.to_string(),
                "ok".into(),
            ])?;
        }
        for t in &c.gaps_deg {
            w.write_record([c.process.as_str(), &t.to_string(), "", "", "gap"])?;
        }
    }
    w.flush().map_err(|e| CliError::io(out.path("tuning.csv"), e))
}

fn marginal_csv(out: &RunDir, name: &str, m: &[MarginalSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(out.path(name))?;
    w.write_record(["omega_rad_per_s", "lambda_nm", "density"])?;
    for s in m {
        w.write_record([s.omega.to_string(), s.lambda_nm.to_string(), s.density.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(out.path(name), e))
}

fn jsi_svg(j: &JointSpectralAmplitude, title: &str) -> String {
    let inten = j.intensity();
    let (rows, cols) = (j.cols(), j.rows());
    // x is the signal axis, so transpose the signal-major grid.
    let mut values = vec![0.0; rows * cols];
    for i in 0..j.rows() {
        for k in 0..j.cols() {
            values[k * cols + i] = inten[i * j.cols() + k];
        }
    }
    let ghz = |w: f64, c: f64| (w - c) / (2.0 * std::f64::consts::PI * 1e9);
    let (c1, c2) = (j.omega1[j.rows() / 2], j.omega2[j.cols() / 2]);
    Heatmap {
        title: title.into(),
        x_label: "signal detuning (GHz)".into(),
        y_label: "idler detuning (GHz)".into(),
        values: &values,
        rows,
        cols,
        x_range: (ghz(j.omega1[0], c1), ghz(j.omega1[j.rows() - 1], c1)),
        y_range: (ghz(j.omega2[0], c2), ghz(j.omega2[j.cols() - 1], c2)),
        max_cells: 241,
    }
    .to_svg()
}

fn dual_angles(disp: &ModeDispersion, cfg: &JsaConfig) -> Result<Vec<f64>, CliError> {
    if !cfg.pump_angles_deg.is_empty() {
        return Ok(cfg.pump_angles_deg.clone());
    }
    Ok(vec![
        crossing_angle_deg(disp, Process::VH, cfg.center_signal_nm)?,
        crossing_angle_deg(disp, Process::HV, cfg.center_signal_nm)?,
    ])
}

/// Tuning curves, dual-angle JSI before and after filtering, the signal marginal,
/// polarization and ion-photon states, and the rate ledger.
pub fn cmd_analyze(cfg: &AnalyzeRun, out: &RunDir) -> Result<AnalyzeSummary, CliError> {
    out.write_json("run_config.json", cfg)?;
    let stack = load_stack(cfg.stack.as_deref())?;
    let disp = ModeDispersion::solve(&stack, &cfg.profile, &cfg.dispersion)?;
    out.write_json("dispersion.json", &disp)?;

    let (hv, vh) = tuning_curves(&disp, cfg.theta_range_deg, cfg.theta_points)?;
    tuning_csv(out, &[&hv, &vh])?;
    let pts = |c: &TuningCurve, f: fn(&nlwg::analysis::TuningSample) -> f64| -> Vec<(f64, f64)> {
        c.samples.iter().map(|s| (s.theta_deg, f(s))).collect()
    };
    let plot = LinePlot {
        title: "Tuning curves".into(),
        x_label: "pump angle (deg)".into(),
        y_label: "signal wavelength (nm)".into(),
        series: vec![
            Series { name: "HV".into(), points: pts(&hv, |s| s.lambda_signal_nm) },
            Series { name: "VH".into(), points: pts(&vh, |s| s.lambda_signal_nm) },
        ],
        log_y: false,
    };
    out.write("tuning.svg", plot.to_svg())?;

    let center = cfg.jsa.center_signal_nm;
    let theta_hv = crossing_angle_deg(&disp, Process::HV, center)?;
    let theta_vh = crossing_angle_deg(&disp, Process::VH, center)?;
    let (_, vh_at_hv) = tuning_curves(&disp, (theta_hv, theta_hv), 1)?;
    let delta_omega = vh_at_hv.samples.first().map(|s| omega_of_nm(center) - omega_of_nm(s.lambda_signal_nm));

    let angles = dual_angles(&disp, &cfg.jsa)?;
    let jcfg = JsaConfig { pump_angles_deg: angles.clone(), ..cfg.jsa.clone() };
    let full = jsa(&disp, &jcfg)?;
    out.write("jsi.csv", full.jsi_csv())?;
    out.write("jsi.svg", jsi_svg(&full, "Joint spectral intensity"))?;
    let filtered = filter_jsa(&full, cfg.filter_signal_nm, cfg.filter_idler_nm)?;
    out.write("jsi_filtered.csv", filtered.jsa.jsi_csv())?;
    out.write("jsi_filtered.svg", jsi_svg(&filtered.jsa, "Filtered joint spectral intensity"))?;

    let m_full = marginal(&full, Axis::Signal);
    let m = marginal(&filtered.jsa, Axis::Signal);
    marginal_csv(out, "marginal_signal_unfiltered.csv", &m_full)?;
    marginal_csv(out, "marginal_signal.csv", &m)?;
    let mplot = LinePlot {
        title: "Signal marginal".into(),
        x_label: "signal wavelength (nm)".into(),
        y_label: "density (s/rad)".into(),
        series: vec![
            Series { name: "filtered".into(), points: m.iter().map(|s| (s.lambda_nm, s.density)).collect() },
            Series { name: "unfiltered".into(), points: m_full.iter().map(|s| (s.lambda_nm, s.density)).collect() },
        ],
        log_y: false,
    };
    out.write("marginal.svg", mplot.to_svg())?;
    let peak = m.iter().max_by(|a, b| a.density.total_cmp(&b.density)).map(|s| s.lambda_nm).unwrap_or(f64::NAN);
    let step_nm = if m.len() > 1 { (m[1].lambda_nm - m[0].lambda_nm).abs() } else { f64::NAN };

    let state = polarization_state(&filtered.jsa)?;
    let ideal_disp = disp.degenerate();
    let ideal_cfg = JsaConfig { pump_angles_deg: dual_angles(&ideal_disp, &cfg.jsa)?, ..cfg.jsa.clone() };
    let ideal = filter_jsa(&jsa(&ideal_disp, &ideal_cfg)?, cfg.filter_signal_nm, cfg.filter_idler_nm)?;
    let ideal_concurrence = polarization_state(&ideal.jsa)?.concurrence;

    let (ion, ion_concurrence) = ion_photon_state(cfg.ion_amplitudes.0, cfg.ion_amplitudes.1, false)?;
    let rate = rate_budget(&cfg.ledger)?;
    out.write("rate.txt", rate.to_text())?;

    let summary = AnalyzeSummary {
        theta_hv_deg: theta_hv,
        theta_vh_deg: theta_vh,
        splitting_deg: (theta_hv - theta_vh).abs(),
        delta_omega_rad_per_s: delta_omega,
        pump_angles_deg: angles,
        lobes_unfiltered: count_lobes(&full.intensity(), full.rows(), full.cols(), cfg.lobe_threshold),
        lobes_filtered: count_lobes(&filtered.jsa.intensity(), full.rows(), full.cols(), cfg.lobe_threshold),
        kept_fraction: filtered.kept_fraction,
        marginal_peak_nm: peak,
        marginal_step_nm: step_nm,
        polarization: state,
        ideal_concurrence,
        ion,
        ion_concurrence,
        rate_hz: rate.rate_hz,
        rate_caveat: rate.caveat.clone(),
    };
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}
