use std::sync::OnceLock;

use nlwg::analysis::{
    count_lobes, crossing_angle_deg, filter_jsa, jsa, marginal, polarization_state, tuning_curves, Axis,
    DispersionConfig, JsaConfig, ModeDispersion, Process, TuningCurve,
};
use nlwg::stack::{EpitaxialStack, ProfileOptions};

fn table1() -> &'static ModeDispersion {
    static D: OnceLock<ModeDispersion> = OnceLock::new();
    D.get_or_init(|| {
        ModeDispersion::solve(&EpitaxialStack::table1(), &ProfileOptions::default(), &DispersionConfig::default())
            .unwrap()
    })
}

fn dual_angle_config(d: &ModeDispersion) -> JsaConfig {
    let hv = crossing_angle_deg(d, Process::HV, 1092.0).unwrap();
    let vh = crossing_angle_deg(d, Process::VH, 1092.0).unwrap();
    JsaConfig { pump_angles_deg: vec![vh, hv], ..JsaConfig::default() }
}

#[test]
fn crossing_angles_and_splitting() {
    let d = table1();
    let hv = crossing_angle_deg(d, Process::HV, 1092.0).unwrap();
    let vh = crossing_angle_deg(d, Process::VH, 1092.0).unwrap();
    assert!((32.0..=36.0).contains(&hv) && (32.0..=36.0).contains(&vh), "{hv} {vh}");
    let split = (hv - vh).abs();
    assert!((0.1..=0.6).contains(&split), "{split}");
}

#[test]
fn curves_obey_both_conservation_laws() {
    let d = table1();
    let (hv, vh) = tuning_curves(d, (30.0, 38.0), 41).unwrap();
    for c in [&hv, &vh] {
        assert!(c.samples.len() > 30, "{:?} has {} samples", c.process, c.samples.len());
        for s in &c.samples {
            assert!(TuningCurve::energy_residual(d.pump_nm, s) < 1e-9);
            assert!(c.momentum_residual(d, s).unwrap() < 1e-9, "{s:?}");
        }
    }
    // Signal redshifts as the pump tilts toward grazing.
    assert!(hv.samples.windows(2).all(|w| w[1].lambda_signal_nm < w[0].lambda_signal_nm));
}

#[test]
fn curves_pass_through_the_design_pair() {
    let d = table1();
    for p in [Process::HV, Process::VH] {
        let t = crossing_angle_deg(d, p, 1092.0).unwrap();
        let (hv, vh) = tuning_curves(d, (t, t), 1).unwrap();
        let c = if p == Process::HV { hv } else { vh };
        assert!((c.samples[0].lambda_signal_nm - 1092.0).abs() < 1e-6);
        assert!((c.samples[0].lambda_idler_nm - 1550.0).abs() < 1e-3);
    }
}

#[test]
fn no_birefringence_means_coincident_branches() {
    let d = table1().degenerate();
    let (hv, vh) = tuning_curves(&d, (30.0, 38.0), 17).unwrap();
    assert_eq!(hv.samples, vh.samples);
    let split = nlwg::analysis::branch_splitting(&hv, &vh);
    assert!(split.iter().all(|(_, dw)| *dw == 0.0));
}

#[test]
fn dual_angle_jsi_has_side_lobes_that_filtering_removes() {
    let d = table1();
    let j = jsa(d, &dual_angle_config(d)).unwrap();
    assert!((j.norm_sqr() - 1.0).abs() < 1e-9);
    assert_eq!(count_lobes(&j.intensity(), j.rows(), j.cols(), 0.1), 3);

    let f = filter_jsa(&j, (1091.6, 1092.4), (1549.2, 1550.8)).unwrap();
    assert!((f.jsa.norm_sqr() - 1.0).abs() < 1e-9);
    assert!(f.kept_fraction > 0.3 && f.kept_fraction < 0.8, "{}", f.kept_fraction);
    assert_eq!(count_lobes(&f.jsa.intensity(), j.rows(), j.cols(), 0.1), 1);

    let m = marginal(&f.jsa, Axis::Signal);
    let peak = m.iter().max_by(|a, b| a.density.total_cmp(&b.density)).unwrap();
    let step_nm = (m[1].lambda_nm - m[0].lambda_nm).abs();
    assert!((peak.lambda_nm - 1092.0).abs() <= step_nm, "{}", peak.lambda_nm);

    let state = polarization_state(&f.jsa).unwrap();
    assert!(state.concurrence > 0.9 && state.concurrence <= 1.0, "{}", state.concurrence);
}

#[test]
fn ideal_filtered_jsa_is_a_bell_state() {
    let d = table1().degenerate();
    let j = jsa(&d, &dual_angle_config(&d)).unwrap();
    let f = filter_jsa(&j, (1091.6, 1092.4), (1549.2, 1550.8)).unwrap();
    let state = polarization_state(&f.jsa).unwrap();
    assert!((state.concurrence - 1.0).abs() < 1e-6, "{}", state.concurrence);
}

#[test]
fn coarse_grid_is_a_resolution_error() {
    let d = table1();
    let cfg = JsaConfig { step_ghz: 20.0, ..dual_angle_config(d) };
    assert!(matches!(jsa(d, &cfg), Err(nlwg::analysis::AnalysisError::Resolution { .. })));
}
