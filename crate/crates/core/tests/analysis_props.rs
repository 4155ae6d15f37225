use num_complex::Complex64;
use proptest::prelude::*;

use nlwg::analysis::{
    filter_jsa, ion_photon_state, jsa, marginal, polarization_state, rate_budget, Axis, CubicTable, FactorKind,
    JointSpectralAmplitude, JsaConfig, ModeDispersion, RateFactor, RateLedger,
};

/// Linear, weakly birefringent model indices over both bands.
fn synthetic(birefringence: f64) -> ModeDispersion {
    let band = |lo: f64, hi: f64, n0: f64| {
        let x: Vec<f64> = (0..16).map(|i| lo + (hi - lo) * i as f64 / 15.0).collect();
        let y = x.iter().map(|l| n0 - 1e-4 * (l - lo)).collect();
        CubicTable::new(x, y).unwrap()
    };
    let pump = 640.65;
    let idler = |s: f64| 1.0 / (1.0 / pump - 1.0 / s);
    ModeDispersion {
        pump_nm: pump,
        signal_te: band(1062.0, 1122.0, 3.10),
        signal_tm: band(1062.0, 1122.0, 3.10 - birefringence),
        idler_te: band(idler(1122.0), idler(1062.0), 3.05),
        idler_tm: band(idler(1122.0), idler(1062.0), 3.05 - birefringence),
    }
}

fn angle(d: &ModeDispersion, p: nlwg::analysis::Process) -> f64 {
    nlwg::analysis::crossing_angle_deg(d, p, 1092.0).unwrap()
}

fn synthetic_jsa(cells: usize, f: impl Fn(usize, usize) -> (Complex64, Complex64)) -> JointSpectralAmplitude {
    let mut j = JointSpectralAmplitude {
        omega1: (0..cells).map(|i| 1.7e15 + i as f64 * 1e10).collect(),
        omega2: (0..cells).map(|i| 1.2e15 + i as f64 * 1e10).collect(),
        d_omega: 1e10,
        omega_pump: 2.9e15,
        phi_hv: Vec::new(),
        phi_vh: Vec::new(),
        pump_angles_deg: vec![],
        pump_bandwidth_ghz: 1.0,
        length_mm: 1.0,
    };
    for i in 0..cells {
        for k in 0..cells {
            let (a, b) = f(i, k);
            j.phi_hv.push(a);
            j.phi_vh.push(b);
        }
    }
    j.normalize().unwrap();
    j
}

#[test]
fn identical_channels_give_unit_concurrence() {
    let j = synthetic_jsa(12, |i, k| {
        let v =
            Complex64::from_polar((-((i as f64 - 5.0).powi(2) + (k as f64 - 6.0).powi(2)) / 8.0).exp(), 0.3 * i as f64);
        (v, v)
    });
    let s = polarization_state(&j).unwrap();
    assert!((s.concurrence - 1.0).abs() < 1e-12);
    assert!((s.c_hv.norm_sqr() + s.c_vh.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn product_and_disjoint_channels_give_zero() {
    let vh_zero = synthetic_jsa(8, |i, k| (Complex64::new((i + k) as f64, 0.0), Complex64::new(0.0, 0.0)));
    assert_eq!(polarization_state(&vh_zero).unwrap().concurrence, 0.0);
    let disjoint = synthetic_jsa(8, |i, _| {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        if i < 4 {
            (one, zero)
        } else {
            (zero, one)
        }
    });
    let s = polarization_state(&disjoint).unwrap();
    assert!(s.concurrence.abs() < 1e-12);
    assert!((s.c_hv.norm() - s.c_vh.norm()).abs() < 1e-12);
}

#[test]
fn zero_jsa_is_a_domain_error() {
    let mut j = synthetic_jsa(4, |_, _| (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)));
    j.phi_hv.iter_mut().chain(j.phi_vh.iter_mut()).for_each(|v| *v = Complex64::new(0.0, 0.0));
    assert!(polarization_state(&j).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn concurrence_is_bounded(seed in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 36)) {
        let j = synthetic_jsa(6, |i, k| {
            let (a, b, c, d) = seed[i * 6 + k];
            (Complex64::new(a, b), Complex64::new(c, d))
        });
        let s = polarization_state(&j).unwrap();
        prop_assert!(s.overlap.norm() <= 1.0);
        prop_assert!((0.0..=1.0).contains(&s.concurrence));
        prop_assert!(s.concurrence < 1.0 - 1e-9);
    }

    #[test]
    fn balanced_parallel_channels_reach_one(seed in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 36), phase in 0.0..std::f64::consts::TAU) {
        let rot = Complex64::from_polar(1.0, phase);
        let j = synthetic_jsa(6, |i, k| {
            let (a, b) = seed[i * 6 + k];
            (Complex64::new(a, b), Complex64::new(a, b) * rot)
        });
        let s = polarization_state(&j).unwrap();
        prop_assert!((s.concurrence - 1.0).abs() < 1e-9);
    }

    #[test]
    fn filtering_is_idempotent(lo in 1090.0..1092.0f64, width in 0.5..3.0f64) {
        let d = synthetic(0.0);
        let cfg = JsaConfig { pump_angles_deg: vec![angle(&d, nlwg::analysis::Process::HV)], pump_bandwidth_ghz: 100.0, points: 81, ..JsaConfig::default() };
        let j = jsa(&d, &cfg).unwrap();
        let ws = (lo, lo + width);
        let wi = (1540.0, 1560.0);
        if let Ok(once) = filter_jsa(&j, ws, wi) {
            prop_assert!((once.jsa.norm_sqr() - 1.0).abs() < 1e-9);
            let twice = filter_jsa(&once.jsa, ws, wi).unwrap();
            prop_assert!((twice.kept_fraction - 1.0).abs() < 1e-12);
            for (a, b) in once.jsa.phi_hv.iter().zip(&twice.jsa.phi_hv) {
                prop_assert!((a - b).norm() < 1e-12 * once.jsa.phi_hv.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
    }

    #[test]
    fn rate_is_multiplicative(values in prop::collection::vec(0.01..1.0f64, 4), pick in 0usize..4, div in 1.0..100.0f64) {
        let mut factors: Vec<RateFactor> = values.iter().enumerate().map(|(i, &v)| RateFactor {
            name: format!("p{i}"), value: v, unit: String::new(), kind: FactorKind::Probability, note: String::new(),
        }).collect();
        factors.push(RateFactor { name: "r".into(), value: 1e6, unit: "Hz".into(), kind: FactorKind::Rate, note: String::new() });
        factors.push(RateFactor { name: "d".into(), value: div, unit: String::new(), kind: FactorKind::Divisor, note: String::new() });
        let ledger = RateLedger { factors: factors.clone(), caveat: None, quoted_rate_hz: None };
        let base = rate_budget(&ledger).unwrap().rate_hz;
        let mut half = ledger.clone();
        half.factors[pick].value *= 0.5;
        prop_assert!((rate_budget(&half).unwrap().rate_hz / base - 0.5).abs() < 1e-12);
        let mut rev = ledger.clone();
        rev.factors.reverse();
        prop_assert!((rate_budget(&rev).unwrap().rate_hz / base - 1.0).abs() < 1e-12);
        let logs: f64 = rate_budget(&ledger).unwrap().items.iter().filter_map(|i| i.log10_contribution).sum();
        prop_assert!((logs - base.log10()).abs() < 1e-9);
    }
}

#[test]
fn unit_factors_return_the_attempt_rate() {
    let mut l = RateLedger::ion_interface();
    for f in &mut l.factors {
        if matches!(f.kind, FactorKind::Probability | FactorKind::Divisor) {
            f.value = 1.0;
        }
    }
    assert_eq!(rate_budget(&l).unwrap().rate_hz, 1e6);
}

#[test]
fn ion_interface_ledger_reports_with_caveat() {
    let r = rate_budget(&RateLedger::ion_interface()).unwrap();
    assert!(r.caveat.is_some());
    assert!(r.rate_hz > 0.0 && r.rate_hz < 1.0);
    assert!(r.to_text().contains("caveat"));
    let mut bad = RateLedger::ion_interface();
    bad.factors[1].value = 1.5;
    assert!(rate_budget(&bad).is_err());
}

#[test]
fn ion_photon_concurrence() {
    let (_, c) = ion_photon_state(3f64.sqrt() / 2.0, 0.5, false).unwrap();
    assert!((c - 3f64.sqrt() / 2.0).abs() < 1e-12);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((ion_photon_state(h, h, false).unwrap().1 - 1.0).abs() < 1e-12);
    assert_eq!(ion_photon_state(1.0, 0.0, false).unwrap().1, 0.0);
    assert!(ion_photon_state(0.0, 0.0, true).is_err());
    assert!(ion_photon_state(1.0, 1.0, false).is_err());
    let (s, c) = ion_photon_state(2.0, 2.0, true).unwrap();
    assert!((s.amplitude_sigma_minus.powi(2) + s.amplitude_sigma_plus.powi(2) - 1.0).abs() < 1e-12);
    assert!((c - 1.0).abs() < 1e-12);
}

#[test]
fn single_angle_support_hugs_the_anti_diagonal() {
    let d = synthetic(0.002);
    let bw = 50.0;
    let cfg = JsaConfig {
        pump_angles_deg: vec![angle(&d, nlwg::analysis::Process::HV)],
        pump_bandwidth_ghz: bw,
        points: 121,
        step_ghz: 5.0,
        ..JsaConfig::default()
    };
    let j = jsa(&d, &cfg).unwrap();
    let inten = j.intensity();
    let peak = inten.iter().copied().fold(0.0, f64::max);
    let two_pi = 2.0 * std::f64::consts::PI;
    for i in 0..j.rows() {
        for k in 0..j.cols() {
            let detune_ghz = (j.omega1[i] + j.omega2[k] - j.omega_pump) / two_pi / 1e9;
            if detune_ghz.abs() > 3.0 * bw {
                assert!(inten[i * j.cols() + k] < 1e-6 * peak);
            }
        }
    }
}

#[test]
fn phase_matching_bandwidth_scales_inversely_with_length() {
    let d = synthetic(0.0);
    let fwhm_cells = |length_mm: f64| {
        let cfg = JsaConfig {
            pump_angles_deg: vec![angle(&d, nlwg::analysis::Process::HV)],
            length_mm,
            points: 201,
            step_ghz: 2.0,
            ..JsaConfig::default()
        };
        let m = marginal(&jsa(&d, &cfg).unwrap(), Axis::Signal);
        let area: f64 = m.iter().map(|s| s.density).sum::<f64>() * 2.0 * std::f64::consts::PI * 2e9;
        assert!((area - 1.0).abs() < 1e-9);
        let peak = m.iter().map(|s| s.density).fold(0.0, f64::max);
        m.iter().filter(|s| s.density >= 0.5 * peak).count() as f64
    };
    let (a, b) = (fwhm_cells(1.0), fwhm_cells(2.0));
    assert!((a / b - 2.0).abs() < 0.25, "{a} {b}");
}

#[test]
fn full_window_filter_is_identity() {
    let d = synthetic(0.002);
    let cfg =
        JsaConfig { pump_angles_deg: vec![angle(&d, nlwg::analysis::Process::HV)], points: 41, ..JsaConfig::default() };
    let j = jsa(&d, &cfg).unwrap();
    let f = filter_jsa(&j, (1000.0, 1200.0), (1400.0, 1700.0)).unwrap();
    assert!((f.kept_fraction - 1.0).abs() < 1e-12);
    assert!(matches!(
        filter_jsa(&j, (1000.0, 1001.0), (1400.0, 1700.0)),
        Err(nlwg::analysis::AnalysisError::DegenerateFilter)
    ));
}
