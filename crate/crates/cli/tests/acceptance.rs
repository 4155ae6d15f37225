//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and fails if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlwg::analysis::{count_lobes, filter_jsa, ion_photon_state, polarization_state, JointSpectralAmplitude};
use nlwg::design::{
    efficiency_ratio, optimize, pump_wavelength, reference_fom, sample_initial_stack, surrogate_fom,
    surrogate_gradient, InitRanges, OptimizeConfig, SurrogatePlan,
};
use nlwg::grad::{finite_difference_check, FdNorm};
use nlwg::modes::{fundamental_mode, Polarization};
use nlwg::pump::{pump_field, PumpPolarization};
use nlwg::stack::{parse_stack, EpitaxialStack, Grid, IndexProfile, ProfileOptions};
use nlwg::surrogate::TrainConfig;
use nlwg_cli::commands::{cmd_analyze, cmd_optimize, AnalyzeSummary, OptimizeSummary};
use nlwg_cli::config::{AnalyzeRun, OptimizeRun};
use nlwg_cli::output::RunDir;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_s: f64, detail: String) -> Outcome {
    let t = elapsed.as_secs_f64();
    check(t < limit_s, format!("{detail}; {t:.1} s (limit {limit_s} s)"))
}

fn slab_te_even(n1: f64, n2: f64, d: f64, lambda: f64) -> f64 {
    let k0 = 2.0 * std::f64::consts::PI / lambda;
    let f = |n: f64| {
        let k = k0 * (n1 * n1 - n * n).sqrt();
        let g = k0 * (n * n - n2 * n2).sqrt();
        k * (k * d / 2.0).tan() - g
    };
    let lo = (n1 * n1 - (std::f64::consts::PI / (k0 * d)).powi(2)).max(n2 * n2).sqrt() + 1e-15;
    let (mut a, mut b) = (lo, n1 - 1e-15);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (f(a) > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let (d, pad) = (400.0, 3000.0);
    let grid = Grid { start_nm: -d / 2.0 - pad, spacing_nm: 1.0, len: (d + 2.0 * pad) as usize };
    let p = IndexProfile::steps(grid, 1550.0, 3.0, &[(-d / 2.0, 3.0), (d / 2.0, 3.3)], 3.0);
    let m = fundamental_mode(&p, Polarization::TE).map_err(|e| e.to_string())?;
    let exact = slab_te_even(3.3, 3.0, d, 1550.0);
    let err = (m.n_eff - exact).abs();
    let el = t0.elapsed();
    check(err < 1e-6, format!("n_eff {:.9} vs analytic {exact:.9}, |err| {err:.2e}", m.n_eff))?;
    within(el, 1.0, format!("|err| {err:.2e}"))
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let sub = rng.gen_range(1.0..3.6);
        let mut layers = vec![(0.0, sub)];
        let mut top = 0.0;
        for _ in 0..rng.gen_range(1..12) {
            top += rng.gen_range(20.0..300.0f64).round();
            layers.push((top, rng.gen_range(1.2..3.6)));
        }
        let grid = Grid { start_nm: -200.0, spacing_nm: 1.0, len: (top + 400.0) as usize };
        let p = IndexProfile::steps(grid, rng.gen_range(550.0..900.0), sub, &layers, 1.0);
        for theta in [0.0, 15.0, 33.66, 60.0] {
            let f = pump_field(&p, theta, PumpPolarization::S).map_err(|e| e.to_string())?;
            worst = worst.max((f.reflectance + f.transmittance - 1.0).abs());
        }
    }
    let n = 3.5;
    let grid = Grid { start_nm: -500.0, spacing_nm: 1.0, len: 1000 };
    let p = IndexProfile::steps(grid, 640.0, n, &[(0.0, n)], 1.0);
    let f = pump_field(&p, 0.0, PumpPolarization::S).map_err(|e| e.to_string())?;
    let fres = (f.reflectance - ((n - 1.0) / (n + 1.0)).powi(2)).abs();
    let el = t0.elapsed();
    check(worst < 1e-8 && fres < 1e-10, format!("max |R+T-1| {worst:.1e}; Fresnel error {fres:.1e}"))?;
    within(el, 5.0, format!("max |R+T-1| {worst:.1e}; Fresnel error {fres:.1e}"))
}

fn initial_stack(seed: u64) -> EpitaxialStack {
    let t = EpitaxialStack::table1();
    sample_initial_stack(seed, t.design_wavelengths_nm.pump, &t, &InitRanges::default(), Default::default())
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let cfg = OptimizeConfig {
        max_iters: 10,
        surrogate: SurrogatePlan {
            hidden: vec![32, 32],
            pretrain_samples: 24,
            train: TrainConfig { epochs: 60, ..TrainConfig::default() },
            ..SurrogatePlan::default()
        },
        ..OptimizeConfig::default()
    };
    let run = optimize(&initial_stack(0), &cfg, None).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in [0, 5, 10] {
        let u = &run.designs[k];
        let (_, g) = surrogate_gradient(&run.initial, u, &run.models, &cfg.profile).map_err(|e| e.to_string())?;
        let f = |x: &[f64]| {
            surrogate_fom(&run.initial, x, &run.models, &cfg.profile).map(|p| p.gamma_abs).unwrap_or(f64::NAN)
        };
        worst = worst.max(finite_difference_check(f, u, &g, 1e-6, FdNorm::MaxRelative).max_relative_error);
    }
    let el = t0.elapsed();
    check(worst < 1e-4, format!("max relative error {worst:.2e} at iterations 0, 5, 10"))?;
    within(el, 120.0, format!("max relative error {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let p = pump_wavelength(1092.0, 1550.0);
    let closed = 1092.0 * 1550.0 / (1092.0 + 1550.0);
    check(
        (p - closed).abs() <= 2.0 * f64::EPSILON * closed && (p * 100.0).round() / 100.0 == 640.65,
        format!("λp = {p:.10} nm (closed form {closed:.10})"),
    )
}

fn criterion_5(a: &AnalyzeSummary, tuning_csv: &Path, elapsed: Duration) -> Outcome {
    let mut r = csv::Reader::from_path(tuning_csv).map_err(|e| e.to_string())?;
    let rows: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let branches = ["HV", "VH"].iter().filter(|p| rows.iter().any(|row| &row[0] == **p && &row[4] == "ok")).count();
    let angles_ok = (32.0..=36.0).contains(&a.theta_hv_deg) && (32.0..=36.0).contains(&a.theta_vh_deg);
    let split_ok = (0.1..=0.6).contains(&a.splitting_deg);
    let detail = format!(
        "HV {:.3} deg, VH {:.3} deg, splitting {:.3} deg, {branches} branches",
        a.theta_hv_deg, a.theta_vh_deg, a.splitting_deg
    );
    check(angles_ok && split_ok && branches == 2, detail.clone())?;
    within(elapsed, 300.0, detail)
}

fn float_col(row: &csv::StringRecord, i: usize) -> Option<f64> {
    row.get(i).and_then(|v| v.parse().ok())
}

fn criterion_6(s: &OptimizeSummary, dir: &Path, elapsed: Duration) -> Outcome {
    let mut r = csv::Reader::from_path(dir.join("trajectory.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let reference: Vec<f64> = rows.iter().filter_map(|row| float_col(row, 2)).collect();
    let mut running = Vec::with_capacity(reference.len());
    for v in &reference {
        running.push(running.last().map_or(*v, |m: &f64| m.max(*v)));
    }
    let monotone = running.windows(2).all(|w| w[1] >= w[0]);
    let ratio = running.last().copied().unwrap_or(0.0) / reference.first().copied().unwrap_or(f64::NAN);

    let best = parse_stack(&std::fs::read_to_string(dir.join("best_stack.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let (values, _) = reference_fom(&best, &ProfileOptions::default()).map_err(|e| e.to_string())?;
    let roundtrip = (values.gamma_abs - s.best_reference_fom_pm_per_v).abs();
    let detail = format!(
        "{} iterations, |Γ| {:.4} -> {:.4} pm/V, ratio {ratio:.2}, best stack re-evaluates within {roundtrip:.1e}",
        s.iterations, s.initial_reference_fom_pm_per_v, s.best_reference_fom_pm_per_v
    );
    check(s.iterations == 300 && ratio >= 4.0 && monotone && roundtrip < 1e-9, detail.clone())?;
    within(elapsed, 1800.0, detail)
}

fn criterion_7(s: &OptimizeSummary, cfg: &OptimizeConfig) -> Outcome {
    let plan = &cfg.surrogate;
    let detail = format!(
        "max discrepancy {:.2}% over {} audits, {} fine-tunes of at most {} epochs, threshold {:.0e}",
        100.0 * s.max_rel_discrepancy,
        s.iterations + 1,
        s.finetunes,
        s.max_finetune_epochs,
        plan.train.mse_threshold
    );
    check(
        s.max_rel_discrepancy < 0.05
            && s.max_finetune_epochs <= 50
            && plan.finetune_epochs <= 50
            && plan.train.mse_threshold == 1e-6,
        detail,
    )
}

fn criterion_8() -> Outcome {
    let r = efficiency_ratio(43.0, 7.0).map_err(|e| e.to_string())?;
    check((36.0..=39.0).contains(&r), format!("efficiency_ratio(43, 7) = {r:.4}"))
}

fn synthetic(f: impl Fn(usize) -> (Complex64, Complex64)) -> JointSpectralAmplitude {
    let cells = 16;
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
    for i in 0..cells * cells {
        let (a, b) = f(i);
        j.phi_hv.push(a);
        j.phi_vh.push(b);
    }
    j.normalize().unwrap();
    j
}

fn criterion_9(a: &AnalyzeSummary) -> Outcome {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let disjoint = synthetic(|i| if i < 128 { (one, zero) } else { (zero, one) });
    let c_disjoint = polarization_state(&disjoint).map_err(|e| e.to_string())?.concurrence;
    let (_, c_ion) = ion_photon_state(3f64.sqrt() / 2.0, 0.5, false).map_err(|e| e.to_string())?;
    // Normalization survives construction and filtering.
    let shaped = synthetic(|i| {
        (Complex64::from_polar(1.0 + (i % 7) as f64, 0.1 * i as f64), Complex64::new(0.3, (i % 3) as f64))
    });
    let filtered = filter_jsa(&shaped, (0.0, f64::INFINITY), (0.0, f64::INFINITY)).map_err(|e| e.to_string())?;
    let norm_err = (shaped.norm_sqr() - 1.0).abs().max((filtered.jsa.norm_sqr() - 1.0).abs());
    let detail = format!(
        "ideal {:.9}, disjoint {c_disjoint:.1e}, ion {c_ion:.12}, normalization error {norm_err:.1e}",
        a.ideal_concurrence
    );
    check(
        (a.ideal_concurrence - 1.0).abs() < 1e-6
            && c_disjoint.abs() < 1e-12
            && (c_ion - 3f64.sqrt() / 2.0).abs() < 1e-12
            && norm_err < 1e-9,
        detail,
    )
}

/// Intensity grid from a JSI CSV: first row ω₁, first column ω₂.
fn read_jsi(path: &Path) -> Result<(Vec<f64>, usize, usize), String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let cols = r.headers().map_err(|e| e.to_string())?.len() - 1;
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        for v in rec.iter().skip(1) {
            values.push(v.parse::<f64>().map_err(|e| e.to_string())?);
        }
        rows += 1;
    }
    Ok((values, rows, cols))
}

fn criterion_10(dir: &Path) -> Outcome {
    let mut r = csv::Reader::from_path(dir.join("tuning.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let hv = rows.iter().filter(|r| &r[0] == "HV" && &r[4] == "ok").count();
    let vh = rows.iter().filter(|r| &r[0] == "VH" && &r[4] == "ok").count();

    let (full, fr, fc) = read_jsi(&dir.join("jsi.csv"))?;
    let (filt, gr, gc) = read_jsi(&dir.join("jsi_filtered.csv"))?;
    let lobes_full = count_lobes(&full, fr, fc, 0.1);
    let lobes_filt = count_lobes(&filt, gr, gc, 0.1);

    let mut m = csv::Reader::from_path(dir.join("marginal_signal.csv")).map_err(|e| e.to_string())?;
    let marg: Vec<(f64, f64)> =
        m.records().filter_map(|r| r.ok()).filter_map(|r| Some((float_col(&r, 1)?, float_col(&r, 2)?))).collect();
    let peak = marg.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0).unwrap_or(f64::NAN);
    let step = marg.windows(2).map(|w| (w[1].0 - w[0].0).abs()).fold(0.0, f64::max);
    let svgs = ["tuning.svg", "jsi.svg", "jsi_filtered.svg", "marginal.svg"].iter().all(|f| dir.join(f).exists());
    let detail = format!(
        "tuning samples HV {hv} / VH {vh}; JSI lobes {lobes_full} before, {lobes_filt} after filtering; \
         signal marginal peak {peak:.4} nm (step {step:.4} nm)"
    );
    check(hv > 0 && vh > 0 && lobes_full >= 3 && lobes_filt == 1 && (peak - 1092.0).abs() <= step && svgs, detail)
}

fn run(results: &mut Vec<(usize, Outcome)>, n: usize, f: impl FnOnce() -> Outcome) {
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default())
    });
    let (tag, msg) = match &r {
        Ok(m) => ("PASS", m),
        Err(m) => ("FAIL", m),
    };
    println!("criterion {n:>2}: {tag}: {msg}");
    results.push((n, r));
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut results = Vec::new();
    run(&mut results, 1, criterion_1);
    run(&mut results, 2, criterion_2);
    run(&mut results, 3, criterion_3);
    run(&mut results, 4, criterion_4);

    let analyze_dir = tmp.path().join("analyze");
    let t0 = Instant::now();
    let analysis = RunDir::create(&analyze_dir).and_then(|d| cmd_analyze(&AnalyzeRun::default(), &d));
    let analyze_time = t0.elapsed();
    match &analysis {
        Ok(a) => run(&mut results, 5, || criterion_5(a, &analyze_dir.join("tuning.csv"), analyze_time)),
        Err(e) => run(&mut results, 5, || Err(format!("analysis failed: {e}"))),
    }

    let opt_dir = tmp.path().join("optimize");
    let opt_cfg = OptimizeRun::default();
    let t0 = Instant::now();
    let opt = RunDir::create(&opt_dir).and_then(|d| cmd_optimize(&opt_cfg, &d));
    let opt_time = t0.elapsed();
    match &opt {
        Ok(s) => {
            run(&mut results, 6, || criterion_6(s, &opt_dir, opt_time));
            run(&mut results, 7, || criterion_7(s, &opt_cfg.optimize));
        }
        Err(e) => {
            run(&mut results, 6, || Err(format!("optimization failed: {e}")));
            run(&mut results, 7, || Err(format!("optimization failed: {e}")));
        }
    }
    run(&mut results, 8, criterion_8);
    match &analysis {
        Ok(a) => {
            run(&mut results, 9, || criterion_9(a));
            run(&mut results, 10, || criterion_10(&analyze_dir));
        }
        Err(e) => {
            run(&mut results, 9, || Err(format!("analysis failed: {e}")));
            run(&mut results, 10, || Err(format!("analysis failed: {e}")));
        }
    }
    let failed: Vec<usize> = results.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
