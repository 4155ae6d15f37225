use std::sync::OnceLock;

use nlwg::modes::Polarization;
use nlwg::quad::trapz;
use nlwg::stack::{build_index_profile, DesignBounds, DesignScale, DesignVector, EpitaxialStack, ProfileOptions};
use nlwg::surrogate::{
    fine_tune, generate_dataset, read_checkpoint, train, write_checkpoint, Dataset, DatasetConfig, Encoding, Sampler,
    SurrogateError, SurrogateModel, TrainConfig,
};

fn config(n: usize, seed: u64, half_width: f64) -> DatasetConfig {
    let center =
        DesignVector::encode(&EpitaxialStack::table1(), &DesignBounds::default(), &DesignScale::default()).unwrap();
    DatasetConfig {
        n,
        lambda_nm: 1092.0,
        polarization: Polarization::TE,
        seed,
        validation_fraction: 0.2,
        encoding: Encoding::default(),
        profile: ProfileOptions::default(),
        sampler: Sampler::Neighborhood { center, half_width },
    }
}

fn small() -> &'static Dataset {
    static D: OnceLock<Dataset> = OnceLock::new();
    D.get_or_init(|| generate_dataset(&config(24, 3, 0.002)).unwrap())
}

fn fresh_model(d: &Dataset, seed: u64) -> SurrogateModel {
    SurrogateModel::new(Polarization::TE, 1092.0, 1.0, d.config.encoding, &[32, 32], &d.samples, seed).unwrap()
}

#[test]
fn dataset_is_reproducible() {
    let a = generate_dataset(&config(4, 11, 0.002)).unwrap();
    let b = generate_dataset(&config(4, 11, 0.002)).unwrap();
    assert_eq!(a.id(), b.id());
    assert_eq!(a.samples, b.samples);
    let c = generate_dataset(&config(4, 12, 0.002)).unwrap();
    assert_ne!(a.id(), c.id());
}

#[test]
fn empty_dataset_is_a_config_error() {
    assert!(matches!(generate_dataset(&config(0, 0, 0.002)), Err(SurrogateError::Config(_))));
}

#[test]
fn targets_have_unit_power_on_the_nodes() {
    let enc = Encoding::default();
    for s in &small().samples {
        let sq: Vec<f64> = s.target_field.iter().map(|v| v * v).collect();
        assert!((trapz(&sq, enc.node_spacing_nm()) - 1.0).abs() < 1e-8);
        let peak = s.target_field.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        assert!(peak > 0.0);
    }
}

#[test]
fn one_sample_reaches_the_threshold() {
    let d = small();
    let one = Dataset { config: DatasetConfig { n: 1, ..d.config.clone() }, samples: d.samples[..1].to_vec() };
    let mut m = fresh_model(&one, 0);
    let report = train(&mut m, &one, &TrainConfig { epochs: 200, ..TrainConfig::default() }).unwrap();
    assert!(report.reached_threshold, "{}", report.best_validation_mse);
    assert!(report.best_validation_mse < 1e-6);
    assert_eq!(m.metadata.final_mse, report.best_validation_mse);
}

#[test]
fn zero_learning_rate_keeps_the_loss_flat() {
    let d = small();
    let mut m = fresh_model(d, 1);
    let r = train(&mut m, d, &TrainConfig { epochs: 5, lr: 0.0, patience: 100, ..TrainConfig::default() }).unwrap();
    let first = r.history[0].train_mse;
    assert!(r.history.iter().all(|e| e.train_mse == first));
}

#[test]
fn training_and_prediction_are_deterministic() {
    let d = small();
    let cfg = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let (mut a, mut b) = (fresh_model(d, 5), fresh_model(d, 5));
    let ra = train(&mut a, d, &cfg).unwrap();
    let rb = train(&mut b, d, &cfg).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a, b);
    let p = build_index_profile(&EpitaxialStack::table1(), 1092.0, &ProfileOptions::default()).unwrap();
    assert_eq!(a.predict(&p).unwrap(), a.predict(&p).unwrap());
}

#[test]
fn zero_budget_fine_tune_is_a_no_op() {
    let d = small();
    let mut m = fresh_model(d, 2);
    train(&mut m, d, &TrainConfig { epochs: 10, ..TrainConfig::default() }).unwrap();
    let before = m.clone();
    let r = fine_tune(&mut m, &d.samples[..3], &d.samples, 0, &TrainConfig::default()).unwrap();
    assert_eq!(r.epochs, 0);
    assert_eq!(m, before);
}

#[test]
fn fine_tuning_on_a_shifted_family_lowers_its_error() {
    let d = small();
    let mut m = fresh_model(d, 4);
    train(&mut m, d, &TrainConfig { epochs: 100, ..TrainConfig::default() }).unwrap();
    // Same neighborhood size, different center.
    let mut far = config(8, 9, 0.002);
    if let Sampler::Neighborhood { center, .. } = &mut far.sampler {
        let shifted: Vec<f64> = center.values.iter().map(|v| v + 0.01).collect();
        *center = center.with_values(shifted);
    }
    let shifted = generate_dataset(&far).unwrap();
    let cfg = TrainConfig { lr: 1e-4, ..TrainConfig::default() };
    let r = fine_tune(&mut m, &shifted.samples, &d.samples, 50, &cfg).unwrap();
    assert!(r.epochs <= 50);
    assert!(r.mse_after < r.mse_before, "{} -> {}", r.mse_before, r.mse_after);
    assert_eq!(r.version, 2);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let d = small();
    let mut m = fresh_model(d, 6);
    train(&mut m, d, &TrainConfig { epochs: 5, ..TrainConfig::default() }).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&m, &mut bytes).unwrap();
    let back = read_checkpoint(bytes.as_slice()).unwrap();
    assert_eq!(back, m);

    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(read_checkpoint(trailing.as_slice()).is_err());
    assert!(read_checkpoint(&bytes[..bytes.len() - 3]).is_err());
    let mut bad_magic = bytes.clone();
    bad_magic[0] ^= 0xff;
    assert!(read_checkpoint(bad_magic.as_slice()).is_err());
}
