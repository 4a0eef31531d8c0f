//! Presets against the published hyperparameter tables.

use wildfire_core::cluster::{Kernel, MaxSamples, Metric};
use wildfire_core::config::{RunConfig, PRESETS};
use wildfire_core::nn::{Activation, OptimizerKind, Schedule};
use wildfire_core::FeatureSetName;

fn preset(name: &str) -> RunConfig {
    RunConfig::preset(name).unwrap()
}

#[test]
fn every_listed_preset_resolves_and_validates() {
    for (name, _) in PRESETS {
        let cfg = preset(name);
        cfg.validate().unwrap();
        assert!(!cfg.pipeline.is_empty(), "{name} selects nothing");
    }
    assert!(RunConfig::preset("nope").is_err());
}

#[test]
fn random_forest_parameters() {
    let rf = preset("importance").importance.rf;
    assert_eq!(rf.n_estimators, 100);
    assert_eq!(rf.min_samples_split, 2);
    assert_eq!(rf.min_samples_leaf, 2);
}

#[test]
fn fc_models() {
    let a = preset("fc-model-a").fc;
    assert_eq!(a.encoder_units, vec![512, 256, 128, 64, 32]);
    assert_eq!(a.bottleneck, 32);
    assert_eq!(a.activation, Activation::Relu);
    assert_eq!(a.train.batch_size, 128);
    assert_eq!(a.train.epochs, 400);
    assert_eq!(a.train.patience, 20);
    assert!(matches!(a.optimizer.kind, OptimizerKind::Adam { .. }));
    assert!(matches!(a.optimizer.schedule, Schedule::Cyclical { .. }));

    let b = preset("fc-model-b").fc;
    assert_eq!(b.encoder_units, a.encoder_units);
    assert_eq!(b.activation, Activation::Relu);
    assert_eq!(b.train.batch_size, 32);
    assert_eq!(b.train.epochs, 400);
    assert!(matches!(b.optimizer.kind, OptimizerKind::RmsProp { .. }));
    assert_eq!(b.optimizer.schedule, Schedule::None);
}

#[test]
fn lstm_final() {
    let l = preset("lstm-final").lstm;
    assert_eq!(l.encoder_units, vec![256, 128, 64, 32, 16]);
    assert_eq!(l.bottleneck, 16);
    assert_eq!(l.activation, Activation::Tanh);
    assert_eq!(l.window_length, 10);
    assert_eq!(l.train.batch_size, 32);
    assert_eq!(l.train.epochs, 200);
    assert!(matches!(l.optimizer.kind, OptimizerKind::Adam { .. }));
    assert_eq!(l.optimizer.schedule, Schedule::None);
}

#[test]
fn latent_autoencoder_has_eight_wide_bottleneck() {
    let latent = preset("paper-dataset1").latent;
    assert_eq!(latent.bottleneck, 8);
    assert_eq!(latent.encoder_units, vec![512, 256, 128, 64, 32]);
}

#[test]
fn isolation_forests() {
    for (name, trees, contamination) in [
        ("iforest", 100, 0.5),
        ("iforest-b", 100, 0.2),
        ("iforest-final", 200, 0.5),
    ] {
        let p = preset(name).iforest;
        assert_eq!(p.n_estimators, trees, "{name}");
        assert_eq!(p.max_samples, MaxSamples::Fraction(0.9), "{name}");
        assert_eq!(p.contamination, contamination, "{name}");
    }
}

#[test]
fn local_outlier_factors() {
    for (name, k, contamination) in [("lof", 20, 0.5), ("lof-d", 12, 0.3), ("lof-tuned", 8, 0.5)] {
        let p = preset(name).lof;
        assert_eq!(p.n_neighbors, k, "{name}");
        assert_eq!(p.contamination, contamination, "{name}");
        assert_eq!(p.metric, Metric::Manhattan, "{name}");
    }
}

#[test]
fn one_class_svms() {
    for (name, rbf, nu) in [
        ("ocsvm", true, 0.6),
        ("ocsvm-f", true, 0.3),
        ("ocsvm-final", false, 0.6),
    ] {
        let p = preset(name).ocsvm;
        assert_eq!(matches!(p.kernel, Kernel::Rbf { .. }), rbf, "{name}");
        assert_eq!(matches!(p.kernel, Kernel::Linear), !rbf, "{name}");
        assert_eq!(p.nu, nu, "{name}");
    }
}

#[test]
fn dataset_presets() {
    let d1 = preset("paper-dataset1");
    assert_eq!(d1.feature_set, FeatureSetName::Dataset1);
    assert!(d1.pipeline.recon_fc && d1.pipeline.recon_lstm && d1.pipeline.any_cluster());
    let d2 = preset("paper-dataset2");
    assert_eq!(d2.feature_set, FeatureSetName::Dataset2);
    assert!(d2.pipeline.recon_fc && d2.pipeline.recon_lstm && !d2.pipeline.any_cluster());
}

#[test]
fn default_split_matches_published_protocol() {
    let s = preset("paper-dataset1").split;
    assert_eq!((s.nominal_per_holdout, s.wildfire_per_holdout), (715, 1000));
}
