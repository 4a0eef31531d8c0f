//! Run configuration and named presets.
//!
//! A [`RunConfig`] is a JSON document. Every preset is a fully populated
//! config, so `wildfire --preset fc-model-b` and a config file holding the
//! same values are interchangeable.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autoencoder::{AutoencoderKind, AutoencoderSpec, FC_ENCODER_UNITS, LSTM_ENCODER_UNITS};
use crate::cluster::{IsolationForestParams, Kernel, LofParams, MaxSamples, Metric, OcsvmParams};
use crate::data::synthetic::SyntheticConfig;
use crate::data::{FeatureSetName, ScalerMode, SplitPlan, WindowLabel};
use crate::error::{Error, Result};
use crate::importance::RfParams;
use crate::nn::{Activation, OptimizerConfig, OptimizerKind, Schedule, TrainConfig};

pub const WEATHER_FILE: &str = "weather.csv";
pub const NDVI_FILE: &str = "ndvi.csv";
pub const WILDFIRE_FILE: &str = "wildfires.csv";

/// Where the labelled table comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// A directory holding `weather.csv`, `ndvi.csv` and `wildfires.csv`.
    Directory {
        path: PathBuf,
    },
    Files {
        weather: PathBuf,
        ndvi: PathBuf,
        wildfire: PathBuf,
    },
    Synthetic {
        generator: SyntheticConfig,
    },
}

impl DataSource {
    /// The three input paths, or `None` for generated data.
    pub fn paths(&self) -> Option<(PathBuf, PathBuf, PathBuf)> {
        match self {
            DataSource::Directory { path } => Some((
                path.join(WEATHER_FILE),
                path.join(NDVI_FILE),
                path.join(WILDFIRE_FILE),
            )),
            DataSource::Files {
                weather,
                ndvi,
                wildfire,
            } => Some((weather.clone(), ndvi.clone(), wildfire.clone())),
            DataSource::Synthetic { .. } => None,
        }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self, DataSource::Synthetic { .. })
    }
}

/// Which pipelines a run executes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSelection {
    pub recon_fc: bool,
    pub recon_lstm: bool,
    pub cluster_iforest: bool,
    pub cluster_lof: bool,
    pub cluster_ocsvm: bool,
    pub importance: bool,
}

impl PipelineSelection {
    pub fn any_cluster(&self) -> bool {
        self.cluster_iforest || self.cluster_lof || self.cluster_ocsvm
    }

    pub fn is_empty(&self) -> bool {
        !(self.recon_fc || self.recon_lstm || self.any_cluster() || self.importance)
    }
}

/// Architecture and training settings for one autoencoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub encoder_units: Vec<usize>,
    pub bottleneck: usize,
    pub activation: Activation,
    /// Timesteps per window; only read by the LSTM model.
    #[serde(default = "default_window")]
    pub window_length: usize,
    pub train: TrainConfig,
    pub optimizer: OptimizerConfig,
}

fn default_window() -> usize {
    10
}

impl ModelSettings {
    pub fn spec(&self, kind: AutoencoderKind, input_dim: usize) -> AutoencoderSpec {
        AutoencoderSpec {
            kind,
            encoder_units: self.encoder_units.clone(),
            bottleneck: self.bottleneck,
            input_dim,
            window_length: match kind {
                AutoencoderKind::Fc => 1,
                AutoencoderKind::Lstm => self.window_length,
            },
            activation: self.activation,
        }
    }

    /// FC Model A: ReLU, batch 128, Adam with a cyclical learning rate.
    pub fn fc_model_a() -> Self {
        Self {
            encoder_units: FC_ENCODER_UNITS.to_vec(),
            bottleneck: 32,
            activation: Activation::Relu,
            window_length: 1,
            train: TrainConfig {
                epochs: 400,
                batch_size: 128,
                patience: 20,
                ..TrainConfig::default()
            },
            optimizer: OptimizerConfig::new(
                OptimizerKind::adam(),
                1e-3,
                Schedule::cyclical_default(),
            ),
        }
    }

    /// FC Model B: ReLU, batch 32, RMSProp with a constant learning rate.
    pub fn fc_model_b() -> Self {
        Self {
            train: TrainConfig {
                epochs: 400,
                batch_size: 32,
                patience: 20,
                ..TrainConfig::default()
            },
            optimizer: OptimizerConfig::new(OptimizerKind::rmsprop(), 1e-3, Schedule::None),
            ..Self::fc_model_a()
        }
    }

    /// LSTM autoencoder: Tanh, batch 32, Adam, constant learning rate.
    pub fn lstm_final() -> Self {
        Self {
            encoder_units: LSTM_ENCODER_UNITS.to_vec(),
            bottleneck: 16,
            activation: Activation::Tanh,
            window_length: 10,
            train: TrainConfig {
                epochs: 200,
                batch_size: 32,
                patience: 20,
                ..TrainConfig::default()
            },
            optimizer: OptimizerConfig::new(OptimizerKind::adam(), 1e-3, Schedule::None),
        }
    }

    /// Encoder used for latent features: Model A with an 8-wide bottleneck.
    pub fn latent() -> Self {
        Self {
            bottleneck: 8,
            ..Self::fc_model_a()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSettings {
    pub rf: RfParams,
    /// Also derive a reduced feature list from the fresh ranking instead of
    /// only reporting it.
    #[serde(default)]
    pub recompute: bool,
}

/// Everything a run needs. `out_dir` is excluded from the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<String>,
    pub data: DataSource,
    pub feature_set: FeatureSetName,
    pub seed: u64,
    pub pipeline: PipelineSelection,
    #[serde(default)]
    pub split: SplitPlan,
    #[serde(default)]
    pub scaler_mode: ScalerMode,
    #[serde(default)]
    pub window_label: WindowLabel,
    pub fc: ModelSettings,
    pub lstm: ModelSettings,
    pub latent: ModelSettings,
    pub iforest: IsolationForestParams,
    pub lof: LofParams,
    pub ocsvm: OcsvmParams,
    pub importance: ImportanceSettings,
    #[serde(default = "default_pca_dim")]
    pub pca_dim: usize,
    pub out_dir: PathBuf,
}

fn default_pca_dim() -> usize {
    3
}

/// Preset names with a one-line description.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "paper-dataset1",
        "all pipelines on the 28-feature set with the final tuned settings",
    ),
    (
        "paper-dataset2",
        "both reconstruction pipelines on the 17-feature set",
    ),
    (
        "fc-model-a",
        "FC autoencoder, ReLU, batch 128, Adam, cyclical learning rate",
    ),
    (
        "fc-model-b",
        "FC autoencoder, ReLU, batch 32, RMSProp, no schedule",
    ),
    (
        "lstm-final",
        "LSTM autoencoder, Tanh, batch 32, Adam, no schedule",
    ),
    (
        "iforest",
        "isolation forest Model A: 100 trees, max samples 0.9, contamination 0.5",
    ),
    (
        "iforest-b",
        "isolation forest Model B: 100 trees, max samples 0.9, contamination 0.2",
    ),
    (
        "iforest-final",
        "isolation forest, tuned: 200 trees, max samples 0.9, contamination 0.5",
    ),
    (
        "lof",
        "LOF Model C: 20 neighbours, contamination 0.5, Manhattan",
    ),
    (
        "lof-d",
        "LOF Model D: 12 neighbours, contamination 0.3, Manhattan",
    ),
    (
        "lof-tuned",
        "LOF, tuned: 8 neighbours, contamination 0.5, Manhattan",
    ),
    ("ocsvm", "one-class SVM Model E: RBF kernel, nu 0.6"),
    ("ocsvm-f", "one-class SVM Model F: RBF kernel, nu 0.3"),
    ("ocsvm-final", "one-class SVM, tuned: linear kernel, nu 0.6"),
    ("importance", "random-forest MDI ranking of the 28 features"),
    (
        "synthetic",
        "small FC reconstruction run on the bundled generator",
    ),
];

impl RunConfig {
    /// Defaults shared by every preset: the published data protocol, the
    /// tuned model settings and no pipelines selected.
    pub fn base() -> Self {
        Self {
            preset: None,
            data: DataSource::Directory {
                path: PathBuf::from("data"),
            },
            feature_set: FeatureSetName::Dataset1,
            seed: 0,
            pipeline: PipelineSelection::default(),
            split: SplitPlan::default(),
            scaler_mode: ScalerMode::PerSplit,
            window_label: WindowLabel::Any,
            fc: ModelSettings::fc_model_a(),
            lstm: ModelSettings::lstm_final(),
            latent: ModelSettings::latent(),
            iforest: IsolationForestParams {
                n_estimators: 200,
                max_samples: MaxSamples::Fraction(0.9),
                contamination: 0.5,
            },
            lof: LofParams {
                n_neighbors: 8,
                metric: Metric::Manhattan,
                contamination: 0.5,
            },
            ocsvm: OcsvmParams::new(Kernel::Linear, 0.6),
            importance: ImportanceSettings {
                rf: RfParams::default(),
                recompute: false,
            },
            pca_dim: 3,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::base();
        let p = &mut c.pipeline;
        match name {
            "paper-dataset1" => {
                *p = PipelineSelection {
                    recon_fc: true,
                    recon_lstm: true,
                    cluster_iforest: true,
                    cluster_lof: true,
                    cluster_ocsvm: true,
                    importance: true,
                };
            }
            "paper-dataset2" => {
                c.feature_set = FeatureSetName::Dataset2;
                p.recon_fc = true;
                p.recon_lstm = true;
            }
            "fc-model-a" => p.recon_fc = true,
            "fc-model-b" => {
                p.recon_fc = true;
                c.fc = ModelSettings::fc_model_b();
            }
            "lstm-final" => p.recon_lstm = true,
            "iforest" | "iforest-b" | "iforest-final" => {
                p.cluster_iforest = true;
                c.iforest.n_estimators = if name == "iforest-final" { 200 } else { 100 };
                c.iforest.contamination = if name == "iforest-b" { 0.2 } else { 0.5 };
            }
            "lof" | "lof-d" | "lof-tuned" => {
                p.cluster_lof = true;
                (c.lof.n_neighbors, c.lof.contamination) = match name {
                    "lof" => (20, 0.5),
                    "lof-d" => (12, 0.3),
                    _ => (8, 0.5),
                };
            }
            "ocsvm" => {
                p.cluster_ocsvm = true;
                c.ocsvm = OcsvmParams::new(Kernel::rbf(), 0.6);
            }
            "ocsvm-f" => {
                p.cluster_ocsvm = true;
                c.ocsvm = OcsvmParams::new(Kernel::rbf(), 0.3);
            }
            "ocsvm-final" => p.cluster_ocsvm = true,
            "importance" => p.importance = true,
            "synthetic" => {
                p.recon_fc = true;
                c.use_synthetic(SyntheticConfig::default());
                c.fc = ModelSettings::synthetic();
            }
            other => {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; available: {}",
                    names.join(", ")
                )));
            }
        }
        c.preset = Some(name.to_string());
        Ok(c)
    }

    /// Replace the data source with the bundled generator and its holdout
    /// sizes.
    pub fn use_synthetic(&mut self, generator: SyntheticConfig) {
        self.split = generator.split_plan();
        self.data = DataSource::Synthetic { generator };
    }

    /// Set the run seed; generated data follows it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let DataSource::Synthetic { generator } = &mut self.data {
            generator.seed = seed;
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(name) = &self.preset {
            if !PRESETS.iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!("unknown preset {name:?}")));
            }
        }
        if self.feature_set == FeatureSetName::Custom {
            return Err(Error::Config(
                "feature_set must be Dataset1 or Dataset2".into(),
            ));
        }
        for (name, m) in [
            ("fc", &self.fc),
            ("lstm", &self.lstm),
            ("latent", &self.latent),
        ] {
            m.train
                .validate()
                .map_err(|e| Error::Config(format!("{name}.train: {e}")))?;
            if !(m.optimizer.learning_rate > 0.0) {
                return Err(Error::Config(format!(
                    "{name}.optimizer.learning_rate must be positive"
                )));
            }
        }
        if self.lstm.window_length == 0 {
            return Err(Error::Config(
                "lstm.window_length must be at least 1".into(),
            ));
        }
        if self.pca_dim == 0 {
            return Err(Error::Config("pca_dim must be at least 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form without `out_dir`.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("out_dir");
        }
        sha256_hex(value.to_string().as_bytes())
    }

    /// Hash of only the settings that determine the prepared splits.
    pub fn data_hash(&self) -> String {
        let value = serde_json::json!({
            "data": self.data,
            "feature_set": self.feature_set,
            "seed": self.seed,
            "split": self.split,
            "scaler_mode": self.scaler_mode,
        });
        sha256_hex(value.to_string().as_bytes())
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}

impl ModelSettings {
    /// Compact FC model for the bundled generator: two hidden layers and
    /// an 8-wide bottleneck, trained for at most 60 epochs.
    pub fn synthetic() -> Self {
        Self {
            encoder_units: vec![64, 32],
            bottleneck: 8,
            train: TrainConfig {
                epochs: 60,
                batch_size: 32,
                patience: 10,
                ..TrainConfig::default()
            },
            optimizer: OptimizerConfig::new(OptimizerKind::adam(), 1e-3, Schedule::None),
            ..Self::fc_model_a()
        }
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
