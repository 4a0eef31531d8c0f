//! Mirrored fully connected and LSTM autoencoders.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::MinMaxScaler;
use crate::error::{Error, Result};
use crate::nn::{
    self, Activation, Checkpoint, LayerSpec, LossHistory, Network, NetworkSpec, OptimizerConfig,
    Samples, Tensor, TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoencoderKind {
    Fc,
    Lstm,
}

pub const FC_ENCODER_UNITS: [usize; 5] = [512, 256, 128, 64, 32];
pub const LSTM_ENCODER_UNITS: [usize; 5] = [256, 128, 64, 32, 16];

/// Encoder widths plus bottleneck; the decoder mirrors the encoder.
///
/// When `bottleneck` differs from the last encoder width it is appended as
/// one more encoder layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    pub kind: AutoencoderKind,
    pub encoder_units: Vec<usize>,
    pub bottleneck: usize,
    pub input_dim: usize,
    /// Timesteps per window (LSTM only).
    #[serde(default = "default_window")]
    pub window_length: usize,
    pub activation: Activation,
}

fn default_window() -> usize {
    10
}

impl AutoencoderSpec {
    pub fn fc(input_dim: usize) -> Self {
        Self {
            kind: AutoencoderKind::Fc,
            encoder_units: FC_ENCODER_UNITS.to_vec(),
            bottleneck: 32,
            input_dim,
            window_length: 1,
            activation: Activation::Relu,
        }
    }

    pub fn lstm(input_dim: usize, window_length: usize) -> Self {
        Self {
            kind: AutoencoderKind::Lstm,
            encoder_units: LSTM_ENCODER_UNITS.to_vec(),
            bottleneck: 16,
            input_dim,
            window_length,
            activation: Activation::Tanh,
        }
    }

    pub fn with_bottleneck(mut self, bottleneck: usize) -> Self {
        self.bottleneck = bottleneck;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder_units.is_empty() {
            return Err(Error::Config("encoder_units must not be empty".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be at least 1".into()));
        }
        if self.bottleneck == 0 || self.encoder_units.contains(&0) {
            return Err(Error::Config("layer widths must be at least 1".into()));
        }
        if self.kind == AutoencoderKind::Lstm && self.window_length == 0 {
            return Err(Error::Config("window_length must be at least 1".into()));
        }
        Ok(())
    }

    /// Encoder widths ending at the bottleneck.
    pub fn encoder_widths(&self) -> Vec<usize> {
        let mut widths = self.encoder_units.clone();
        if widths.last() != Some(&self.bottleneck) {
            widths.push(self.bottleneck);
        }
        widths
    }

    /// Hidden decoder widths, excluding the output projection.
    pub fn decoder_widths(&self) -> Vec<usize> {
        let enc = self.encoder_widths();
        enc[..enc.len() - 1].iter().rev().copied().collect()
    }

    /// Number of leading layers whose output is the latent code.
    pub fn encoder_depth(&self) -> usize {
        self.encoder_widths().len()
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        self.validate()?;
        let enc = self.encoder_widths();
        let dec = self.decoder_widths();
        let act = self.activation;
        let mut layers = Vec::with_capacity(enc.len() + dec.len() + 2);
        match self.kind {
            AutoencoderKind::Fc => {
                for &units in enc.iter().chain(&dec) {
                    layers.push(LayerSpec::Dense {
                        units,
                        activation: act,
                    });
                }
            }
            AutoencoderKind::Lstm => {
                let last = enc.len() - 1;
                for (i, &units) in enc.iter().enumerate() {
                    layers.push(LayerSpec::Lstm {
                        units,
                        activation: act,
                        return_sequences: i != last,
                    });
                }
                layers.push(LayerSpec::RepeatVector {
                    times: self.window_length,
                });
                for &units in &dec {
                    layers.push(LayerSpec::Lstm {
                        units,
                        activation: act,
                        return_sequences: true,
                    });
                }
            }
        }
        layers.push(LayerSpec::Dense {
            units: self.input_dim,
            activation: Activation::Identity,
        });
        Ok(NetworkSpec {
            input_dim: self.input_dim,
            layers,
        })
    }
}

/// Build the untrained network for `spec`.
pub fn build(spec: &AutoencoderSpec, seed: u64) -> Result<Network> {
    Network::build(&spec.network_spec()?, seed)
}

/// A network together with the autoencoder layout it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    spec: AutoencoderSpec,
    network: Network,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AutoencoderFile {
    autoencoder: AutoencoderSpec,
    #[serde(flatten)]
    checkpoint: Checkpoint,
}

impl Autoencoder {
    pub fn build(spec: AutoencoderSpec, seed: u64) -> Result<Self> {
        let network = build(&spec, seed)?;
        Ok(Self { spec, network })
    }

    pub fn from_parts(spec: AutoencoderSpec, network: Network) -> Result<Self> {
        let expected = spec.network_spec()?;
        if network.spec() != expected {
            return Err(Error::Schema(
                "network layout does not match the autoencoder spec".into(),
            ));
        }
        Ok(Self { spec, network })
    }

    pub fn spec(&self) -> &AutoencoderSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn into_network(self) -> Network {
        self.network
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        let shape = x.shape();
        let ok = match (self.spec.kind, x) {
            (AutoencoderKind::Fc, Tensor::Matrix(_)) => shape[1] == self.spec.input_dim,
            (AutoencoderKind::Lstm, Tensor::Sequence(_)) => {
                shape[1] == self.spec.window_length && shape[2] == self.spec.input_dim
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            let expected = match self.spec.kind {
                AutoencoderKind::Fc => format!("(n, {})", self.spec.input_dim),
                AutoencoderKind::Lstm => {
                    format!("(n, {}, {})", self.spec.window_length, self.spec.input_dim)
                }
            };
            Err(Error::shape(expected, format!("{shape:?}")))
        }
    }

    /// Network output; same shape as `x`.
    pub fn reconstruct(&self, x: &Tensor) -> Result<Tensor> {
        self.check(x)?;
        self.network.forward(x)
    }

    /// Bottleneck activations, one row per sample. For the LSTM variant this
    /// is the final hidden state of the innermost encoder layer.
    pub fn encode(&self, x: &Tensor) -> Result<Array2<f64>> {
        self.check(x)?;
        self.network
            .forward_prefix(x, self.spec.encoder_depth())?
            .into_matrix()
    }

    /// Train to reconstruct `train_x`, monitoring `val_x`.
    pub fn fit(
        self,
        train_x: &Tensor,
        val_x: Option<&Tensor>,
        cfg: &TrainConfig,
        opt: &OptimizerConfig,
    ) -> Result<(Self, LossHistory)> {
        self.check(train_x)?;
        if let Some(v) = val_x {
            self.check(v)?;
        }
        let train_set = Samples::autoencoding(train_x.clone());
        let val_set = val_x.map(|v| Samples::autoencoding(v.clone()));
        let (network, history) = nn::train(self.network, &train_set, val_set.as_ref(), cfg, opt)?;
        Ok((
            Self {
                spec: self.spec,
                network,
            },
            history,
        ))
    }

    pub fn save(&self, path: &Path, scaler: Option<MinMaxScaler>, config_hash: &str) -> Result<()> {
        let file = AutoencoderFile {
            autoencoder: self.spec.clone(),
            checkpoint: Checkpoint::from_network(&self.network, scaler, config_hash),
        };
        fs::write(path, serde_json::to_string(&file)?).map_err(|e| Error::io(path, e))
    }

    /// Load a saved model with its scaler statistics and config hash.
    pub fn load(path: &Path) -> Result<(Self, Checkpoint)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: AutoencoderFile = serde_json::from_str(&text)?;
        let network = file.checkpoint.network()?;
        let ae = Self::from_parts(file.autoencoder, network)?;
        Ok((ae, file.checkpoint))
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array3;
    use proptest::prelude::*;

    use super::*;
    use crate::nn::{Layer, LossKind, OptimizerKind, Schedule};

    fn widths(net: &Network) -> Vec<usize> {
        let mut w = vec![net.input_dim()];
        w.extend(net.layers().iter().filter_map(|l| l.spec().units()));
        w
    }

    #[test]
    fn fc_default_layout() {
        let net = build(&AutoencoderSpec::fc(28), 0).unwrap();
        assert_eq!(
            widths(&net),
            [28, 512, 256, 128, 64, 32, 64, 128, 256, 512, 28]
        );
        let Layer::Dense(out) = net.layers().last().unwrap() else {
            panic!("dense output expected")
        };
        assert_eq!(out.activation, Activation::Identity);
    }

    #[test]
    fn lstm_default_layout() {
        let spec = AutoencoderSpec::lstm(28, 10);
        let net = build(&spec, 0).unwrap();
        assert_eq!(
            widths(&net),
            [28, 256, 128, 64, 32, 16, 32, 64, 128, 256, 28]
        );
        let kinds: Vec<_> = net
            .layers()
            .iter()
            .map(|l| match l.spec() {
                LayerSpec::Lstm {
                    return_sequences, ..
                } => {
                    if return_sequences {
                        "seq"
                    } else {
                        "last"
                    }
                }
                LayerSpec::RepeatVector { .. } => "repeat",
                LayerSpec::Dense { .. } => "dense",
            })
            .collect();
        assert_eq!(
            kinds,
            ["seq", "seq", "seq", "seq", "last", "repeat", "seq", "seq", "seq", "seq", "dense"]
        );
    }

    #[test]
    fn single_layer_parameter_count() {
        let spec = AutoencoderSpec {
            encoder_units: vec![4],
            bottleneck: 4,
            ..AutoencoderSpec::fc(4)
        };
        let net = build(&spec, 0).unwrap();
        assert_eq!(widths(&net), [4, 4, 4]);
        assert_eq!(net.param_count(), 2 * (4 * 4 + 4));
    }

    #[test]
    fn clustering_bottleneck_is_appended() {
        let spec = AutoencoderSpec::fc(28).with_bottleneck(8);
        assert_eq!(spec.encoder_widths(), [512, 256, 128, 64, 32, 8]);
        assert_eq!(spec.decoder_widths(), [32, 64, 128, 256, 512]);
    }

    #[test]
    fn empty_encoder_is_rejected() {
        let spec = AutoencoderSpec {
            encoder_units: vec![],
            ..AutoencoderSpec::fc(4)
        };
        assert!(matches!(build(&spec, 0), Err(Error::Config(_))));
    }

    #[test]
    fn encode_width_is_bottleneck() {
        let spec = AutoencoderSpec {
            encoder_units: vec![16, 8],
            ..AutoencoderSpec::fc(5)
        }
        .with_bottleneck(3);
        let ae = Autoencoder::build(spec, 1).unwrap();
        let x = Tensor::Matrix(Array2::from_elem((7, 5), 0.5));
        assert_eq!(ae.encode(&x).unwrap().dim(), (7, 3));

        let spec = AutoencoderSpec {
            encoder_units: vec![6, 4],
            bottleneck: 4,
            ..AutoencoderSpec::lstm(3, 5)
        };
        let ae = Autoencoder::build(spec, 1).unwrap();
        let x = Tensor::Sequence(Array3::from_elem((2, 5, 3), 0.5));
        assert_eq!(ae.encode(&x).unwrap().dim(), (2, 4));
        assert_eq!(ae.reconstruct(&x).unwrap().shape(), [2, 5, 3]);
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let ae = Autoencoder::build(AutoencoderSpec::fc(4), 0).unwrap();
        let x = Tensor::Matrix(Array2::zeros((2, 3)));
        assert!(matches!(ae.reconstruct(&x), Err(Error::Shape { .. })));
    }

    #[test]
    fn build_is_deterministic() {
        let spec = AutoencoderSpec {
            encoder_units: vec![8, 4],
            ..AutoencoderSpec::fc(6)
        };
        let x = Tensor::Matrix(Array2::from_shape_fn((3, 6), |(i, j)| (i + j) as f64 / 8.0));
        let a = Autoencoder::build(spec.clone(), 42).unwrap();
        let b = Autoencoder::build(spec, 42).unwrap();
        assert_eq!(a.reconstruct(&x).unwrap(), b.reconstruct(&x).unwrap());
    }

    #[test]
    fn converges_on_constant_rows() {
        let spec = AutoencoderSpec {
            encoder_units: vec![8, 4],
            ..AutoencoderSpec::fc(4)
        };
        let x = Tensor::Matrix(Array2::from_elem((64, 4), 0.3));
        let cfg = TrainConfig {
            epochs: 300,
            batch_size: 16,
            patience: 0,
            seed: 0,
            loss: LossKind::Msle,
            clip_norm: Some(5.0),
        };
        let opt = OptimizerConfig::new(OptimizerKind::adam(), 1e-2, Schedule::None);
        let (ae, _) = Autoencoder::build(spec, 3)
            .unwrap()
            .fit(&x, None, &cfg, &opt)
            .unwrap();
        let out = ae.reconstruct(&x).unwrap();
        let worst = out
            .as_slice()
            .iter()
            .map(|v| (v - 0.3).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-2, "max deviation {worst}");
    }

    #[test]
    fn save_and_load_round_trip() {
        let spec = AutoencoderSpec {
            encoder_units: vec![6, 3],
            ..AutoencoderSpec::fc(4)
        };
        let ae = Autoencoder::build(spec, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        ae.save(&path, None, "h").unwrap();
        let (back, ckpt) = Autoencoder::load(&path).unwrap();
        assert_eq!(back, ae);
        assert_eq!(ckpt.config_hash, "h");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decoder_mirrors_encoder(
            units in prop::collection::vec(1usize..40, 1..6),
            bottleneck in 1usize..40,
        ) {
            let spec = AutoencoderSpec {
                encoder_units: units,
                bottleneck,
                ..AutoencoderSpec::fc(7)
            };
            let enc = spec.encoder_widths();
            let mut dec = spec.decoder_widths();
            dec.reverse();
            prop_assert_eq!(&dec[..], &enc[..enc.len() - 1]);
            let net = build(&spec, 0).unwrap();
            let w = widths(&net);
            let mut rev = w.clone();
            rev.reverse();
            prop_assert_eq!(w, rev);
        }

        #[test]
        fn reconstruct_preserves_shape(rows in 1usize..20, dim in 1usize..6, seed in 0u64..100) {
            let spec = AutoencoderSpec {
                encoder_units: vec![5, 2],
                ..AutoencoderSpec::fc(dim)
            };
            let ae = Autoencoder::build(spec, seed).unwrap();
            let x = Tensor::Matrix(Array2::from_elem((rows, dim), 0.25));
            prop_assert_eq!(ae.reconstruct(&x).unwrap().shape(), vec![rows, dim]);
        }
    }
}
