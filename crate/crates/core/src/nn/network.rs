use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Cache, Dense, Layer, LayerSpec, Lstm};
use super::Tensor;
use crate::error::{Error, Result};

/// Input width plus ordered layer topology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

/// Per-parameter-tensor gradients, in [`Network::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.0
            .iter_mut()
            .flat_map(|g| g.iter_mut())
            .for_each(|v| *v *= factor);
    }

    /// Rescale so the global L2 norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm.is_finite() {
            self.scale(max_norm / norm);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

/// Forward-pass record consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    caches: Vec<Cache>,
}

/// A feed-forward stack of dense, LSTM and repeat layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// Build with Glorot-uniform kernels and zero biases (LSTM forget bias 1).
    pub fn build(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        if spec.input_dim == 0 {
            return Err(Error::Config("input_dim must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut width = spec.input_dim;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for ls in &spec.layers {
            let layer = match *ls {
                LayerSpec::Dense { units, activation } => {
                    check_units(units)?;
                    Layer::Dense(Dense::new(width, units, activation, &mut rng))
                }
                LayerSpec::Lstm {
                    units,
                    activation,
                    return_sequences,
                } => {
                    check_units(units)?;
                    Layer::Lstm(Lstm::new(
                        width,
                        units,
                        activation,
                        return_sequences,
                        &mut rng,
                    )?)
                }
                LayerSpec::RepeatVector { times } => {
                    if times == 0 {
                        return Err(Error::Config("repeat count must be at least 1".into()));
                    }
                    Layer::RepeatVector { times }
                }
            };
            if let Some(u) = ls.units() {
                width = u;
            }
            layers.push(layer);
        }
        Ok(Self {
            input_dim: spec.input_dim,
            layers,
        })
    }

    pub fn from_layers(input_dim: usize, layers: Vec<Layer>) -> Self {
        Self { input_dim, layers }
    }

    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec {
            input_dim: self.input_dim,
            layers: self.layers.iter().map(Layer::spec).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.features() != self.input_dim {
            return Err(Error::shape(
                format!("{} input features", self.input_dim),
                format!("shape {:?}", x.shape()),
            ));
        }
        Ok(())
    }

    /// Inference-only forward pass.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.forward_prefix(x, self.layers.len())
    }

    /// Output of the first `n_layers` layers.
    pub fn forward_prefix(&self, x: &Tensor, n_layers: usize) -> Result<Tensor> {
        self.check_input(x)?;
        let mut cur = x.clone().into_standard();
        for layer in &self.layers[..n_layers] {
            cur = layer.forward(&cur, false)?.0.into_standard();
        }
        Ok(cur)
    }

    /// Forward pass that records what [`Network::backward`] needs.
    pub fn forward_train(&self, x: &Tensor) -> Result<(Tensor, Tape)> {
        self.check_input(x)?;
        let mut cur = x.clone().into_standard();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (out, cache) = layer.forward(&cur, true)?;
            caches.push(cache.expect("recording forward returns a cache"));
            cur = out.into_standard();
        }
        Ok((cur, Tape { caches }))
    }

    /// Reverse-mode pass from the gradient of the loss w.r.t. the output.
    pub fn backward(&self, tape: &Tape, d_output: &Tensor) -> Result<Gradients> {
        let mut per_layer: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.layers.len());
        let mut grad = d_output.clone().into_standard();
        for (layer, cache) in self.layers.iter().zip(&tape.caches).rev() {
            let (dx, dparams) = layer.backward(cache, &grad)?;
            per_layer.push(dparams);
            grad = dx.into_standard();
        }
        per_layer.reverse();
        Ok(Gradients(per_layer.into_iter().flatten().collect()))
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().into_iter().flatten().copied().collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if values.len() != expected {
            return Err(Error::shape(
                format!("{expected} parameters"),
                format!("{}", values.len()),
            ));
        }
        let mut offset = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

fn check_units(units: usize) -> Result<()> {
    if units == 0 {
        return Err(Error::Config("layer units must be at least 1".into()));
    }
    Ok(())
}
