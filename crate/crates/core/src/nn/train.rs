use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::LossKind;
use super::network::Network;
use super::optim::{Optimizer, OptimizerConfig};
use super::Tensor;
use crate::error::{Error, Result};

fn default_clip() -> Option<f64> {
    Some(5.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Early-stopping patience on validation loss; 0 disables it.
    pub patience: usize,
    pub seed: u64,
    #[serde(default)]
    pub loss: LossKind,
    /// Global gradient-norm clip.
    #[serde(default = "default_clip")]
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            batch_size: 32,
            patience: 20,
            seed: 0,
            loss: LossKind::Msle,
            clip_norm: default_clip(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "clip_norm must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Inputs paired with regression targets.
#[derive(Debug, Clone)]
pub struct Samples {
    pub inputs: Tensor,
    pub targets: Tensor,
}

impl Samples {
    pub fn new(inputs: Tensor, targets: Tensor) -> Result<Self> {
        if inputs.batch_len() != targets.batch_len() {
            return Err(Error::shape(inputs.batch_len(), targets.batch_len()));
        }
        Ok(Self { inputs, targets })
    }

    /// Targets equal to inputs.
    pub fn autoencoding(x: Tensor) -> Self {
        Self {
            targets: x.clone(),
            inputs: x,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.batch_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience counter on a monitored loss; lower is better.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Record `loss` for 1-based `epoch`.
    pub fn update(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            return StopDecision::Improved;
        }
        self.wait += 1;
        if self.patience > 0 && self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
    /// 1-based epoch with the lowest validation loss.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl LossHistory {
    pub fn epochs_run(&self) -> usize {
        self.train.len()
    }
}

const EVAL_CHUNK: usize = 1024;

/// Mean loss over `data`, evaluated in chunks.
pub fn evaluate_loss(net: &Network, data: &Samples, loss: LossKind) -> Result<f64> {
    let n = data.len();
    if n == 0 {
        return Err(Error::Domain("loss of empty sample set".into()));
    }
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let pred = net.forward(&data.inputs.slice_batch(start, end))?;
        total += loss.value(&data.targets.slice_batch(start, end), &pred)? * (end - start) as f64;
        start = end;
    }
    Ok(total / n as f64)
}

/// Mini-batch training with seeded shuffling and optional early stopping.
///
/// When early stopping fires the weights from the best validation epoch are
/// restored.
pub fn train(
    mut net: Network,
    train_data: &Samples,
    val_data: Option<&Samples>,
    cfg: &TrainConfig,
    opt_cfg: &OptimizerConfig,
) -> Result<(Network, LossHistory)> {
    cfg.validate()?;
    if !(opt_cfg.learning_rate > 0.0) {
        return Err(Error::Config(format!(
            "learning_rate must be positive, got {}",
            opt_cfg.learning_rate
        )));
    }
    if train_data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let val_data = val_data.filter(|v| !v.is_empty());
    if cfg.patience > 0 && val_data.is_none() {
        return Err(Error::Config(
            "early stopping needs a non-empty validation set".into(),
        ));
    }

    let n = train_data.len();
    let batches = n.div_ceil(cfg.batch_size);
    let schedule = opt_cfg.schedule.resolve(batches);
    let mut optimizer = Optimizer::new(opt_cfg.kind, &net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_params: Option<Vec<f64>> = None;
    let mut history = LossHistory::default();
    let mut step = 0usize;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train_data.inputs.select(chunk);
            let y = train_data.targets.select(chunk);
            let (pred, tape) = net.forward_train(&x)?;
            let (loss, d_out) = cfg.loss.value_and_grad(&y, &pred)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    detail: format!("batch loss {loss}"),
                });
            }
            let mut grads = net.backward(&tape, &d_out)?;
            if !grads.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    detail: "gradient".into(),
                });
            }
            if let Some(c) = cfg.clip_norm {
                grads.clip_global_norm(c);
            }
            let lr = schedule.learning_rate(opt_cfg.learning_rate, step);
            optimizer.step(&mut net, &grads, lr);
            step += 1;
            weighted += loss * chunk.len() as f64;
        }
        let train_loss = weighted / n as f64;
        history.train.push(train_loss);

        let Some(val) = val_data else {
            debug!("epoch {epoch}: train {train_loss:.6e}");
            continue;
        };
        let val_loss = evaluate_loss(&net, val, cfg.loss)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("validation loss {val_loss}"),
            });
        }
        history.validation.push(val_loss);
        debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}");
        match stopper.update(epoch, val_loss) {
            StopDecision::Improved => {
                if cfg.patience > 0 {
                    best_params = Some(net.flat_params());
                }
            }
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                if let Some(p) = &best_params {
                    net.set_flat_params(p)?;
                }
                break;
            }
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((net, history))
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::super::layers::{Dense, Layer};
    use super::super::optim::OptimizerKind;
    use super::super::schedule::Schedule;
    use super::super::{Activation, LayerSpec, NetworkSpec};
    use super::*;

    fn scalar_net() -> Network {
        Network::from_layers(
            1,
            vec![Layer::Dense(Dense {
                weights: array![[1.0]],
                bias: array![0.0],
                activation: Activation::Identity,
            })],
        )
    }

    fn column(values: &[f64]) -> Tensor {
        Tensor::Matrix(Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap())
    }

    fn sgd(lr: f64) -> OptimizerConfig {
        OptimizerConfig::new(OptimizerKind::sgd(), lr, Schedule::None)
    }

    fn cfg(epochs: usize, patience: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 4,
            patience,
            seed: 3,
            loss: LossKind::Mse,
            clip_norm: None,
        }
    }

    #[test]
    fn early_stopping_counter() {
        let mut es = EarlyStopping::new(20);
        assert_eq!(es.update(1, 1.0), StopDecision::Improved);
        for epoch in 2..21 {
            assert_eq!(es.update(epoch, 1.0 + epoch as f64), StopDecision::Continue);
        }
        assert_eq!(es.update(21, 50.0), StopDecision::Stop);
        assert_eq!(es.best_epoch(), Some(1));
    }

    #[test]
    fn zero_patience_runs_all_epochs() {
        let train_set = Samples::new(column(&[1.0; 8]), column(&[2.0; 8])).unwrap();
        let val = Samples::new(column(&[1.0]), column(&[0.0])).unwrap();
        let (_, h) = train(
            scalar_net(),
            &train_set,
            Some(&val),
            &cfg(30, 0),
            &sgd(0.01),
        )
        .unwrap();
        assert_eq!(h.train.len(), 30);
        assert_eq!(h.validation.len(), 30);
        assert!(!h.stopped_early);
    }

    #[test]
    fn increasing_validation_loss_stops_at_patience_plus_one() {
        // Training pulls the output toward 2 while validation wants 0.
        let train_set = Samples::new(column(&[1.0; 8]), column(&[2.0; 8])).unwrap();
        let val = Samples::new(column(&[1.0]), column(&[0.0])).unwrap();
        let (net, h) = train(
            scalar_net(),
            &train_set,
            Some(&val),
            &cfg(400, 20),
            &sgd(0.01),
        )
        .unwrap();
        assert!(h.validation.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(h.train.len(), 21);
        assert!(h.stopped_early);
        assert_eq!(h.best_epoch, Some(1));

        let (one, _) = train(scalar_net(), &train_set, Some(&val), &cfg(1, 0), &sgd(0.01)).unwrap();
        assert_eq!(net.flat_params(), one.flat_params());
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let spec = NetworkSpec {
            input_dim: 3,
            layers: vec![
                LayerSpec::Dense {
                    units: 5,
                    activation: Activation::Relu,
                },
                LayerSpec::Dense {
                    units: 3,
                    activation: Activation::Identity,
                },
            ],
        };
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let data = Samples::autoencoding(Tensor::Matrix(x));
        let opt = OptimizerConfig::new(OptimizerKind::adam(), 1e-3, Schedule::cyclical_default());
        let c = TrainConfig {
            epochs: 5,
            batch_size: 8,
            patience: 2,
            seed: 11,
            loss: LossKind::Msle,
            clip_norm: Some(5.0),
        };
        let run = || {
            let net = Network::build(&spec, 4).unwrap();
            train(net, &data, Some(&data), &c, &opt).unwrap()
        };
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
    }

    #[test]
    fn patience_without_validation_is_rejected() {
        let data = Samples::autoencoding(column(&[0.5; 4]));
        assert!(matches!(
            train(scalar_net(), &data, None, &cfg(2, 3), &sgd(0.1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn divergence_reports_epoch() {
        let train_set = Samples::new(column(&[1e200; 4]), column(&[0.0; 4])).unwrap();
        let err = train(scalar_net(), &train_set, None, &cfg(3, 0), &sgd(1.0)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { epoch: 1, .. }), "{err}");
    }
}
