//! Small reverse-mode training engine for dense and LSTM stacks.

mod activation;
mod checkpoint;
mod layers;
mod loss;
mod network;
mod optim;
mod schedule;
mod tensor;
mod train;

pub use activation::Activation;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use layers::{Dense, Layer, LayerSpec, Lstm};
pub use loss::{mse, msle, LossKind};
pub use network::{Gradients, Network, NetworkSpec, Tape};
pub use optim::{optimizer_step, Optimizer, OptimizerConfig, OptimizerKind};
pub use schedule::{schedule_lr, Schedule};
pub use tensor::Tensor;
pub use train::{
    evaluate_loss, train, EarlyStopping, LossHistory, Samples, StopDecision, TrainConfig,
};
