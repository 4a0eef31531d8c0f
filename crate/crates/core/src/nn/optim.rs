use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use super::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd {
        #[serde(default)]
        momentum: f64,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    #[serde(rename = "rmsprop")]
    RmsProp { rho: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn sgd() -> Self {
        OptimizerKind::Sgd { momentum: 0.0 }
    }

    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn rmsprop() -> Self {
        OptimizerKind::RmsProp {
            rho: 0.9,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, learning_rate: f64, schedule: Schedule) -> Self {
        Self {
            kind,
            learning_rate,
            schedule,
        }
    }
}

/// Optimizer with per-parameter moment buffers.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, net: &Network) -> Self {
        let zeros: Vec<Vec<f64>> = net.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            kind,
            first: zeros.clone(),
            second: zeros,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Apply one update with learning rate `lr`.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients, lr: f64) {
        self.steps += 1;
        let t = self.steps as i32;
        for (((param, grad), m), v) in net
            .params_mut()
            .into_iter()
            .zip(&grads.0)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            match self.kind {
                OptimizerKind::Sgd { momentum } => {
                    for ((w, &g), vel) in param.iter_mut().zip(grad).zip(m.iter_mut()) {
                        *vel = momentum * *vel - lr * g;
                        *w += *vel;
                    }
                }
                OptimizerKind::Adam {
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let c1 = 1.0 - beta1.powi(t);
                    let c2 = 1.0 - beta2.powi(t);
                    for (((w, &g), mi), vi) in param
                        .iter_mut()
                        .zip(grad)
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        *mi = beta1 * *mi + (1.0 - beta1) * g;
                        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                        let m_hat = *mi / c1;
                        let v_hat = *vi / c2;
                        *w -= lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
                OptimizerKind::RmsProp { rho, epsilon } => {
                    for ((w, &g), vi) in param.iter_mut().zip(grad).zip(v.iter_mut()) {
                        *vi = rho * *vi + (1.0 - rho) * g * g;
                        *w -= lr * g / (vi.sqrt() + epsilon);
                    }
                }
            }
        }
    }
}

/// Single update on `net` with a fresh or existing optimizer state.
pub fn optimizer_step(state: &mut Optimizer, net: &mut Network, grads: &Gradients, lr: f64) {
    state.step(net, grads, lr);
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::super::layers::{Dense, Layer};
    use super::super::Activation;
    use super::*;

    fn scalar_net(w: f64) -> Network {
        Network::from_layers(
            1,
            vec![Layer::Dense(Dense {
                weights: array![[w]],
                bias: array![0.0],
                activation: Activation::Identity,
            })],
        )
    }

    fn grads(g: f64) -> Gradients {
        Gradients(vec![vec![g], vec![0.0]])
    }

    #[test]
    fn sgd_rule() {
        let mut net = scalar_net(0.0);
        let mut opt = Optimizer::new(OptimizerKind::sgd(), &net);
        opt.step(&mut net, &grads(1.0), 0.1);
        assert!((net.flat_params()[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_learning_rate() {
        let mut net = scalar_net(0.0);
        let mut opt = Optimizer::new(OptimizerKind::adam(), &net);
        opt.step(&mut net, &grads(1.0), 0.01);
        let dw = net.flat_params()[0];
        assert!((dw + 0.01).abs() < 1e-9, "{dw}");
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        for kind in [
            OptimizerKind::sgd(),
            OptimizerKind::adam(),
            OptimizerKind::rmsprop(),
        ] {
            let mut net = scalar_net(0.4);
            let before = net.flat_params();
            let mut opt = Optimizer::new(kind, &net);
            for _ in 0..3 {
                opt.step(&mut net, &grads(0.0), 0.1);
            }
            assert_eq!(net.flat_params(), before, "{kind:?}");
        }
    }

    #[test]
    fn vanishing_learning_rate_changes_nothing() {
        for kind in [
            OptimizerKind::sgd(),
            OptimizerKind::adam(),
            OptimizerKind::rmsprop(),
        ] {
            let mut net = scalar_net(0.4);
            let before = net.flat_params();
            let mut opt = Optimizer::new(kind, &net);
            opt.step(&mut net, &grads(3.7), 1e-14);
            for (a, b) in net.flat_params().iter().zip(&before) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
