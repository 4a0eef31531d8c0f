use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Learning-rate schedule evaluated per optimizer step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    None,
    ExponentialDecay {
        decay_steps: usize,
        decay_rate: f64,
        #[serde(default)]
        staircase: bool,
    },
    PolynomialDecay {
        decay_steps: usize,
        end_learning_rate: f64,
        power: f64,
    },
    InverseTimeDecay {
        decay_steps: usize,
        decay_rate: f64,
    },
    CosineDecay {
        decay_steps: usize,
        alpha: f64,
    },
    /// Triangular cycle between `base_lr` and `max_lr` with period
    /// `2 · step_size`. A `step_size` of 0 is resolved at training time to
    /// four epochs' worth of batches.
    Cyclical {
        base_lr: f64,
        max_lr: f64,
        step_size: usize,
    },
}

impl Schedule {
    /// Default cyclical policy: 1e-4 to 1e-3, half-period of four epochs.
    pub fn cyclical_default() -> Self {
        Schedule::Cyclical {
            base_lr: 1e-4,
            max_lr: 1e-3,
            step_size: 0,
        }
    }

    /// Replace an automatic cyclical step size with `4 · batches_per_epoch`.
    pub fn resolve(self, batches_per_epoch: usize) -> Self {
        match self {
            Schedule::Cyclical {
                base_lr,
                max_lr,
                step_size: 0,
            } => Schedule::Cyclical {
                base_lr,
                max_lr,
                step_size: 4 * batches_per_epoch.max(1),
            },
            other => other,
        }
    }

    pub fn learning_rate(&self, base_lr: f64, step: usize) -> f64 {
        let s = step as f64;
        match *self {
            Schedule::None => base_lr,
            Schedule::ExponentialDecay {
                decay_steps,
                decay_rate,
                staircase,
            } => {
                let mut p = s / decay_steps.max(1) as f64;
                if staircase {
                    p = p.floor();
                }
                base_lr * decay_rate.powf(p)
            }
            Schedule::PolynomialDecay {
                decay_steps,
                end_learning_rate,
                power,
            } => {
                let d = decay_steps.max(1) as f64;
                let frac = 1.0 - s.min(d) / d;
                (base_lr - end_learning_rate) * frac.powf(power) + end_learning_rate
            }
            Schedule::InverseTimeDecay {
                decay_steps,
                decay_rate,
            } => base_lr / (1.0 + decay_rate * s / decay_steps.max(1) as f64),
            Schedule::CosineDecay { decay_steps, alpha } => {
                let d = decay_steps.max(1) as f64;
                let cosine = 0.5 * (1.0 + (PI * s.min(d) / d).cos());
                base_lr * ((1.0 - alpha) * cosine + alpha)
            }
            Schedule::Cyclical {
                base_lr: lo,
                max_lr: hi,
                step_size,
            } => {
                let half = step_size.max(1) as f64;
                let cycle = (1.0 + s / (2.0 * half)).floor();
                let x = (s / half - 2.0 * cycle + 1.0).abs();
                lo + (hi - lo) * (1.0 - x).max(0.0)
            }
        }
    }
}

/// Free-function form of [`Schedule::learning_rate`].
pub fn schedule_lr(schedule: &Schedule, base_lr: f64, step: usize) -> f64 {
    schedule.learning_rate(base_lr, step)
}
