use ndarray::{Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    Identity,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn is_elementwise(self) -> bool {
        self != Activation::Softmax
    }

    /// Scalar form; softmax has none.
    pub(crate) fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
            Activation::Softmax => unreachable!("softmax is not elementwise"),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub(crate) fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
            Activation::Softmax => unreachable!("softmax is not elementwise"),
        }
    }

    /// Applies row-wise (softmax) or elementwise in place.
    pub fn forward_inplace(self, z: &mut Array2<f64>) {
        match self {
            Activation::Softmax => {
                for mut row in z.axis_iter_mut(Axis(0)) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|v| v / sum);
                }
            }
            Activation::Identity => {}
            act => z.mapv_inplace(|v| act.apply_scalar(v)),
        }
    }

    /// Gradient w.r.t. the pre-activation given the output `y` and the
    /// upstream gradient `dy`.
    pub fn backward(self, y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Softmax => {
                let mut dz = Array2::zeros(y.raw_dim());
                for ((yr, dyr), mut dzr) in y
                    .axis_iter(Axis(0))
                    .zip(dy.axis_iter(Axis(0)))
                    .zip(dz.axis_iter_mut(Axis(0)))
                {
                    let dot = yr.dot(&dyr);
                    Zip::from(&mut dzr)
                        .and(&yr)
                        .and(&dyr)
                        .for_each(|d, &yv, &g| *d = yv * (g - dot));
                }
                dz
            }
            Activation::Identity => dy.clone(),
            act => {
                let mut dz = dy.clone();
                Zip::from(&mut dz)
                    .and(y)
                    .for_each(|d, &yv| *d *= act.derivative_from_output(yv));
                dz
            }
        }
    }
}
