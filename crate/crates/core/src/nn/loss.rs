use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared logarithmic error; predictions are clamped at 0 first.
    #[default]
    Msle,
    Mse,
}

/// Mean over all elements of `(ln(1 + t) - ln(1 + p))²`.
pub fn msle(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::Domain("msle of empty input".into()));
    }
    if let Some(v) = y_true.iter().chain(y_pred).find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!(
            "msle requires non-negative inputs, got {v}"
        )));
    }
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| {
            let d = t.ln_1p() - p.ln_1p();
            d * d
        })
        .sum();
    Ok(sum / y_true.len() as f64)
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::Domain("mse of empty input".into()));
    }
    Ok(y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / y_true.len() as f64)
}

impl LossKind {
    /// Element error before averaging; MSLE clamps the prediction at 0.
    #[inline]
    pub fn element(self, t: f64, p: f64) -> f64 {
        match self {
            LossKind::Msle => {
                let d = t.ln_1p() - p.max(0.0).ln_1p();
                d * d
            }
            LossKind::Mse => (t - p) * (t - p),
        }
    }

    #[inline]
    fn element_grad(self, t: f64, p: f64) -> f64 {
        match self {
            LossKind::Msle => {
                if p < 0.0 {
                    0.0
                } else {
                    -2.0 * (t.ln_1p() - p.ln_1p()) / (1.0 + p)
                }
            }
            LossKind::Mse => 2.0 * (p - t),
        }
    }

    /// Mean loss over all elements.
    pub fn value(self, y_true: &Tensor, y_pred: &Tensor) -> Result<f64> {
        let (y_true, y_pred) = (y_true.to_standard(), y_pred.to_standard());
        let (t, p) = self.check(&y_true, &y_pred)?;
        Ok(t.iter()
            .zip(p)
            .map(|(&t, &p)| self.element(t, p))
            .sum::<f64>()
            / t.len() as f64)
    }

    /// Mean loss and its gradient w.r.t. the (unclamped) prediction.
    pub fn value_and_grad(self, y_true: &Tensor, y_pred: &Tensor) -> Result<(f64, Tensor)> {
        let (y_true, y_pred) = (y_true.to_standard(), y_pred.to_standard());
        let (t, p) = self.check(&y_true, &y_pred)?;
        let n = t.len() as f64;
        let mut grad = y_pred.clone().into_owned();
        let g = match &mut grad {
            Tensor::Matrix(m) => m.as_slice_mut().expect("standard layout"),
            Tensor::Sequence(s) => s.as_slice_mut().expect("standard layout"),
        };
        let mut sum = 0.0;
        for ((gv, &tv), &pv) in g.iter_mut().zip(t).zip(p) {
            sum += self.element(tv, pv);
            *gv = self.element_grad(tv, pv) / n;
        }
        Ok((sum / n, grad))
    }

    fn check<'a>(self, y_true: &'a Tensor, y_pred: &'a Tensor) -> Result<(&'a [f64], &'a [f64])> {
        if !y_true.same_shape(y_pred) {
            return Err(Error::shape(
                format!("{:?}", y_true.shape()),
                format!("{:?}", y_pred.shape()),
            ));
        }
        if y_true.is_empty() {
            return Err(Error::Domain("loss of empty batch".into()));
        }
        let t = y_true.as_slice();
        if self == LossKind::Msle {
            if let Some(v) = t.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::Domain(format!(
                    "msle target must be non-negative, got {v}"
                )));
            }
        }
        Ok((t, y_pred.as_slice()))
    }
}
