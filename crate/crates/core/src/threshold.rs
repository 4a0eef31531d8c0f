//! Reconstruction-error scoring and the mean-plus-two-sigma decision rule.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::autoencoder::Autoencoder;
use crate::error::{Error, Result};
use crate::nn::{LossKind, Network, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Row,
    Sequence,
}

/// Per-sample MSLE scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorVector {
    pub values: Vec<f64>,
    pub granularity: Granularity,
}

impl ErrorVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Decision cutoff `mu + 2 * sigma` over training errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Per-sample MSLE between `x` and `x_hat`, averaged over every non-batch
/// axis. Predictions are clamped at 0.
pub fn reconstruction_errors(x: &Tensor, x_hat: &Tensor) -> Result<ErrorVector> {
    if x.shape() != x_hat.shape() {
        return Err(Error::shape(
            format!("{:?}", x.shape()),
            format!("{:?}", x_hat.shape()),
        ));
    }
    let n = x.batch_len();
    if n == 0 {
        return Err(Error::Domain("no samples to score".into()));
    }
    let (x, x_hat) = (x.to_standard(), x_hat.to_standard());
    let per = x.len() / n;
    let granularity = match *x {
        Tensor::Matrix(_) => Granularity::Row,
        Tensor::Sequence(_) => Granularity::Sequence,
    };
    let values = x
        .as_slice()
        .chunks(per)
        .zip(x_hat.as_slice().chunks(per))
        .map(|(t, p)| {
            if let Some(v) = t.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::Domain(format!(
                    "msle requires non-negative inputs, got {v}"
                )));
            }
            Ok(t.iter()
                .zip(p)
                .map(|(&t, &p)| LossKind::Msle.element(t, p))
                .sum::<f64>()
                / per as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorVector {
        values,
        granularity,
    })
}

/// Reconstruct `x` with `network` and score every sample.
pub fn per_sample_errors(network: &Network, x: &Tensor) -> Result<ErrorVector> {
    if x.batch_len() == 0 {
        return Err(Error::Domain("no samples to score".into()));
    }
    let x_hat = network.forward(x)?;
    reconstruction_errors(x, &x_hat)
}

/// [`per_sample_errors`] with the autoencoder's input-shape check.
pub fn autoencoder_errors(ae: &Autoencoder, x: &Tensor) -> Result<ErrorVector> {
    if x.batch_len() == 0 {
        return Err(Error::Domain("no samples to score".into()));
    }
    reconstruction_errors(x, &ae.reconstruct(x)?)
}

/// Mean plus two population standard deviations.
pub fn fit_threshold(train_errors: &[f64]) -> Result<Threshold> {
    let n = train_errors.len();
    if n == 0 {
        return Err(Error::Domain("cannot fit a threshold on no errors".into()));
    }
    if let Some(v) = train_errors.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite training error {v}")));
    }
    if n == 1 {
        warn!("threshold fitted on a single error; sigma is 0");
    }
    let nf = n as f64;
    let rough = train_errors.iter().sum::<f64>() / nf;
    // Second pass removes most of the summation rounding.
    let mu = rough + train_errors.iter().map(|e| e - rough).sum::<f64>() / nf;
    let var = train_errors
        .iter()
        .map(|e| (e - mu) * (e - mu))
        .sum::<f64>()
        / nf;
    let sigma = var.sqrt();
    Ok(Threshold {
        value: mu + 2.0 * sigma,
        mu,
        sigma,
    })
}

/// 1 where the error reaches the threshold.
pub fn classify(errors: &[f64], threshold: &Threshold) -> Vec<u8> {
    errors
        .iter()
        .map(|&e| u8::from(e >= threshold.value))
        .collect()
}

/// Write `sample_id,<score_name>,label_pred,label_true` rows.
pub fn write_score_csv(
    path: &Path,
    score_name: &str,
    sample_ids: &[usize],
    scores: &[f64],
    predicted: &[u8],
    truth: &[u8],
) -> Result<()> {
    let n = scores.len();
    if sample_ids.len() != n || predicted.len() != n || truth.len() != n {
        return Err(Error::shape(
            format!("{n} ids, predictions and labels"),
            format!("{}, {}, {}", sample_ids.len(), predicted.len(), truth.len()),
        ));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["sample_id", score_name, "label_pred", "label_true"])
        .map_err(|e| Error::csv(path, e))?;
    for i in 0..n {
        w.write_record([
            sample_ids[i].to_string(),
            scores[i].to_string(),
            predicted[i].to_string(),
            truth[i].to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
