//! Confusion counts, scalar metrics, ROC/AUC and report emission.

mod report;

pub use report::{emit_report, Report, ReportFiles, RunMetadata, REPORT_SCHEMA_VERSION};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts; the positive class is 1 (wildfire).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn false_positive_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    match v.iter().find(|&&x| x > 1) {
        Some(x) => Err(Error::Domain(format!("{name} must be binary, found {x}"))),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::Domain("confusion matrix of empty input".into()));
    }
    check_binary("y_true", y_true)?;
    check_binary("y_pred", y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, precision, recall, F1 and MCC; undefined ratios are 0.
pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let &ConfusionMatrix { tp, tn, fp, fn_ } = cm;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    let den = (tp + fp) as f64 * (tp + fn_) as f64 * (tn + fp) as f64 * (tn + fn_) as f64;
    let mcc = if den == 0.0 {
        0.0
    } else {
        let num = (tp as i128 * tn as i128 - fp as i128 * fn_ as i128) as f64;
        num / den.sqrt()
    };
    MetricSet {
        accuracy: ratio(tp + tn, cm.total()),
        precision,
        recall,
        f1,
        mcc,
    }
}

/// ROC points from the strictest to the loosest threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    /// Score cutoffs; a sample is positive when its score is at least the
    /// cutoff. The first entry is +inf, stored as `null` in JSON.
    #[serde(with = "infinite_as_null")]
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// Sweep every distinct score as a threshold (higher = more anomalous).
pub fn roc_auc(scores: &[f64], y_true: &[u8]) -> Result<RocCurve> {
    if scores.len() != y_true.len() {
        return Err(Error::shape(scores.len(), y_true.len()));
    }
    check_binary("y_true", y_true)?;
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Domain(format!("score {s} is not comparable")));
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count() as u64;
    let neg = y_true.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Domain("ROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut counts = vec![(0u64, 0u64)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(s);
        counts.push((fp, tp));
    }
    // Twice the trapezoid area in units of one negative-positive pair.
    let twice_area: u128 = counts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as u128 * (w[1].1 + w[0].1) as u128)
        .sum();
    let auc = twice_area as f64 / (2 * pos as u128 * neg as u128) as f64;
    Ok(RocCurve {
        fpr: counts.iter().map(|c| c.0 as f64 / neg as f64).collect(),
        tpr: counts.iter().map(|c| c.1 as f64 / pos as f64).collect(),
        thresholds,
        auc,
    })
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        opt.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let opt = Vec::<Option<f64>>::deserialize(d)?;
        Ok(opt
            .into_iter()
            .map(|x| x.unwrap_or(f64::INFINITY))
            .collect())
    }
}

/// Write `threshold,fpr,tpr` rows.
pub fn write_roc_csv(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["threshold", "fpr", "tpr"])
        .map_err(|e| Error::csv(path, e))?;
    for ((t, f), r) in roc.thresholds.iter().zip(&roc.fpr).zip(&roc.tpr) {
        w.write_record([t.to_string(), f.to_string(), r.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
