use crate::error::{Error, Result};

pub(crate) fn check_contamination(c: f64) -> Result<()> {
    if c > 0.0 && c <= 0.5 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "contamination must lie in (0, 0.5], got {c}"
        )))
    }
}

/// Number of training points treated as outliers.
pub(crate) fn outlier_count(n: usize, contamination: f64) -> usize {
    ((contamination * n as f64).round() as usize).min(n)
}

/// Descending order of scores, ties in index order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Score cutoff: the `(k+1)`-th highest training score, so `score > offset`
/// flags the top `k` when scores are distinct.
pub(crate) fn offset(scores: &[f64], contamination: f64) -> f64 {
    let k = outlier_count(scores.len(), contamination);
    match ranking(scores).get(k) {
        Some(&i) => scores[i],
        None => f64::NEG_INFINITY,
    }
}

/// Exactly the top `k` training scores flagged, ties broken by index.
pub(crate) fn training_labels(scores: &[f64], contamination: f64) -> Vec<u8> {
    let k = outlier_count(scores.len(), contamination);
    let mut labels = vec![0u8; scores.len()];
    for &i in ranking(scores).iter().take(k) {
        labels[i] = 1;
    }
    labels
}

pub(crate) fn threshold_labels(scores: &[f64], offset: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > offset)).collect()
}
