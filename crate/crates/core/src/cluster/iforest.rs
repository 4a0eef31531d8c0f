use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contamination::{check_contamination, offset, threshold_labels, training_labels};
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_9;

/// Average unsuccessful-search path length in a binary search tree of `n`
/// points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = n as f64 - 1.0;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

/// `2^(-mean_path / c(psi))`.
pub fn anomaly_score(mean_path: f64, subsample_size: usize) -> f64 {
    (-mean_path / average_path_length(subsample_size)).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxSamples {
    Fraction(f64),
    Count(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestParams {
    pub n_estimators: usize,
    pub max_samples: MaxSamples,
    pub contamination: f64,
}

impl Default for IsolationForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_samples: MaxSamples::Fraction(0.9),
            contamination: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ITreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

/// Isolation tree stored as a node arena rooted at index 0. Points with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    pub nodes: Vec<ITreeNode>,
}

impl IsolationTree {
    fn grow(data: &Array2<f64>, sample: Vec<usize>, limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.build(data, sample, 0, limit, rng);
        tree
    }

    fn build(
        &mut self,
        data: &Array2<f64>,
        rows: Vec<usize>,
        depth: usize,
        limit: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(ITreeNode::Leaf { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        let ranges: Vec<(usize, f64, f64)> = (0..data.ncols())
            .filter_map(|f| {
                let (lo, hi) = rows
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                        (lo.min(data[[r, f]]), hi.max(data[[r, f]]))
                    });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let mut threshold = rng.random_range(lo..hi);
        if threshold >= hi {
            threshold = lo;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| data[[i, feature]] <= threshold);
        let left = self.build(data, l, depth + 1, limit, rng);
        let right = self.build(data, r, depth + 1, limit, rng);
        self.nodes[id] = ITreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Edges to the leaf plus the expected remaining depth of its points.
    pub fn path_length(&self, x: &ArrayView1<f64>) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                ITreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[feature] <= threshold { left } else { right };
                    depth += 1.0;
                }
                ITreeNode::Leaf { size } => return depth + average_path_length(size),
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[ITreeNode], i: usize) -> usize {
            match nodes[i] {
                ITreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
                ITreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestModel {
    pub trees: Vec<IsolationTree>,
    pub params: IsolationForestParams,
    pub subsample_size: usize,
    pub n_features: usize,
    /// Scores strictly above this are anomalies.
    pub offset: f64,
    pub seed: u64,
    pub train_scores: Vec<f64>,
}

fn subsample_size(n: usize, max_samples: MaxSamples) -> Result<usize> {
    let psi = match max_samples {
        MaxSamples::Fraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!(
                    "max_samples fraction must lie in (0, 1], got {f}"
                )));
            }
            (f * n as f64).floor() as usize
        }
        MaxSamples::Count(c) => c.min(n),
    };
    if psi < 2 {
        return Err(Error::Config(format!(
            "subsample of {psi} points is too small to build isolation trees"
        )));
    }
    Ok(psi)
}

pub fn iforest_fit(
    train: &Array2<f64>,
    params: &IsolationForestParams,
    seed: u64,
) -> Result<IsolationForestModel> {
    check_contamination(params.contamination)?;
    if params.n_estimators == 0 {
        return Err(Error::Config("n_estimators must be at least 1".into()));
    }
    let n = train.nrows();
    if n == 0 {
        return Err(Error::Domain("isolation forest needs training data".into()));
    }
    let psi = subsample_size(n, params.max_samples)?;
    let limit = (psi as f64).log2().ceil() as usize;
    let trees: Vec<IsolationTree> = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let sample = rand::seq::index::sample(&mut rng, n, psi).into_vec();
            IsolationTree::grow(train, sample, limit, &mut rng)
        })
        .collect();
    let mut model = IsolationForestModel {
        trees,
        params: *params,
        subsample_size: psi,
        n_features: train.ncols(),
        offset: 0.0,
        seed,
        train_scores: Vec::new(),
    };
    model.train_scores = model.score(train)?;
    model.offset = offset(&model.train_scores, params.contamination);
    Ok(model)
}

impl IsolationForestModel {
    /// Anomaly score in (0, 1] per row; higher is more anomalous.
    pub fn score(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features && x.nrows() > 0 {
            return Err(Error::shape(
                format!("{} features", self.n_features),
                format!("{} features", x.ncols()),
            ));
        }
        let m = self.trees.len() as f64;
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mean = self.trees.iter().map(|t| t.path_length(&row)).sum::<f64>() / m;
                anomaly_score(mean, self.subsample_size)
            })
            .collect())
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>> {
        Ok(threshold_labels(&self.score(x)?, self.offset))
    }

    /// Training points ranked by score with exactly the contamination share
    /// flagged.
    pub fn training_labels(&self) -> Vec<u8> {
        training_labels(&self.train_scores, self.params.contamination)
    }
}

pub fn iforest_predict(model: &IsolationForestModel, x: &Array2<f64>) -> Result<Vec<u8>> {
    model.predict(x)
}
