use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1 − Σ pᵢ²`.
pub fn gini_impurity(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Domain("gini impurity of an empty node".into()));
    }
    let t = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

fn gini2(c: [u64; 2]) -> f64 {
    let t = (c[0] + c[1]) as f64;
    if t == 0.0 {
        return 0.0;
    }
    let (p, q) = (c[0] as f64 / t, c[1] as f64 / t);
    1.0 - p * p - q * q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(c) => c.clamp(1, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_estimators: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            min_samples_split: 2,
            min_samples_leaf: 2,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

/// Tree node; `split` is `(feature, threshold, left, right)` for internal
/// nodes. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub split: Option<(usize, f64, usize, usize)>,
    pub impurity: f64,
    /// Training rows reaching the node, counting bootstrap duplicates.
    pub n_samples: u64,
    pub class_counts: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl DecisionTree {
    /// Weighted impurity decrease per feature, unnormalised.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Some((f, _, l, r)) = node.split {
                let (l, r) = (&self.nodes[l], &self.nodes[r]);
                imp[f] += node.n_samples as f64 * node.impurity
                    - l.n_samples as f64 * l.impurity
                    - r.n_samples as f64 * r.impurity;
            }
        }
        imp
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.split.is_none())
    }
}

struct Builder<'a> {
    x: &'a Array2<f64>,
    y: &'a [u8],
    params: &'a RfParams,
    k_features: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &r in rows {
            c[self.y[r] as usize] += 1;
        }
        c
    }

    /// Best split over `features`: (gain, feature, threshold, position in
    /// the sorted rows).
    fn best_split(
        &self,
        rows: &[usize],
        features: &[usize],
        parent: [u64; 2],
    ) -> Option<(usize, f64, Vec<usize>)> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<(f64, usize, f64, Vec<usize>)> = None;
        for &f in features {
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]));
            let mut left = [0u64; 2];
            for pos in 1..n {
                left[self.y[sorted[pos - 1]] as usize] += 1;
                let (lo, hi) = (self.x[[sorted[pos - 1], f]], self.x[[sorted[pos], f]]);
                if lo == hi || pos < min_leaf || n - pos < min_leaf {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1]];
                let child = pos as f64 * gini2(left) + (n - pos) as f64 * gini2(right);
                let score = -child;
                if best.as_ref().is_none_or(|b| score > b.0) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((score, f, threshold, sorted.clone()));
                }
            }
        }
        best.map(|(_, f, t, sorted)| (f, t, sorted))
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            split: None,
            impurity: gini2(counts),
            n_samples: rows.len() as u64,
            class_counts: counts,
        });
        if rows.len() < self.params.min_samples_split
            || rows.len() < 2 * self.params.min_samples_leaf.max(1)
            || counts[0] == 0
            || counts[1] == 0
        {
            return id;
        }
        let d = self.x.ncols();
        let mut features = index::sample(rng, d, self.k_features).into_vec();
        // Ascending order so equal gains resolve to the lowest index.
        features.sort_unstable();
        let Some((f, threshold, sorted)) = self.best_split(&rows, &features, counts) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = sorted
            .into_iter()
            .partition(|&i| self.x[[i, f]] <= threshold);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id].split = Some((f, threshold, left, right));
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub params: RfParams,
    pub n_features: usize,
}

pub fn rf_fit(x: &Array2<f64>, y: &[u8], params: &RfParams, seed: u64) -> Result<RandomForest> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::shape(n, y.len()));
    }
    if n == 0 || d == 0 {
        return Err(Error::Domain(
            "random forest needs rows and features".into(),
        ));
    }
    if let Some(v) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Domain(format!("labels must be binary, found {v}")));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::Domain(
            "importance is undefined for a single class".into(),
        ));
    }
    if params.n_estimators == 0 {
        return Err(Error::Config("n_estimators must be at least 1".into()));
    }
    let k_features = params.max_features.resolve(d);
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                params,
                k_features,
                nodes: Vec::new(),
            };
            b.grow(rows, &mut rng);
            DecisionTree {
                nodes: b.nodes,
                n_features: d,
            }
        })
        .collect();
    Ok(RandomForest {
        trees,
        params: *params,
        n_features: d,
    })
}

/// Per-tree normalised impurity decrease, averaged and renormalised.
pub fn mdi_importance(forest: &RandomForest) -> Vec<f64> {
    let d = forest.n_features;
    let mut total = vec![0.0; d];
    for tree in &forest.trees {
        let imp = tree.impurity_decrease();
        let s: f64 = imp.iter().sum();
        if s > 0.0 {
            total.iter_mut().zip(&imp).for_each(|(t, v)| *t += v / s);
        }
    }
    let s: f64 = total.iter().sum();
    if s > 0.0 {
        total.iter_mut().for_each(|v| *v /= s);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((n, d), || rng.random::<f64>())
    }

    /// Label set by feature 0; three noise columns.
    fn separable(seed: u64) -> (Array2<f64>, Vec<u8>) {
        let x = noise(200, 4, seed);
        let y = x.column(0).iter().map(|&v| u8::from(v > 0.5)).collect();
        (x, y)
    }

    #[test]
    fn gini_hand_values() {
        assert_eq!(gini_impurity(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[5, 5]).unwrap(), 0.5);
        assert_eq!(gini_impurity(&[1, 3]).unwrap(), 0.375);
        assert!(gini_impurity(&[0, 0]).is_err());
    }

    #[test]
    fn determining_feature_dominates() {
        let (x, y) = separable(1);
        let f = rf_fit(&x, &y, &RfParams::default(), 7).unwrap();
        let imp = mdi_importance(&f);
        assert!(imp[0] > 0.9, "{imp:?}");
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_feature_shares_its_mass() {
        let (x, y) = separable(2);
        let single = mdi_importance(&rf_fit(&x, &y, &RfParams::default(), 3).unwrap())[0];
        let mut wide = Array2::zeros((200, 5));
        wide.slice_mut(ndarray::s![.., ..4]).assign(&x);
        wide.column_mut(4).assign(&x.column(0));
        let imp = mdi_importance(&rf_fit(&wide, &y, &RfParams::default(), 3).unwrap());
        assert!(
            imp[0] + imp[4] >= 0.8 * single,
            "{} + {} vs {single}",
            imp[0],
            imp[4]
        );
    }

    #[test]
    fn noise_features_are_near_uniform() {
        for seed in 0..20 {
            let x = noise(500, 5, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<u8> = (0..500).map(|_| u8::from(rng.random_bool(0.5))).collect();
            let imp = mdi_importance(&rf_fit(&x, &y, &RfParams::default(), seed).unwrap());
            let max = imp.iter().copied().fold(0.0, f64::max);
            let min = imp.iter().copied().fold(1.0, f64::min);
            assert!(max / min < 3.0, "seed {seed}: {imp:?}");
        }
    }

    #[test]
    fn forests_are_deterministic() {
        let (x, y) = separable(3);
        let a = rf_fit(&x, &y, &RfParams::default(), 5).unwrap();
        let b = rf_fit(&x, &y, &RfParams::default(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn leaves_hold_at_least_two_rows_and_splits_never_add_impurity() {
        let x = noise(300, 4, 9);
        let y: Vec<u8> = x
            .rows()
            .into_iter()
            .map(|r| u8::from(r[1] + 0.3 * r[2] > 0.6))
            .collect();
        let f = rf_fit(&x, &y, &RfParams::default(), 1).unwrap();
        for t in &f.trees {
            assert!(t.leaves().all(|l| l.n_samples >= 2));
            for node in &t.nodes {
                if let Some((_, _, l, r)) = node.split {
                    let (l, r) = (&t.nodes[l], &t.nodes[r]);
                    let child = (l.n_samples as f64 * l.impurity + r.n_samples as f64 * r.impurity)
                        / node.n_samples as f64;
                    assert!(child <= node.impurity + 1e-12);
                }
            }
        }
    }

    #[test]
    fn stumps_on_one_feature_give_one_hot() {
        let node = |split, impurity, n, counts| TreeNode {
            split,
            impurity,
            n_samples: n,
            class_counts: counts,
        };
        let stump = DecisionTree {
            nodes: vec![
                node(Some((2, 0.5, 1, 2)), 0.5, 10, [5, 5]),
                node(None, 0.0, 5, [5, 0]),
                node(None, 0.0, 5, [0, 5]),
            ],
            n_features: 4,
        };
        let forest = RandomForest {
            trees: vec![stump.clone(), stump],
            params: RfParams::default(),
            n_features: 4,
        };
        assert_eq!(mdi_importance(&forest), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = noise(10, 2, 0);
        assert!(rf_fit(&x, &[1; 10], &RfParams::default(), 0).is_err());
    }
}
