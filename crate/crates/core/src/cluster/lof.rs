use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contamination::{check_contamination, offset, threshold_labels, training_labels};
use crate::error::{Error, Result};

/// Local reachability densities are capped here so duplicate points (zero
/// reachability distance) stay finite.
pub const LRD_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Minkowski {
        #[serde(default = "default_p")]
        p: f64,
    },
}

fn default_p() -> f64 {
    3.0
}

impl Metric {
    pub fn minkowski() -> Self {
        Metric::Minkowski { p: default_p() }
    }

    pub fn distance(&self, a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
        let pairs = a.iter().zip(b.iter());
        match *self {
            Metric::Euclidean => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Manhattan => pairs.map(|(x, y)| (x - y).abs()).sum(),
            Metric::Minkowski { p } => pairs
                .map(|(x, y)| (x - y).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LofParams {
    pub n_neighbors: usize,
    pub metric: Metric,
    pub contamination: f64,
}

impl Default for LofParams {
    fn default() -> Self {
        Self {
            n_neighbors: 20,
            metric: Metric::Manhattan,
            contamination: 0.5,
        }
    }
}

/// Fitted local outlier factor detector in novelty mode: queries are scored
/// against the stored training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel {
    pub params: LofParams,
    pub train: Array2<f64>,
    pub k_distance: Vec<f64>,
    pub lrd: Vec<f64>,
    /// LOF of each training point against the other training points.
    pub train_scores: Vec<f64>,
    /// Scores strictly above this are anomalies.
    pub offset: f64,
}

/// The `k` nearest rows of `data` to `q`, ordered by (distance, index),
/// skipping row `skip`.
fn neighbours(
    data: &Array2<f64>,
    q: &ArrayView1<f64>,
    k: usize,
    skip: Option<usize>,
    metric: &Metric,
) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = (0..data.nrows())
        .filter(|&i| Some(i) != skip)
        .map(|i| (metric.distance(q, &data.row(i)), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d
}

fn density(neigh: &[(f64, usize)], k_distance: &[f64]) -> f64 {
    let mean = neigh
        .iter()
        .map(|&(d, o)| d.max(k_distance[o]))
        .sum::<f64>()
        / neigh.len() as f64;
    if mean > 0.0 {
        (1.0 / mean).min(LRD_CAP)
    } else {
        LRD_CAP
    }
}

fn factor(neigh: &[(f64, usize)], lrd: &[f64], own: f64) -> f64 {
    neigh.iter().map(|&(_, o)| lrd[o]).sum::<f64>() / neigh.len() as f64 / own
}

pub fn lof_fit(train: &Array2<f64>, params: &LofParams) -> Result<LofModel> {
    check_contamination(params.contamination)?;
    let n = train.nrows();
    let k = params.n_neighbors;
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "n_neighbors must lie in [1, {}) for {n} training points, got {k}",
            n
        )));
    }
    if let Metric::Minkowski { p } = params.metric {
        if !(p >= 1.0) {
            return Err(Error::Config(format!(
                "minkowski p must be at least 1, got {p}"
            )));
        }
    }
    let neigh: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| neighbours(train, &train.row(i), k, Some(i), &params.metric))
        .collect();
    let k_distance: Vec<f64> = neigh.iter().map(|nb| nb[k - 1].0).collect();
    let lrd: Vec<f64> = neigh.iter().map(|nb| density(nb, &k_distance)).collect();
    let train_scores: Vec<f64> = neigh
        .iter()
        .zip(&lrd)
        .map(|(nb, &own)| factor(nb, &lrd, own))
        .collect();
    Ok(LofModel {
        params: *params,
        train: train.clone(),
        k_distance,
        lrd,
        offset: offset(&train_scores, params.contamination),
        train_scores,
    })
}

impl LofModel {
    /// LOF of each query row relative to the training set.
    pub fn score(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.nrows() > 0 && x.ncols() != self.train.ncols() {
            return Err(Error::shape(
                format!("{} features", self.train.ncols()),
                format!("{} features", x.ncols()),
            ));
        }
        let k = self.params.n_neighbors;
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let nb = neighbours(&self.train, &x.row(i), k, None, &self.params.metric);
                let own = density(&nb, &self.k_distance);
                factor(&nb, &self.lrd, own)
            })
            .collect())
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>> {
        Ok(threshold_labels(&self.score(x)?, self.offset))
    }

    pub fn training_labels(&self) -> Vec<u8> {
        training_labels(&self.train_scores, self.params.contamination)
    }
}

/// Fit on `train` and label the rows of `x`.
pub fn lof_fit_predict(
    train: &Array2<f64>,
    x: &Array2<f64>,
    params: &LofParams,
) -> Result<Vec<u8>> {
    lof_fit(train, params)?.predict(x)
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    /// Direct definition with every point at distance <= k-distance counted
    /// as a neighbour.
    fn brute_lof(data: &Array2<f64>, k: usize, metric: Metric) -> Vec<f64> {
        let n = data.nrows();
        let d = |i: usize, j: usize| metric.distance(&data.row(i), &data.row(j));
        let kdist: Vec<f64> = (0..n)
            .map(|i| {
                let mut v: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d(i, j)).collect();
                v.sort_by(f64::total_cmp);
                v[k - 1]
            })
            .collect();
        let hood = |i: usize| -> Vec<usize> {
            (0..n).filter(|&j| j != i && d(i, j) <= kdist[i]).collect()
        };
        let lrd: Vec<f64> = (0..n)
            .map(|i| {
                let h = hood(i);
                let s: f64 = h.iter().map(|&o| d(i, o).max(kdist[o])).sum();
                h.len() as f64 / s
            })
            .collect();
        (0..n)
            .map(|i| {
                let h = hood(i);
                h.iter().map(|&o| lrd[o]).sum::<f64>() / h.len() as f64 / lrd[i]
            })
            .collect()
    }

    fn six_points() -> Array2<f64> {
        array![
            [0.0, 0.0],
            [0.11, 0.02],
            [0.03, 0.125],
            [0.137, 0.094],
            [0.052, 0.061],
            [3.0, 0.2]
        ]
    }

    #[test]
    fn distances() {
        let a = array![0.0, 0.0];
        let b = array![3.0, 4.0];
        assert_eq!(Metric::Euclidean.distance(&a.view(), &b.view()), 5.0);
        assert_eq!(Metric::Manhattan.distance(&a.view(), &b.view()), 7.0);
        let m = Metric::minkowski().distance(&a.view(), &b.view());
        assert!((m - 91f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn distant_point_has_largest_factor_under_every_metric() {
        let x = six_points();
        for metric in [Metric::Euclidean, Metric::Manhattan, Metric::minkowski()] {
            let model = lof_fit(
                &x,
                &LofParams {
                    n_neighbors: 2,
                    metric,
                    contamination: 0.1,
                },
            )
            .unwrap();
            let oracle = brute_lof(&x, 2, metric);
            for (a, b) in model.train_scores.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{metric:?}: {a} vs {b}");
            }
            let top = (0..6)
                .max_by(|&a, &b| oracle[a].total_cmp(&oracle[b]))
                .unwrap();
            assert_eq!(top, 5);
        }
    }

    #[test]
    fn grid_query_has_unit_factor() {
        let grid = Array2::from_shape_fn((225, 2), |(i, j)| {
            if j == 0 {
                (i / 15) as f64
            } else {
                (i % 15) as f64
            }
        });
        let model = lof_fit(
            &grid,
            &LofParams {
                n_neighbors: 4,
                metric: Metric::Euclidean,
                contamination: 0.5,
            },
        )
        .unwrap();
        let s = model.score(&array![[7.0, 7.0]]).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-9);
        assert_eq!(model.predict(&array![[7.0, 7.0]]).unwrap(), [0]);
    }

    #[test]
    fn duplicates_stay_finite() {
        let x = array![[1.0], [1.0], [1.0], [5.0]];
        let model = lof_fit(
            &x,
            &LofParams {
                n_neighbors: 2,
                metric: Metric::Euclidean,
                contamination: 0.25,
            },
        )
        .unwrap();
        assert!(model.train_scores.iter().all(|s| s.is_finite()));
        assert_eq!(model.lrd[0], LRD_CAP);
        assert_eq!(model.training_labels(), [0, 0, 0, 1]);
    }

    #[test]
    fn neighbour_count_must_be_below_training_size() {
        let x = six_points();
        let p = |k| LofParams {
            n_neighbors: k,
            metric: Metric::Euclidean,
            contamination: 0.1,
        };
        assert!(lof_fit(&x, &p(0)).is_err());
        assert!(lof_fit(&x, &p(6)).is_err());
        assert!(lof_fit(&x, &p(5)).is_ok());
    }

    #[test]
    fn query_dimension_is_checked() {
        let model = lof_fit(
            &six_points(),
            &LofParams {
                n_neighbors: 2,
                ..LofParams::default()
            },
        )
        .unwrap();
        assert!(model.score(&array![[1.0, 2.0, 3.0]]).is_err());
        assert!(model.score(&Array2::zeros((0, 2))).unwrap().is_empty());
    }
}
