use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, SplitBundle};

/// Whether each split is scaled by its own statistics or all splits reuse
/// the training statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerMode {
    #[default]
    PerSplit,
    TrainFit,
}

/// Per-column min-max scaler onto [0, 1]. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits column extrema. An empty matrix yields an identity-free scaler
    /// with `min = +inf`, `max = -inf`, which maps everything to 0.
    pub fn fit(data: &Array2<f64>) -> Self {
        let mut min = vec![f64::INFINITY; data.ncols()];
        let mut max = vec![f64::NEG_INFINITY; data.ncols()];
        for row in data.axis_iter(Axis(0)) {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    pub fn transform(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut out = data.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = if span > 0.0 && span.is_finite() {
                    (*v - self.min[j]) / span
                } else {
                    0.0
                };
            }
        }
        out
    }

    pub fn fit_transform(data: &Array2<f64>) -> (Self, Array2<f64>) {
        let scaler = Self::fit(data);
        let out = scaler.transform(data);
        (scaler, out)
    }
}

fn apply(matrix: &FeatureMatrix, scaler: MinMaxScaler) -> FeatureMatrix {
    FeatureMatrix {
        data: scaler.transform(&matrix.data),
        scaler: Some(scaler),
        ..matrix.clone()
    }
}

/// Scale train, validation and test. In [`ScalerMode::PerSplit`] every
/// split is fitted on its own rows, so each maps its own minimum to 0 and
/// maximum to 1.
pub fn scale_per_split(bundle: &SplitBundle, mode: ScalerMode) -> SplitBundle {
    let train_scaler = MinMaxScaler::fit(&bundle.train.data);
    let scaler_for = |m: &FeatureMatrix| match mode {
        ScalerMode::PerSplit => MinMaxScaler::fit(&m.data),
        ScalerMode::TrainFit => train_scaler.clone(),
    };
    SplitBundle {
        train: apply(&bundle.train, train_scaler.clone()),
        validation: apply(&bundle.validation, scaler_for(&bundle.validation)),
        test: apply(&bundle.test, scaler_for(&bundle.test)),
        ..bundle.clone()
    }
}
