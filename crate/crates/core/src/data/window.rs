use ndarray::{s, Array3};
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// (batch, timesteps, features) view built from consecutive rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTensor {
    pub data: Array3<f64>,
    pub window_length: usize,
}

impl SequenceTensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.dim()
    }
}

/// How a window's ground truth is derived from its per-day labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabel {
    /// 1 if any day in the window is a wildfire day.
    #[default]
    Any,
    /// 1 if strictly more than half the days are wildfire days.
    Majority,
    /// Label of the final day.
    Last,
}

/// Non-overlapping windows in row order; a trailing remainder shorter than
/// `window_length` is discarded.
pub fn window_sequences(matrix: &FeatureMatrix, window_length: usize) -> Result<SequenceTensor> {
    if window_length == 0 {
        return Err(Error::Config("window length must be at least 1".into()));
    }
    let rows = matrix.n_rows();
    if rows < window_length {
        return Err(Error::shape(
            format!("at least {window_length} rows"),
            format!("{rows} rows"),
        ));
    }
    let batch = rows / window_length;
    let used = matrix.data.slice(s![..batch * window_length, ..]);
    let data = used
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((batch, window_length, matrix.n_cols()))
        .map_err(|e| Error::Shape {
            expected: "contiguous window reshape".into(),
            got: e.to_string(),
        })?;
    Ok(SequenceTensor {
        data,
        window_length,
    })
}

/// Per-window labels aligned with [`window_sequences`].
pub fn window_labels(labels: &[u8], window_length: usize, rule: WindowLabel) -> Vec<u8> {
    if window_length == 0 {
        return Vec::new();
    }
    labels
        .chunks_exact(window_length)
        .map(|w| match rule {
            WindowLabel::Any => u8::from(w.contains(&1)),
            WindowLabel::Majority => {
                u8::from(2 * w.iter().filter(|&&l| l == 1).count() > window_length)
            }
            WindowLabel::Last => w[window_length - 1],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use proptest::prelude::*;

    use super::*;

    fn matrix(rows: usize, cols: usize) -> FeatureMatrix {
        FeatureMatrix {
            feature_set: None,
            columns: (0..cols).map(|c| format!("f{c}")).collect(),
            row_ids: (0..rows).collect(),
            labels: vec![0; rows],
            data: Array2::from_shape_fn((rows, cols), |(i, j)| (i * cols + j) as f64),
            scaler: None,
        }
    }

    #[test]
    fn published_shapes() {
        assert_eq!(
            window_sequences(&matrix(12_869, 28), 10).unwrap().shape(),
            (1286, 10, 28)
        );
        assert_eq!(
            window_sequences(&matrix(1_715, 28), 10).unwrap().shape(),
            (171, 10, 28)
        );
        assert_eq!(
            window_sequences(&matrix(1_715, 17), 10).unwrap().shape(),
            (171, 10, 17)
        );
    }

    #[test]
    fn single_window_preserves_row_order() {
        let t = window_sequences(&matrix(10, 3), 10).unwrap();
        assert_eq!(t.shape(), (1, 10, 3));
        assert_eq!(t.data[[0, 4, 2]], 14.0);
    }

    #[test]
    fn too_few_rows_is_error() {
        assert!(window_sequences(&matrix(9, 3), 10).is_err());
        assert!(window_sequences(&matrix(9, 3), 0).is_err());
    }

    #[test]
    fn label_rules() {
        let labels = [0, 0, 1, 1, 1, 0, 0, 0, 0, 1];
        assert_eq!(window_labels(&labels, 5, WindowLabel::Any), vec![1, 1]);
        assert_eq!(window_labels(&labels, 5, WindowLabel::Majority), vec![1, 0]);
        assert_eq!(window_labels(&labels, 5, WindowLabel::Last), vec![1, 1]);
        assert_eq!(window_labels(&labels[..7], 5, WindowLabel::Any), vec![1]);
    }

    proptest! {
        #[test]
        fn window_count_is_floor(rows in 1usize..200, w in 1usize..20) {
            prop_assume!(rows >= w);
            let t = window_sequences(&matrix(rows, 2), w).unwrap();
            prop_assert_eq!(t.shape().0, rows / w);
        }
    }
}
