use std::borrow::Cow;

use ndarray::{Array2, Array3, Axis};

use crate::error::{Error, Result};

/// Row-major batch of samples: either a (batch, features) matrix or a
/// (batch, timesteps, features) sequence tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Matrix(Array2<f64>),
    Sequence(Array3<f64>),
}

impl Tensor {
    pub fn shape(&self) -> Vec<usize> {
        match self {
            Tensor::Matrix(m) => m.shape().to_vec(),
            Tensor::Sequence(s) => s.shape().to_vec(),
        }
    }

    pub fn batch_len(&self) -> usize {
        match self {
            Tensor::Matrix(m) => m.nrows(),
            Tensor::Sequence(s) => s.len_of(Axis(0)),
        }
    }

    /// Width of the trailing (feature) axis.
    pub fn features(&self) -> usize {
        match self {
            Tensor::Matrix(m) => m.ncols(),
            Tensor::Sequence(s) => s.len_of(Axis(2)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Tensor::Matrix(m) => m.len(),
            Tensor::Sequence(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_standard_layout(&self) -> bool {
        match self {
            Tensor::Matrix(m) => m.is_standard_layout(),
            Tensor::Sequence(s) => s.is_standard_layout(),
        }
    }

    /// Same values in row-major memory order.
    pub fn into_standard(self) -> Tensor {
        match self {
            Tensor::Matrix(m) if !m.is_standard_layout() => {
                Tensor::Matrix(m.as_standard_layout().into_owned())
            }
            Tensor::Sequence(s) if !s.is_standard_layout() => {
                Tensor::Sequence(s.as_standard_layout().into_owned())
            }
            t => t,
        }
    }

    pub fn to_standard(&self) -> Cow<'_, Tensor> {
        if self.is_standard_layout() {
            Cow::Borrowed(self)
        } else {
            Cow::Owned(self.clone().into_standard())
        }
    }

    /// Flat row-major view; panics unless in standard layout.
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Tensor::Matrix(m) => m.as_slice().expect("standard layout"),
            Tensor::Sequence(s) => s.as_slice().expect("standard layout"),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Tensor::Matrix(m) => m.iter().all(|v| v.is_finite()),
            Tensor::Sequence(s) => s.iter().all(|v| v.is_finite()),
        }
    }

    /// Rows (samples) at the given positions, in order.
    pub fn select(&self, idx: &[usize]) -> Tensor {
        match self {
            Tensor::Matrix(m) => Tensor::Matrix(m.select(Axis(0), idx)),
            Tensor::Sequence(s) => Tensor::Sequence(s.select(Axis(0), idx)),
        }
        .into_standard()
    }

    pub fn slice_batch(&self, start: usize, end: usize) -> Tensor {
        let idx: Vec<usize> = (start..end).collect();
        self.select(&idx)
    }

    pub fn into_matrix(self) -> Result<Array2<f64>> {
        match self {
            Tensor::Matrix(m) => Ok(m),
            Tensor::Sequence(s) => Err(Error::shape("matrix", format!("sequence {:?}", s.shape()))),
        }
    }

    pub fn into_sequence(self) -> Result<Array3<f64>> {
        match self {
            Tensor::Sequence(s) => Ok(s),
            Tensor::Matrix(m) => Err(Error::shape("sequence", format!("matrix {:?}", m.shape()))),
        }
    }

    pub(crate) fn same_shape(&self, other: &Tensor) -> bool {
        self.shape() == other.shape()
    }
}
