use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `L' x D` latent matrix, one row per sequence position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEmbedding", into = "RawEmbedding")]
pub struct Embedding(Array2<f64>);

#[derive(Serialize, Deserialize)]
struct RawEmbedding {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl From<Embedding> for RawEmbedding {
    fn from(e: Embedding) -> Self {
        let (rows, cols) = (e.rows(), e.cols());
        RawEmbedding { rows, cols, values: e.0.into_raw_vec_and_offset().0 }
    }
}

impl TryFrom<RawEmbedding> for Embedding {
    type Error = Error;

    fn try_from(r: RawEmbedding) -> Result<Self> {
        Embedding::from_rows(r.rows, r.cols, r.values)
    }
}

impl Embedding {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::config("embedding must have at least one row and column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("embedding entries must be finite"));
        }
        Ok(Embedding(data.as_standard_layout().into_owned()))
    }

    /// Wrap without validation; callers guarantee shape and finiteness.
    pub(crate) fn from_array_unchecked(data: Array2<f64>) -> Self {
        Embedding(data.as_standard_layout().into_owned())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Embedding(Array2::zeros((rows, cols)))
    }

    pub fn from_rows(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        let arr =
            Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::config(format!("embedding shape: {e}")))?;
        Embedding::new(arr)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    pub fn row_mut(&mut self, i: usize) -> ArrayViewMut1<'_, f64> {
        self.0.row_mut(i)
    }

    pub fn array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn array_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    /// Row-major (position-major) flat view.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("embedding is kept in standard layout")
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_slice_mut().expect("embedding is kept in standard layout")
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Squared Frobenius distance to `other`.
    pub fn sq_distance(&self, other: &Embedding) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn row_distance(&self, i: usize, other: &Embedding) -> f64 {
        self.row(i).iter().zip(other.row(i).iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}
