use nalgebra::DVector;

use super::{check_input, check_sigma, Denoiser};
use crate::dataset::DataMatrix;
use crate::error::Result;

/// Optimal denoiser for the empirical distribution itself: a softmax-weighted
/// average of the training points.
#[derive(Debug, Clone)]
pub struct MultiDeltaDenoiser {
    data: DataMatrix,
}

impl MultiDeltaDenoiser {
    pub fn new(data: DataMatrix) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    /// Softmax weights over training rows, computed from max-shifted logits.
    pub fn weights(&self, x: &DVector<f64>, sigma: f64) -> Result<Vec<f64>> {
        check_input(self.data.dim(), x)?;
        check_sigma(sigma, false)?;
        let y = self.data.values();
        let n = y.nrows();
        let mut sq = vec![0.0; n];
        for (j, col) in y.column_iter().enumerate() {
            let xj = x[j];
            for (acc, yij) in sq.iter_mut().zip(col.iter()) {
                let diff = xj - yij;
                *acc += diff * diff;
            }
        }
        let inv = 1.0 / (2.0 * sigma * sigma);
        let max_logit = sq.iter().map(|s| -s * inv).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for s in sq.iter_mut() {
            *s = (-*s * inv - max_logit).exp();
            total += *s;
        }
        for w in sq.iter_mut() {
            *w /= total;
        }
        Ok(sq)
    }
}

impl Denoiser for MultiDeltaDenoiser {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        let w = self.weights(x, sigma)?;
        let y = self.data.values();
        let mut out = DVector::zeros(y.ncols());
        for (j, col) in y.column_iter().enumerate() {
            out[j] = col.iter().zip(&w).map(|(v, w)| v * w).sum();
        }
        Ok(out)
    }
}

pub fn multi_delta_denoise(y: &DataMatrix, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
    MultiDeltaDenoiser::new(y.clone()).denoise(x, sigma)
}
