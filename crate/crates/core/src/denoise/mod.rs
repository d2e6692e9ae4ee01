//! The denoiser interface and the closed-form denoisers built on it.

mod affine;
mod gaussian;
mod multi_delta;
pub mod plugin;

pub use affine::{affine_denoise, AffineDenoiser, AFFINE_MAGIC, MAX_DENSE_DIM};
pub use gaussian::{gaussian_denoise, GaussianDenoiser};
pub use multi_delta::{multi_delta_denoise, MultiDeltaDenoiser};
pub use plugin::{external_denoise, PluginDenoiser};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A map `D(x; σ)` estimating the clean sample behind a noisy input.
///
/// Implementations must be deterministic for a fixed `(x, σ)` and return a
/// vector of the same dimension as `x`.
pub trait Denoiser {
    fn dim(&self) -> usize;

    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>>;

    /// Rows of `batch` are denoised independently.
    fn denoise_batch(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(batch.nrows(), batch.ncols());
        for i in 0..batch.nrows() {
            let y = self.denoise(&batch.row(i).transpose(), sigma)?;
            out.set_row(i, &y.transpose());
        }
        Ok(out)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        (**self).denoise(x, sigma)
    }
    fn denoise_batch(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
        (**self).denoise_batch(batch, sigma)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        (**self).denoise(x, sigma)
    }
    fn denoise_batch(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
        (**self).denoise_batch(batch, sigma)
    }
}

/// Returns the input unchanged.
#[derive(Debug, Clone, Copy)]
pub struct IdentityDenoiser {
    pub dim: usize,
}

impl Denoiser for IdentityDenoiser {
    fn dim(&self) -> usize {
        self.dim
    }
    fn denoise(&self, x: &DVector<f64>, _sigma: f64) -> Result<DVector<f64>> {
        check_input(self.dim, x)?;
        Ok(x.clone())
    }
}

/// Ignores its input and returns a fixed vector.
#[derive(Debug, Clone)]
pub struct ConstantDenoiser {
    pub value: DVector<f64>,
}

impl Denoiser for ConstantDenoiser {
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn denoise(&self, x: &DVector<f64>, _sigma: f64) -> Result<DVector<f64>> {
        check_input(self.value.len(), x)?;
        Ok(self.value.clone())
    }
}

/// Score `∇ log p(x; σ) = (D(x; σ) - x) / σ²`.
pub fn denoiser_to_score<D: Denoiser + ?Sized>(d: &D, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("score needs sigma > 0, got {sigma}")));
    }
    let out = d.denoise(x, sigma)?;
    Ok((out - x) / (sigma * sigma))
}

pub(crate) fn check_input(dim: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("denoiser input"));
    }
    Ok(())
}

pub(crate) fn check_sigma(sigma: f64, allow_zero: bool) -> Result<()> {
    let ok = sigma.is_finite() && (sigma > 0.0 || (allow_zero && sigma == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("invalid noise level {sigma}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{empirical_stats, DataMatrix};

    #[test]
    fn identity_has_zero_score() {
        let d = IdentityDenoiser { dim: 3 };
        let x = DVector::from_vec(vec![0.4, -2.0, 7.0]);
        assert_eq!(denoiser_to_score(&d, &x, 0.7).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn constant_score_by_substitution() {
        let mu = DVector::from_vec(vec![0.2, -0.1]);
        let d = ConstantDenoiser { value: mu.clone() };
        let x = &mu + DVector::from_vec(vec![1.0, 0.0]);
        let s = denoiser_to_score(&d, &x, 1.0).unwrap();
        assert!((s - DVector::from_vec(vec![-1.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn gaussian_score_one_dimensional() {
        // λ = 1, μ = 0 from the points ±1.
        let x = DataMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let g = GaussianDenoiser::new(empirical_stats(&x).unwrap());
        let s = denoiser_to_score(&g, &DVector::from_element(1, 2.0), 1.0).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn score_rejects_zero_sigma() {
        let d = IdentityDenoiser { dim: 1 };
        assert!(denoiser_to_score(&d, &DVector::zeros(1), 0.0).is_err());
    }
}
