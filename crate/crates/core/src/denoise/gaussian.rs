use nalgebra::DVector;

use super::{check_input, check_sigma, Denoiser};
use crate::dataset::GaussianStats;
use crate::error::Result;

/// Wiener filter for `N(μ, U diag(λ) Uᵀ)`, evaluated in the rank-r basis
/// without forming a d × d matrix.
#[derive(Debug, Clone)]
pub struct GaussianDenoiser {
    stats: GaussianStats,
}

impl GaussianDenoiser {
    pub fn new(stats: GaussianStats) -> Self {
        Self { stats }
    }

    pub fn stats(&self) -> &GaussianStats {
        &self.stats
    }

    fn apply(&self, x: &DVector<f64>, sigma: f64) -> DVector<f64> {
        let s = &self.stats;
        let centered = x - &s.mean;
        let coords = s.basis.tr_mul(&centered);
        let gains = s.shrinkage(sigma);
        &s.mean + &s.basis * coords.component_mul(&gains)
    }
}

impl Denoiser for GaussianDenoiser {
    fn dim(&self) -> usize {
        self.stats.dim()
    }

    /// `σ = 0` is allowed here: components with `λ > 0` pass through and the
    /// rest are removed.
    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        check_input(self.stats.dim(), x)?;
        check_sigma(sigma, true)?;
        Ok(self.apply(x, sigma))
    }
}

pub fn gaussian_denoise(stats: &GaussianStats, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
    GaussianDenoiser::new(stats.clone()).denoise(x, sigma)
}
