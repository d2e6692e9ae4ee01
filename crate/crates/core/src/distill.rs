//! Affine approximations of denoisers: stochastic distillation of an
//! arbitrary teacher, the closed-form optimum, gradient descent on the
//! denoising objective itself, and the orthogonality diagnostic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataMatrix, GaussianStats};
use crate::denoise::MAX_DENSE_DIM;
use crate::denoise::{AffineDenoiser, Denoiser};
use crate::error::{Error, Result};
use crate::optim::{sgd_step, Adam, AdamParams};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    /// Number of update steps.
    pub steps: usize,
    /// Samples per step.
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Adam when true, plain gradient descent otherwise.
    pub adam: bool,
    /// Linearly anneal the learning rate to zero over the run.
    pub lr_decay: bool,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            batch: 64,
            lr: 1e-2,
            seed: 0,
            adam: true,
            lr_decay: true,
        }
    }
}

impl DistillConfig {
    fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch == 0 {
            return Err(Error::invalid("steps and batch must be at least 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        Ok(())
    }

    fn lr_at(&self, step: usize) -> f64 {
        if self.lr_decay {
            self.lr * (1.0 - step as f64 / self.steps as f64)
        } else {
            self.lr
        }
    }
}

/// Result of fitting an affine map.
#[derive(Debug, Clone)]
pub struct AffineFit {
    pub denoiser: AffineDenoiser,
    /// Loss before each update.
    pub losses: Vec<f64>,
}

fn check_dense_dim(d: usize) -> Result<()> {
    if d > MAX_DENSE_DIM {
        return Err(Error::invalid(format!(
            "dimension {d} exceeds the dense limit of {MAX_DENSE_DIM}"
        )));
    }
    Ok(())
}

/// `(W, b)` packed as `[W row-major | b]` for the optimizers.
fn pack(w: &DMatrix<f64>, b: &DVector<f64>, out: &mut Vec<f64>) {
    out.clear();
    let d = b.len();
    for i in 0..d {
        for j in 0..d {
            out.push(w[(i, j)]);
        }
    }
    out.extend(b.iter());
}

fn unpack(flat: &[f64], w: &mut DMatrix<f64>, b: &mut DVector<f64>) {
    let d = b.len();
    for i in 0..d {
        for j in 0..d {
            w[(i, j)] = flat[i * d + j];
        }
    }
    b.copy_from_slice(&flat[d * d..]);
}

enum Updater {
    Adam(Adam),
    Sgd,
}

impl Updater {
    fn new(cfg: &DistillConfig, n: usize) -> Self {
        if cfg.adam {
            Updater::Adam(Adam::new(n, AdamParams::default()))
        } else {
            Updater::Sgd
        }
    }

    fn apply(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        match self {
            Updater::Adam(a) => a.step(params, grads, lr),
            Updater::Sgd => sgd_step(params, grads, lr),
        }
    }
}

/// Fit `W y + b ≈ D(y; σ)` over noisy inputs `y = x + ε`, starting from zero.
///
/// Each step draws `batch` rows of `x` and fresh `N(0, σ² I)` noise, and
/// takes one optimizer step on the mean squared error.
pub fn distill_linear<D: Denoiser + ?Sized>(
    target: &D,
    x: &DataMatrix,
    sigma: f64,
    cfg: &DistillConfig,
) -> Result<AffineFit> {
    cfg.validate()?;
    let d = x.dim();
    check_dense_dim(d)?;
    if target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.dim(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = rng::seeded(cfg.seed);
    let mut w = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    let mut flat = Vec::with_capacity(d * d + d);
    let mut grads = vec![0.0; d * d + d];
    let mut updater = Updater::new(cfg, d * d + d);
    let mut losses = Vec::with_capacity(cfg.steps);
    let n = cfg.batch;

    for step in 0..cfg.steps {
        let idx = rng::batch_indices(&mut rng, x.n_samples(), n);
        let mut inputs = DMatrix::<f64>::zeros(n, d);
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..d {
                inputs[(r, j)] = x.values()[(i, j)] + sigma * rng::normal(&mut rng);
            }
        }
        let targets = target
            .denoise_batch(&inputs, sigma)
            .map_err(|e| Error::at_step(step, e))?;

        // residual rows r_k = W y_k + b − t_k
        let mut resid = &inputs * w.transpose() - targets;
        for mut row in resid.row_iter_mut() {
            row += b.transpose();
        }
        let loss = resid.norm_squared() / n as f64;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        losses.push(loss);

        let scale = 2.0 / n as f64;
        let gw = resid.transpose() * &inputs * scale;
        let gb = resid.row_sum().transpose() * scale;
        pack(&gw, &gb, &mut grads);
        pack(&w, &b, &mut flat);
        updater.apply(&mut flat, &grads, cfg.lr_at(step));
        unpack(&flat, &mut w, &mut b);
    }
    Ok(AffineFit {
        denoiser: AffineDenoiser::new(w, b, sigma)?,
        losses,
    })
}

/// The minimizer of the denoising objective over affine maps:
/// `W = U diag(λ/(λ+σ²)) Uᵀ`, `b = (I − W) μ`.
pub fn closed_form_linear(stats: &GaussianStats, sigma: f64) -> Result<AffineDenoiser> {
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    check_dense_dim(stats.dim())?;
    let gains = stats.shrinkage(sigma);
    let w = &stats.basis * DMatrix::from_diagonal(&gains) * stats.basis.transpose();
    // Exact symmetry regardless of rounding in the product.
    let w = (&w + w.transpose()) * 0.5;
    let b = &stats.mean - &w * &stats.mean;
    AffineDenoiser::new(w, b, sigma)
}

/// Largest curvature of the noise-averaged affine denoising loss, i.e. twice
/// the top eigenvalue of `[[Σ + μμᵀ + σ²I, μ], [μᵀ, 1]]`. Plain gradient
/// descent on it is stable iff the step is below `2 / L`. For centered data
/// this is `2 · max(λ_max + σ², 1)`.
pub fn dsm_curvature(stats: &GaussianStats, sigma: f64) -> f64 {
    let d = stats.dim();
    let mu = &stats.mean;
    let second = stats.covariance() + mu * mu.transpose();
    let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
    h.view_mut((0, 0), (d, d)).copy_from(&second);
    for i in 0..d {
        h[(i, i)] += sigma * sigma;
        h[(i, d)] = mu[i];
        h[(d, i)] = mu[i];
    }
    h[(d, d)] = 1.0;
    2.0 * SymmetricEigen::new(h).eigenvalues.max()
}

/// Gradient descent on the denoising objective `E‖W(x+ε) + b − x‖²` itself.
///
/// The Gaussian noise is integrated analytically,
/// `E_ε‖W(x+ε) + b − x‖² = ‖(W − I)x + b‖² + σ²‖W‖_F²`,
/// so with `batch ≥ N` every step is an exact full gradient step and the
/// iterates converge to [`closed_form_linear`] for a small enough rate.
/// Smaller batches subsample rows of `x`. `cfg.adam` is ignored.
pub fn train_linear_dsm(x: &DataMatrix, sigma: f64, cfg: &DistillConfig) -> Result<AffineFit> {
    cfg.validate()?;
    let d = x.dim();
    check_dense_dim(d)?;
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let n_all = x.n_samples();
    let full = cfg.batch >= n_all;
    let moments = |rows: &DMatrix<f64>| {
        let n = rows.nrows() as f64;
        let second = rows.transpose() * rows / n;
        let mean = rows.row_mean().transpose();
        (second, mean)
    };
    let full_moments = full.then(|| moments(x.values()));
    let mut rng = rng::seeded(cfg.seed);

    let mut w = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    let eye = DMatrix::<f64>::identity(d, d);
    let mut losses = Vec::with_capacity(cfg.steps);
    let s2 = sigma * sigma;
    let mut initial = None;

    for step in 0..cfg.steps {
        let owned;
        let (second, mean) = match &full_moments {
            Some(m) => m,
            None => {
                let idx = rng::batch_indices(&mut rng, n_all, cfg.batch);
                owned = moments(&x.values().select_rows(&idx));
                &owned
            }
        };
        let a = &w - &eye;
        // E‖A x + b‖² = tr(A S Aᵀ) + 2 bᵀ A m + ‖b‖²
        let a_s = &a * second;
        let loss = a_s.component_mul(&a).sum() + 2.0 * b.dot(&(&a * mean)) + b.norm_squared() + s2 * w.norm_squared();
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        let init = *initial.get_or_insert(loss);
        if loss > 10.0 * init && loss > 0.0 {
            return Err(Error::Diverged {
                step,
                loss,
                initial: init,
            });
        }
        losses.push(loss);

        let lr = cfg.lr_at(step);
        let gw = (a_s + &b * mean.transpose() + &w * s2) * 2.0;
        let gb = (&a * mean + &b) * 2.0;
        w -= gw * lr;
        b -= gb * lr;
    }
    Ok(AffineFit {
        denoiser: AffineDenoiser::new(w, b, sigma)?,
        losses,
    })
}

/// Monte-Carlo estimate of
/// `‖E[(D(x+ε) − x)(x+ε−μ)ᵀ]‖_F / ‖E[(x+ε−μ)(x+ε−μ)ᵀ]‖_F`,
/// which vanishes for the Wiener filter of the data.
pub fn orthogonality_residual<D: Denoiser + ?Sized>(
    d: &D,
    x: &DataMatrix,
    sigma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let dim = x.dim();
    if d.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: d.dim(),
        });
    }
    let mu = x.mean();
    let mut rng = rng::seeded(seed);
    let mut cross = DMatrix::<f64>::zeros(dim, dim);
    let mut auto = DMatrix::<f64>::zeros(dim, dim);
    for _ in 0..n_samples {
        let clean = x.row(rng::uniform_index(&mut rng, x.n_samples()));
        let noisy = &clean + rng::normal_vector(&mut rng, dim, sigma);
        let err = d.denoise(&noisy, sigma)? - &clean;
        let centered = noisy - &mu;
        cross.ger(1.0, &err, &centered, 1.0);
        auto.ger(1.0, &centered, &centered, 1.0);
    }
    Ok(cross.norm() / auto.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::empirical_stats;
    use crate::denoise::{ConstantDenoiser, IdentityDenoiser, MultiDeltaDenoiser};
    use crate::metrics::weight_nmse;
    use nalgebra::DMatrix;

    fn two_point() -> DataMatrix {
        DataMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap()
    }

    fn synthetic(seed: u64, n: usize, d: usize, offset: f64) -> DataMatrix {
        let mut r = rng::seeded(seed);
        let vals = DMatrix::from_fn(n, d, |_, j| {
            (offset + 0.3 * rng::normal(&mut r) / (1.0 + 0.3 * j as f64)).clamp(-1.0, 1.0)
        });
        DataMatrix::new(vals).unwrap()
    }

    #[test]
    fn closed_form_limits() {
        let x = synthetic(1, 50, 4, 0.1);
        let s = empirical_stats(&x).unwrap();
        let a = closed_form_linear(&s, 0.0).unwrap();
        assert!((&a.weight - DMatrix::identity(4, 4)).amax() < 1e-12);
        assert!(a.bias.amax() < 1e-12);
        let a = closed_form_linear(&s, 1e8).unwrap();
        assert!(a.weight.amax() < 1e-14);
        assert!((&a.bias - &s.mean).amax() < 1e-14);
    }

    #[test]
    fn closed_form_two_point() {
        let s = empirical_stats(&two_point()).unwrap();
        let a = closed_form_linear(&s, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!((a.weight - expected).amax() < 1e-14);
        assert!(a.bias.amax() < 1e-14);
    }

    #[test]
    fn closed_form_satisfies_normal_equations() {
        let x = synthetic(2, 40, 5, 0.2);
        let s = empirical_stats(&x).unwrap();
        for sigma in [0.05, 0.5, 3.0] {
            let a = closed_form_linear(&s, sigma).unwrap();
            let sigma_cov = s.covariance();
            let lhs = &a.weight * (&sigma_cov + DMatrix::identity(5, 5) * sigma * sigma);
            assert!((lhs - &sigma_cov).amax() < 1e-10);
            let eig = SymmetricEigen::new(a.weight.clone()).eigenvalues;
            assert!(eig.iter().all(|&e| (-1e-12..=1.0 + 1e-12).contains(&e)));
            assert_eq!(a.weight, a.weight.transpose());
        }
    }

    #[test]
    fn closed_form_matches_gaussian_denoiser() {
        let x = synthetic(3, 30, 6, -0.1);
        let s = empirical_stats(&x).unwrap();
        let g = crate::denoise::GaussianDenoiser::new(s.clone());
        let a = closed_form_linear(&s, 0.7).unwrap();
        let mut r = rng::seeded(4);
        for _ in 0..100 {
            let y = rng::normal_vector(&mut r, 6, 2.0);
            let diff = a.denoise(&y, 0.7).unwrap() - g.denoise(&y, 0.7).unwrap();
            assert!(diff.amax() < 1e-10);
        }
    }

    #[test]
    fn distill_recovers_affine_teacher() {
        let teacher = AffineDenoiser::new(
            DMatrix::from_row_slice(3, 3, &[0.6, 0.1, 0.0, 0.1, 0.3, -0.2, 0.0, -0.2, 0.8]),
            DVector::from_vec(vec![0.05, -0.1, 0.2]),
            1.0,
        )
        .unwrap();
        let x = synthetic(5, 200, 3, 0.0);
        let cfg = DistillConfig {
            steps: 6000,
            batch: 32,
            lr: 0.02,
            seed: 1,
            adam: true,
            lr_decay: true,
        };
        let fit = distill_linear(&teacher, &x, 1.0, &cfg).unwrap();
        let rel_w = (&fit.denoiser.weight - &teacher.weight).norm() / teacher.weight.norm();
        let rel_b = (&fit.denoiser.bias - &teacher.bias).norm() / teacher.bias.norm();
        assert!(rel_w < 1e-3, "weight error {rel_w}");
        assert!(rel_b < 1e-3, "bias error {rel_b}");
    }

    #[test]
    fn distill_gaussian_teacher() {
        let x = synthetic(6, 300, 4, 0.1);
        let s = empirical_stats(&x).unwrap();
        let teacher = crate::denoise::GaussianDenoiser::new(s.clone());
        let fit = distill_linear(&teacher, &x, 0.5, &DistillConfig::default()).unwrap();
        let reference = closed_form_linear(&s, 0.5).unwrap();
        assert!(weight_nmse(&fit.denoiser.weight, &reference.weight).unwrap() < 0.05);
    }

    #[test]
    fn distill_loss_nonincreasing_over_windows() {
        let x = synthetic(7, 64, 4, 0.0);
        let teacher = MultiDeltaDenoiser::new(x.clone());
        let fit = distill_linear(&teacher, &x, 1.0, &DistillConfig { steps: 2000, ..Default::default() }).unwrap();
        // (mean, standard error) of each 100-step window of minibatch losses
        let windows: Vec<(f64, f64)> = fit
            .losses
            .chunks(100)
            .map(|c| {
                let n = c.len() as f64;
                let m = c.iter().sum::<f64>() / n;
                let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
                (m, (var / n).sqrt())
            })
            .collect();
        for pair in windows.windows(2) {
            let ((m0, e0), (m1, e1)) = (pair[0], pair[1]);
            assert!(m1 <= m0 + 3.0 * (e0 + e1), "{windows:?}");
        }
        assert!(windows.last().unwrap().0 < windows[0].0 * 0.5);
    }

    #[test]
    fn closed_form_is_optimal_for_multi_delta_objective() {
        let x = synthetic(8, 24, 3, 0.1);
        let s = empirical_stats(&x).unwrap();
        let teacher = MultiDeltaDenoiser::new(x.clone());
        let sigma = 0.8;
        let best = closed_form_linear(&s, sigma).unwrap();
        // Shared Monte-Carlo draws for every candidate.
        let mut r = rng::seeded(9);
        let mut inputs = Vec::new();
        for _ in 0..20000 {
            let i = rng::uniform_index(&mut r, x.n_samples());
            inputs.push(x.row(i) + rng::normal_vector(&mut r, 3, sigma));
        }
        let targets: Vec<_> = inputs.iter().map(|y| teacher.denoise(y, sigma).unwrap()).collect();
        let objective = |a: &AffineDenoiser| {
            inputs
                .iter()
                .zip(&targets)
                .map(|(y, t)| (&a.weight * y + &a.bias - t).norm_squared())
                .sum::<f64>()
                / inputs.len() as f64
        };
        let base = objective(&best);
        for k in 0..20 {
            let mut pr = rng::seeded(100 + k);
            let w = &best.weight + DMatrix::from_fn(3, 3, |_, _| 0.05 * rng::normal(&mut pr));
            let b = &best.bias + rng::normal_vector(&mut pr, 3, 0.05);
            let cand = AffineDenoiser::new(w, b, sigma).unwrap();
            assert!(base <= objective(&cand), "perturbation {k} beats the closed form");
        }
    }

    #[test]
    fn dsm_two_point_converges() {
        let x = two_point();
        let cfg = DistillConfig {
            steps: 3000,
            batch: 2,
            lr: 0.1,
            seed: 0,
            adam: false,
            lr_decay: false,
        };
        let fit = train_linear_dsm(&x, 1.0, &cfg).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!((fit.denoiser.weight - expected).norm() < 1e-2);
    }

    #[test]
    fn dsm_zero_rate_stays_zero() {
        let cfg = DistillConfig {
            steps: 10,
            batch: 2,
            lr: 0.0,
            seed: 0,
            adam: false,
            lr_decay: false,
        };
        let fit = train_linear_dsm(&two_point(), 1.0, &cfg).unwrap();
        assert_eq!(fit.denoiser.weight, DMatrix::zeros(2, 2));
        assert_eq!(fit.denoiser.bias, DVector::zeros(2));
        assert!(fit.losses.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn dsm_flags_divergence_above_stability_bound() {
        let x = synthetic(10, 100, 4, 0.3);
        let s = empirical_stats(&x).unwrap();
        let sigma = 0.5;
        let curvature = dsm_curvature(&s, sigma);
        assert!(curvature >= 2.0 * (s.max_eigval() + sigma * sigma));
        let cfg = DistillConfig {
            steps: 500,
            batch: 100,
            lr: 2.5 / curvature,
            seed: 0,
            adam: false,
            lr_decay: false,
        };
        assert!(matches!(train_linear_dsm(&x, sigma, &cfg), Err(Error::Diverged { .. })));
        let stable = DistillConfig { lr: 1.0 / curvature, ..cfg };
        assert!(train_linear_dsm(&x, sigma, &stable).is_ok());
    }

    #[test]
    fn orthogonality_extremes() {
        // Centered data with one dominant direction.
        let mut rows = Vec::new();
        for k in 0..8 {
            let t = -0.9 + 1.8 * k as f64 / 7.0;
            rows.push(vec![t, 0.05 * t.signum()]);
            rows.push(vec![-t, -0.05 * t.signum()]);
        }
        let x = DataMatrix::from_rows(&rows).unwrap();
        let s = empirical_stats(&x).unwrap();
        let sigma = 0.3;
        let g = crate::denoise::GaussianDenoiser::new(s.clone());
        let res_g = orthogonality_residual(&g, &x, sigma, 10_000, 1).unwrap();
        assert!(res_g < 0.05, "{res_g}");

        let cov = s.covariance();
        let noisy_cov = &cov + DMatrix::identity(2, 2) * sigma * sigma;
        let zero = ConstantDenoiser { value: DVector::zeros(2) };
        let res_zero = orthogonality_residual(&zero, &x, sigma, 10_000, 1).unwrap();
        let expected_zero = cov.norm() / noisy_cov.norm();
        assert!((res_zero - expected_zero).abs() < 0.05, "{res_zero} vs {expected_zero}");

        let id = IdentityDenoiser { dim: 2 };
        let res_id = orthogonality_residual(&id, &x, sigma, 10_000, 1).unwrap();
        let expected_id = sigma * sigma * 2f64.sqrt() / noisy_cov.norm();
        assert!((res_id - expected_id).abs() < 0.05, "{res_id} vs {expected_id}");
    }
}
