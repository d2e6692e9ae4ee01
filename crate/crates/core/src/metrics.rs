//! Diagnostics comparing denoisers with each other and with the data:
//! linearity scores, score-field differences, the generalization (GL)
//! score, weight and singular-vector comparisons, and per-σ sweeps.
//!
//! Every Monte-Carlo estimate draws from a ChaCha stream seeded by the
//! caller, so results are bit-reproducible for a given `(seed, n)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::sampler::SigmaSchedule;

/// Default Monte-Carlo sample count for expectations.
pub const DEFAULT_SAMPLES: usize = 100;

/// GL scores above this indicate generalization rather than memorization.
pub const GL_GENERALIZATION_THRESHOLD: f64 = 0.6;

pub const DEFAULT_ALPHA: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const DEFAULT_BETA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearityVariant {
    Cosine,
    Nmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffVariant {
    Rmse,
    Nmse,
}

/// A Monte-Carlo average together with the number of draws that had to be
/// skipped (zero-norm outputs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub skipped: usize,
}

fn noisy_row(x: &DataMatrix, sigma: f64, rng: &mut Rng) -> DVector<f64> {
    let i = rng::uniform_index(rng, x.n_samples());
    x.row(i) + rng::normal_vector(rng, x.dim(), sigma)
}

fn check_dims<D: Denoiser + ?Sized>(d: &D, x: &DataMatrix) -> Result<()> {
    if d.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: d.dim(),
        });
    }
    Ok(())
}

/// How well `D(αx₁ + βx₂)` agrees with `αD(x₁) + βD(x₂)` for noisy data
/// points `x₁, x₂`. Requires `α² + β² = 1` so the mixed input keeps noise
/// variance σ².
#[allow(clippy::too_many_arguments)]
pub fn linearity_score<D: Denoiser + ?Sized>(
    d: &D,
    x: &DataMatrix,
    sigma: f64,
    alpha: f64,
    beta: f64,
    n_pairs: usize,
    seed: u64,
    variant: LinearityVariant,
) -> Result<Estimate> {
    if ((alpha * alpha + beta * beta) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "alpha² + beta² must be 1, got {}",
            alpha * alpha + beta * beta
        )));
    }
    if !(sigma > 0.0) || n_pairs == 0 {
        return Err(Error::invalid("linearity score needs sigma > 0 and n_pairs > 0"));
    }
    check_dims(d, x)?;
    let mut rng = rng::seeded(seed);
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for _ in 0..n_pairs {
        let x1 = noisy_row(x, sigma, &mut rng);
        let x2 = noisy_row(x, sigma, &mut rng);
        let mixed = d.denoise(&(&x1 * alpha + &x2 * beta), sigma)?;
        let combined = d.denoise(&x1, sigma)? * alpha + d.denoise(&x2, sigma)? * beta;
        let value = match variant {
            LinearityVariant::Cosine => {
                let (a, b) = (mixed.norm(), combined.norm());
                if a == 0.0 || b == 0.0 {
                    None
                } else {
                    Some((mixed.dot(&combined) / (a * b)).abs().min(1.0))
                }
            }
            LinearityVariant::Nmse => {
                let a = mixed.norm();
                (a != 0.0).then(|| (&mixed - &combined).norm() / a)
            }
        };
        match value {
            Some(v) => {
                total += v;
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if used == 0 {
        return Err(Error::invalid("every pair produced a zero-norm output"));
    }
    Ok(Estimate {
        value: total / used as f64,
        skipped,
    })
}

/// Mean per-draw discrepancy between two denoisers on noisy data.
///
/// `Rmse` averages `√(‖D₁ − D₂‖² / d)` over draws; `Nmse` averages
/// `‖D₁ − D₂‖ / ‖D₁‖`.
pub fn score_diff<D1: Denoiser + ?Sized, D2: Denoiser + ?Sized>(
    d1: &D1,
    d2: &D2,
    x: &DataMatrix,
    sigma: f64,
    n: usize,
    seed: u64,
    variant: DiffVariant,
) -> Result<f64> {
    if !(sigma > 0.0) || n == 0 {
        return Err(Error::invalid("score difference needs sigma > 0 and n > 0"));
    }
    check_dims(d1, x)?;
    check_dims(d2, x)?;
    let dim = x.dim() as f64;
    let mut rng = rng::seeded(seed);
    let mut total = 0.0;
    for _ in 0..n {
        let y = noisy_row(x, sigma, &mut rng);
        let a = d1.denoise(&y, sigma)?;
        let b = d2.denoise(&y, sigma)?;
        let diff = (&a - &b).norm();
        total += match variant {
            DiffVariant::Rmse => (diff * diff / dim).sqrt(),
            DiffVariant::Nmse => {
                let an = a.norm();
                if an == 0.0 {
                    if diff == 0.0 {
                        0.0
                    } else {
                        return Err(Error::invalid("zero-norm reference output in NMSE"));
                    }
                } else {
                    diff / an
                }
            }
        };
    }
    Ok(total / n as f64)
}

/// Exact nearest training row by Euclidean distance, lowest index on ties.
pub fn nearest_neighbor(y: &DataMatrix, x: &DVector<f64>) -> (usize, f64) {
    let vals = y.values();
    let mut dist = vec![0.0; vals.nrows()];
    for (j, col) in vals.column_iter().enumerate() {
        let xj = x[j];
        for (acc, v) in dist.iter_mut().zip(col.iter()) {
            let t = xj - v;
            *acc += t * t;
        }
    }
    let mut best = 0usize;
    for (i, &dd) in dist.iter().enumerate() {
        if dd < dist[best] {
            best = i;
        }
    }
    (best, dist[best].sqrt())
}

/// Mean of `‖x_i − NN_Y(x_i)‖ / ‖x_i‖` over the rows of `samples`.
/// Zero-norm samples are skipped and counted.
pub fn gl_score(samples: &DMatrix<f64>, y: &DataMatrix) -> Result<Estimate> {
    if samples.nrows() == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if samples.ncols() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: y.dim(),
            got: samples.ncols(),
        });
    }
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for row in samples.row_iter() {
        let x = row.transpose();
        let norm = x.norm();
        if norm == 0.0 {
            skipped += 1;
            continue;
        }
        let (_, dist) = nearest_neighbor(y, &x);
        total += dist / norm;
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("every sample has zero norm"));
    }
    Ok(Estimate {
        value: total / used as f64,
        skipped,
    })
}

/// `‖W₁ − W₂‖_F² / ‖W₂‖_F²`, with `W₂` the reference.
pub fn weight_nmse(w1: &DMatrix<f64>, w2: &DMatrix<f64>) -> Result<f64> {
    if w1.shape() != w2.shape() {
        return Err(Error::DimensionMismatch {
            expected: w2.len(),
            got: w1.len(),
        });
    }
    let denom = w2.norm_squared();
    if denom == 0.0 {
        return Err(Error::invalid("reference weight matrix is zero"));
    }
    Ok((w1 - w2).norm_squared() / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    /// Entry (i, j) is `|U₁[:, i] · U₂[:, j]|`.
    pub matrix: DMatrix<f64>,
    /// Set when some input column was not unit-norm and had to be rescaled.
    pub renormalized: bool,
}

pub fn singular_vector_correlation(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> Result<Correlation> {
    if u1.nrows() != u2.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u1.nrows(),
            got: u2.nrows(),
        });
    }
    let mut renormalized = false;
    let mut normalize = |u: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut u = u.clone();
        for mut col in u.column_iter_mut() {
            let n = col.norm();
            if n == 0.0 {
                return Err(Error::invalid("zero column in singular basis"));
            }
            if (n - 1.0).abs() > 1e-8 {
                renormalized = true;
                col /= n;
            }
        }
        Ok(u)
    };
    let a = normalize(u1)?;
    let b = normalize(u2)?;
    let matrix = (a.transpose() * b).map(|v| v.abs().min(1.0));
    Ok(Correlation { matrix, renormalized })
}

/// A metric evaluated at each level of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub sigmas: Vec<f64>,
    pub values: Vec<f64>,
    /// Monte-Carlo samples per level.
    pub n: usize,
    /// Master seed; level `i` uses `derive_seed(seed, i)`.
    pub seed: u64,
}

impl MetricSeries {
    /// CSV with header `sigma,value,n,seed`; `seed` is the per-level seed.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "sigma,value,n,seed")?;
        for (i, (s, v)) in self.sigmas.iter().zip(&self.values).enumerate() {
            writeln!(w, "{s:e},{v:e},{},{}", self.n, rng::derive_seed(self.seed, i as u64))?;
        }
        Ok(())
    }

    /// Parse the CSV written by [`MetricSeries::write_csv`]. The master seed
    /// is not recoverable from per-level seeds and is left as 0.
    pub fn parse_csv(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = reader
            .headers()
            .map_err(|e| Error::malformed("series csv", e.to_string()))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::malformed("series csv", format!("missing `{name}` column")))
        };
        let (si, vi) = (col("sigma")?, col("value")?);
        let ni = headers.iter().position(|h| h == "n");
        let mut series = MetricSeries {
            name: name.to_string(),
            sigmas: Vec::new(),
            values: Vec::new(),
            n: 0,
            seed: 0,
        };
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::malformed("series csv", e.to_string()))?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::malformed("series csv", format!("bad number in column {i}")))
            };
            let (s, v) = (num(si)?, num(vi)?);
            if !s.is_finite() || !v.is_finite() {
                return Err(Error::NonFinite("series csv"));
            }
            series.sigmas.push(s);
            series.values.push(v);
            if let Some(n) = ni.and_then(|i| rec.get(i)).and_then(|s| s.parse().ok()) {
                series.n = n;
            }
        }
        if series.sigmas.is_empty() {
            return Err(Error::malformed("series csv", "no rows"));
        }
        Ok(series)
    }
}

/// Built-in sweepable metrics.
pub enum SweepMetric<'a> {
    Linearity {
        denoiser: &'a dyn Denoiser,
        data: &'a DataMatrix,
        alpha: f64,
        beta: f64,
        variant: LinearityVariant,
    },
    ScoreDiff {
        first: &'a dyn Denoiser,
        second: &'a dyn Denoiser,
        data: &'a DataMatrix,
        variant: DiffVariant,
    },
}

impl SweepMetric<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMetric::Linearity { variant: LinearityVariant::Cosine, .. } => "linearity-cosine",
            SweepMetric::Linearity { variant: LinearityVariant::Nmse, .. } => "linearity-nmse",
            SweepMetric::ScoreDiff { variant: DiffVariant::Rmse, .. } => "score-diff-rmse",
            SweepMetric::ScoreDiff { variant: DiffVariant::Nmse, .. } => "score-diff-nmse",
        }
    }

    pub fn evaluate(&self, sigma: f64, n: usize, seed: u64) -> Result<f64> {
        match *self {
            SweepMetric::Linearity {
                denoiser,
                data,
                alpha,
                beta,
                variant,
            } => Ok(linearity_score(denoiser, data, sigma, alpha, beta, n, seed, variant)?.value),
            SweepMetric::ScoreDiff {
                first,
                second,
                data,
                variant,
            } => score_diff(first, second, data, sigma, n, seed, variant),
        }
    }
}

/// Evaluate `metric(σ, n, seed_i)` at every level with `seed_i =
/// derive_seed(master_seed, i)`.
pub fn metric_sweep_with(
    name: &str,
    schedule: &SigmaSchedule,
    n: usize,
    master_seed: u64,
    mut metric: impl FnMut(f64, usize, u64) -> Result<f64>,
) -> Result<MetricSeries> {
    let mut values = Vec::with_capacity(schedule.n_steps());
    for (i, &sigma) in schedule.values.iter().enumerate() {
        let v = metric(sigma, n, rng::derive_seed(master_seed, i as u64)).map_err(|e| Error::at_sigma(sigma, e))?;
        if !v.is_finite() {
            return Err(Error::at_sigma(sigma, Error::NonFinite("metric value")));
        }
        values.push(v);
    }
    Ok(MetricSeries {
        name: name.to_string(),
        sigmas: schedule.values.clone(),
        values,
        n,
        seed: master_seed,
    })
}

pub fn metric_sweep(metric: &SweepMetric<'_>, schedule: &SigmaSchedule, n: usize, master_seed: u64) -> Result<MetricSeries> {
    metric_sweep_with(metric.name(), schedule, n, master_seed, |s, n, seed| metric.evaluate(s, n, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::empirical_stats;
    use crate::denoise::{AffineDenoiser, GaussianDenoiser, IdentityDenoiser, MultiDeltaDenoiser};
    use crate::sampler::edm_schedule;
    use proptest::prelude::*;

    fn data(seed: u64, n: usize, d: usize) -> DataMatrix {
        let mut r = rng::seeded(seed);
        DataMatrix::new(DMatrix::from_fn(n, d, |_, _| 0.8 * rng::normal(&mut r).tanh())).unwrap()
    }

    fn linear_map(seed: u64, d: usize) -> AffineDenoiser {
        let mut r = rng::seeded(seed);
        AffineDenoiser::new(DMatrix::from_fn(d, d, |_, _| rng::normal(&mut r)), DVector::zeros(d), 1.0).unwrap()
    }

    #[test]
    fn linear_map_is_perfectly_linear() {
        let x = data(1, 20, 5);
        let a = linear_map(2, 5);
        for sigma in [0.01, 1.0, 40.0] {
            let cos = linearity_score(&a, &x, sigma, DEFAULT_ALPHA, DEFAULT_BETA, 100, 3, LinearityVariant::Cosine).unwrap();
            assert!((cos.value - 1.0).abs() < 1e-9);
            let nmse = linearity_score(&a, &x, sigma, DEFAULT_ALPHA, DEFAULT_BETA, 100, 3, LinearityVariant::Nmse).unwrap();
            assert!(nmse.value < 1e-9);
        }
    }

    #[test]
    fn centered_gaussian_is_linear() {
        let mut x = data(4, 30, 4).values().clone();
        let mean = x.row_mean();
        for mut row in x.row_iter_mut() {
            row -= &mean;
        }
        let x = DataMatrix::new(x / 2.0).unwrap();
        let g = GaussianDenoiser::new(empirical_stats(&x).unwrap());
        let cos = linearity_score(&g, &x, 0.5, DEFAULT_ALPHA, DEFAULT_BETA, 100, 0, LinearityVariant::Cosine).unwrap();
        assert!((cos.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linearity_rejects_unnormalized_weights() {
        let x = data(1, 5, 2);
        let id = IdentityDenoiser { dim: 2 };
        assert!(linearity_score(&id, &x, 1.0, 1.0, 1.0, 10, 0, LinearityVariant::Cosine).is_err());
    }

    #[test]
    fn score_diff_trivial_cases() {
        let x = data(5, 10, 3);
        let id = IdentityDenoiser { dim: 3 };
        for v in [DiffVariant::Rmse, DiffVariant::Nmse] {
            assert_eq!(score_diff(&id, &id, &x, 1.0, 50, 0, v).unwrap(), 0.0);
        }
        let c = -0.37;
        let shifted = AffineDenoiser::new(DMatrix::identity(3, 3), DVector::from_element(3, c), 1.0).unwrap();
        let r = score_diff(&id, &shifted, &x, 1.0, 50, 0, DiffVariant::Rmse).unwrap();
        assert!((r - c.abs()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_and_closed_form_agree() {
        let x = data(6, 25, 4);
        let s = empirical_stats(&x).unwrap();
        let g = GaussianDenoiser::new(s.clone());
        let a = crate::distill::closed_form_linear(&s, 0.9).unwrap();
        assert!(score_diff(&g, &a, &x, 0.9, 100, 1, DiffVariant::Rmse).unwrap() < 1e-9);
    }

    #[test]
    fn gl_trivial_cases() {
        let y = DataMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let s = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        assert_eq!(gl_score(&s, &y).unwrap().value, 0.5);

        let y = data(7, 12, 3);
        let sub = y.values().rows(2, 5).into_owned();
        assert_eq!(gl_score(&sub, &y).unwrap().value, 0.0);

        let z = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 0.5, 0.5, 0.5]);
        assert_eq!(gl_score(&z, &y).unwrap().skipped, 1);
    }

    #[test]
    fn nearest_neighbor_ties_take_lowest_index() {
        let y = DataMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(nearest_neighbor(&y, &DVector::from_element(1, 0.0)).0, 0);
    }

    #[test]
    fn weight_nmse_cases() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(weight_nmse(&w, &w).unwrap(), 0.0);
        assert_eq!(weight_nmse(&(&w * 2.0), &w).unwrap(), 1.0);
        assert!(weight_nmse(&w, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn correlation_identity_and_permutation() {
        let q = nalgebra::linalg::QR::new(DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j * 7) % 5) as f64 + 0.1 * j as f64)).q();
        let c = singular_vector_correlation(&q, &q).unwrap();
        assert!((c.matrix.clone() - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!(!c.renormalized);
        let mut swapped = q.clone();
        swapped.swap_columns(0, 2);
        let c = singular_vector_correlation(&q, &swapped).unwrap();
        let perm = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((c.matrix - perm).amax() < 1e-12);
        let c = singular_vector_correlation(&(&q * 2.0), &q).unwrap();
        assert!(c.renormalized);
    }

    #[test]
    fn sweeps() {
        let x = data(8, 16, 4);
        let sched = edm_schedule(0.002, 80.0, 7.0, 10).unwrap();
        let id = IdentityDenoiser { dim: 4 };
        let zero = metric_sweep(
            &SweepMetric::ScoreDiff { first: &id, second: &id, data: &x, variant: DiffVariant::Rmse },
            &sched,
            20,
            1,
        )
        .unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));

        let a = linear_map(9, 4);
        let ones = metric_sweep(
            &SweepMetric::Linearity { denoiser: &a, data: &x, alpha: DEFAULT_ALPHA, beta: DEFAULT_BETA, variant: LinearityVariant::Cosine },
            &sched,
            20,
            1,
        )
        .unwrap();
        assert!(ones.values.iter().all(|&v| (v - 1.0).abs() < 1e-9));

        let again = metric_sweep(
            &SweepMetric::Linearity { denoiser: &a, data: &x, alpha: DEFAULT_ALPHA, beta: DEFAULT_BETA, variant: LinearityVariant::Cosine },
            &sched,
            20,
            1,
        )
        .unwrap();
        assert_eq!(ones, again);
    }

    #[test]
    fn multi_delta_and_gaussian_coincide_at_high_noise() {
        let x = data(10, 16, 4);
        let m = MultiDeltaDenoiser::new(x.clone());
        let g = GaussianDenoiser::new(empirical_stats(&x).unwrap());
        let hi = score_diff(&m, &g, &x, 80.0, 200, 3, DiffVariant::Rmse).unwrap();
        let mid = score_diff(&m, &g, &x, 1.0, 200, 3, DiffVariant::Rmse).unwrap();
        assert!(hi < mid, "{hi} vs {mid}");
    }

    #[test]
    fn sweep_errors_carry_sigma() {
        let sched = edm_schedule(0.1, 1.0, 7.0, 3).unwrap();
        let err = metric_sweep_with("fail", &sched, 1, 0, |s, _, _| {
            if s < 0.5 { Err(Error::invalid("boom")) } else { Ok(1.0) }
        })
        .unwrap_err();
        assert!(matches!(err, Error::AtSigma { .. }));
    }

    #[test]
    fn series_csv_round_trip() {
        let s = MetricSeries { name: "m".into(), sigmas: vec![2.0, 1.0], values: vec![0.5, 0.25], n: 10, seed: 4 };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = MetricSeries::parse_csv("m", &buf).unwrap();
        assert_eq!(back.sigmas, s.sigmas);
        assert_eq!(back.values, s.values);
        assert_eq!(back.n, 10);
    }

    proptest! {
        #[test]
        fn rmse_is_symmetric(seed in 0u64..200, sigma in 0.05f64..5.0) {
            let x = data(seed, 8, 3);
            let m = MultiDeltaDenoiser::new(x.clone());
            let g = GaussianDenoiser::new(empirical_stats(&x).unwrap());
            let a = score_diff(&m, &g, &x, sigma, 20, seed, DiffVariant::Rmse).unwrap();
            let b = score_diff(&g, &m, &x, sigma, 20, seed, DiffVariant::Rmse).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn gl_permutation_invariant(seed in 0u64..200) {
            let y = data(seed, 10, 3);
            let samples = data(seed + 1000, 6, 3).values().clone();
            let mut perm: Vec<usize> = (0..10).rev().collect();
            perm.rotate_left((seed % 10) as usize);
            let a = gl_score(&samples, &y).unwrap().value;
            let b = gl_score(&samples, &y.select_rows(&perm)).unwrap().value;
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn linearity_scores_in_range(seed in 0u64..100, sigma in 0.05f64..5.0) {
            let x = data(seed, 8, 3);
            let m = MultiDeltaDenoiser::new(x.clone());
            let cos = linearity_score(&m, &x, sigma, DEFAULT_ALPHA, DEFAULT_BETA, 20, seed, LinearityVariant::Cosine).unwrap();
            prop_assert!((0.0..=1.0).contains(&cos.value));
            let nmse = linearity_score(&m, &x, sigma, DEFAULT_ALPHA, DEFAULT_BETA, 20, seed, LinearityVariant::Nmse).unwrap();
            prop_assert!(nmse.value >= 0.0);
        }

        #[test]
        fn correlation_entries_bounded(seed in 0u64..200) {
            let mut r = rng::seeded(seed);
            let a = DMatrix::from_fn(6, 3, |_, _| rng::normal(&mut r));
            let b = DMatrix::from_fn(6, 3, |_, _| rng::normal(&mut r));
            let c = singular_vector_correlation(&a, &b).unwrap();
            prop_assert!(c.matrix.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
