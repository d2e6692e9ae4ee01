//! Training data and its empirical Gaussian statistics.

mod formats;

pub use formats::{
    load_dataset, parse_csv, parse_pgm, read_container, read_container_bytes, write_container,
    write_container_bytes, DataFormat, CONTAINER_MAGIC,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng;

/// N samples of dimension d, stored one sample per row, every entry in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::invalid("data matrix must have at least one row and column"));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                let v = values[(row, col)];
                if !v.is_finite() {
                    return Err(Error::NonFinite("data matrix"));
                }
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange { row, col, value: v });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.values.row_mean().transpose()
    }

    /// Rows `indices` in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(indices),
        }
    }
}

/// Empirical mean plus the eigendecomposition `U diag(λ) Uᵀ` of the
/// empirical covariance (divisor N).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    /// d × r, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Descending, non-negative.
    pub eigvals: DVector<f64>,
}

impl GaussianStats {
    pub fn new(mean: DVector<f64>, basis: DMatrix<f64>, eigvals: DVector<f64>) -> Result<Self> {
        if basis.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: basis.nrows(),
            });
        }
        if basis.ncols() != eigvals.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.ncols(),
                got: eigvals.len(),
            });
        }
        if eigvals.iter().any(|l| !l.is_finite() || *l < 0.0)
            || basis.iter().chain(mean.iter()).any(|v| !v.is_finite())
        {
            return Err(Error::invalid("stats must be finite with non-negative eigenvalues"));
        }
        if eigvals.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("eigenvalues must be sorted descending"));
        }
        Ok(Self {
            mean,
            basis,
            eigvals,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    pub fn max_eigval(&self) -> f64 {
        self.eigvals.iter().copied().fold(0.0, f64::max)
    }

    /// Dense `U diag(λ) Uᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let scaled = &self.basis * DMatrix::from_diagonal(&self.eigvals);
        scaled * self.basis.transpose()
    }

    /// Per-component Wiener gains `λ_i / (λ_i + σ²)`; a zero eigenvalue has
    /// gain 0 at every σ, including σ = 0.
    pub fn shrinkage(&self, sigma: f64) -> DVector<f64> {
        let s2 = sigma * sigma;
        self.eigvals
            .map(|l| if l > 0.0 { l / (l + s2) } else { 0.0 })
    }
}

const CLAMP_RELATIVE: f64 = 1e-12;

/// Mean and covariance eigendecomposition of `x`, via the thin SVD of the
/// centered data; eigenvalues are `s²/N`.
pub fn empirical_stats(x: &DataMatrix) -> Result<GaussianStats> {
    let n = x.n_samples();
    let d = x.dim();
    let mean = x.mean();
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dataset mean"));
    }
    // d × N so that the left singular vectors are the covariance eigenvectors.
    let centered_t = DMatrix::from_fn(d, n, |j, i| x.values[(i, j)] - mean[j]);
    let r = n.min(d);
    let svd = crate::linalg::thin_svd(&centered_t)
        .ok_or_else(|| Error::invalid("eigendecomposition of centered data did not converge"))?;
    let mut eigvals = svd.s_sq / n as f64;
    let mut basis = svd.u;
    debug_assert_eq!(eigvals.len(), r);

    let lmax = eigvals.iter().copied().fold(0.0, f64::max);
    for l in eigvals.iter_mut() {
        if *l < CLAMP_RELATIVE * lmax || lmax == 0.0 {
            *l = 0.0;
        }
    }
    canonicalize_signs(&mut basis);
    GaussianStats::new(mean, basis, eigvals)
}

/// Flip each column so its largest-magnitude entry is positive (first one on ties).
pub fn canonicalize_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Deterministic shuffle-and-cut: the first part gets `floor(fraction · N)` rows.
pub fn split_dataset(x: &DataMatrix, seed: u64, fraction: f64) -> Result<(DataMatrix, DataMatrix)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} not in (0, 1)")));
    }
    let n = x.n_samples();
    let first = (fraction * n as f64).floor() as usize;
    if first == 0 || first == n {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {n} samples leaves an empty part"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = rng::seeded(seed);
    // Fisher-Yates, drawing from the high end down.
    for i in (1..n).rev() {
        let j = rng::uniform_index(&mut rng, i + 1);
        perm.swap(i, j);
    }
    Ok((x.select_rows(&perm[..first]), x.select_rows(&perm[first..])))
}
