//! Dense affine denoiser `x ↦ W x + b` and its `AFF1` checkpoint.
//!
//! Checkpoint layout, little-endian:
//!
//! ```text
//! b"AFF1" | u32 dim | f64 sigma | dim·dim × f64 W (row-major) | dim × f64 b
//! ```

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{check_input, Denoiser};
use crate::error::{Error, Result};

pub const AFFINE_MAGIC: &[u8; 4] = b"AFF1";

/// Largest dimension for which a dense d × d weight is materialized.
pub const MAX_DENSE_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineDenoiser {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Noise level the map was fitted at; informational only.
    pub sigma: f64,
}

impl AffineDenoiser {
    pub fn new(weight: DMatrix<f64>, bias: DVector<f64>, sigma: f64) -> Result<Self> {
        if !weight.is_square() || weight.nrows() != bias.len() {
            return Err(Error::DimensionMismatch {
                expected: bias.len(),
                got: weight.nrows(),
            });
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine parameters"));
        }
        Ok(Self { weight, bias, sigma })
    }

    pub fn zeros(dim: usize, sigma: f64) -> Self {
        Self {
            weight: DMatrix::zeros(dim, dim),
            bias: DVector::zeros(dim),
            sigma,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.bias.len();
        let mut out = Vec::with_capacity(16 + 8 * d * (d + 1));
        out.extend_from_slice(AFFINE_MAGIC);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        out.extend_from_slice(&self.sigma.to_le_bytes());
        for i in 0..d {
            for j in 0..d {
                out.extend_from_slice(&self.weight[(i, j)].to_le_bytes());
            }
        }
        for v in self.bias.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(AFFINE_MAGIC) {
            return Err(Error::BadMagic {
                expected: "AFF1",
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        if bytes.len() < 16 {
            return Err(Error::malformed("affine checkpoint", "truncated header"));
        }
        let d = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let sigma = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        if d == 0 || d > MAX_DENSE_DIM {
            return Err(Error::malformed("affine checkpoint", format!("unsupported dim {d}")));
        }
        let payload = &bytes[16..];
        let expected = d * d + d;
        if payload.len() != 8 * expected {
            return Err(Error::malformed(
                "affine checkpoint",
                format!("expected {expected} values, found {} bytes", payload.len()),
            ));
        }
        let vals: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let weight = DMatrix::from_row_slice(d, d, &vals[..d * d]);
        let bias = DVector::from_column_slice(&vals[d * d..]);
        Self::new(weight, bias, sigma)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

impl Denoiser for AffineDenoiser {
    fn dim(&self) -> usize {
        self.bias.len()
    }

    fn denoise(&self, x: &DVector<f64>, _sigma: f64) -> Result<DVector<f64>> {
        check_input(self.bias.len(), x)?;
        Ok(&self.weight * x + &self.bias)
    }
}

pub fn affine_denoise(d: &AffineDenoiser, x: &DVector<f64>) -> Result<DVector<f64>> {
    d.denoise(x, d.sigma)
}
