//! Local linear analysis of denoisers: finite-difference Jacobians, their
//! leading singular triplets, and trajectory perturbation along a direction.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::write_container;
use crate::denoise::{Denoiser, MAX_DENSE_DIM};
use crate::error::{Error, Result};
use crate::sampler::{ode_resume, SigmaSchedule, Trajectory};

pub const DEFAULT_STEP: f64 = 1e-4;

/// Central-difference Jacobian of `x ↦ D(x; σ)`. Column `j` is
/// `(D(x + h e_j) − D(x − h e_j)) / 2h`. All `2d` probes are sent as one
/// batch with the `+h` rows first.
pub fn jacobian_fd<D: Denoiser + ?Sized>(d: &D, x: &DVector<f64>, sigma: f64, h: f64) -> Result<DMatrix<f64>> {
    let dim = d.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    if dim > MAX_DENSE_DIM {
        return Err(Error::invalid(format!(
            "dense Jacobian limited to dim <= {MAX_DENSE_DIM}, got {dim}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("jacobian needs finite sigma > 0 and h > 0"));
    }
    let mut probes = DMatrix::zeros(2 * dim, dim);
    for j in 0..dim {
        probes.set_row(j, &x.transpose());
        probes.set_row(dim + j, &x.transpose());
        probes[(j, j)] += h;
        probes[(dim + j, j)] -= h;
    }
    let out = d.denoise_batch(&probes, sigma)?;
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = (out.row(j) - out.row(dim + j)).transpose() / (2.0 * h);
        jac.set_column(j, &col);
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jacobian"));
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriplets {
    pub values: DVector<f64>,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

/// Top-`k` singular triplets of `j`, descending.
pub fn jacobian_svd(j: &DMatrix<f64>, k: usize) -> Result<SvdTriplets> {
    let n = j.nrows().min(j.ncols());
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let svd = crate::linalg::thin_svd(j).ok_or_else(|| Error::invalid("SVD did not converge"))?;
    Ok(SvdTriplets {
        values: svd.s.rows(0, k).into_owned(),
        left: svd.u.columns(0, k).into_owned(),
        right: svd.v.columns(0, k).into_owned(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub point: DVector<f64>,
    pub sigma: f64,
    pub values: DVector<f64>,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ReportMeta {
    format: String,
    dim: usize,
    k: usize,
    sigma: f64,
    singular_values: Vec<f64>,
    point_file: String,
    left_file: String,
    right_file: String,
}

impl JacobianReport {
    pub fn compute<D: Denoiser + ?Sized>(d: &D, x: &DVector<f64>, sigma: f64, h: f64, k: usize) -> Result<Self> {
        let svd = jacobian_svd(&jacobian_fd(d, x, sigma, h)?, k)?;
        Ok(Self {
            point: x.clone(),
            sigma,
            values: svd.values,
            left: svd.left,
            right: svd.right,
        })
    }

    /// Writes `<stem>.json` with metadata and singular values, plus
    /// `<stem>.point.f64`, `<stem>.left.f64` and `<stem>.right.f64`
    /// raw containers. Vector blocks are stored with one singular vector
    /// per row.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        let files = [
            format!("{stem}.point.f64"),
            format!("{stem}.left.f64"),
            format!("{stem}.right.f64"),
        ];
        let meta = ReportMeta {
            format: "jacobian-report/1".into(),
            dim: self.point.len(),
            k: self.values.len(),
            sigma: self.sigma,
            singular_values: self.values.iter().copied().collect(),
            point_file: files[0].clone(),
            left_file: files[1].clone(),
            right_file: files[2].clone(),
        };
        write_container(&dir.join(&files[0]), &DMatrix::from_row_slice(1, self.point.len(), self.point.as_slice()))?;
        write_container(&dir.join(&files[1]), &self.left.transpose())?;
        write_container(&dir.join(&files[2]), &self.right.transpose())?;
        let json = serde_json::to_string_pretty(&meta).expect("report metadata serializes");
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Resume sampling from `trajectory` state `step` displaced by `m·v` for
/// every magnitude `m`, returning the final states in the same order.
pub fn perturb_and_resample<D: Denoiser + ?Sized>(
    d: &D,
    schedule: &SigmaSchedule,
    trajectory: &Trajectory,
    step: usize,
    direction: &DVector<f64>,
    magnitudes: &[f64],
) -> Result<Vec<DVector<f64>>> {
    if step >= schedule.n_steps() || step >= trajectory.len() {
        return Err(Error::invalid(format!("step {step} outside the schedule")));
    }
    if ((direction.norm() - 1.0).abs()) > 1e-8 {
        return Err(Error::invalid("perturbation direction must be unit-norm"));
    }
    let (sigma, state) = &trajectory.points[step];
    if *sigma != schedule.values[step] {
        return Err(Error::invalid("trajectory does not follow the given schedule"));
    }
    if state.len() != direction.len() {
        return Err(Error::DimensionMismatch { expected: state.len(), got: direction.len() });
    }
    magnitudes
        .iter()
        .map(|&m| Ok(ode_resume(d, schedule, step, state + direction * m)?.final_state().clone()))
        .collect()
}
