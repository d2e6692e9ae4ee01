//! Noise schedules and deterministic probability-flow sampling.
//!
//! Time is parameterized as `σ(t) = t`, so one Euler step from level `t_i`
//! to `t_{i+1}` is
//!
//! ```text
//! x_{i+1} = (t_{i+1} / t_i) · x_i + (1 − t_{i+1} / t_i) · D(x_i; t_i)
//! ```
//!
//! and the final step to `t = 0` returns `D(x; σ_min)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::dataset::GaussianStats;
use crate::denoise::Denoiser;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSchedule {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `None` for hand-specified level lists.
    pub rho: Option<f64>,
    /// Strictly decreasing positive levels; the terminal level 0 is implicit.
    pub values: Vec<f64>,
}

impl SigmaSchedule {
    /// Use an explicit list of levels (at least one, strictly decreasing, positive).
    pub fn from_levels(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("schedule needs at least one level"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("schedule levels must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("schedule levels must be strictly decreasing"));
        }
        Ok(Self {
            sigma_min: *values.last().expect("nonempty"),
            sigma_max: values[0],
            rho: None,
            values,
        })
    }

    /// Number of positive levels.
    pub fn n_steps(&self) -> usize {
        self.values.len()
    }

    /// Levels followed by the terminal 0.
    pub fn with_terminal(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().chain(std::iter::once(0.0))
    }
}

/// The ρ-warped interpolation between `sigma_max` and `sigma_min`, endpoints exact.
pub fn edm_schedule(sigma_min: f64, sigma_max: f64, rho: f64, n_steps: usize) -> Result<SigmaSchedule> {
    if !(sigma_min > 0.0 && sigma_min < sigma_max && sigma_max.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}"
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    if n_steps < 2 {
        return Err(Error::invalid(format!("need at least 2 steps, got {n_steps}")));
    }
    let hi = sigma_max.powf(1.0 / rho);
    let lo = sigma_min.powf(1.0 / rho);
    let last = (n_steps - 1) as f64;
    let mut values: Vec<f64> = (0..n_steps)
        .map(|i| (hi + (i as f64 / last) * (lo - hi)).powf(rho))
        .collect();
    values[0] = sigma_max;
    values[n_steps - 1] = sigma_min;
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("schedule is not strictly decreasing at this resolution"));
    }
    Ok(SigmaSchedule {
        sigma_min,
        sigma_max,
        rho: Some(rho),
        values,
    })
}

/// States from `σ_max` down to 0; `points.len() == n_steps + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<(f64, DVector<f64>)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        &self.points.last().expect("trajectory is never empty").1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rows are states in order.
    pub fn states(&self) -> DMatrix<f64> {
        let d = self.points[0].1.len();
        DMatrix::from_fn(self.points.len(), d, |i, j| self.points[i].1[j])
    }

    /// CSV with columns `step, sigma, x0 … x{d-1}`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let d = self.points.first().map_or(0, |p| p.1.len());
        write!(w, "step,sigma")?;
        for j in 0..d {
            write!(w, ",x{j}")?;
        }
        writeln!(w)?;
        for (step, (sigma, state)) in self.points.iter().enumerate() {
            write!(w, "{step},{sigma:e}")?;
            for v in state.iter() {
                write!(w, ",{v:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One Euler step of the probability-flow ODE from `t_cur` to `t_next`.
fn euler_step<D: Denoiser + ?Sized>(d: &D, x: &DVector<f64>, t_cur: f64, t_next: f64) -> Result<DVector<f64>> {
    let denoised = d.denoise(x, t_cur)?;
    if t_next == 0.0 {
        return Ok(denoised);
    }
    let ratio = t_next / t_cur;
    Ok(x * ratio + denoised * (1.0 - ratio))
}

/// Continue sampling from `state` at level index `start` to the end of the
/// schedule. The returned trajectory starts at `(values[start], state)`.
pub fn ode_resume<D: Denoiser + ?Sized>(
    d: &D,
    schedule: &SigmaSchedule,
    start: usize,
    state: DVector<f64>,
) -> Result<Trajectory> {
    if start >= schedule.n_steps() {
        return Err(Error::invalid(format!(
            "start level {start} outside schedule of {} levels",
            schedule.n_steps()
        )));
    }
    if state.len() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: state.len(),
        });
    }
    let levels: Vec<f64> = schedule.with_terminal().collect();
    let mut points = Vec::with_capacity(levels.len() - start);
    let mut x = state;
    for i in start..levels.len() - 1 {
        let next = euler_step(d, &x, levels[i], levels[i + 1]).map_err(|e| Error::at_step(i, e))?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::at_step(i, Error::NonFinite("sampler state")));
        }
        points.push((levels[i], std::mem::replace(&mut x, next)));
    }
    points.push((0.0, x));
    Ok(Trajectory { points })
}

/// First-order probability-flow sampling from `x_T` at `σ_max`.
pub fn ode_sample<D: Denoiser + ?Sized>(d: &D, schedule: &SigmaSchedule, x_t: &DVector<f64>) -> Result<Trajectory> {
    ode_resume(d, schedule, 0, x_t.clone())
}

/// Closed-form probability-flow trajectory under the Gaussian denoiser:
/// each principal coordinate of `x_T − μ` is scaled by
/// `√((σ(t)² + λ_i) / (σ(T)² + λ_i))`, and the part outside `span(U)` by
/// `σ(t) / σ(T)`.
pub fn gaussian_trajectory(stats: &GaussianStats, x_t: &DVector<f64>, schedule: &SigmaSchedule) -> Result<Trajectory> {
    if x_t.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.dim(),
            got: x_t.len(),
        });
    }
    let top = schedule.sigma_max;
    let centered = x_t - &stats.mean;
    let coords = stats.basis.tr_mul(&centered);
    let perp = &centered - &stats.basis * &coords;
    let points = schedule
        .with_terminal()
        .enumerate()
        .map(|(i, t)| {
            if i == 0 {
                return (t, x_t.clone());
            }
            let scaled = coords.zip_map(&stats.eigvals, |c, l| c * ((t * t + l) / (top * top + l)).sqrt());
            let state = &stats.mean + &stats.basis * scaled + &perp * (t / top);
            (t, state)
        })
        .collect();
    Ok(Trajectory { points })
}
