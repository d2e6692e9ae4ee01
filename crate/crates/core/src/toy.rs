//! A small trainable denoiser: two tanh hidden layers fed with `[x, ln σ]`,
//! trained at a single noise level with Adam and hand-written backprop.

use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::denoise::{check_input, check_sigma, Denoiser};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamParams};
use crate::rng::{self, Rng};

pub const MAGIC: &[u8; 4] = b"TOY1";
pub const DEFAULT_SIGMA_DATA: f64 = 0.5;

/// How the network output `F` becomes the denoiser output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// `D = F`.
    Dae,
    /// `D = c_skip(σ)·x + c_out(σ)·F` with preconditioning coefficients
    /// derived from the data scale `σ_d`.
    Skip { sigma_data: f64 },
    /// `D = c_skip·x + c_out·F` with σ-independent coefficients.
    SkipFixed { c_skip: f64, c_out: f64 },
}

impl Mode {
    pub fn skip() -> Self {
        Mode::Skip {
            sigma_data: DEFAULT_SIGMA_DATA,
        }
    }

    /// `(c_skip, c_out)` at noise level σ.
    pub fn coefficients(&self, sigma: f64) -> (f64, f64) {
        match *self {
            Mode::Dae => (0.0, 1.0),
            Mode::Skip { sigma_data: sd } => {
                let s2 = sigma * sigma + sd * sd;
                (sd * sd / s2, sigma * sd / s2.sqrt())
            }
            Mode::SkipFixed { c_skip, c_out } => (c_skip, c_out),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dae" => Ok(Mode::Dae),
            "skip" => Ok(Mode::skip()),
            _ => Err(Error::invalid(format!("unknown toy mode `{s}` (expected dae or skip)"))),
        }
    }
}

/// `(d+1) → h → h → d` fully connected network with tanh hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    mode: Mode,
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
    w3: DMatrix<f64>,
    b3: DVector<f64>,
}

struct Activations {
    input: DMatrix<f64>,
    h1: DMatrix<f64>,
    h2: DMatrix<f64>,
    out: DMatrix<f64>,
}

fn add_bias(m: &mut DMatrix<f64>, b: &DVector<f64>) {
    let bt: RowDVector<f64> = b.transpose();
    for mut row in m.row_iter_mut() {
        row += &bt;
    }
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_sum().transpose()
}

impl ToyDenoiser {
    /// Weights `~ N(0, 1/fan_in)` drawn in parameter order, biases zero.
    pub fn init(seed: u64, dim: usize, hidden: usize, mode: Mode) -> Result<Self> {
        if dim == 0 || hidden == 0 {
            return Err(Error::invalid("toy network needs dim >= 1 and hidden >= 1"));
        }
        validate_mode(&mode)?;
        let mut r = rng::seeded(seed);
        let mut layer = |rows: usize, cols: usize| {
            let scale = 1.0 / (cols as f64).sqrt();
            let flat: Vec<f64> = (0..rows * cols).map(|_| scale * rng::normal(&mut r)).collect();
            DMatrix::from_row_slice(rows, cols, &flat)
        };
        let w1 = layer(hidden, dim + 1);
        let w2 = layer(hidden, hidden);
        let w3 = layer(dim, hidden);
        Ok(Self {
            mode,
            w1,
            b1: DVector::zeros(hidden),
            w2,
            b2: DVector::zeros(hidden),
            w3,
            b3: DVector::zeros(dim),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) -> Result<()> {
        validate_mode(&mode)?;
        self.mode = mode;
        Ok(())
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn n_params(&self) -> usize {
        let (d, h) = (self.b3.len(), self.hidden());
        h * (d + 1) + h + h * h + h + d * h + d
    }

    /// Parameters in checkpoint order: `W1, b1, W2, b2, W3, b3`, weight
    /// matrices row-major with shape `(out, in)`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in [(&self.w1, &self.b1), (&self.w2, &self.b2), (&self.w3, &self.b3)] {
            for row in w.row_iter() {
                out.extend(row.iter());
            }
            out.extend(b.iter());
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: flat.len(),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("toy parameters"));
        }
        let mut off = 0;
        for (w, b) in [
            (&mut self.w1, &mut self.b1),
            (&mut self.w2, &mut self.b2),
            (&mut self.w3, &mut self.b3),
        ] {
            let (r, c) = w.shape();
            *w = DMatrix::from_row_slice(r, c, &flat[off..off + r * c]);
            off += r * c;
            b.copy_from_slice(&flat[off..off + b.len()]);
            off += b.len();
        }
        Ok(())
    }

    fn forward(&self, x: &DMatrix<f64>, sigma: f64) -> Activations {
        let (n, d) = x.shape();
        let mut input = DMatrix::from_element(n, d + 1, sigma.ln());
        input.columns_mut(0, d).copy_from(x);
        let mut h1 = &input * self.w1.transpose();
        add_bias(&mut h1, &self.b1);
        h1.apply(|v| *v = v.tanh());
        let mut h2 = &h1 * self.w2.transpose();
        add_bias(&mut h2, &self.b2);
        h2.apply(|v| *v = v.tanh());
        let mut f = &h2 * self.w3.transpose();
        add_bias(&mut f, &self.b3);
        let (c_skip, c_out) = self.mode.coefficients(sigma);
        let out = match self.mode {
            Mode::Dae => f,
            _ => x * c_skip + f * c_out,
        };
        Activations { input, h1, h2, out }
    }

    /// Mean over rows of `‖D(noisy_i; σ) − target_i‖²` and its gradient in
    /// [`ToyDenoiser::params`] order.
    pub fn loss_and_grad(&self, noisy: &DMatrix<f64>, target: &DMatrix<f64>, sigma: f64) -> (f64, Vec<f64>) {
        let act = self.forward(noisy, sigma);
        let n = noisy.nrows() as f64;
        let resid = &act.out - target;
        let loss = resid.norm_squared() / n;
        let (_, c_out) = self.mode.coefficients(sigma);
        let g_f = resid * (2.0 * c_out / n);

        let g_w3 = g_f.transpose() * &act.h2;
        let g_b3 = column_sums(&g_f);
        let mut g_z2 = &g_f * &self.w3;
        g_z2.zip_apply(&act.h2, |g, h| *g *= 1.0 - h * h);
        let g_w2 = g_z2.transpose() * &act.h1;
        let g_b2 = column_sums(&g_z2);
        let mut g_z1 = &g_z2 * &self.w2;
        g_z1.zip_apply(&act.h1, |g, h| *g *= 1.0 - h * h);
        let g_w1 = g_z1.transpose() * &act.input;
        let g_b1 = column_sums(&g_z1);

        let mut grad = Vec::with_capacity(self.n_params());
        for (w, b) in [(&g_w1, &g_b1), (&g_w2, &g_b2), (&g_w3, &g_b3)] {
            for row in w.row_iter() {
                grad.extend(row.iter());
            }
            grad.extend(b.iter());
        }
        (loss, grad)
    }

    pub fn loss(&self, noisy: &DMatrix<f64>, target: &DMatrix<f64>, sigma: f64) -> f64 {
        (&self.forward(noisy, sigma).out - target).norm_squared() / noisy.nrows() as f64
    }

    /// Checkpoint layout: magic `TOY1`, mode byte (0 dae, 1 skip, 2 fixed
    /// skip), `u32` dim, `u32` hidden, then `f64` σ_d for mode 1 or
    /// `c_skip, c_out` for mode 2, then the parameters in
    /// [`ToyDenoiser::params`] order. All little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.n_params());
        out.extend_from_slice(MAGIC);
        let extra: Vec<f64> = match self.mode {
            Mode::Dae => {
                out.push(0);
                vec![]
            }
            Mode::Skip { sigma_data } => {
                out.push(1);
                vec![sigma_data]
            }
            Mode::SkipFixed { c_skip, c_out } => {
                out.push(2);
                vec![c_skip, c_out]
            }
        };
        out.extend_from_slice(&(self.b3.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.hidden() as u32).to_le_bytes());
        for v in extra.into_iter().chain(self.params()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const FMT: &str = "toy checkpoint";
        if !bytes.starts_with(MAGIC) {
            return Err(Error::BadMagic {
                expected: "TOY1",
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        if bytes.len() < 13 {
            return Err(Error::malformed(FMT, "truncated header"));
        }
        let mode_byte = bytes[4];
        let dim = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let hidden = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let mut floats = bytes[13..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        if !bytes[13..].len().is_multiple_of(8) {
            return Err(Error::malformed(FMT, "payload is not a whole number of f64 values"));
        }
        let mut next = || floats.next().ok_or_else(|| Error::malformed(FMT, "truncated mode parameters"));
        let mode = match mode_byte {
            0 => Mode::Dae,
            1 => Mode::Skip { sigma_data: next()? },
            2 => Mode::SkipFixed {
                c_skip: next()?,
                c_out: next()?,
            },
            b => return Err(Error::malformed(FMT, format!("unknown mode byte {b}"))),
        };
        if dim == 0 || hidden == 0 || dim > crate::denoise::MAX_DENSE_DIM || hidden > crate::denoise::MAX_DENSE_DIM {
            return Err(Error::malformed(FMT, format!("unsupported shape dim={dim} hidden={hidden}")));
        }
        let header = 13 + 8 * match mode_byte {
            0 => 0,
            1 => 1,
            _ => 2,
        };
        let n_params = hidden * (dim + 1) + hidden + hidden * hidden + hidden + dim * hidden + dim;
        if bytes.len() - header != 8 * n_params {
            return Err(Error::DimensionMismatch {
                expected: n_params,
                got: (bytes.len() - header) / 8,
            });
        }
        let params: Vec<f64> = bytes[header..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        validate_mode(&mode).map_err(|e| Error::malformed(FMT, e.to_string()))?;
        let mut model = ToyDenoiser {
            mode,
            w1: DMatrix::zeros(hidden, dim + 1),
            b1: DVector::zeros(hidden),
            w2: DMatrix::zeros(hidden, hidden),
            b2: DVector::zeros(hidden),
            w3: DMatrix::zeros(dim, hidden),
            b3: DVector::zeros(dim),
        };
        model.set_params(&params)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn validate_mode(mode: &Mode) -> Result<()> {
    let ok = match *mode {
        Mode::Dae => true,
        Mode::Skip { sigma_data } => sigma_data > 0.0 && sigma_data.is_finite(),
        Mode::SkipFixed { c_skip, c_out } => c_skip.is_finite() && c_out.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid("toy mode coefficients must be finite (and sigma_data > 0)"))
    }
}

impl Denoiser for ToyDenoiser {
    fn dim(&self) -> usize {
        self.b3.len()
    }

    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        check_input(self.dim(), x)?;
        check_sigma(sigma, false)?;
        let batch = DMatrix::from_row_slice(1, x.len(), x.as_slice());
        Ok(self.forward(&batch, sigma).out.row(0).transpose())
    }

    fn denoise_batch(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
        if batch.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: batch.ncols(),
            });
        }
        if batch.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("denoiser input"));
        }
        check_sigma(sigma, false)?;
        Ok(self.forward(batch, sigma).out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyTrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Rows in the fixed validation batch.
    pub val_size: usize,
}

impl Default for ToyTrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch: 64,
            lr: 1e-3,
            seed: 0,
            val_size: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyFit {
    pub model: ToyDenoiser,
    /// Minibatch loss before each update.
    pub losses: Vec<f64>,
    /// Validation loss before training, then after every update.
    pub val_losses: Vec<f64>,
    /// Set when the final validation loss exceeds the initial one.
    pub diverged: bool,
}

/// A fixed set of `(noisy, clean)` rows: clean rows drawn uniformly from
/// `x`, noisy = clean + σ·ε.
pub fn noisy_batch(x: &DataMatrix, sigma: f64, size: usize, rng: &mut Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let idx = rng::batch_indices(rng, x.n_samples(), size);
    let clean = x.select_rows(&idx).values().clone();
    let noise = DMatrix::from_fn(size, x.dim(), |_, _| sigma * rng::normal(rng));
    (&clean + noise, clean)
}

/// Validation batch used by [`train_toy`] for a given config.
pub fn validation_batch(x: &DataMatrix, sigma: f64, cfg: &ToyTrainConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut r = rng::seeded(rng::derive_seed(cfg.seed, u64::MAX));
    noisy_batch(x, sigma, cfg.val_size, &mut r)
}

/// Mean squared denoising error of any denoiser on a `(noisy, clean)` batch.
pub fn batch_loss<D: Denoiser + ?Sized>(d: &D, noisy: &DMatrix<f64>, clean: &DMatrix<f64>, sigma: f64) -> Result<f64> {
    Ok((d.denoise_batch(noisy, sigma)? - clean).norm_squared() / noisy.nrows() as f64)
}

/// Minimize the single-level denoising loss `E‖D(x + σε; σ) − x‖²` with
/// Adam on minibatches of `x`.
pub fn train_toy(mut model: ToyDenoiser, x: &DataMatrix, sigma: f64, cfg: &ToyTrainConfig) -> Result<ToyFit> {
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.dim(),
        });
    }
    check_sigma(sigma, false)?;
    if cfg.batch == 0 || cfg.batch > x.n_samples() {
        return Err(Error::invalid(format!(
            "batch must be in 1..={}, got {}",
            x.n_samples(),
            cfg.batch
        )));
    }
    if cfg.val_size == 0 {
        return Err(Error::invalid("validation batch must be non-empty"));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(Error::invalid("learning rate must be finite and >= 0"));
    }
    let (val_noisy, val_clean) = validation_batch(x, sigma, cfg);
    let mut r = rng::seeded(cfg.seed);
    let mut opt = Adam::new(model.n_params(), AdamParams::default());
    let mut params = model.params();
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut val_losses = Vec::with_capacity(cfg.steps + 1);
    val_losses.push(model.loss(&val_noisy, &val_clean, sigma));
    for step in 0..cfg.steps {
        let (noisy, clean) = noisy_batch(x, sigma, cfg.batch, &mut r);
        let (loss, grad) = model.loss_and_grad(&noisy, &clean, sigma);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { step });
        }
        losses.push(loss);
        opt.step(&mut params, &grad, cfg.lr);
        model.set_params(&params).map_err(|_| Error::NonFiniteLoss { step })?;
        let val = model.loss(&val_noisy, &val_clean, sigma);
        if !val.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        val_losses.push(val);
    }
    let diverged = val_losses.last() > val_losses.first();
    if diverged {
        log::warn!("toy training at sigma={sigma} ended above its initial validation loss");
    }
    Ok(ToyFit {
        model,
        losses,
        val_losses,
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub all_finite: bool,
}

pub const GRAD_CHECK_STEP: f64 = 1e-5;
pub const GRAD_CHECK_MIN_PARAMS: usize = 50;

/// Compare backprop gradients of `‖D(x; σ) − target‖²` with central
/// differences on at least 50 parameters (all of them if fewer).
pub fn grad_check(model: &ToyDenoiser, x: &DVector<f64>, target: &DVector<f64>, sigma: f64) -> Result<GradCheck> {
    grad_check_with(model, x, target, sigma, 0, |_| {})
}

/// [`grad_check`] with a parameter-selection seed and a hook that may
/// alter the analytic gradient before comparison.
pub fn grad_check_with(
    model: &ToyDenoiser,
    x: &DVector<f64>,
    target: &DVector<f64>,
    sigma: f64,
    seed: u64,
    tamper: impl FnOnce(&mut [f64]),
) -> Result<GradCheck> {
    check_input(model.dim(), x)?;
    check_input(model.dim(), target)?;
    check_sigma(sigma, false)?;
    let xs = DMatrix::from_row_slice(1, x.len(), x.as_slice());
    let ts = DMatrix::from_row_slice(1, target.len(), target.as_slice());
    let (_, mut grad) = model.loss_and_grad(&xs, &ts, sigma);
    tamper(&mut grad);
    let n = model.n_params();
    let mut r = rng::seeded(seed);
    let picks = rng::batch_indices(&mut r, n, GRAD_CHECK_MIN_PARAMS.min(n));
    let base = model.params();
    let mut probe = model.clone();
    let mut max_rel: f64 = 0.0;
    let mut all_finite = true;
    for &i in &picks {
        let mut p = base.clone();
        p[i] = base[i] + GRAD_CHECK_STEP;
        probe.set_params(&p)?;
        let up = probe.loss(&xs, &ts, sigma);
        p[i] = base[i] - GRAD_CHECK_STEP;
        probe.set_params(&p)?;
        let down = probe.loss(&xs, &ts, sigma);
        let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
        let analytic = grad[i];
        all_finite &= numeric.is_finite() && analytic.is_finite();
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic - numeric).abs() / scale);
    }
    Ok(GradCheck {
        max_rel_error: max_rel,
        checked: picks.len(),
        all_finite,
    })
}

/// Per-level models dispatched by nearest `ln σ`.
#[derive(Debug, Clone)]
pub struct ToyBank {
    members: Vec<(f64, ToyDenoiser)>,
}

impl ToyBank {
    pub fn new(mut members: Vec<(f64, ToyDenoiser)>) -> Result<Self> {
        let Some(dim) = members.first().map(|(_, m)| m.dim()) else {
            return Err(Error::invalid("toy bank needs at least one model"));
        };
        if members.iter().any(|(s, m)| !(*s > 0.0 && s.is_finite()) || m.dim() != dim) {
            return Err(Error::invalid("toy bank members need sigma > 0 and a common dim"));
        }
        members.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, ToyDenoiser)] {
        &self.members
    }

    pub fn member_for(&self, sigma: f64) -> &ToyDenoiser {
        let target = sigma.ln();
        let mut best = &self.members[0];
        for m in &self.members[1..] {
            if (m.0.ln() - target).abs() < (best.0.ln() - target).abs() {
                best = m;
            }
        }
        &best.1
    }
}

impl Denoiser for ToyBank {
    fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    fn denoise(&self, x: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
        check_sigma(sigma, false)?;
        self.member_for(sigma).denoise(x, sigma)
    }

    fn denoise_batch(&self, batch: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
        check_sigma(sigma, false)?;
        self.member_for(sigma).denoise_batch(batch, sigma)
    }
}

/// Train one model per level of `sigmas`, each from the same architecture
/// with a level-specific derived seed.
pub fn train_bank(
    x: &DataMatrix,
    sigmas: &[f64],
    hidden: usize,
    mode: Mode,
    cfg: &ToyTrainConfig,
) -> Result<(ToyBank, Vec<ToyFit>)> {
    let mut fits = Vec::with_capacity(sigmas.len());
    for (i, &sigma) in sigmas.iter().enumerate() {
        let seed = rng::derive_seed(cfg.seed, i as u64);
        let model = ToyDenoiser::init(seed, x.dim(), hidden, mode)?;
        let fit = train_toy(model, x, sigma, &ToyTrainConfig { seed, ..*cfg }).map_err(|e| Error::at_sigma(sigma, e))?;
        fits.push(fit);
    }
    let bank = ToyBank::new(sigmas.iter().copied().zip(fits.iter().map(|f| f.model.clone())).collect())?;
    Ok((bank, fits))
}
