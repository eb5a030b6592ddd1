//! Small 1-D convolutional network in `f64` with analytic gradients.
//!
//! Two topologies share one implementation through a grouped first layer:
//!
//! * **MC** (multi-channel): one input of shape `(n_steps, n_coeff)`;
//!   `conv(f, k) → ReLU → conv(f, k) → ReLU → flatten → dense(out)`.
//! * **MI** (multi-input): `n_coeff` inputs of shape `(n_steps, 1)`, each
//!   with its own `conv(f, k) → ReLU` branch; the branch outputs are
//!   concatenated along channels (`f · n_coeff` features per step) and
//!   continue through `conv(f, k) → ReLU → flatten → dense(out)`.
//!
//! Convolutions use stride 1 and "same" zero padding. Weights start
//! Glorot-uniform, biases at zero. Training minimizes mean squared error
//! with Adam, stops early on the validation loss and restores the best
//! weights.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureTensor;
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Topology {
    Mc,
    Mi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub filters: usize,
    /// Odd kernel width.
    pub kernel: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Mini-batch size; `None` trains on the full set each step.
    pub batch_size: Option<usize>,
    pub topology: Topology,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            filters: 32,
            kernel: 5,
            max_epochs: 200,
            patience: 20,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: Some(32),
            topology: Topology::Mc,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.filters == 0 {
            errs.push("filters must be positive".to_string());
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            errs.push(format!("kernel must be odd, got {}", self.kernel));
        }
        if self.max_epochs == 0 {
            errs.push("max_epochs must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            errs.push("learning_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            errs.push("Adam betas must lie in [0, 1)".into());
        }
        if self.batch_size == Some(0) {
            errs.push("batch_size must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

/// Layer sizes and parameter offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Dims {
    steps: usize,
    channels: usize,
    groups: usize,
    in_per_group: usize,
    filters: usize,
    kernel: usize,
    outputs: usize,
}

impl Dims {
    fn new(cfg: &CnnConfig, steps: usize, channels: usize, outputs: usize) -> Self {
        let groups = match cfg.topology {
            Topology::Mc => 1,
            Topology::Mi => channels,
        };
        Self {
            steps,
            channels,
            groups,
            in_per_group: channels / groups,
            filters: cfg.filters,
            kernel: cfg.kernel,
            outputs,
        }
    }

    fn pad(&self) -> usize {
        self.kernel / 2
    }

    /// Channels after the first layer (concatenated branches).
    fn mid(&self) -> usize {
        self.groups * self.filters
    }

    fn flat(&self) -> usize {
        self.steps * self.filters
    }

    fn n_w1(&self) -> usize {
        self.groups * self.filters * self.kernel * self.in_per_group
    }

    fn n_w2(&self) -> usize {
        self.filters * self.kernel * self.mid()
    }

    fn n_wd(&self) -> usize {
        self.outputs * self.flat()
    }

    /// Offsets of `w1, b1, w2, b2, wd, bd` and the total length.
    fn offsets(&self) -> [usize; 7] {
        let w1 = 0;
        let b1 = w1 + self.n_w1();
        let w2 = b1 + self.mid();
        let b2 = w2 + self.n_w2();
        let wd = b2 + self.filters;
        let bd = wd + self.n_wd();
        [w1, b1, w2, b2, wd, bd, bd + self.outputs]
    }
}

/// Number of trainable parameters for the given input shape.
pub fn parameter_count(cfg: &CnnConfig, n_steps: usize, n_coeff: usize, n_outputs: usize) -> usize {
    Dims::new(cfg, n_steps, n_coeff, n_outputs).offsets()[6]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train: f64,
    pub val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    cfg: CnnConfig,
    dims: Dims,
    params: Vec<f64>,
    history: Vec<EpochLoss>,
    best_epoch: Option<usize>,
}

/// Per-sample activations and gradient scratch.
struct Scratch {
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: Vec<f64>,
    dh1: Vec<f64>,
    dh2: Vec<f64>,
}

impl Scratch {
    fn new(d: &Dims) -> Self {
        Self {
            h1: vec![0.0; d.steps * d.mid()],
            h2: vec![0.0; d.flat()],
            out: vec![0.0; d.outputs],
            dh1: vec![0.0; d.steps * d.mid()],
            dh2: vec![0.0; d.flat()],
        }
    }
}

impl CnnModel {
    /// Untrained network with Glorot-uniform weights and zero biases.
    pub fn init(cfg: &CnnConfig, n_steps: usize, n_coeff: usize, n_outputs: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if n_steps == 0 || n_coeff == 0 || n_outputs == 0 {
            return Err(shape_err("CNN dimensions must be positive"));
        }
        let d = Dims::new(cfg, n_steps, n_coeff, n_outputs);
        let o = d.offsets();
        let mut params = vec![0.0; o[6]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |slice: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            slice.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
        };
        glorot(&mut params[o[0]..o[1]], d.kernel * d.in_per_group, d.kernel * d.filters);
        glorot(&mut params[o[2]..o[3]], d.kernel * d.mid(), d.kernel * d.filters);
        glorot(&mut params[o[4]..o[5]], d.flat(), d.outputs);
        Ok(Self {
            cfg: cfg.clone(),
            dims: d,
            params,
            history: Vec::new(),
            best_epoch: None,
        })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.cfg
    }

    pub fn n_steps(&self) -> usize {
        self.dims.steps
    }

    pub fn n_coeff(&self) -> usize {
        self.dims.channels
    }

    pub fn n_outputs(&self) -> usize {
        self.dims.outputs
    }

    /// Input branches: 1 for MC, `n_coeff` for MI.
    pub fn n_branches(&self) -> usize {
        self.dims.groups
    }

    /// Channels entering the second convolution.
    pub fn concatenated_channels(&self) -> usize {
        self.dims.mid()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Per-epoch training and validation losses.
    pub fn history(&self) -> &[EpochLoss] {
        &self.history
    }

    /// Epoch (0-based) whose weights were restored.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    fn check(&self, x: &FeatureTensor, y: Option<&[Vec<f64>]>) -> Result<()> {
        x.check_shape(self.dims.steps, self.dims.channels)?;
        if let Some(y) = y {
            if y.len() != x.samples() || y.iter().any(|r| r.len() != self.dims.outputs) {
                return Err(shape_err(format!(
                    "{} target rows for {} samples of {} outputs",
                    y.len(),
                    x.samples(),
                    self.dims.outputs
                )));
            }
        }
        Ok(())
    }

    fn forward(&self, x: &[f64], s: &mut Scratch) {
        let d = &self.dims;
        let o = d.offsets();
        let p = &self.params;
        let (w1, b1) = (&p[o[0]..o[1]], &p[o[1]..o[2]]);
        let (w2, b2) = (&p[o[2]..o[3]], &p[o[3]..o[4]]);
        let (wd, bd) = (&p[o[4]..o[5]], &p[o[5]..o[6]]);
        let (l, c, ig, f, k, mid, pad) = (d.steps, d.channels, d.in_per_group, d.filters, d.kernel, d.mid(), d.pad());

        for t in 0..l {
            for g in 0..d.groups {
                for of in 0..f {
                    let ch = g * f + of;
                    let mut z = b1[ch];
                    for kk in 0..k {
                        let Some(tt) = (t + kk).checked_sub(pad).filter(|&tt| tt < l) else {
                            continue;
                        };
                        let w = &w1[(ch * k + kk) * ig..(ch * k + kk + 1) * ig];
                        let xi = &x[tt * c + g * ig..tt * c + (g + 1) * ig];
                        z += dot(w, xi);
                    }
                    s.h1[t * mid + ch] = z.max(0.0);
                }
            }
        }
        for t in 0..l {
            for of in 0..f {
                let mut z = b2[of];
                for kk in 0..k {
                    let Some(tt) = (t + kk).checked_sub(pad).filter(|&tt| tt < l) else {
                        continue;
                    };
                    z += dot(&w2[(of * k + kk) * mid..(of * k + kk + 1) * mid], &s.h1[tt * mid..(tt + 1) * mid]);
                }
                s.h2[t * f + of] = z.max(0.0);
            }
        }
        let flat = d.flat();
        for j in 0..d.outputs {
            s.out[j] = bd[j] + dot(&wd[j * flat..(j + 1) * flat], &s.h2);
        }
    }

    /// Accumulates `∂loss/∂params` for one sample given `∂loss/∂out` in
    /// `s.out` (overwritten).
    fn backward(&self, x: &[f64], s: &mut Scratch, grad: &mut [f64]) {
        let d = &self.dims;
        let o = d.offsets();
        let p = &self.params;
        let (l, c, ig, f, k, mid, pad, flat) =
            (d.steps, d.channels, d.in_per_group, d.filters, d.kernel, d.mid(), d.pad(), d.flat());

        s.dh2.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..d.outputs {
            let g = s.out[j];
            grad[o[5] + j] += g;
            let row = o[4] + j * flat;
            axpy(g, &s.h2, &mut grad[row..row + flat]);
            axpy(g, &p[row..row + flat], &mut s.dh2);
        }

        s.dh1.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..l {
            for of in 0..f {
                if s.h2[t * f + of] <= 0.0 {
                    continue;
                }
                let g = s.dh2[t * f + of];
                grad[o[3] + of] += g;
                for kk in 0..k {
                    let Some(tt) = (t + kk).checked_sub(pad).filter(|&tt| tt < l) else {
                        continue;
                    };
                    let wi = o[2] + (of * k + kk) * mid;
                    axpy(g, &s.h1[tt * mid..(tt + 1) * mid], &mut grad[wi..wi + mid]);
                    axpy(g, &p[wi..wi + mid], &mut s.dh1[tt * mid..(tt + 1) * mid]);
                }
            }
        }

        for t in 0..l {
            for g in 0..d.groups {
                for of in 0..f {
                    let ch = g * f + of;
                    if s.h1[t * mid + ch] <= 0.0 {
                        continue;
                    }
                    let gz = s.dh1[t * mid + ch];
                    grad[o[1] + ch] += gz;
                    for kk in 0..k {
                        let Some(tt) = (t + kk).checked_sub(pad).filter(|&tt| tt < l) else {
                            continue;
                        };
                        let wi = o[0] + (ch * k + kk) * ig;
                        axpy(gz, &x[tt * c + g * ig..tt * c + (g + 1) * ig], &mut grad[wi..wi + ig]);
                    }
                }
            }
        }
    }

    /// Mean squared error and its gradient over the samples `idx`.
    fn batch(&self, x: &FeatureTensor, y: &[Vec<f64>], idx: &[usize], grad: Option<&mut [f64]>, s: &mut Scratch) -> f64 {
        let scale = 1.0 / (idx.len() * self.dims.outputs) as f64;
        let mut loss = 0.0;
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for &i in idx {
            let xi = x.sample(i);
            self.forward(xi, s);
            for (o, t) in s.out.iter_mut().zip(&y[i]) {
                let e = *o - t;
                loss += e * e;
                *o = 2.0 * e * scale;
            }
            if let Some(g) = grad.as_deref_mut() {
                self.backward(xi, s, g);
            }
        }
        loss * scale
    }

    /// Mean squared error over all samples.
    pub fn loss(&self, x: &FeatureTensor, y: &[Vec<f64>]) -> Result<f64> {
        self.check(x, Some(y))?;
        let idx: Vec<usize> = (0..x.samples()).collect();
        Ok(self.batch(x, y, &idx, None, &mut Scratch::new(&self.dims)))
    }

    /// Mean squared error and its gradient with respect to [`Self::params`].
    pub fn loss_and_gradient(&self, x: &FeatureTensor, y: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        self.check(x, Some(y))?;
        let idx: Vec<usize> = (0..x.samples()).collect();
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.batch(x, y, &idx, Some(&mut grad), &mut Scratch::new(&self.dims));
        Ok((loss, grad))
    }

    pub fn predict(&self, x: &FeatureTensor) -> Result<Vec<Vec<f64>>> {
        self.check(x, None)?;
        let mut s = Scratch::new(&self.dims);
        Ok((0..x.samples())
            .map(|i| {
                self.forward(x.sample(i), &mut s);
                s.out.clone()
            })
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yv, xv)| *yv += alpha * xv);
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, cfg: &CnnConfig, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            params[i] -= cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Trains a network on `train`, early-stopping on `val`. Deterministic
/// given `seed`.
pub fn fit_cnn(
    cfg: &CnnConfig,
    train: (&FeatureTensor, &[Vec<f64>]),
    val: (&FeatureTensor, &[Vec<f64>]),
    seed: u64,
) -> Result<CnnModel> {
    let (xt, yt) = train;
    let (xv, yv) = val;
    if xt.samples() == 0 || xv.samples() == 0 {
        return Err(shape_err("CNN training needs non-empty training and validation sets"));
    }
    let n_out = yt.first().map_or(0, Vec::len);
    let mut model = CnnModel::init(cfg, xt.n_steps(), xt.n_coeff(), n_out, seed)?;
    model.check(xt, Some(yt))?;
    model.check(xv, Some(yv))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_ba7c);
    let n = xt.samples();
    let bs = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let val_idx: Vec<usize> = (0..xv.samples()).collect();
    let mut s = Scratch::new(&model.dims);
    let mut grad = vec![0.0; model.params.len()];
    let mut adam = Adam {
        m: vec![0.0; grad.len()],
        v: vec![0.0; grad.len()],
        t: 0,
    };
    let mut best = (f64::INFINITY, model.params.clone(), None);
    let mut wait = 0;

    for epoch in 0..cfg.max_epochs {
        if bs < n {
            order.shuffle(&mut rng);
        }
        let mut train_loss = 0.0;
        for chunk in order.chunks(bs) {
            let l = model.batch(xt, yt, chunk, Some(&mut grad), &mut s);
            if !l.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            train_loss += l * chunk.len() as f64;
            adam.step(cfg, &mut model.params, &grad);
        }
        let val_loss = model.batch(xv, yv, &val_idx, None, &mut s);
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        model.history.push(EpochLoss {
            train: train_loss / n as f64,
            val: val_loss,
        });
        if val_loss < best.0 {
            best = (val_loss, model.params.clone(), Some(epoch));
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                log::debug!("early stop at epoch {epoch}, best {:?}", best.2);
                break;
            }
        }
    }
    model.params = best.1;
    model.best_epoch = best.2;
    Ok(model)
}
