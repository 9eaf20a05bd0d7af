//! Reduced-basis neural operator.
//!
//! The input is centered and projected onto the input basis, mapped to the
//! output dimension by a dense layer, refined by residual blocks
//! `z ← z + W₂ softplus(W₁ z + b₁)` and lifted back through the output basis.
//! Only the dense layer and the blocks are trained.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_finite, check_len, Error, Result};
use crate::metrics::{percent_error, Summary};
use crate::reduction::Projector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub r_m: usize,
    pub r_u: usize,
    pub n_blocks: usize,
    pub block_rank: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            r_m: 50,
            r_u: 25,
            n_blocks: 5,
            block_rank: 20,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_m == 0 || self.r_u == 0 || self.block_rank == 0 {
            return Err(Error::invalid("reduced dimensions and block rank must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossNorm {
    /// Squared l2 norm of the coefficient error.
    #[default]
    L2,
    /// Squared H1 norm `eᵀ(M + K)e`, for which a weight matrix must be supplied.
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub loss: LossNorm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            init_seed: 0,
            shuffle_seed: 0,
            loss: LossNorm::L2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be finite and nonnegative"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::invalid("adam betas must lie in [0, 1) and eps must be positive"));
        }
        Ok(())
    }
}

/// `(training, validation)` sizes with `⌊0.1 N⌋` validation samples.
pub fn split_sizes(n: usize) -> (usize, usize) {
    let val = n / 10;
    (n - val, val)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
}

/// Trainable weights: the dense matching layer and the residual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub dense: DMatrix<f64>,
    pub blocks: Vec<Block>,
}

impl Params {
    pub fn zeros(cfg: &NetConfig) -> Self {
        Self {
            dense: DMatrix::zeros(cfg.r_u, cfg.r_m),
            blocks: (0..cfg.n_blocks)
                .map(|_| Block {
                    w1: DMatrix::zeros(cfg.block_rank, cfg.r_u),
                    b1: DVector::zeros(cfg.block_rank),
                    w2: DMatrix::zeros(cfg.r_u, cfg.block_rank),
                })
                .collect(),
        }
    }

    /// Glorot-uniform weights and zero biases.
    pub fn glorot(cfg: &NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |m: &mut DMatrix<f64>| {
            let limit = (6.0 / (m.nrows() + m.ncols()) as f64).sqrt();
            for x in m.iter_mut() {
                *x = rng.random_range(-limit..=limit);
            }
        };
        let mut p = Self::zeros(cfg);
        fill(&mut p.dense);
        for b in &mut p.blocks {
            fill(&mut b.w1);
            fill(&mut b.w2);
        }
        p
    }

    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = vec![self.dense.as_slice()];
        for b in &self.blocks {
            t.extend([b.w1.as_slice(), b.b1.as_slice(), b.w2.as_slice()]);
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = vec![self.dense.as_mut_slice()];
        for b in &mut self.blocks {
            t.push(b.w1.as_mut_slice());
            t.push(b.b1.as_mut_slice());
            t.push(b.w2.as_mut_slice());
        }
        t
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All trainable scalars in declaration order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn assign(&mut self, flat: &[f64]) -> Result<()> {
        check_len(flat.len(), self.len(), "parameter vector")?;
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Intermediate values of a batched forward pass in reduced coordinates.
struct Trace {
    /// `z` before each block, plus the final state.
    states: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

fn forward_trace(p: &Params, z0: &DMatrix<f64>) -> Trace {
    let mut z = &p.dense * z0;
    let mut states = Vec::with_capacity(p.blocks.len() + 1);
    let mut pre = Vec::with_capacity(p.blocks.len());
    for b in &p.blocks {
        let mut a = &b.w1 * &z;
        for mut col in a.column_iter_mut() {
            col += &b.b1;
        }
        let h = a.map(softplus);
        let next = &z + &b.w2 * h;
        states.push(z);
        pre.push(a);
        z = next;
    }
    states.push(z);
    Trace { states, pre }
}

/// Gradient of a loss given `∂loss/∂z_final` for every column of the batch.
fn backward(p: &Params, z0: &DMatrix<f64>, trace: &Trace, mut g: DMatrix<f64>) -> Params {
    let mut grad = Params {
        dense: DMatrix::zeros(p.dense.nrows(), p.dense.ncols()),
        blocks: Vec::with_capacity(p.blocks.len()),
    };
    for (k, b) in p.blocks.iter().enumerate().rev() {
        let a = &trace.pre[k];
        let z = &trace.states[k];
        let h = a.map(softplus);
        let gw2 = &g * h.transpose();
        let ga = (b.w2.tr_mul(&g)).component_mul(&a.map(sigmoid));
        let gw1 = &ga * z.transpose();
        let gb1 = ga.column_sum();
        g += b.w1.tr_mul(&ga);
        grad.blocks.push(Block {
            w1: gw1,
            b1: gb1,
            w2: gw2,
        });
    }
    grad.blocks.reverse();
    grad.dense = g * z0.transpose();
    grad
}

/// Training data in reduced coordinates.
///
/// For an orthonormal output basis `Φ`, `‖Φ(z − t) − p‖² = ‖z − t‖² + ‖p‖²`
/// where `t = Φᵀ(u − ū)` and `p` is the part of `u − ū` orthogonal to `Φ`.
/// With a weight `W` the cross term `ΦᵀWp` no longer vanishes.
#[derive(Debug, Clone)]
pub struct ReducedSet {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    /// Squared (weighted) norm of the unresolved part of each target.
    pub residual: DVector<f64>,
    weighted: Option<WeightedTerms>,
    q_u: usize,
}

#[derive(Debug, Clone)]
struct WeightedTerms {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
}

impl ReducedSet {
    /// `weight` is the matrix of the loss inner product (`None` for plain l2).
    pub fn new(
        input: &Projector,
        output: &Projector,
        m: &DMatrix<f64>,
        u: &DMatrix<f64>,
        weight: Option<&crate::fem::CsrMatrix>,
    ) -> Result<Self> {
        check_len(m.nrows(), input.dim(), "input data rows")?;
        check_len(u.nrows(), output.dim(), "output data rows")?;
        check_len(u.ncols(), m.ncols(), "output data columns")?;
        let mut dm = m.clone();
        for mut c in dm.column_iter_mut() {
            c -= input.mean();
        }
        let mut du = u.clone();
        for mut c in du.column_iter_mut() {
            c -= output.mean();
        }
        let phi = output.basis();
        let inputs = input.basis().tr_mul(&dm);
        let targets = phi.tr_mul(&du);
        let perp = &du - phi * &targets;
        let (residual, weighted) = match weight {
            None => (
                DVector::from_iterator(perp.ncols(), perp.column_iter().map(|c| c.norm_squared())),
                None,
            ),
            Some(w) => {
                check_len(w.nrows(), output.dim(), "loss weight")?;
                let mut wphi = DMatrix::zeros(phi.nrows(), phi.ncols());
                for j in 0..phi.ncols() {
                    wphi.set_column(j, &w.mul_vec(&phi.column(j).into_owned()));
                }
                let mut wp = DMatrix::zeros(perp.nrows(), perp.ncols());
                for j in 0..perp.ncols() {
                    wp.set_column(j, &w.mul_vec(&perp.column(j).into_owned()));
                }
                let residual =
                    DVector::from_iterator(perp.ncols(), (0..perp.ncols()).map(|j| perp.column(j).dot(&wp.column(j))));
                let gram = phi.tr_mul(&wphi);
                let cross = phi.tr_mul(&wp);
                (residual, Some(WeightedTerms { gram, cross }))
            }
        };
        Ok(Self {
            inputs,
            targets,
            residual,
            weighted,
            q_u: output.dim(),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn columns(&self, idx: &[usize]) -> (DMatrix<f64>, DMatrix<f64>, f64, Option<DMatrix<f64>>) {
        let z0 = self.inputs.select_columns(idx);
        let t = self.targets.select_columns(idx);
        let c: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let s = self.weighted.as_ref().map(|w| w.cross.select_columns(idx));
        (z0, t, c, s)
    }

    /// Mean loss and gradient over the samples `idx`.
    pub fn loss_and_grad(&self, params: &Params, idx: &[usize]) -> (f64, Params) {
        let (z0, t, c, s) = self.columns(idx);
        let trace = forward_trace(params, &z0);
        let r = trace.states.last().expect("final state") - &t;
        let scale = 1.0 / (self.q_u as f64 * idx.len() as f64);
        let (loss, g) = match (&self.weighted, s) {
            (Some(w), Some(s)) => {
                let gr = &w.gram * &r;
                let quad = r.dot(&gr) - 2.0 * r.dot(&s) + c;
                (quad * scale, (gr - s) * (2.0 * scale))
            }
            _ => ((r.norm_squared() + c) * scale, r * (2.0 * scale)),
        };
        (loss, backward(params, &z0, &trace, g))
    }

    /// Mean loss over the samples `idx`.
    pub fn loss(&self, params: &Params, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return f64::NAN;
        }
        let (z0, t, c, s) = self.columns(idx);
        let trace = forward_trace(params, &z0);
        let r = trace.states.last().expect("final state") - &t;
        let scale = 1.0 / (self.q_u as f64 * idx.len() as f64);
        match (&self.weighted, s) {
            (Some(w), Some(s)) => (r.dot(&(&w.gram * &r)) - 2.0 * r.dot(&s) + c) * scale,
            _ => (r.norm_squared() + c) * scale,
        }
    }
}

/// The neural operator with its frozen projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub config: NetConfig,
    input: Projector,
    output: Projector,
    pub params: Params,
}

impl Surrogate {
    pub fn new(config: NetConfig, input: Projector, output: Projector, params: Params) -> Result<Self> {
        config.validate()?;
        check_len(input.rank(), config.r_m, "input projector rank")?;
        check_len(output.rank(), config.r_u, "output projector rank")?;
        let shape = Params::zeros(&config);
        let dims_ok = params.blocks.len() == shape.blocks.len()
            && params.dense.shape() == shape.dense.shape()
            && params.blocks.iter().zip(&shape.blocks).all(|(a, b)| {
                a.w1.shape() == b.w1.shape() && a.b1.len() == b.b1.len() && a.w2.shape() == b.w2.shape()
            });
        if !dims_ok {
            return Err(Error::invalid("parameter shapes do not match the network configuration"));
        }
        Ok(Self {
            config,
            input,
            output,
            params,
        })
    }

    /// Glorot-initialized network around the given projectors.
    pub fn init(config: NetConfig, input: Projector, output: Projector, seed: u64) -> Result<Self> {
        let params = Params::glorot(&config, seed);
        Self::new(config, input, output, params)
    }

    pub fn input(&self) -> &Projector {
        &self.input
    }

    pub fn output(&self) -> &Projector {
        &self.output
    }

    pub fn forward(&self, m: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(m.len(), self.input.dim(), "network input")?;
        check_finite(m.as_slice(), "network input")?;
        let z0 = DMatrix::from_column_slice(self.config.r_m, 1, self.input.encode(m)?.as_slice());
        let trace = forward_trace(&self.params, &z0);
        let z = trace.states.last().expect("final state").column(0).into_owned();
        let u = self.output.decode(&z)?;
        check_finite(u.as_slice(), "network output")?;
        Ok(u)
    }

    /// Predictions for many inputs, in parallel.
    pub fn forward_many(&self, ms: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        ms.par_iter().map(|m| self.forward(m)).collect()
    }

    /// Mean of `‖forward(m) − u‖² / q_u` and its gradient, evaluated in the full space.
    pub fn loss_and_grad(&self, batch: &[(DVector<f64>, DVector<f64>)]) -> Result<(f64, Params)> {
        if batch.is_empty() {
            return Err(Error::invalid("batch must not be empty"));
        }
        let q_u = self.output.dim() as f64;
        let scale = 1.0 / (q_u * batch.len() as f64);
        let mut z0 = DMatrix::zeros(self.config.r_m, batch.len());
        for (j, (m, _)) in batch.iter().enumerate() {
            z0.set_column(j, &self.input.encode(m)?);
        }
        let trace = forward_trace(&self.params, &z0);
        let zl = trace.states.last().expect("final state");
        let mut g = DMatrix::zeros(self.config.r_u, batch.len());
        let mut loss = 0.0;
        for (j, (_, u)) in batch.iter().enumerate() {
            check_len(u.len(), self.output.dim(), "target")?;
            let pred = self.output.decode(&zl.column(j).into_owned())?;
            let diff = pred - u;
            loss += diff.norm_squared() * scale;
            g.set_column(j, &(self.output.basis().tr_mul(&diff) * (2.0 * scale)));
        }
        Ok((loss, backward(&self.params, &z0, &trace, g)))
    }

    /// SHA-256 (hex) of the two projector files.
    pub fn projector_checksum(input: &Projector, output: &Projector) -> String {
        let mut h = Sha256::new();
        h.update(input.to_text().as_bytes());
        h.update(output.to_text().as_bytes());
        hex::encode(h.finalize())
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "model {} {} {} {}", c.r_m, c.r_u, c.n_blocks, c.block_rank);
        let _ = writeln!(s, "checksum {}", Self::projector_checksum(&self.input, &self.output));
        for x in self.params.flatten() {
            let _ = writeln!(s, "{x:e}");
        }
        s
    }

    /// Parse a model file written against these projectors.
    pub fn from_text(text: &str, input: Projector, output: Projector) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty model file"))?;
        let nums: Vec<usize> = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["model", rest @ ..] if rest.len() == 4 => rest
                .iter()
                .map(|t| t.parse().map_err(|_| Error::parse(1, format!("invalid size `{t}`"))))
                .collect::<Result<_>>()?,
            _ => return Err(Error::parse(1, "expected `model r_m r_u blocks rank` header")),
        };
        let config = NetConfig {
            r_m: nums[0],
            r_u: nums[1],
            n_blocks: nums[2],
            block_rank: nums[3],
        };
        let (ln, sum_line) = lines.next().ok_or_else(|| Error::parse(2, "missing checksum line"))?;
        let stored = sum_line
            .strip_prefix("checksum ")
            .ok_or_else(|| Error::parse(ln + 1, "expected `checksum <hex>`"))?
            .trim();
        let actual = Self::projector_checksum(&input, &output);
        if stored != actual {
            return Err(Error::Checksum(format!(
                "model was trained against different projectors (stored {stored}, found {actual})"
            )));
        }
        let mut flat = Vec::new();
        for (i, line) in lines {
            let x: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("invalid number `{}`", line.trim())))?;
            flat.push(x);
        }
        let mut params = Params::zeros(&config);
        params.assign(&flat)?;
        if !params.is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        Self::new(config, input, output, params)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path, input: Projector, output: Projector) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, input, output)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// `NaN` when there is no validation split.
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (0 = initial weights) whose weights were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for r in &self.epochs {
            let _ = writeln!(s, "{},{:e},{:e}", r.epoch, r.train_loss, r.val_loss);
        }
        s
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            theta[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

/// Adam over shuffled minibatches of the first `N − ⌊0.1N⌋` samples,
/// checkpointing the weights with the best validation loss.
pub fn train(net: &mut Surrogate, data: &ReducedSet, cfg: &TrainConfig) -> Result<TrainHistory> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    check_len(data.inputs.nrows(), net.config.r_m, "reduced inputs")?;
    check_len(data.targets.nrows(), net.config.r_u, "reduced targets")?;
    let (n_train, n_val) = split_sizes(data.len());
    let mut order: Vec<usize> = (0..n_train).collect();
    let val_idx: Vec<usize> = (n_train..n_train + n_val).collect();
    let train_idx = order.clone();
    let score = |p: &Params| -> (f64, f64) {
        let tr = data.loss(p, &train_idx);
        let va = if n_val > 0 { data.loss(p, &val_idx) } else { f64::NAN };
        (tr, va)
    };
    let select = |rec: (f64, f64)| if n_val > 0 { rec.1 } else { rec.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut adam = Adam::new(net.params.len());
    let mut theta = net.params.flatten();
    let initial = score(&net.params);
    let mut history = TrainHistory {
        epochs: vec![EpochRecord {
            epoch: 0,
            train_loss: initial.0,
            val_loss: initial.1,
        }],
        best_epoch: 0,
    };
    let mut best = (select(initial), net.params.clone());
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = data.loss_and_grad(&net.params, batch);
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite loss in epoch {epoch}")));
            }
            adam.step(&mut theta, &grad.flatten(), cfg);
            net.params.assign(&theta)?;
        }
        let rec = score(&net.params);
        if !rec.0.is_finite() {
            return Err(Error::Training(format!("non-finite training loss after epoch {epoch}")));
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: rec.0,
            val_loss: rec.1,
        });
        if select(rec) < best.0 {
            best = (select(rec), net.params.clone());
            history.best_epoch = epoch;
        }
    }
    net.params = best.1;
    Ok(history)
}

/// Per-sample `e_NN` percentages and their summary.
pub fn evaluate(net: &Surrogate, ms: &[DVector<f64>], us: &[DVector<f64>]) -> Result<(Vec<f64>, Summary)> {
    check_len(us.len(), ms.len(), "evaluation targets")?;
    let errors: Vec<f64> = ms
        .par_iter()
        .zip(us)
        .map(|(m, u)| percent_error(u, &net.forward(m)?))
        .collect::<Result<_>>()?;
    let summary = Summary::of(&errors).ok_or_else(|| Error::invalid("evaluation set is empty"))?;
    Ok((errors, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activations_are_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn split_rule() {
        assert_eq!(split_sizes(256), (231, 25));
        assert_eq!(split_sizes(8), (8, 0));
    }

    #[test]
    fn flatten_round_trip() {
        let cfg = NetConfig {
            r_m: 3,
            r_u: 2,
            n_blocks: 2,
            block_rank: 4,
        };
        let p = Params::glorot(&cfg, 1);
        let mut q = Params::zeros(&cfg);
        q.assign(&p.flatten()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.len(), 6 + 2 * (8 + 4 + 8));
        assert!(q.assign(&[0.0]).is_err());
    }
}
