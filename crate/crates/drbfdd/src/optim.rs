//! Mini-batch training: SGD with momentum, Adam, seeded shuffling, and the
//! end-to-end training loop (k-means pretraining included).
//!
//! Determinism contract: (seed, config, data) fully determine the final
//! parameters bit-exactly. Per-sample gradients inside a batch may be
//! computed in parallel, but they are always reduced in sample order.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::deep::{pretrain_model, DrbfddModel};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which update rule to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam_default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Everything the training loop needs to know.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Number of Gaussian kernels in the head (H).
    pub kernels: usize,
    /// Spread regularization coefficient.
    pub beta: f64,
    /// Weight regularization coefficient.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::adam_default(),
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 50,
            kernels: 8,
            beta: 1e-3,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed: it makes training the identity, which is a
        // useful degenerate case (and shows up in grid-search tests).
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.kernels == 0 {
            return Err(Error::InvalidArgument("kernel count must be at least 1".into()));
        }
        for (name, v) in [("beta", self.beta), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{} must lie in [0, 1], got {}",
                    name, v
                )));
            }
        }
        Ok(())
    }
}

/// Loss history of one training run; the trained model itself is updated in
/// place by [`train`].
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean per-sample cost of each epoch.
    pub epoch_loss: Vec<f64>,
    pub wall_seconds: f64,
    pub config: TrainConfig,
}

/// Momentum buffers for SGD, one per parameter tensor.
#[derive(Debug, Clone)]
pub struct SgdState {
    velocity: Vec<Vec<f64>>,
}

impl SgdState {
    pub fn new(params: &[&Tensor]) -> Self {
        SgdState {
            velocity: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }
}

/// Heavy-ball update: `v <- momentum*v + g`, `p <- p - lr*v`.
pub fn sgd_step(
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    lr: f64,
    momentum: f64,
    state: &mut SgdState,
) -> Result<()> {
    check_shapes("sgd_step", params, grads, state.velocity.len())?;
    for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut state.velocity) {
        for ((pv, gv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(v.iter_mut()) {
            *vv = momentum * *vv + gv;
            *pv -= lr * *vv;
        }
    }
    Ok(())
}

/// First/second moment buffers and step counter for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &[&Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            t: 0,
        }
    }
}

/// Standard bias-corrected Adam update.
pub fn adam_step(
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<()> {
    check_shapes("adam_step", params, grads, state.m.len())?;
    state.t += 1;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for (j, (pv, gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            m[j] = beta1 * m[j] + (1.0 - beta1) * gv;
            v[j] = beta2 * v[j] + (1.0 - beta2) * gv * gv;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

fn check_shapes(
    op: &'static str,
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    state_len: usize,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state_len {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!(
                "{} params, {} grads, {} state buffers",
                params.len(),
                grads.len(),
                state_len
            ),
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() {
            return Err(Error::ShapeMismatch {
                op,
                detail: format!("tensor {}: param {:?} vs grad {:?}", i, p.shape(), g.shape()),
            });
        }
    }
    Ok(())
}

enum OptState {
    Sgd(SgdState),
    Adam(AdamState),
}

/// Trains a model on normal instances only.
///
/// Runs k-means pretraining once, then shuffles per epoch (seeded), walks
/// mini-batches of `config.batch_size` (the last partial batch is kept and
/// its cost uses its own size), and applies the configured optimizer.
/// Aborts with a diagnostic if the loss goes non-finite.
pub fn train(model: &mut DrbfddModel, train_set: &Tensor, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let n = train_set.shape().first().copied().unwrap_or(0);
    if n == 0 {
        return Err(Error::EmptyDataset("training set".into()));
    }
    let start = std::time::Instant::now();

    pretrain_model(model, train_set, config.kernels, derive_seed(config.seed, 0x7072_6531))?;

    let mut state = match config.optimizer {
        OptimizerKind::Sgd { .. } => OptState::Sgd(SgdState::new(&model.param_tensors())),
        OptimizerKind::Adam { .. } => OptState::Adam(AdamState::new(&model.param_tensors())),
    };

    let mut indices: Vec<usize> = (0..n).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x6570_0000 + epoch as u64));
        indices.shuffle(&mut rng);

        let mut epoch_total = 0.0;
        for (batch_idx, batch) in indices.chunks(config.batch_size).enumerate() {
            // Per-sample cost and gradients; the sum over the batch equals
            // the batch cost exactly (single-sample regularizer terms add up
            // to the N-scaled batch regularizer).
            let per_sample: Vec<(f64, Vec<Tensor>)> = batch
                .par_iter()
                .map(|&i| -> Result<(f64, Vec<Tensor>)> {
                    let sample = train_set.gather0(&[i]);
                    let fwd = model.forward(&sample)?;
                    let loss = model.loss(&fwd, config.beta, config.lambda)?;
                    let grads = model.backward(&fwd, config.beta, config.lambda)?;
                    let flat: Vec<Tensor> = grads.flat().into_iter().cloned().collect();
                    Ok((loss.total, flat))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut batch_loss = 0.0;
            let mut acc: Vec<Tensor> = model
                .param_tensors()
                .iter()
                .map(|p| Tensor::zeros(p.shape()))
                .collect();
            for (l, grads) in &per_sample {
                batch_loss += l;
                for (a, g) in acc.iter_mut().zip(grads) {
                    for (av, gv) in a.data_mut().iter_mut().zip(g.data()) {
                        *av += gv;
                    }
                }
            }

            if !batch_loss.is_finite() {
                return Err(Error::NumericAbort {
                    epoch: epoch + 1,
                    batch: batch_idx + 1,
                });
            }
            epoch_total += batch_loss;

            let grad_refs: Vec<&Tensor> = acc.iter().collect();
            let mut params = model.param_tensors_mut();
            match (&mut state, config.optimizer) {
                (OptState::Sgd(s), OptimizerKind::Sgd { momentum }) => {
                    sgd_step(&mut params, &grad_refs, config.learning_rate, momentum, s)?
                }
                (OptState::Adam(s), OptimizerKind::Adam { beta1, beta2, epsilon }) => {
                    adam_step(&mut params, &grad_refs, s, config.learning_rate, beta1, beta2, epsilon)?
                }
                _ => unreachable!("state matches optimizer kind"),
            }
        }
        epoch_loss.push(epoch_total / n as f64);
    }

    Ok(TrainReport {
        epoch_loss,
        wall_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}
