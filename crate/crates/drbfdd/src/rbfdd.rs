//! The one-class Gaussian-kernel head: forward model, cost, analytic
//! gradients, and anomaly scoring.
//!
//! For an input `x`, each kernel `h` fires
//! `P_h(x) = exp(-||x - mu_h||^2 / (2 s_h^2 + eps))`, the kernel outputs are
//! mixed as `z = sum_h w_h P_h(x)` and bounded to `y = 1.7159 tanh(2z/3)`.
//! Training pushes `y` toward 1 on normal data while shrinking spreads and
//! weights, by minimizing, over a batch of size N,
//!
//! `E = sum_i 1/2 [ (1 - y_i)^2 + beta sum_h s_h^2 + lambda sum_h w_h^2 ]`
//!
//! Note the regularizers sit inside the per-sample sum, so their effective
//! strength scales with the batch size; that is the cost as defined and
//! both terms here keep that behavior.
//!
//! Spreads enter the model only as `s_h^2`, so they are optimized without a
//! positivity constraint: negating a spread changes nothing.

use crate::error::{Error, Result};
use crate::layers::{scaled_tanh_derivative, scaled_tanh_scalar};
use crate::tensor::Tensor;

/// Guard added to the `2 s^2` denominator so a collapsed spread cannot
/// divide by zero.
pub const SPREAD_EPSILON: f64 = 1e-12;

/// Trainable parameters of the head: H kernel centers (rows of a [H,D]
/// tensor), H spreads, and H output weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfddParams {
    centers: Tensor,
    spreads: Tensor,
    weights: Tensor,
}

impl RbfddParams {
    pub fn new(centers: Tensor, spreads: Tensor, weights: Tensor) -> Result<Self> {
        if centers.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "RbfddParams::new",
                detail: format!("centers must be [H, D], got {:?}", centers.shape()),
            });
        }
        let h = centers.shape()[0];
        let d = centers.shape()[1];
        if h == 0 || d == 0 {
            return Err(Error::InvalidArgument(
                "RbfddParams: H and D must be at least 1".into(),
            ));
        }
        if spreads.shape() != [h] || weights.shape() != [h] {
            return Err(Error::ShapeMismatch {
                op: "RbfddParams::new",
                detail: format!(
                    "spreads {:?} and weights {:?} must both be [{}]",
                    spreads.shape(),
                    weights.shape(),
                    h
                ),
            });
        }
        Ok(RbfddParams {
            centers,
            spreads,
            weights,
        })
    }

    /// Number of Gaussian kernels H.
    pub fn kernel_count(&self) -> usize {
        self.centers.shape()[0]
    }

    /// Input dimension D.
    pub fn input_dim(&self) -> usize {
        self.centers.shape()[1]
    }

    pub fn centers(&self) -> &Tensor {
        &self.centers
    }

    pub fn spreads(&self) -> &Tensor {
        &self.spreads
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    /// Mutable views over the three parameter tensors, in optimizer order
    /// (centers, spreads, weights).
    pub fn param_tensors_mut(&mut self) -> [&mut Tensor; 3] {
        [&mut self.centers, &mut self.spreads, &mut self.weights]
    }

    pub fn param_tensors(&self) -> [&Tensor; 3] {
        [&self.centers, &self.spreads, &self.weights]
    }
}

/// Saved forward state for a batch: kernel activations P (shape [N,H]),
/// pre-activations z, and bounded outputs y.
#[derive(Debug, Clone)]
pub struct HeadForwardContext {
    activations: Tensor,
    z: Vec<f64>,
    y: Vec<f64>,
}

impl HeadForwardContext {
    /// Assembles a context from parts. Normal code gets one from
    /// [`head_forward`]; this is for callers that need to stage synthetic
    /// outputs (tests, custom scorers).
    pub fn from_parts(activations: Tensor, z: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if activations.rank() != 2
            || activations.shape()[0] != z.len()
            || z.len() != y.len()
        {
            return Err(Error::ShapeMismatch {
                op: "HeadForwardContext::from_parts",
                detail: format!(
                    "activations {:?}, z {}, y {}",
                    activations.shape(),
                    z.len(),
                    y.len()
                ),
            });
        }
        Ok(HeadForwardContext { activations, z, y })
    }

    pub fn sample_count(&self) -> usize {
        self.z.len()
    }

    pub fn activations(&self) -> &Tensor {
        &self.activations
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// The three cost terms of one batch, plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerms {
    /// `sum_i 1/2 (1 - y_i)^2`
    pub fit: f64,
    /// `N * 1/2 * beta * sum_h s_h^2`
    pub spread_reg: f64,
    /// `N * 1/2 * lambda * sum_h w_h^2`
    pub weight_reg: f64,
    pub total: f64,
    pub beta: f64,
    pub lambda: f64,
}

/// Gradients of the batch cost with respect to every head parameter and to
/// the batch input itself (the hook for end-to-end training).
#[derive(Debug, Clone)]
pub struct HeadGradients {
    pub centers: Tensor,
    pub spreads: Tensor,
    pub weights: Tensor,
    pub input: Tensor,
}

/// Kernel activations of a single input: `P_h = exp(-||x-mu_h||^2 / (2 s_h^2 + eps))`.
///
/// Activation is 1 exactly at the center and decays with distance.
pub fn kernel_activations(x: &[f64], params: &RbfddParams) -> Result<Vec<f64>> {
    let d = params.input_dim();
    if x.len() != d {
        return Err(Error::ShapeMismatch {
            op: "kernel_activations",
            detail: format!("input has {} dims, head expects {}", x.len(), d),
        });
    }
    let h = params.kernel_count();
    let centers = params.centers.data();
    let spreads = params.spreads.data();
    let mut out = Vec::with_capacity(h);
    for hi in 0..h {
        let mu = &centers[hi * d..(hi + 1) * d];
        let mut sq = 0.0;
        for (xi, mi) in x.iter().zip(mu) {
            let diff = xi - mi;
            sq += diff * diff;
        }
        let q = 2.0 * spreads[hi] * spreads[hi] + SPREAD_EPSILON;
        out.push((-sq / q).exp());
    }
    Ok(out)
}

/// Runs the head over a [N,D] batch, keeping activations, z, and y.
pub fn head_forward(batch: &Tensor, params: &RbfddParams) -> Result<HeadForwardContext> {
    if batch.rank() != 2 || batch.shape()[1] != params.input_dim() {
        return Err(Error::ShapeMismatch {
            op: "head_forward",
            detail: format!(
                "batch {:?} vs head input dim {}",
                batch.shape(),
                params.input_dim()
            ),
        });
    }
    let n = batch.shape()[0];
    let h = params.kernel_count();
    let weights = params.weights.data();
    let mut activations = Tensor::zeros(&[n, h]);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let p = kernel_activations(batch.index0(i), params)?;
        let zi: f64 = p.iter().zip(weights).map(|(pi, wi)| pi * wi).sum();
        activations.data_mut()[i * h..(i + 1) * h].copy_from_slice(&p);
        z.push(zi);
        y.push(scaled_tanh_scalar(zi));
    }
    Ok(HeadForwardContext { activations, z, y })
}

/// Batch cost `E` split into its three terms. N is taken from the context.
pub fn loss(ctx: &HeadForwardContext, params: &RbfddParams, beta: f64, lambda: f64) -> Result<LossTerms> {
    if beta < 0.0 || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "loss coefficients must be nonnegative, got beta={} lambda={}",
            beta, lambda
        )));
    }
    let n = ctx.sample_count() as f64;
    let fit: f64 = ctx.y.iter().map(|yi| 0.5 * (1.0 - yi) * (1.0 - yi)).sum();
    let s2: f64 = params.spreads.data().iter().map(|s| s * s).sum();
    let w2: f64 = params.weights.data().iter().map(|w| w * w).sum();
    let spread_reg = n * 0.5 * beta * s2;
    let weight_reg = n * 0.5 * lambda * w2;
    Ok(LossTerms {
        fit,
        spread_reg,
        weight_reg,
        total: fit + spread_reg + weight_reg,
        beta,
        lambda,
    })
}

/// Analytic gradients of the batch cost.
///
/// With `delta_i = -(1 - y_i) * y'(z_i)` and `q_h = 2 s_h^2 + eps`:
///
/// - `dE/dw_h     = sum_i delta_i P_ih            + N lambda w_h`
/// - `dE/ds_h     = sum_i delta_i w_h P_ih r_ih 4 s_h / q_h^2 + N beta s_h`
/// - `dE/dmu_h    = sum_i delta_i w_h P_ih 2 (x_i - mu_h) / q_h`
/// - `dE/dx_i     = sum_h delta_i w_h P_ih (-2) (x_i - mu_h) / q_h`
///
/// where `r_ih = ||x_i - mu_h||^2`. The context must come from this exact
/// batch and parameter set.
pub fn head_gradients(
    ctx: &HeadForwardContext,
    batch: &Tensor,
    params: &RbfddParams,
    beta: f64,
    lambda: f64,
) -> Result<HeadGradients> {
    let n = ctx.sample_count();
    let h = params.kernel_count();
    let d = params.input_dim();
    if batch.shape() != [n, d] || ctx.activations.shape() != [n, h] {
        return Err(Error::ShapeMismatch {
            op: "head_gradients",
            detail: format!(
                "batch {:?} / activations {:?} inconsistent with head [{}x{}]",
                batch.shape(),
                ctx.activations.shape(),
                h,
                d
            ),
        });
    }
    if beta < 0.0 || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "gradient coefficients must be nonnegative, got beta={} lambda={}",
            beta, lambda
        )));
    }

    let centers = params.centers.data();
    let spreads = params.spreads.data();
    let weights = params.weights.data();
    let acts = ctx.activations.data();

    let mut g_centers = Tensor::zeros(&[h, d]);
    let mut g_spreads = Tensor::zeros(&[h]);
    let mut g_weights = Tensor::zeros(&[h]);
    let mut g_input = Tensor::zeros(&[n, d]);

    let gc = g_centers.data_mut();
    let gs = g_spreads.data_mut();
    let gw = g_weights.data_mut();
    let gx = g_input.data_mut();

    for i in 0..n {
        let x = batch.index0(i);
        let delta = -(1.0 - ctx.y[i]) * scaled_tanh_derivative(ctx.z[i]);
        for hi in 0..h {
            let p = acts[i * h + hi];
            let mu = &centers[hi * d..(hi + 1) * d];
            let s = spreads[hi];
            let w = weights[hi];
            let q = 2.0 * s * s + SPREAD_EPSILON;

            gw[hi] += delta * p;

            let mut r = 0.0;
            for (xi, mi) in x.iter().zip(mu) {
                let diff = xi - mi;
                r += diff * diff;
            }
            gs[hi] += delta * w * p * r * 4.0 * s / (q * q);

            let scale = delta * w * p * 2.0 / q;
            for k in 0..d {
                let diff = x[k] - mu[k];
                gc[hi * d + k] += scale * diff;
                gx[i * d + k] -= scale * diff;
            }
        }
    }

    let nf = n as f64;
    for hi in 0..h {
        gw[hi] += nf * lambda * weights[hi];
        gs[hi] += nf * beta * spreads[hi];
    }

    Ok(HeadGradients {
        centers: g_centers,
        spreads: g_spreads,
        weights: g_weights,
        input: g_input,
    })
}

/// Anomaly score of one input: `-y(x)`. Higher means more anomalous; only
/// the ranking carries meaning, which is all AUC-style evaluation needs.
pub fn anomaly_score(x: &[f64], params: &RbfddParams) -> Result<f64> {
    let p = kernel_activations(x, params)?;
    let z: f64 = p
        .iter()
        .zip(params.weights.data())
        .map(|(pi, wi)| pi * wi)
        .sum();
    Ok(-scaled_tanh_scalar(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{central_diff, rel_err, seeded_rng, uniform_tensor};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_params(rng: &mut rand_chacha::ChaCha8Rng, h: usize, d: usize) -> RbfddParams {
        let centers = uniform_tensor(rng, &[h, d], -1.0, 1.0);
        let spreads = uniform_tensor(rng, &[h], 0.4, 1.5);
        let weights = uniform_tensor(rng, &[h], -1.0, 1.0);
        RbfddParams::new(centers, spreads, weights).unwrap()
    }

    #[test]
    fn activation_is_one_at_center() {
        let mut rng = seeded_rng(1);
        let params = random_params(&mut rng, 3, 4);
        let x: Vec<f64> = params.centers().index0(1).to_vec();
        let p = kernel_activations(&x, &params).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn activation_at_unit_exponent_is_inv_e() {
        // ||x - mu||^2 = 2 s^2 puts the exponent at exactly -1.
        let s: f64 = 0.7;
        let centers = Tensor::new(vec![1, 1], vec![0.0]).unwrap();
        let spreads = Tensor::from_vec(vec![s]);
        let weights = Tensor::from_vec(vec![1.0]);
        let params = RbfddParams::new(centers, spreads, weights).unwrap();
        let x = [s * 2.0f64.sqrt()];
        let p = kernel_activations(&x, &params).unwrap();
        assert!(rel_err(p[0], (-1.0f64).exp()) < 1e-9);
        assert!((p[0] - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn activations_match_scalar_loop_oracle() {
        let mut rng = seeded_rng(2);
        let params = random_params(&mut rng, 3, 5);
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = kernel_activations(&x, &params).unwrap();
        for hi in 0..3 {
            let mut sq = 0.0;
            for k in 0..5 {
                let diff = x[k] - params.centers().data()[hi * 5 + k];
                sq += diff * diff;
            }
            let s = params.spreads().data()[hi];
            let expected = (-sq / (2.0 * s * s + SPREAD_EPSILON)).exp();
            assert!((p[hi] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut rng = seeded_rng(3);
        let mut params = random_params(&mut rng, 4, 3);
        for w in params.param_tensors_mut()[2].data_mut() {
            *w = 0.0;
        }
        let batch = uniform_tensor(&mut rng, &[5, 3], -1.0, 1.0);
        let ctx = head_forward(&batch, &params).unwrap();
        assert!(ctx.z().iter().all(|&z| z == 0.0));
        assert!(ctx.y().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn single_kernel_at_center_with_unit_weight() {
        let centers = Tensor::new(vec![1, 2], vec![0.3, -0.4]).unwrap();
        let params = RbfddParams::new(
            centers,
            Tensor::from_vec(vec![0.8]),
            Tensor::from_vec(vec![1.0]),
        )
        .unwrap();
        let batch = Tensor::new(vec![1, 2], vec![0.3, -0.4]).unwrap();
        let ctx = head_forward(&batch, &params).unwrap();
        assert!((ctx.z()[0] - 1.0).abs() < 1e-12);
        // tanh(2/3) through exp, as an independent route
        let e = (4.0f64 / 3.0).exp();
        let tanh23 = (e - 1.0) / (e + 1.0);
        assert!(rel_err(ctx.y()[0], 1.7159 * tanh23) < 1e-12);
        assert!((ctx.y()[0] - 1.00045).abs() < 1e-5);
    }

    #[test]
    fn symmetric_kernels_at_midpoint() {
        let centers = Tensor::new(vec![2, 1], vec![-1.0, 1.0]).unwrap();
        let spreads = Tensor::from_vec(vec![0.9, 0.9]);
        let weights = Tensor::from_vec(vec![0.7, 0.2]);
        let params = RbfddParams::new(centers, spreads, weights).unwrap();
        let batch = Tensor::new(vec![1, 1], vec![0.0]).unwrap();
        let ctx = head_forward(&batch, &params).unwrap();
        let p = ctx.activations().data();
        assert!((p[0] - p[1]).abs() < 1e-15);
        assert!(rel_err(ctx.z()[0], (0.7 + 0.2) * p[0]) < 1e-12);
    }

    #[test]
    fn loss_zero_on_perfect_fit() {
        let acts = Tensor::zeros(&[3, 1]);
        let ctx = HeadForwardContext::from_parts(acts, vec![9.0; 3], vec![1.0; 3]).unwrap();
        let params = RbfddParams::new(
            Tensor::zeros(&[1, 1]),
            Tensor::from_vec(vec![1.0]),
            Tensor::from_vec(vec![1.0]),
        )
        .unwrap();
        let l = loss(&ctx, &params, 0.0, 0.0).unwrap();
        assert_eq!(l.total, 0.0);
    }

    #[test]
    fn loss_half_for_single_zero_output() {
        let ctx =
            HeadForwardContext::from_parts(Tensor::zeros(&[1, 1]), vec![0.0], vec![0.0]).unwrap();
        let params = RbfddParams::new(
            Tensor::zeros(&[1, 1]),
            Tensor::from_vec(vec![1.0]),
            Tensor::from_vec(vec![1.0]),
        )
        .unwrap();
        let l = loss(&ctx, &params, 0.0, 0.0).unwrap();
        assert_eq!(l.total, 0.5);
    }

    #[test]
    fn loss_hand_computed_case() {
        // N=2, H=1, y=(0,1), s=2, w=3, beta=0.1, lambda=0.01 -> E = 0.99
        let ctx = HeadForwardContext::from_parts(
            Tensor::zeros(&[2, 1]),
            vec![0.0, 99.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        let params = RbfddParams::new(
            Tensor::zeros(&[1, 1]),
            Tensor::from_vec(vec![2.0]),
            Tensor::from_vec(vec![3.0]),
        )
        .unwrap();
        let l = loss(&ctx, &params, 0.1, 0.01).unwrap();
        assert!((l.fit - 0.5).abs() < 1e-15);
        assert!((l.spread_reg - 0.4).abs() < 1e-12);
        assert!((l.weight_reg - 0.09).abs() < 1e-12);
        assert!((l.total - 0.99).abs() < 1e-12);
    }

    #[test]
    fn loss_rejects_negative_coefficients() {
        let ctx =
            HeadForwardContext::from_parts(Tensor::zeros(&[1, 1]), vec![0.0], vec![0.0]).unwrap();
        let params = RbfddParams::new(
            Tensor::zeros(&[1, 1]),
            Tensor::from_vec(vec![1.0]),
            Tensor::from_vec(vec![1.0]),
        )
        .unwrap();
        assert!(loss(&ctx, &params, -0.1, 0.0).is_err());
        assert!(loss(&ctx, &params, 0.0, -0.1).is_err());
    }

    #[test]
    fn gradients_vanish_at_perfect_fit() {
        let mut rng = seeded_rng(5);
        let params = random_params(&mut rng, 2, 3);
        let batch = uniform_tensor(&mut rng, &[4, 3], -1.0, 1.0);
        let real = head_forward(&batch, &params).unwrap();
        // doctor the outputs to exactly 1: the fit path carries (1 - y_i) = 0
        let ctx = HeadForwardContext::from_parts(
            real.activations().clone(),
            real.z().to_vec(),
            vec![1.0; 4],
        )
        .unwrap();
        let g = head_gradients(&ctx, &batch, &params, 0.0, 0.0).unwrap();
        assert!(g.centers.data().iter().all(|&v| v == 0.0));
        assert!(g.spreads.data().iter().all(|&v| v == 0.0));
        assert!(g.weights.data().iter().all(|&v| v == 0.0));
        assert!(g.input.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spread_gradient_regularizer_part() {
        // zero weights kill the fit path, leaving exactly N*beta*s_h
        let mut rng = seeded_rng(6);
        let mut params = random_params(&mut rng, 3, 2);
        for w in params.param_tensors_mut()[2].data_mut() {
            *w = 0.0;
        }
        let batch = uniform_tensor(&mut rng, &[5, 2], -1.0, 1.0);
        let ctx = head_forward(&batch, &params).unwrap();
        let beta = 0.3;
        let g = head_gradients(&ctx, &batch, &params, beta, 0.0).unwrap();
        for hi in 0..3 {
            let expected = 5.0 * beta * params.spreads().data()[hi];
            assert!(rel_err(g.spreads.data()[hi], expected) < 1e-12);
        }
    }

    /// Full finite-difference check of all four gradient blocks.
    fn check_head_gradients(seed: u64, n: usize, h: usize, d: usize, beta: f64, lambda: f64) {
        let mut rng = seeded_rng(seed);
        let params = random_params(&mut rng, h, d);
        let batch = uniform_tensor(&mut rng, &[n, d], -1.0, 1.0);
        let ctx = head_forward(&batch, &params).unwrap();
        let g = head_gradients(&ctx, &batch, &params, beta, lambda).unwrap();

        let eval = |params: &RbfddParams, batch: &Tensor| -> f64 {
            let ctx = head_forward(batch, params).unwrap();
            loss(&ctx, params, beta, lambda).unwrap().total
        };
        let fd_h = 1e-5;

        for (pi, name) in [(0usize, "centers"), (1, "spreads"), (2, "weights")] {
            let len = params.param_tensors()[pi].len();
            for i in 0..len {
                let base = params.param_tensors()[pi].data()[i];
                let fd = central_diff(
                    |v| {
                        let mut p = params.clone();
                        p.param_tensors_mut()[pi].data_mut()[i] = v;
                        eval(&p, &batch)
                    },
                    base,
                    fd_h,
                );
                let an = match pi {
                    0 => g.centers.data()[i],
                    1 => g.spreads.data()[i],
                    _ => g.weights.data()[i],
                };
                assert!(
                    rel_err(an, fd) < 1e-6,
                    "{}[{}]: analytic {} vs fd {}",
                    name,
                    i,
                    an,
                    fd
                );
            }
        }
        for i in 0..batch.len() {
            let base = batch.data()[i];
            let fd = central_diff(
                |v| {
                    let mut b = batch.clone();
                    b.data_mut()[i] = v;
                    eval(&params, &b)
                },
                base,
                fd_h,
            );
            assert!(
                rel_err(g.input.data()[i], fd) < 1e-6,
                "input[{}]: analytic {} vs fd {}",
                i,
                g.input.data()[i],
                fd
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        check_head_gradients(7, 4, 3, 5, 0.2, 0.05);
        check_head_gradients(8, 1, 1, 1, 0.0, 0.0);
        check_head_gradients(9, 6, 2, 4, 1.0, 1.0);
    }

    #[test]
    fn score_is_negated_forward_output() {
        let mut rng = seeded_rng(10);
        let params = random_params(&mut rng, 3, 4);
        let batch = uniform_tensor(&mut rng, &[6, 4], -1.0, 1.0);
        let ctx = head_forward(&batch, &params).unwrap();
        for i in 0..6 {
            let s = anomaly_score(batch.index0(i), &params).unwrap();
            assert_eq!(s, -ctx.y()[i]);
        }
    }

    #[test]
    fn far_points_score_higher_than_centers() {
        let mut rng = seeded_rng(11);
        let centers = uniform_tensor(&mut rng, &[3, 2], -0.5, 0.5);
        let spreads = uniform_tensor(&mut rng, &[3], 0.3, 0.8);
        let weights = Tensor::from_vec(vec![0.5, 0.7, 0.9]); // all positive
        let params = RbfddParams::new(centers, spreads, weights).unwrap();
        let far = [500.0, -500.0];
        let far_score = anomaly_score(&far, &params).unwrap();
        assert!(far_score.abs() < 1e-9); // P_h ~ 0 everywhere
        for hi in 0..3 {
            let at_center = anomaly_score(params.centers().index0(hi), &params).unwrap();
            assert!(at_center < far_score);
        }
    }

    #[test]
    fn descent_decreases_loss() {
        // single sample at a kernel center, large weight: E falls monotonically
        // under small gradient steps
        let centers = Tensor::new(vec![1, 2], vec![0.1, 0.2]).unwrap();
        let mut params = RbfddParams::new(
            centers,
            Tensor::from_vec(vec![1.0]),
            Tensor::from_vec(vec![3.0]),
        )
        .unwrap();
        let batch = Tensor::new(vec![1, 2], vec![0.1, 0.2]).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let ctx = head_forward(&batch, &params).unwrap();
            let l = loss(&ctx, &params, 0.0, 0.0).unwrap().total;
            assert!(l <= prev + 1e-15, "loss rose from {} to {}", prev, l);
            prev = l;
            let g = head_gradients(&ctx, &batch, &params, 0.0, 0.0).unwrap();
            let [c, s, w] = params.param_tensors_mut();
            for (p, gp) in c.data_mut().iter_mut().zip(g.centers.data()) {
                *p -= 1e-3 * gp;
            }
            for (p, gp) in s.data_mut().iter_mut().zip(g.spreads.data()) {
                *p -= 1e-3 * gp;
            }
            for (p, gp) in w.data_mut().iter_mut().zip(g.weights.data()) {
                *p -= 1e-3 * gp;
            }
        }
    }

    proptest! {
        #[test]
        fn loss_invariant_under_kernel_permutation(seed in 0u64..1000) {
            let mut rng = seeded_rng(seed);
            let params = random_params(&mut rng, 4, 3);
            let batch = uniform_tensor(&mut rng, &[3, 3], -1.0, 1.0);
            let ctx = head_forward(&batch, &params).unwrap();
            let l = loss(&ctx, &params, 0.1, 0.1).unwrap();

            // rotate kernel order by one
            let perm = [1usize, 2, 3, 0];
            let mut c = Vec::new();
            let mut s = Vec::new();
            let mut w = Vec::new();
            for &p in &perm {
                c.extend_from_slice(params.centers().index0(p));
                s.push(params.spreads().data()[p]);
                w.push(params.weights().data()[p]);
            }
            let permuted = RbfddParams::new(
                Tensor::new(vec![4, 3], c).unwrap(),
                Tensor::from_vec(s),
                Tensor::from_vec(w),
            ).unwrap();
            let ctx2 = head_forward(&batch, &permuted).unwrap();
            let l2 = loss(&ctx2, &permuted, 0.1, 0.1).unwrap();
            prop_assert!((l.total - l2.total).abs() < 1e-12);
        }

        #[test]
        fn negating_a_spread_changes_nothing(seed in 0u64..1000) {
            let mut rng = seeded_rng(seed);
            let params = random_params(&mut rng, 3, 2);
            let batch = uniform_tensor(&mut rng, &[4, 2], -1.0, 1.0);
            let ctx = head_forward(&batch, &params).unwrap();

            let mut flipped = params.clone();
            flipped.param_tensors_mut()[1].data_mut()[1] *= -1.0;
            let ctx2 = head_forward(&batch, &flipped).unwrap();
            for (a, b) in ctx.y().iter().zip(ctx2.y()) {
                prop_assert_eq!(*a, *b);
            }
            let l = loss(&ctx, &params, 0.2, 0.2).unwrap();
            let l2 = loss(&ctx2, &flipped, 0.2, 0.2).unwrap();
            prop_assert_eq!(l.total, l2.total);
        }
    }
}
