//! One-class anomaly detection built around Gaussian-kernel data descriptors.
//!
//! The core model covers the normal region of input space with a trainable
//! set of Gaussian kernels feeding a bounded tanh output; anomalies are
//! whatever the kernels fail to cover. A LeNet-style convolutional front end
//! (2-D for images, 1-D for signals) can be trained end-to-end on the same
//! one-class cost to handle raw inputs. The crate also ships the evaluation
//! harness used to benchmark the detectors: bootstrap splits, ROC-AUC,
//! grid search, rank tables, and an isolation-forest baseline.
//!
//! Everything is deterministic given a seed: training, splits, and reports
//! reproduce bit-for-bit.

pub mod cli;
pub mod config;
pub mod data;
pub mod deep;
pub mod error;
pub mod eval;
pub mod iforest;
pub mod layers;
pub mod model_io;
pub mod optim;
pub mod pretrain;
pub mod rbfdd;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

/// Derives a child seed from a base seed and a stream tag, so each
/// independent random stream (per-iteration splits, per-epoch shuffles,
/// init) gets its own reproducible seed.
pub(crate) fn derive_seed(base: u64, tag: u64) -> u64 {
    // splitmix64 over the combined value
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::tensor::Tensor;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn uniform_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        Tensor::new(shape.to_vec(), data).unwrap()
    }

    /// Central finite difference of a scalar function at x.
    pub fn central_diff<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    /// Relative error with an absolute floor so near-zero pairs compare on
    /// absolute terms (finite-difference noise sits around 1e-11).
    pub fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .map(|(x, y)| rel_err(*x, *y))
            .fold(0.0, f64::max)
    }
}
