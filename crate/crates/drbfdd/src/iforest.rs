//! Isolation forest baseline: an ensemble of random-split trees scoring
//! anomalies by how few splits it takes to isolate them.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_SUBSAMPLE: usize = 256;

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Node>,
    dim: usize,
    /// Effective subsample size used for the path-length normalization.
    subsample: usize,
}

/// Average unsuccessful-search path length of a binary search tree with n
/// nodes: `c(n) = 2 H(n-1) - 2 (n-1)/n`, with the exact harmonic number.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = (n - 1) as f64;
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * m / n as f64
}

/// Anomaly score from a mean path length: `s = 2^(-E[h]/c(psi))`.
/// `E[h] = c(psi)` lands exactly on 0.5; shorter paths push toward 1.
pub fn score_from_mean_path(mean_path: f64, subsample: usize) -> f64 {
    let c = average_path_length(subsample);
    if c <= 0.0 {
        return 0.5;
    }
    2f64.powf(-mean_path / c)
}

fn build_tree(
    points: &Tensor,
    indices: &mut Vec<usize>,
    depth: usize,
    height_limit: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    let n = indices.len();
    if n <= 1 || depth >= height_limit {
        return Node::Leaf { size: n };
    }
    let dim = points.shape()[1];

    // candidate features are those that actually vary in this node's sample
    let mut varying = Vec::new();
    for f in 0..dim {
        let first = points.index0(indices[0])[f];
        if indices.iter().any(|&i| points.index0(i)[f] != first) {
            varying.push(f);
        }
    }
    if varying.is_empty() {
        // all remaining points identical: nothing to split on
        return Node::Leaf { size: n };
    }
    let feature = varying[rng.gen_range(0..varying.len())];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in indices.iter() {
        let v = points.index0(i)[feature];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let threshold = rng.gen_range(lo..hi);

    let (mut left, mut right) = (Vec::new(), Vec::new());
    for &i in indices.iter() {
        if points.index0(i)[feature] < threshold {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    Node::Split {
        feature,
        threshold,
        left: Box::new(build_tree(points, &mut left, depth + 1, height_limit, rng)),
        right: Box::new(build_tree(points, &mut right, depth + 1, height_limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64], depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + average_path_length(*size),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] < *threshold {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

impl IsolationForest {
    /// Fits `n_estimators` trees, each on a seeded subsample of at most
    /// `subsample` points, grown to the standard height limit
    /// `ceil(log2(subsample))`.
    pub fn fit(data: &Tensor, n_estimators: usize, subsample: usize, seed: u64) -> Result<Self> {
        if data.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "IsolationForest::fit",
                detail: format!("data must be [N, D], got {:?}", data.shape()),
            });
        }
        let n = data.shape()[0];
        if n < 2 {
            return Err(Error::TooFewPoints { points: n, k: 2 });
        }
        if n_estimators == 0 {
            return Err(Error::InvalidArgument(
                "n_estimators must be at least 1".into(),
            ));
        }
        let psi = subsample.max(2).min(n);
        let height_limit = (psi as f64).log2().ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(n_estimators);
        for _ in 0..n_estimators {
            // sample psi indices without replacement (partial Fisher-Yates)
            let mut pool: Vec<usize> = (0..n).collect();
            for i in 0..psi {
                let j = rng.gen_range(i..n);
                pool.swap(i, j);
            }
            let mut sample: Vec<usize> = pool[..psi].to_vec();
            trees.push(build_tree(data, &mut sample, 0, height_limit, &mut rng));
        }
        Ok(IsolationForest {
            trees,
            dim: data.shape()[1],
            subsample: psi,
        })
    }

    /// Anomaly score in (0, 1); higher means more anomalous.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::ShapeMismatch {
                op: "IsolationForest::score",
                detail: format!("input has {} dims, forest expects {}", x.len(), self.dim),
            });
        }
        let total: f64 = self.trees.iter().map(|t| path_length(t, x, 0)).sum();
        let mean = total / self.trees.len() as f64;
        Ok(score_from_mean_path(mean, self.subsample))
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::seeded_rng;
    use rand::Rng;

    #[test]
    fn harmonic_based_path_adjustment() {
        assert_eq!(average_path_length(0), 0.0);
        assert_eq!(average_path_length(1), 0.0);
        // c(2) = 2*H(1) - 2*(1/2) = 2 - 1 = 1
        assert!((average_path_length(2) - 1.0).abs() < 1e-15);
        // c(3) = 2*(1 + 1/2) - 2*(2/3) = 3 - 4/3
        assert!((average_path_length(3) - (3.0 - 4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn score_fixed_point_at_mean_path() {
        let psi = 256;
        let c = average_path_length(psi);
        assert!((score_from_mean_path(c, psi) - 0.5).abs() < 1e-15);
        assert!(score_from_mean_path(0.0, psi) > 0.99);
    }

    #[test]
    fn two_points_get_isolated_by_one_split() {
        let data = Tensor::new(vec![2, 1], vec![0.0, 10.0]).unwrap();
        let forest = IsolationForest::fit(&data, 1, 256, 0).unwrap();
        match &forest.trees[0] {
            Node::Split { left, right, .. } => {
                assert!(matches!(**left, Node::Leaf { size: 1 }));
                assert!(matches!(**right, Node::Leaf { size: 1 }));
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn seeded_fits_are_identical() {
        let mut rng = seeded_rng(4);
        let data: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = Tensor::new(vec![50, 2], data).unwrap();
        let a = IsolationForest::fit(&t, 20, 32, 7).unwrap();
        let b = IsolationForest::fit(&t, 20, 32, 7).unwrap();
        let probe = [0.3, -0.8];
        assert_eq!(a.score(&probe).unwrap(), b.score(&probe).unwrap());
    }

    #[test]
    fn constant_data_still_terminates() {
        let data = Tensor::new(vec![8, 3], vec![1.0; 24]).unwrap();
        let forest = IsolationForest::fit(&data, 5, 4, 1).unwrap();
        let s = forest.score(&[1.0, 1.0, 1.0]).unwrap();
        assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn outlier_scores_above_cluster() {
        let mut rng = seeded_rng(8);
        let mut data = Vec::new();
        for _ in 0..100 {
            data.push(rng.gen_range(-0.5..0.5));
            data.push(rng.gen_range(-0.5..0.5));
        }
        data.extend_from_slice(&[25.0, -25.0]);
        let t = Tensor::new(vec![101, 2], data).unwrap();
        let forest = IsolationForest::fit(&t, 100, 64, 3).unwrap();
        let outlier = forest.score(&[25.0, -25.0]).unwrap();
        for i in 0..100 {
            let s = forest.score(t.index0(i)).unwrap();
            assert!(s < outlier, "cluster point {} scored {} >= outlier {}", i, s, outlier);
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let one = Tensor::zeros(&[1, 2]);
        assert!(IsolationForest::fit(&one, 10, 256, 0).is_err());
        let ok = Tensor::new(vec![3, 1], vec![0.0, 1.0, 2.0]).unwrap();
        let forest = IsolationForest::fit(&ok, 2, 256, 0).unwrap();
        assert!(forest.score(&[0.0, 1.0]).is_err());
    }
}
