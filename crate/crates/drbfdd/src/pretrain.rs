//! Unsupervised head initialization: k-means++ clustering followed by
//! center/spread/weight seeding of the kernel head.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rbfdd::RbfddParams;
use crate::tensor::Tensor;

/// Outcome of a k-means run.
#[derive(Debug, Clone)]
pub struct KmeansResult {
    /// [k, D] cluster centers.
    pub centers: Tensor,
    /// Index of the nearest center for every input point.
    pub assignments: Vec<usize>,
    /// Total squared distance of points to their centers.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration; non-increasing.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// k-means with k-means++ seeding and Lloyd iterations. Runs until the
/// largest center shift drops below `tol` or `max_iters` passes. Empty
/// clusters are reseeded to the point currently farthest from its center.
/// Fully deterministic for a fixed seed.
pub fn kmeans(
    points: &Tensor,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KmeansResult> {
    if points.rank() != 2 {
        return Err(Error::ShapeMismatch {
            op: "kmeans",
            detail: format!("points must be [N, D], got {:?}", points.shape()),
        });
    }
    let n = points.shape()[0];
    let d = points.shape()[1];
    if k == 0 {
        return Err(Error::InvalidArgument("kmeans: k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints { points: n, k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: first center uniform, then proportional to the
    // squared distance to the nearest already-chosen center.
    let mut centers = vec![0.0f64; k * d];
    let first = rng.gen_range(0..n);
    centers[0..d].copy_from_slice(points.index0(first));
    let mut nearest_sq = vec![0.0f64; n];
    for i in 0..n {
        nearest_sq[i] = sq_dist(points.index0(i), &centers[0..d]);
    }
    for c in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // all points coincide with chosen centers; any point will do
            rng.gen_range(0..n)
        };
        centers[c * d..(c + 1) * d].copy_from_slice(points.index0(chosen));
        for i in 0..n {
            let dist = sq_dist(points.index0(i), &centers[c * d..(c + 1) * d]);
            if dist < nearest_sq[i] {
                nearest_sq[i] = dist;
            }
        }
    }

    let mut assignments = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    let mut inertia_trace = Vec::new();

    for _iter in 0..max_iters {
        // assignment step
        inertia = 0.0;
        for i in 0..n {
            let p = points.index0(i);
            let mut best = f64::INFINITY;
            let mut best_c = 0usize;
            for c in 0..k {
                let dist = sq_dist(p, &centers[c * d..(c + 1) * d]);
                if dist < best {
                    best = dist;
                    best_c = c;
                }
            }
            assignments[i] = best_c;
            inertia += best;
        }
        inertia_trace.push(inertia);

        // update step
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(points.index0(i)) {
                *s += v;
            }
        }
        // reseed empty clusters to the point farthest from its center
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.index0(a), &centers[assignments[a] * d..(assignments[a] + 1) * d]);
                        let db = sq_dist(points.index0(b), &centers[assignments[b] * d..(assignments[b] + 1) * d]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                sums[c * d..(c + 1) * d].copy_from_slice(points.index0(far));
                counts[c] = 1;
            }
        }

        let mut max_shift = 0.0f64;
        for c in 0..k {
            let cnt = counts[c] as f64;
            let mut shift = 0.0;
            for j in 0..d {
                let new = sums[c * d + j] / cnt;
                let delta = new - centers[c * d + j];
                shift += delta * delta;
                centers[c * d + j] = new;
            }
            max_shift = max_shift.max(shift.sqrt());
        }
        if max_shift < tol {
            break;
        }
    }

    // final assignment against the converged centers
    inertia = 0.0;
    for i in 0..n {
        let p = points.index0(i);
        let mut best = f64::INFINITY;
        let mut best_c = 0usize;
        for c in 0..k {
            let dist = sq_dist(p, &centers[c * d..(c + 1) * d]);
            if dist < best {
                best = dist;
                best_c = c;
            }
        }
        assignments[i] = best_c;
        inertia += best;
    }

    Ok(KmeansResult {
        centers: Tensor::new(vec![k, d], centers)?,
        assignments,
        inertia,
        inertia_trace,
    })
}

pub const KMEANS_DEFAULT_MAX_ITERS: usize = 100;
pub const KMEANS_DEFAULT_TOL: f64 = 1e-6;

/// Builds head parameters from data: centers from k-means, each spread set
/// to the mean distance from its center to its assigned points, and all
/// weights at 1/H so the initial output sits in the responsive part of the
/// tanh. Clusters too small (or too tight) to define a spread fall back to
/// half the mean inter-center distance, and to 1.0 when there is only one
/// center with no usable radius at all.
pub fn init_rbfdd(latent: &Tensor, h: usize, seed: u64) -> Result<RbfddParams> {
    let n = latent.shape().first().copied().unwrap_or(0);
    if n < h {
        return Err(Error::TooFewPoints { points: n, k: h });
    }
    let km = kmeans(latent, h, seed, KMEANS_DEFAULT_MAX_ITERS, KMEANS_DEFAULT_TOL)?;
    let d = km.centers.shape()[1];

    let mut dist_sums = vec![0.0f64; h];
    let mut counts = vec![0usize; h];
    for (i, &c) in km.assignments.iter().enumerate() {
        dist_sums[c] += sq_dist(latent.index0(i), km.centers.index0(c)).sqrt();
        counts[c] += 1;
    }

    // fallback radius: half the mean pairwise distance between centers
    let mut inter = 0.0f64;
    let mut pairs = 0usize;
    for a in 0..h {
        for b in (a + 1)..h {
            inter += sq_dist(km.centers.index0(a), km.centers.index0(b)).sqrt();
            pairs += 1;
        }
    }
    let mut fallback = if pairs > 0 { 0.5 * inter / pairs as f64 } else { 0.0 };
    if fallback <= 0.0 {
        fallback = 1.0;
    }

    let mut spreads = Vec::with_capacity(h);
    for c in 0..h {
        let s = if counts[c] > 1 {
            dist_sums[c] / counts[c] as f64
        } else {
            0.0
        };
        spreads.push(if s > 0.0 { s } else { fallback });
    }

    RbfddParams::new(
        km.centers,
        Tensor::from_vec(spreads),
        Tensor::filled(&[h], 1.0 / h as f64),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::seeded_rng;
    use rand::Rng;

    fn two_blobs(n_per: usize, seed: u64) -> Tensor {
        let mut rng = seeded_rng(seed);
        let mut data = Vec::with_capacity(n_per * 2 * 2);
        for _ in 0..n_per {
            data.push(0.0 + rng.gen_range(-0.1..0.1));
            data.push(0.0 + rng.gen_range(-0.1..0.1));
        }
        for _ in 0..n_per {
            data.push(10.0 + rng.gen_range(-0.1..0.1));
            data.push(10.0 + rng.gen_range(-0.1..0.1));
        }
        Tensor::new(vec![n_per * 2, 2], data).unwrap()
    }

    #[test]
    fn k1_center_is_mean() {
        let points = Tensor::new(vec![4, 1], vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let km = kmeans(&points, 1, 0, 100, 1e-9).unwrap();
        assert!((km.centers.data()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_blobs_recovered() {
        let points = two_blobs(50, 42);
        let km = kmeans(&points, 2, 7, 100, 1e-9).unwrap();
        let c0 = km.centers.index0(0);
        let c1 = km.centers.index0(1);
        let near = |c: &[f64], x: f64, y: f64| ((c[0] - x).powi(2) + (c[1] - y).powi(2)).sqrt() < 0.5;
        assert!(
            (near(c0, 0.0, 0.0) && near(c1, 10.0, 10.0))
                || (near(c1, 0.0, 0.0) && near(c0, 10.0, 10.0))
        );
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let points = Tensor::new(vec![3, 2], vec![0., 0., 5., 5., 9., 1.]).unwrap();
        let km = kmeans(&points, 3, 1, 100, 1e-9).unwrap();
        assert_eq!(km.inertia, 0.0);
    }

    #[test]
    fn rejects_more_clusters_than_points() {
        let points = Tensor::zeros(&[2, 2]);
        assert!(matches!(
            kmeans(&points, 3, 0, 10, 1e-6),
            Err(Error::TooFewPoints { points: 2, k: 3 })
        ));
    }

    #[test]
    fn seed_determinism_is_bit_exact() {
        let points = two_blobs(30, 9);
        let a = kmeans(&points, 4, 123, 100, 1e-9).unwrap();
        let b = kmeans(&points, 4, 123, 100, 1e-9).unwrap();
        assert_eq!(a.centers.data(), b.centers.data());
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn inertia_trace_never_increases() {
        let points = two_blobs(40, 5);
        let km = kmeans(&points, 3, 11, 100, 0.0).unwrap();
        for w in km.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "inertia rose: {:?}", w);
        }
    }

    #[test]
    fn init_on_identical_points_uses_fallback() {
        let points = Tensor::new(vec![5, 2], vec![3.0, -1.0].repeat(5)).unwrap();
        let params = init_rbfdd(&points, 1, 0).unwrap();
        assert_eq!(params.centers().data(), &[3.0, -1.0]);
        assert_eq!(params.spreads().data(), &[1.0]);
        assert_eq!(params.weights().data(), &[1.0]);
    }

    #[test]
    fn init_on_two_blobs_matches_generators() {
        let points = two_blobs(50, 8);
        let params = init_rbfdd(&points, 2, 3).unwrap();
        // spread should be around the within-blob mean radius (~0.07 for U(-0.1,0.1)^2)
        for &s in params.spreads().data() {
            assert!(s > 0.0 && s < 0.5, "spread {} out of range", s);
        }
        for &w in params.weights().data() {
            assert_eq!(w, 0.5);
        }
    }

    #[test]
    fn init_satisfies_param_invariants() {
        let mut rng = seeded_rng(14);
        for trial in 0..10 {
            let n = rng.gen_range(8..40);
            let d = rng.gen_range(1..6);
            let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let points = Tensor::new(vec![n, d], data).unwrap();
            let h = rng.gen_range(1..=n.min(6));
            let params = init_rbfdd(&points, h, trial as u64).unwrap();
            assert_eq!(params.kernel_count(), h);
            assert_eq!(params.input_dim(), d);
            assert!(params.spreads().data().iter().all(|&s| s > 0.0));
            assert!(params.centers().all_finite());
        }
    }
}
