//! Synthetic two-class Gaussian blobs for the classification families.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::apps::libsvm::ClassificationDataset;

/// `m` samples in `n` dimensions, two balanced classes at centers
/// `+/- separation/2` along a random unit direction, unit noise.
pub fn gen_blobs(m: usize, n: usize, seed: u64, separation: f64) -> ClassificationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    for v in dir.iter_mut() {
        *v /= nrm;
    }
    let mut samples = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let t = if i % 2 == 0 { 1.0 } else { -1.0 };
        let sample: Vec<f64> = (0..n)
            .map(|j| t * 0.5 * separation * dir[j] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        samples.push(sample);
        labels.push(t);
    }
    ClassificationDataset { samples, labels, n_features: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_balanced_and_deterministic() {
        let a = gen_blobs(10, 3, 42, 2.0);
        let b = gen_blobs(10, 3, 42, 2.0);
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.labels.iter().filter(|&&t| t > 0.0).count(), 5);
    }
}
