#![allow(dead_code)]

use faer::Mat;
use graph_dmd::DenseTensor;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_tensor(dims: Vec<usize>, rng: &mut ChaCha8Rng) -> DenseTensor<f64> {
    DenseTensor::from_fn(dims, |_| rng.sample(StandardNormal)).unwrap()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `rows × cols` matrix of rank at most `rank`.
pub fn low_rank_matrix(rows: usize, cols: usize, rank: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    gaussian_matrix(rows, rank, rng) * gaussian_matrix(rank, cols, rng)
}

pub fn symmetric_matrix(m: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let a = gaussian_matrix(m, m, rng);
    Mat::from_fn(m, m, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

pub fn frobenius_diff(a: &DenseTensor<f64>, b: &DenseTensor<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Largest distance between paired eigenvalues after greedy nearest matching.
/// Returns `None` if the multisets have different sizes.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}
