//! Adjacency-matrix sequences and the observables that produce them.

mod synth;
mod trips;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::numeric::sym_eig;
use crate::tensor::DenseTensor;

pub use synth::{
    base_patterns, synth_sequence, SynthParams, SynthTruth, DEFAULT_PATTERN_SEED, PATTERN_EXTENT,
    SYNTH_EIGENVALUES,
};
pub use trips::{
    aggregate_trips, aggregate_trips_raw, load_stations, load_trips, moving_average, parse_hour,
    MonthWindow, StationRegistry, TripRecord,
};

/// Entrywise tolerance for the symmetry invariant, relative to the largest magnitude.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// `σ'` placing the half-weight point of the Gaussian kernel at 25 m.
pub fn default_sigma_prime() -> f64 {
    25.0 * 25.0 / (2.0 * std::f64::consts::LN_2)
}

/// Time series `A_0, …, A_τ` of symmetric `m × m` weight matrices.
#[derive(Clone, Debug)]
pub struct AdjacencySequence {
    m: usize,
    matrices: Vec<Mat<f64>>,
    dt: f64,
    labels: Option<Vec<String>>,
}

fn max_asymmetry(a: MatRef<'_, f64>) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..j {
            dev = dev.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    dev
}

fn check_symmetric(a: MatRef<'_, f64>) -> Result<()> {
    let scale = a.norm_max().max(1.0);
    let dev = max_asymmetry(a);
    if dev > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric(dev));
    }
    Ok(())
}

impl AdjacencySequence {
    pub fn new(matrices: Vec<Mat<f64>>, dt: f64) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::arg("empty adjacency sequence"));
        };
        let m = first.nrows();
        if m == 0 {
            return Err(Error::dims("adjacency matrices must have at least one vertex"));
        }
        if !(dt > 0.0) {
            return Err(Error::arg(format!("time step must be positive, got {dt}")));
        }
        for (t, a) in matrices.iter().enumerate() {
            if a.nrows() != m || a.ncols() != m {
                return Err(Error::dims(format!(
                    "matrix {t} is {}x{}, expected {m}x{m}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if !a.as_ref().is_all_finite() {
                return Err(Error::arg(format!("matrix {t} has non-finite entries")));
            }
            check_symmetric(a.as_ref())?;
        }
        Ok(Self { m, matrices, dt, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.m {
            return Err(Error::dims(format!("{} labels for {} vertices", labels.len(), self.m)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Reads an `m × m × (τ+1)` tensor.
    pub fn from_tensor(t: &DenseTensor<f64>, dt: f64) -> Result<Self> {
        let d = t.dims();
        if d.len() != 3 || d[0] != d[1] {
            return Err(Error::dims(format!("expected m x m x steps, got {d:?}")));
        }
        let m = d[0];
        let matrices = (0..d[2])
            .map(|k| MatRef::from_column_major_slice(t.last_mode_slice(k), m, m).to_owned())
            .collect();
        Self::new(matrices, dt)
    }

    pub fn to_tensor(&self) -> Result<DenseTensor<f64>> {
        self.stack(0..self.len())
    }

    /// Matrices `range` stacked along a trailing time mode.
    pub fn stack(&self, range: std::ops::Range<usize>) -> Result<DenseTensor<f64>> {
        let m = self.m;
        let mut values = Vec::with_capacity(m * m * range.len());
        for a in &self.matrices[range.clone()] {
            for j in 0..m {
                values.extend((0..m).map(|i| a[(i, j)]));
            }
        }
        DenseTensor::new(vec![m, m, range.len()], values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of matrices, `τ + 1`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn matrices(&self) -> &[Mat<f64>] {
        &self.matrices
    }

    pub fn matrix(&self, t: usize) -> &Mat<f64> {
        &self.matrices[t]
    }

    /// Relabels vertices so that new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.m)?;
        let matrices = self
            .matrices
            .iter()
            .map(|a| Mat::from_fn(self.m, self.m, |i, j| a[(perm[i], perm[j])]))
            .collect();
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&p| l[p].clone()).collect());
        Ok(Self { m: self.m, matrices, dt: self.dt, labels })
    }

    /// Applies [`psd_shift`] to every matrix.
    pub fn psd_shifted(&self) -> Result<Self> {
        let matrices = self.matrices.iter().map(|a| psd_shift(a.as_ref())).collect::<Result<_>>()?;
        Ok(Self { m: self.m, matrices, dt: self.dt, labels: self.labels.clone() })
    }

    /// Entrywise mean over time.
    pub fn time_average(&self) -> Mat<f64> {
        let mut acc = Mat::<f64>::zeros(self.m, self.m);
        for a in &self.matrices {
            acc += a;
        }
        acc * faer::Scale(1.0 / self.len() as f64)
    }
}

fn check_permutation(perm: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    if perm.len() != m {
        return Err(Error::dims(format!("permutation of length {} for {m} vertices", perm.len())));
    }
    for &p in perm {
        if p >= m || seen[p] {
            return Err(Error::arg(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Gaussian-kernel adjacency `exp(−‖y_i − y_j‖² / (2σ'))` for every frame.
///
/// `frames[t][i]` is the planar position of agent `i` at time `t`.
pub fn gaussian_adjacency(
    frames: &[Vec<[f64; 2]>],
    sigma_prime: f64,
    dt: f64,
) -> Result<AdjacencySequence> {
    if !(sigma_prime > 0.0) {
        return Err(Error::arg(format!("sigma' must be positive, got {sigma_prime}")));
    }
    let n = frames.first().map_or(0, Vec::len);
    let matrices = frames
        .iter()
        .enumerate()
        .map(|(t, pos)| {
            if pos.len() != n {
                return Err(Error::dims(format!("frame {t} has {} agents, expected {n}", pos.len())));
            }
            let mut a = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = 1.0;
                for j in 0..i {
                    let dx = pos[i][0] - pos[j][0];
                    let dy = pos[i][1] - pos[j][1];
                    let w = (-(dx * dx + dy * dy) / (2.0 * sigma_prime)).exp();
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;
    AdjacencySequence::new(matrices, dt)
}

/// Shifts a symmetric matrix by `max(0, −λ_min)·I` so it becomes positive semidefinite.
pub fn psd_shift(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(format!("psd shift of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    check_symmetric(a)?;
    let (values, _) = sym_eig(a)?;
    let shift = values.first().map_or(0.0, |&l| (-l).max(0.0));
    let mut out = a.to_owned();
    for i in 0..out.nrows() {
        out[(i, i)] += shift;
    }
    Ok(out)
}

/// Greedy nearest-neighbor vertex ordering on the time-averaged adjacency.
///
/// Starts at the vertex of largest mean weight and repeatedly appends the
/// unvisited vertex with the largest affinity to the last one added. Ties go
/// to the lowest index. Returns the relabeled sequence and the permutation
/// (`perm[new] = old`).
pub fn sort_by_nearest_neighbors(adj: &AdjacencySequence) -> Result<(AdjacencySequence, Vec<usize>)> {
    let perm = nearest_neighbor_chain(adj.time_average().as_ref());
    Ok((adj.permuted(&perm)?, perm))
}

pub(crate) fn nearest_neighbor_chain(w: MatRef<'_, f64>) -> Vec<usize> {
    let m = w.nrows();
    if m == 0 {
        return Vec::new();
    }
    let row_mean = |i: usize| (0..m).map(|j| w[(i, j)]).sum::<f64>() / m as f64;
    let mut start = 0;
    for i in 1..m {
        if row_mean(i) > row_mean(start) {
            start = i;
        }
    }
    let mut visited = vec![false; m];
    let mut chain = Vec::with_capacity(m);
    visited[start] = true;
    chain.push(start);
    while chain.len() < m {
        let last = *chain.last().expect("chain is non-empty");
        let mut best: Option<usize> = None;
        for v in (0..m).filter(|&v| !visited[v]) {
            if best.is_none_or(|b| w[(last, v)] > w[(last, b)]) {
                best = Some(v);
            }
        }
        let next = best.expect("an unvisited vertex remains");
        visited[next] = true;
        chain.push(next);
    }
    chain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::max_abs_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sequence_validation() {
        let sym = faer::mat![[1.0, 2.0], [2.0, 0.0]];
        let asym = faer::mat![[1.0, 2.0], [0.0, 0.0]];
        assert!(AdjacencySequence::new(vec![sym.clone()], 1.0).is_ok());
        assert!(matches!(AdjacencySequence::new(vec![asym], 1.0), Err(Error::Asymmetric(_))));
        assert!(AdjacencySequence::new(vec![sym.clone(), Mat::zeros(3, 3)], 1.0).is_err());
        assert!(AdjacencySequence::new(vec![sym.clone()], 0.0).is_err());
        assert!(AdjacencySequence::new(vec![], 1.0).is_err());
        let t = AdjacencySequence::new(vec![sym.clone(), sym * faer::Scale(2.0)], 1.0)
            .unwrap()
            .to_tensor()
            .unwrap();
        assert_eq!(t.dims(), &[2, 2, 2]);
        assert_eq!(t.get(&[0, 1, 1]), 4.0);
        let back = AdjacencySequence::from_tensor(&t, 1.0).unwrap();
        assert_eq!(back.matrix(1)[(1, 0)], 4.0);
    }

    #[test]
    fn kernel_values() {
        let s = default_sigma_prime();
        let frames = vec![vec![[0.0, 0.0], [0.0, 0.0], [25.0, 0.0]]];
        let a = gaussian_adjacency(&frames, s, 0.01).unwrap();
        let a0 = a.matrix(0);
        assert_eq!(a0[(0, 1)], 1.0);
        assert!((a0[(0, 2)] - 0.5).abs() < 1e-15);
        assert_eq!(a0[(2, 2)], 1.0);
    }

    #[test]
    fn kernel_monotone_in_distance() {
        let frames = vec![vec![[0.0, 0.0], [3.0, 0.0], [10.0, 0.0]]];
        let a = gaussian_adjacency(&frames, default_sigma_prime(), 1.0).unwrap();
        let a0 = a.matrix(0);
        assert!(a0[(0, 1)] > a0[(0, 2)] && a0[(1, 2)] > a0[(0, 2)]);
        assert!(a0[(0, 2)] > 0.0);
    }

    #[test]
    fn kernel_rigid_motion_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)]).collect();
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let moved: Vec<[f64; 2]> =
            pos.iter().map(|p| [c * p[0] - s * p[1] + 3.5, s * p[0] + c * p[1] - 8.0]).collect();
        let a = gaussian_adjacency(&[pos], default_sigma_prime(), 1.0).unwrap();
        let b = gaussian_adjacency(&[moved], default_sigma_prime(), 1.0).unwrap();
        assert!(max_abs_diff(a.matrix(0).as_ref(), b.matrix(0).as_ref()) < 1e-12);
    }

    #[test]
    fn psd_shift_cases() {
        let eye = Mat::<f64>::identity(3, 3);
        assert_eq!(max_abs_diff(psd_shift(eye.as_ref()).unwrap().as_ref(), eye.as_ref()), 0.0);
        let swap = faer::mat![[0.0, 1.0], [1.0, 0.0]];
        let shifted = psd_shift(swap.as_ref()).unwrap();
        assert!(max_abs_diff(shifted.as_ref(), faer::mat![[1.0, 1.0], [1.0, 1.0]].as_ref()) < 1e-14);
        assert!(matches!(psd_shift(faer::mat![[0.0, 1.0], [0.0, 0.0]].as_ref()), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn psd_shift_random_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Mat::<f64>::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let a = &g + g.transpose();
        let once = psd_shift(a.as_ref()).unwrap();
        let (vals, _) = sym_eig(once.as_ref()).unwrap();
        assert!(vals[0] >= -1e-10 && vals[0] <= 1e-10, "{}", vals[0]);
        let twice = psd_shift(once.as_ref()).unwrap();
        assert!(max_abs_diff(once.as_ref(), twice.as_ref()) < 1e-10);
    }

    #[test]
    fn sorting_single_vertex_and_idempotence() {
        let one = AdjacencySequence::new(vec![faer::mat![[1.0]]], 1.0).unwrap();
        assert_eq!(sort_by_nearest_neighbors(&one).unwrap().1, vec![0]);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let frames: Vec<Vec<[f64; 2]>> = (0..3)
            .map(|_| (0..7).map(|_| [rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)]).collect())
            .collect();
        let adj = gaussian_adjacency(&frames, 20.0, 1.0).unwrap();
        let (sorted, perm) = sort_by_nearest_neighbors(&adj).unwrap();
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
        let (_, again) = sort_by_nearest_neighbors(&sorted).unwrap();
        assert_eq!(again, (0..7).collect::<Vec<_>>());
    }

    fn all_permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![0]];
        }
        let mut out = Vec::new();
        for p in all_permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn ring_chain_matches_brute_force_greedy() {
        // ring 0-1-2-3-0 with distinct weights on the edges
        let mut w = Mat::<f64>::zeros(4, 4);
        for (i, j, v) in [(0, 1, 0.9), (1, 2, 0.8), (2, 3, 0.7), (3, 0, 0.6)] {
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        for i in 0..4 {
            w[(i, i)] = 1.0;
        }
        let adj = AdjacencySequence::new(vec![w.clone()], 1.0).unwrap();
        let (_, perm) = sort_by_nearest_neighbors(&adj).unwrap();
        let mean = |i: usize| (0..4).map(|j| w[(i, j)]).sum::<f64>() / 4.0;
        let greedy = |p: &[usize]| {
            (0..4).all(|v| mean(p[0]) >= mean(v))
                && (1..4).all(|k| p[k..].iter().all(|&v| w[(p[k - 1], p[k])] >= w[(p[k - 1], v)]))
        };
        let satisfying: Vec<Vec<usize>> = all_permutations(4).into_iter().filter(|p| greedy(p)).collect();
        assert_eq!(satisfying, vec![perm.clone()]);
        // consecutive vertices in the chain are ring neighbours: band structure preserved
        for e in perm.windows(2) {
            assert!(w[(e[0], e[1])] > 0.0);
        }
    }
}
