use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::AdjacencySequence;
use crate::error::{Error, Result};

/// Seed of the default base patterns; independent of the noise seed.
pub const DEFAULT_PATTERN_SEED: u64 = 0x6d31_6d32;

/// Number of leading vertices covered by the default base patterns.
pub const PATTERN_EXTENT: usize = 64;

/// Decay rates of the two planted components.
pub const SYNTH_EIGENVALUES: [f64; 2] = [0.99, 0.9];

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub d: usize,
    /// Number of transitions; the sequence holds `tau + 1` matrices.
    pub tau: usize,
    pub noise_var: f64,
    pub seed: u64,
    pub base_a: Option<Mat<f64>>,
    pub base_b: Option<Mat<f64>>,
}

impl SynthParams {
    pub fn new(d: usize, tau: usize, noise_var: f64, seed: u64) -> Self {
        Self { d, tau, noise_var, seed, base_a: None, base_b: None }
    }
}

/// Planted eigenvalues and their mode matrices.
#[derive(Clone, Debug)]
pub struct SynthTruth {
    pub eigenvalues: Vec<Complex64>,
    pub modes: Vec<Mat<f64>>,
}

fn cut_points(rng: &mut ChaCha8Rng, d: usize) -> [usize; 5] {
    // four contiguous segments, each at least d/8 long (and at least 1)
    let min = (d / 8).max(1);
    let slack = d.saturating_sub(4 * min);
    let mut extra: Vec<usize> = (0..3).map(|_| rng.random_range(0..=slack)).collect();
    extra.sort_unstable();
    let lens = [
        min + extra[0],
        min + extra[1] - extra[0],
        min + extra[2] - extra[1],
        min + slack - extra[2],
    ];
    let mut cuts = [0; 5];
    for k in 0..4 {
        cuts[k + 1] = (cuts[k] + lens[k]).min(d);
    }
    cuts[4] = d;
    cuts
}

fn fill_block(
    a: &mut Mat<f64>,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    rng: &mut ChaCha8Rng,
) {
    for i in rows {
        for j in cols.clone() {
            if a[(i, j)] == 0.0 && rng.random_bool(0.5) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
}

/// Two symmetric 0/1 block patterns with disjoint supports.
///
/// The leading `min(d, PATTERN_EXTENT)` vertices are cut into four random
/// contiguous segments `S0..S3`. The first pattern fills `S0×S0` and
/// `S1×S2`, the second fills `S3×S3` and `S1×S1`, each block at density 0.5
/// and mirrored to stay symmetric.
pub fn base_patterns(d: usize, pattern_seed: u64) -> Result<(Mat<f64>, Mat<f64>)> {
    if d < 4 {
        return Err(Error::arg(format!("base patterns need d >= 4, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pattern_seed);
    let c = cut_points(&mut rng, d.min(PATTERN_EXTENT));
    let seg = |k: usize| c[k]..c[k + 1];
    let mut a = Mat::<f64>::zeros(d, d);
    let mut b = Mat::<f64>::zeros(d, d);
    fill_block(&mut a, seg(0), seg(0), &mut rng);
    fill_block(&mut a, seg(1), seg(2), &mut rng);
    fill_block(&mut b, seg(3), seg(3), &mut rng);
    fill_block(&mut b, seg(1), seg(1), &mut rng);
    Ok((a, b))
}

/// `A_t = 0.99^t A_{m1} + 0.9^t A_{m2} + (e_t + e_tᵀ)/2` for `t = 0..=tau`,
/// with `e_t` entrywise Gaussian of variance `noise_var`.
pub fn synth_sequence(params: &SynthParams) -> Result<(AdjacencySequence, SynthTruth)> {
    let SynthParams { d, tau, noise_var, seed, .. } = *params;
    if d < 2 {
        return Err(Error::arg(format!("d must be at least 2, got {d}")));
    }
    if tau < 2 {
        return Err(Error::arg(format!("tau must be at least 2, got {tau}")));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::arg(format!("noise variance must be non-negative, got {noise_var}")));
    }
    let (a, b) = match (&params.base_a, &params.base_b) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        (None, None) => base_patterns(d, DEFAULT_PATTERN_SEED)?,
        _ => return Err(Error::arg("supply both base matrices or neither")),
    };
    for m in [&a, &b] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::dims(format!("base matrix is {}x{}, expected {d}x{d}", m.nrows(), m.ncols())));
        }
    }
    let normal = Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [la, lb] = SYNTH_EIGENVALUES;
    let matrices = (0..=tau)
        .map(|t| {
            let (ca, cb) = (la.powi(t as i32), lb.powi(t as i32));
            let mut m = Mat::from_fn(d, d, |i, j| ca * a[(i, j)] + cb * b[(i, j)]);
            if noise_var > 0.0 {
                let e = Mat::<f64>::from_fn(d, d, |_, _| normal.sample(&mut rng));
                for j in 0..d {
                    for i in 0..d {
                        m[(i, j)] += 0.5 * (e[(i, j)] + e[(j, i)]);
                    }
                }
            }
            m
        })
        .collect();
    let seq = AdjacencySequence::new(matrices, 1.0)?;
    let truth = SynthTruth {
        eigenvalues: SYNTH_EIGENVALUES.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        modes: vec![a, b],
    };
    Ok((seq, truth))
}
