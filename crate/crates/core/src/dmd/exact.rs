use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;

use super::{partition_zero_eigenvalues, DmdMeta, DmdResult, Engine, SnapshotPair};
use crate::error::{Error, Result};
use crate::numeric::{eig_general, to_complex, truncated_svd};
use crate::tensor::DenseTensor;
use crate::tt::ToleranceMode;

/// Exact DMD: `F̂ = Uᵀ Y V Σ⁻¹` from the truncated SVD of `X`, modes
/// `ψ_j = λ_j⁻¹ Y V Σ⁻¹ w_j`.
pub fn exact_dmd(
    pair: &SnapshotPair<Mat<f64>>,
    tail_tol: f64,
    max_rank: Option<usize>,
) -> Result<DmdResult> {
    let start = Instant::now();
    let (x, y) = (&pair.x, &pair.y);
    if x.ncols() < 2 {
        return Err(Error::arg(format!("need at least 2 snapshot pairs, got {}", x.ncols())));
    }
    let svd = truncated_svd(x.as_ref(), tail_tol, max_rank)?;
    let r = svd.rank();
    // Y V Σ⁻¹
    let yv = y * &svd.v;
    let yv_sinv = Mat::from_fn(yv.nrows(), r, |i, k| yv[(i, k)] / svd.sigma[k]);
    let reduced = svd.u.transpose() * &yv_sinv;
    let eig = eig_general(reduced.as_ref())?;
    let (keep, dropped) = partition_zero_eigenvalues(&eig.values)?;
    let eigenvalues: Vec<Complex64> = keep.iter().map(|&j| eig.values[j]).collect();
    let w = Mat::from_fn(r, keep.len(), |i, c| eig.vectors[(i, keep[c])] / eig.values[keep[c]]);
    let modes = to_complex(yv_sinv.as_ref()) * &w;
    let n = x.nrows();
    let p = eigenvalues.len();
    let modes = DenseTensor::from_fn(vec![n, p], |idx| modes[(idx[0], idx[1])])?;
    Ok(DmdResult {
        eigenvalues,
        modes,
        reduced,
        ranks: vec![1, r, 1],
        y_ranks: Vec::new(),
        meta: DmdMeta {
            engine: Engine::ExactDmd,
            epsilon: tail_tol,
            tolerance_mode: ToleranceMode::Relative,
            dropped_eigenvalues: dropped.iter().map(|v| [v.re, v.im]).collect(),
            runtime_secs: start.elapsed().as_secs_f64(),
        },
    })
}
