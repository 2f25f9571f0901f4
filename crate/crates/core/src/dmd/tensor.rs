use std::time::Instant;

use faer::{Mat, MatRef};
use num_complex::Complex64;

use super::{partition_zero_eigenvalues, DmdMeta, DmdResult, Engine, SnapshotPair, N_PINV_TAIL_TOL};
use crate::error::{Error, Result};
use crate::graph::AdjacencySequence;
use crate::numeric::{eig_general, to_complex};
use crate::tensor::DenseTensor;
use crate::tt::{contract_leading, snapshot_factorize, tt_decompose_with, tt_inner_contract, TtOptions};

/// Reformulated tensor-train DMD.
///
/// With `X = M Σ N` from the TT-SVD of `x` and `Y = P Q` from the TT-SVD of
/// `y`, the reduced operator is `F̂ = (MᵀP)(Q N†) Σ⁻¹`. `MᵀP` is contracted
/// core by core; only `P` is materialized, to assemble the mode tensor
/// `Z = P · (Q N† Σ⁻¹ W Λ⁻¹)`.
pub fn tdmd(pair: &SnapshotPair<DenseTensor<f64>>, opts: &TtOptions) -> Result<DmdResult> {
    tdmd_as(pair, opts, Engine::Tdmd)
}

fn tdmd_as(
    pair: &SnapshotPair<DenseTensor<f64>>,
    opts: &TtOptions,
    engine: Engine,
) -> Result<DmdResult> {
    let start = Instant::now();
    let order = pair.x.order();
    if pair.x.dims() != pair.y.dims() {
        return Err(Error::dims(format!("x dims {:?} vs y dims {:?}", pair.x.dims(), pair.y.dims())));
    }
    let d = order - 1;
    let fx = snapshot_factorize(&pair.x, opts)?;
    let ydec = tt_decompose_with(&pair.y, opts)?;
    let ytt = &ydec.tt;

    let mp = tt_inner_contract(&fx.tt, ytt, d)?;
    let q_core = ytt.core(d);
    let (s_d, tau) = (q_core.dims()[0], q_core.dims()[1]);
    let q = MatRef::from_column_major_slice(q_core.values(), s_d, tau);

    let qn = q * fx.n_pinv(N_PINV_TAIL_TOL)?;
    let r_d = fx.rank();
    // Q N† Σ⁻¹
    let qn_sinv = Mat::from_fn(s_d, r_d, |i, k| qn[(i, k)] / fx.sigma[k]);
    let reduced = &mp * &qn_sinv;

    let eig = eig_general(reduced.as_ref())?;
    let (keep, dropped) = partition_zero_eigenvalues(&eig.values)?;
    let eigenvalues: Vec<Complex64> = keep.iter().map(|&j| eig.values[j]).collect();
    let w_over_lambda =
        Mat::from_fn(r_d, keep.len(), |i, c| eig.vectors[(i, keep[c])] / eig.values[keep[c]]);
    let last_core = to_complex(qn_sinv.as_ref()) * &w_over_lambda;
    let p = contract_leading(ytt, d)?;
    let z = to_complex(p.as_ref()) * &last_core;

    let mut dims = pair.x.dims()[..d].to_vec();
    dims.push(eigenvalues.len());
    let rows = z.nrows();
    let mut values = Vec::with_capacity(rows * z.ncols());
    for j in 0..z.ncols() {
        values.extend((0..rows).map(|i| z[(i, j)]));
    }
    let modes = DenseTensor::new(dims, values)?;
    Ok(DmdResult {
        eigenvalues,
        modes,
        reduced,
        ranks: fx.tt.ranks(),
        y_ranks: ytt.ranks(),
        meta: DmdMeta {
            engine,
            epsilon: opts.epsilon,
            tolerance_mode: opts.mode,
            dropped_eigenvalues: dropped.iter().map(|v| [v.re, v.im]).collect(),
            runtime_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// Graph DMD: tensor DMD on `X = A_{0..τ-1}`, `Y = A_{1..τ}` with `d = 2`.
pub fn graph_dmd(adj: &AdjacencySequence, opts: &TtOptions) -> Result<DmdResult> {
    if adj.len() < 3 {
        return Err(Error::arg(format!("need at least 3 adjacency matrices, got {}", adj.len())));
    }
    let steps = adj.len();
    let pair = SnapshotPair::<DenseTensor<f64>>::new(adj.stack(0..steps - 1)?, adj.stack(1..steps)?)?;
    tdmd_as(&pair, opts, Engine::GraphDmd)
}
