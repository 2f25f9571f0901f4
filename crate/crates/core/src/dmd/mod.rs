//! Decomposition engines: exact DMD on snapshot matrices, reformulated
//! tensor-train DMD on snapshot tensors, and Graph DMD on adjacency sequences.

mod exact;
mod spectral;
mod tensor;

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::tt::ToleranceMode;

pub use exact::exact_dmd;
pub use spectral::{
    eigenvalue_error, fit_amplitudes, match_eigenvalues, mode_frequency, reconstruct,
};
pub use tensor::{graph_dmd, tdmd};

/// Modes with `|λ| < ZERO_EIGENVALUE_CUTOFF · max|λ|` are dropped.
pub const ZERO_EIGENVALUE_CUTOFF: f64 = 1e-12;

/// Relative tail tolerance of the SVD used to pseudo-invert `N`.
pub const N_PINV_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    ExactDmd,
    Tdmd,
    GraphDmd,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::ExactDmd => "exact-dmd",
            Engine::Tdmd => "tdmd",
            Engine::GraphDmd => "graph-dmd",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "exact-dmd" => Ok(Engine::ExactDmd),
            "tdmd" => Ok(Engine::Tdmd),
            "graph-dmd" => Ok(Engine::GraphDmd),
            other => Err(Error::arg(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmdMeta {
    pub engine: Engine,
    /// TT-SVD tolerance for the tensor engines, SVD tail tolerance for exact DMD.
    pub epsilon: f64,
    pub tolerance_mode: ToleranceMode,
    /// Eigenvalues excluded from the modes because they were numerically zero.
    pub dropped_eigenvalues: Vec<[f64; 2]>,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug)]
pub struct DmdResult {
    pub eigenvalues: Vec<Complex64>,
    /// Mode container: spatial dims followed by one mode index, so
    /// `modes.last_mode_slice(j)` is the vectorized mode `ψ_j`.
    pub modes: DenseTensor<Complex64>,
    pub reduced: Mat<f64>,
    /// TT-ranks of the snapshot train of `X` (or `[1, r, 1]` for exact DMD).
    pub ranks: Vec<usize>,
    /// TT-ranks of `Y`, empty for exact DMD.
    pub y_ranks: Vec<usize>,
    pub meta: DmdMeta,
}

impl DmdResult {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mode_dims(&self) -> &[usize] {
        let d = self.modes.dims();
        &d[..d.len() - 1]
    }

    pub fn mode(&self, j: usize) -> &[Complex64] {
        self.modes.last_mode_slice(j)
    }

    /// Mode `j` folded as a matrix; requires two spatial modes.
    pub fn mode_matrix(&self, j: usize) -> Result<Mat<Complex64>> {
        let dims = self.mode_dims();
        if dims.len() != 2 {
            return Err(Error::dims(format!("mode dims {dims:?} are not a matrix")));
        }
        if j >= self.n_modes() {
            return Err(Error::Index { index: j, len: self.n_modes() });
        }
        let v = self.mode(j);
        Ok(Mat::from_fn(dims[0], dims[1], |r, c| v[r + dims[0] * c]))
    }

    /// Retained rank of the reduced operator.
    pub fn rank(&self) -> usize {
        self.reduced.nrows()
    }
}

/// Time-shifted snapshot stacks: `y` is one step ahead of `x`.
#[derive(Clone, Debug)]
pub struct SnapshotPair<D> {
    pub x: D,
    pub y: D,
}

impl SnapshotPair<Mat<f64>> {
    pub fn new(x: Mat<f64>, y: Mat<f64>) -> Result<Self> {
        if (x.nrows(), x.ncols()) != (y.nrows(), y.ncols()) {
            return Err(Error::dims(format!(
                "x is {}x{}, y is {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        Ok(Self { x, y })
    }

    /// Splits columns `0..=τ` of a sequence into `x = 0..τ` and `y = 1..=τ`.
    pub fn from_sequence(data: MatRef<'_, f64>) -> Result<Self> {
        let cols = data.ncols();
        if cols < 3 {
            return Err(Error::arg(format!("need at least 3 snapshots, got {cols}")));
        }
        Ok(Self {
            x: data.subcols(0, cols - 1).to_owned(),
            y: data.subcols(1, cols - 1).to_owned(),
        })
    }
}

impl SnapshotPair<DenseTensor<f64>> {
    pub fn new(x: DenseTensor<f64>, y: DenseTensor<f64>) -> Result<Self> {
        if x.dims() != y.dims() {
            return Err(Error::dims(format!("x dims {:?} vs y dims {:?}", x.dims(), y.dims())));
        }
        Ok(Self { x, y })
    }

    /// Splits a tensor whose last mode is time into shifted stacks.
    pub fn from_sequence(data: &DenseTensor<f64>) -> Result<Self> {
        let steps = *data.dims().last().expect("non-empty dims");
        if data.order() < 2 || steps < 3 {
            return Err(Error::arg(format!(
                "need spatial modes and at least 3 snapshots, got dims {:?}",
                data.dims()
            )));
        }
        Ok(Self { x: data.slice_last_mode(0..steps - 1)?, y: data.slice_last_mode(1..steps)? })
    }

    /// Time-mode unfoldings as snapshot matrices.
    pub fn unfold(&self) -> Result<SnapshotPair<Mat<f64>>> {
        let split = crate::tensor::ModeSplit::leading(self.x.order() - 1, self.x.order())?;
        SnapshotPair::<Mat<f64>>::new(self.x.matricize(&split)?, self.y.matricize(&split)?)
    }
}

/// Splits off numerically zero eigenvalues, returning kept indices and the dropped values.
pub(crate) fn partition_zero_eigenvalues(
    values: &[Complex64],
) -> Result<(Vec<usize>, Vec<Complex64>)> {
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cutoff = ZERO_EIGENVALUE_CUTOFF * max;
    let mut keep = Vec::with_capacity(values.len());
    let mut dropped = Vec::new();
    for (j, v) in values.iter().enumerate() {
        if max > 0.0 && v.norm() >= cutoff {
            keep.push(j);
        } else {
            dropped.push(*v);
        }
    }
    if keep.is_empty() {
        return Err(Error::RankZero(format!("all {} eigenvalues are numerically zero", values.len())));
    }
    if !dropped.is_empty() {
        log::warn!("dropping {} numerically zero eigenvalue(s)", dropped.len());
    }
    Ok((keep, dropped))
}
