//! Tensor-train format and the TT-SVD decomposition.
//!
//! Core `l` is a [`DenseTensor`] of dims `(r_{l-1}, n_l, r_l)`. Because the
//! first index varies fastest, the core buffer read as an
//! `(r_{l-1}·n_l) × r_l` matrix is its left unfolding, and contracting the
//! leading cores of a train produces the row-mode unfolding of the full
//! tensor with no index shuffling.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::numeric::{svd_with_tail_budget, truncated_svd, SvdResult};
use crate::tensor::DenseTensor;

/// Largest tensor `tt_to_full` will materialize unless told otherwise.
pub const DEFAULT_ELEMENT_BUDGET: usize = 1 << 30;

#[derive(Clone, Debug, PartialEq)]
pub struct TTTensor {
    cores: Vec<DenseTensor<f64>>,
}

impl TTTensor {
    pub fn new(cores: Vec<DenseTensor<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::dims("a tensor train needs at least one core"));
        }
        for (l, core) in cores.iter().enumerate() {
            if core.order() != 3 {
                return Err(Error::dims(format!("core {l} has order {}, expected 3", core.order())));
            }
        }
        if cores[0].dims()[0] != 1 || cores[cores.len() - 1].dims()[2] != 1 {
            return Err(Error::dims("boundary TT-ranks must be 1"));
        }
        for (l, pair) in cores.windows(2).enumerate() {
            if pair[0].dims()[2] != pair[1].dims()[0] {
                return Err(Error::dims(format!(
                    "core {l} right rank {} != core {} left rank {}",
                    pair[0].dims()[2],
                    l + 1,
                    pair[1].dims()[0]
                )));
            }
        }
        let tt = Self { cores };
        let dims = tt.dims();
        for l in 1..dims.len() {
            let left: usize = dims[..l].iter().product();
            let right: usize = dims[l..].iter().product();
            let r = tt.cores[l].dims()[0];
            if r > left.min(right) {
                return Err(Error::dims(format!(
                    "TT-rank r_{l} = {r} exceeds min({left}, {right})"
                )));
            }
        }
        Ok(tt)
    }

    pub fn cores(&self) -> &[DenseTensor<f64>] {
        &self.cores
    }

    pub fn core(&self, l: usize) -> &DenseTensor<f64> {
        &self.cores[l]
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// `(r_0, …, r_d)`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dims()[0]).collect();
        r.push(1);
        r
    }

    /// Single entry by the elementwise product of core slices.
    pub fn element(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order());
        let mut row = vec![1.0];
        for (core, &i) in self.cores.iter().zip(idx) {
            let (rl, rr) = (core.dims()[0], core.dims()[2]);
            let mut next = vec![0.0; rr];
            for (kr, out) in next.iter_mut().enumerate() {
                for (kl, &w) in row.iter().enumerate().take(rl) {
                    *out += w * core.get(&[kl, i, kr]);
                }
            }
            row = next;
        }
        row[0]
    }

    /// Number of stored core entries.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }
}

/// Left unfolding `(r_{l-1}·n_l) × r_l` of a core.
pub fn left_unfolding(core: &DenseTensor<f64>) -> MatRef<'_, f64> {
    let d = core.dims();
    MatRef::from_column_major_slice(core.values(), d[0] * d[1], d[2])
}

/// How the TT-SVD tolerance is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceMode {
    /// `‖A − Â‖_F ≤ ε·‖A‖_F`.
    #[default]
    Relative,
    /// `‖A − Â‖_F ≤ ε`.
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TtOptions {
    pub epsilon: f64,
    pub mode: ToleranceMode,
    pub max_rank: Option<usize>,
}

impl Default for TtOptions {
    fn default() -> Self {
        Self::relative(1e-2)
    }
}

impl TtOptions {
    pub fn relative(epsilon: f64) -> Self {
        Self { epsilon, mode: ToleranceMode::Relative, max_rank: None }
    }

    /// Per-sweep tail budget for a tensor of the given order and norm.
    pub fn sweep_budget(&self, order: usize, norm: f64) -> f64 {
        let sweeps = order.saturating_sub(1).max(1) as f64;
        let global = match self.mode {
            ToleranceMode::Relative => self.epsilon * norm,
            ToleranceMode::Absolute => self.epsilon,
        };
        global / sweeps.sqrt()
    }
}

/// TT-SVD together with the singular values kept at every bond.
#[derive(Clone, Debug)]
pub struct TtDecomposition {
    pub tt: TTTensor,
    pub bond_singular_values: Vec<Vec<f64>>,
    /// Right factor `Vᵀ` of the final sweep, before `Σ` is folded into the last core.
    last_right: Mat<f64>,
}

fn tt_svd(tensor: &DenseTensor<f64>, opts: &TtOptions) -> Result<TtDecomposition> {
    if !(opts.epsilon >= 0.0) {
        return Err(Error::arg(format!("epsilon must be nonnegative, got {}", opts.epsilon)));
    }
    let dims = tensor.dims().to_vec();
    let d = dims.len();
    if d == 1 {
        let core = DenseTensor::new(vec![1, dims[0], 1], tensor.values().to_vec())?;
        let right = Mat::from_fn(1, dims[0], |_, j| tensor.values()[j]);
        return Ok(TtDecomposition {
            tt: TTTensor::new(vec![core])?,
            bond_singular_values: Vec::new(),
            last_right: right,
        });
    }
    let budget = opts.sweep_budget(d, tensor.frobenius_norm());
    let mut cores = Vec::with_capacity(d);
    let mut bonds = Vec::with_capacity(d - 1);
    let mut rest: Vec<f64> = tensor.values().to_vec();
    let mut rest_cols: usize = dims.iter().product();
    let mut r_prev = 1usize;
    let mut last_right = Mat::zeros(0, 0);
    for (l, &n) in dims.iter().enumerate().take(d - 1) {
        let rows = r_prev * n;
        rest_cols /= n;
        let unfolding = MatRef::from_column_major_slice(&rest, rows, rest_cols);
        let SvdResult { u, sigma, v } = svd_with_tail_budget(unfolding, budget, opts.max_rank)
            .map_err(|e| match e {
                Error::RankZero(msg) => Error::RankZero(format!("bond {}: {msg}", l + 1)),
                other => other,
            })?;
        let r = sigma.len();
        let mut core_vals = Vec::with_capacity(rows * r);
        for k in 0..r {
            core_vals.extend((0..rows).map(|i| u[(i, k)]));
        }
        cores.push(DenseTensor::new(vec![r_prev, n, r], core_vals)?);
        // next remainder: diag(sigma) · vᵀ stored column-major (r × rest_cols)
        let mut next = Vec::with_capacity(r * rest_cols);
        for j in 0..rest_cols {
            next.extend((0..r).map(|k| sigma[k] * v[(j, k)]));
        }
        if l == d - 2 {
            last_right = v.transpose().to_owned();
        }
        rest = next;
        bonds.push(sigma);
        r_prev = r;
    }
    cores.push(DenseTensor::new(vec![r_prev, dims[d - 1], 1], rest)?);
    Ok(TtDecomposition { tt: TTTensor::new(cores)?, bond_singular_values: bonds, last_right })
}

/// TT-SVD with relative tolerance `epsilon`.
pub fn tt_decompose(tensor: &DenseTensor<f64>, epsilon: f64) -> Result<TTTensor> {
    tt_decompose_with(tensor, &TtOptions::relative(epsilon)).map(|d| d.tt)
}

pub fn tt_decompose_with(tensor: &DenseTensor<f64>, opts: &TtOptions) -> Result<TtDecomposition> {
    tt_svd(tensor, opts)
}

/// Contraction of cores `0..upto` as an `(n_1⋯n_upto) × r_upto` matrix.
pub fn contract_leading(tt: &TTTensor, upto: usize) -> Result<Mat<f64>> {
    if upto == 0 || upto > tt.order() {
        return Err(Error::arg(format!("cannot contract {upto} of {} cores", tt.order())));
    }
    let first = tt.core(0);
    let mut acc = left_unfolding(first).to_owned();
    for core in &tt.cores()[1..upto] {
        let (rl, n, rr) = (core.dims()[0], core.dims()[1], core.dims()[2]);
        let wide = MatRef::from_column_major_slice(core.values(), rl, n * rr);
        let rows = acc.nrows() * n;
        acc = reshape(&acc * wide, rows, rr);
    }
    Ok(acc)
}

/// Column-major reshape of a matrix to `rows × cols`.
fn reshape(m: Mat<f64>, rows: usize, cols: usize) -> Mat<f64> {
    debug_assert_eq!(m.nrows() * m.ncols(), rows * cols);
    let src_rows = m.nrows();
    Mat::from_fn(rows, cols, |i, j| {
        let lin = i + rows * j;
        m[(lin % src_rows, lin / src_rows)]
    })
}

/// Materializes the full tensor.
pub fn tt_to_full(tt: &TTTensor) -> Result<DenseTensor<f64>> {
    tt_to_full_with_budget(tt, DEFAULT_ELEMENT_BUDGET)
}

pub fn tt_to_full_with_budget(tt: &TTTensor, budget: usize) -> Result<DenseTensor<f64>> {
    let dims = tt.dims();
    let requested = dims
        .iter()
        .try_fold(1usize, |a, &n| a.checked_mul(n))
        .unwrap_or(usize::MAX);
    if requested > budget {
        return Err(Error::ElementBudget { requested, budget });
    }
    let full = contract_leading(tt, tt.order())?;
    DenseTensor::new(dims, full.col(0).iter().copied().collect())
}

/// `M*·P` from the leading `upto` cores of two trains, contracted core by core.
pub fn tt_inner_contract(x: &TTTensor, y: &TTTensor, upto: usize) -> Result<Mat<f64>> {
    if upto == 0 || upto > x.order() || upto > y.order() {
        return Err(Error::arg(format!(
            "cannot contract {upto} cores of trains with {} and {} cores",
            x.order(),
            y.order()
        )));
    }
    let (xd, yd) = (x.dims(), y.dims());
    if xd[..upto] != yd[..upto] {
        return Err(Error::dims(format!(
            "leading dims differ: {:?} vs {:?}",
            &xd[..upto],
            &yd[..upto]
        )));
    }
    let mut gram = Mat::<f64>::from_fn(1, 1, |_, _| 1.0);
    for l in 0..upto {
        let (xc, yc) = (x.core(l), y.core(l));
        let (rl, n, rr) = (xc.dims()[0], xc.dims()[1], xc.dims()[2]);
        let (sl, sr) = (yc.dims()[0], yc.dims()[2]);
        let y_wide = MatRef::from_column_major_slice(yc.values(), sl, n * sr);
        // (r_{l-1}) × (n·s_l), reinterpreted as (r_{l-1}·n) × s_l
        let t_tall = reshape(&gram * y_wide, rl * n, sr);
        gram = left_unfolding(xc).transpose() * &t_tall;
        debug_assert_eq!((gram.nrows(), gram.ncols()), (rr, sr));
    }
    Ok(gram)
}

/// `X = M · diag(Σ) · N` for the time-mode unfolding of a snapshot tensor.
#[derive(Clone, Debug)]
pub struct SnapshotFactors {
    /// Train of the full snapshot tensor; its last core is `Σ·N`.
    pub tt: TTTensor,
    /// `(n_1⋯n_d) × r_d`, left-orthonormal.
    pub m: Mat<f64>,
    pub sigma: Vec<f64>,
    /// `r_d × τ`.
    pub n: Mat<f64>,
}

impl SnapshotFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Dense `M·Σ·N`.
    pub fn reconstruct(&self) -> Mat<f64> {
        let ms = Mat::from_fn(self.m.nrows(), self.rank(), |i, k| self.m[(i, k)] * self.sigma[k]);
        &ms * &self.n
    }

    /// `N†` from the SVD of `N` with relative tail tolerance `tail_tol`.
    pub fn n_pinv(&self, tail_tol: f64) -> Result<Mat<f64>> {
        let svd = truncated_svd(self.n.as_ref(), tail_tol, None)?;
        let v_scaled = Mat::from_fn(svd.v.nrows(), svd.rank(), |i, k| svd.v[(i, k)] / svd.sigma[k]);
        Ok(&v_scaled * svd.u.transpose())
    }

    /// Factored pseudo-inverse `N†·Σ⁻¹·Mᵀ` of the snapshot unfolding, `τ × (n_1⋯n_d)`.
    pub fn pseudo_inverse(&self, tail_tol: f64) -> Result<Mat<f64>> {
        let n_pinv = self.n_pinv(tail_tol)?;
        let scaled = Mat::from_fn(n_pinv.nrows(), self.rank(), |i, k| n_pinv[(i, k)] / self.sigma[k]);
        Ok(&scaled * self.m.transpose())
    }
}

/// Factors a snapshot tensor whose last mode is time.
pub fn snapshot_factorize(x: &DenseTensor<f64>, opts: &TtOptions) -> Result<SnapshotFactors> {
    let order = x.order();
    if order < 2 {
        return Err(Error::dims("snapshot tensor needs at least one spatial mode and a time mode"));
    }
    let tau = x.dims()[order - 1];
    if tau < 2 {
        return Err(Error::RankZero(format!("need at least 2 snapshots, got {tau}")));
    }
    if x.frobenius_norm() == 0.0 {
        return Err(Error::RankZero("snapshot tensor is identically zero".into()));
    }
    let dec = tt_svd(x, opts)?;
    let d = order - 1;
    let m = contract_leading(&dec.tt, d)?;
    let sigma = dec.bond_singular_values[d - 1].clone();
    Ok(SnapshotFactors { tt: dec.tt, m, sigma, n: dec.last_right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::max_abs_diff;
    use crate::tensor::ModeSplit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: Vec<usize>, seed: u64) -> DenseTensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / s).collect()
    }

    fn rel_err(a: &DenseTensor<f64>, b: &DenseTensor<f64>) -> f64 {
        let diff: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum();
        diff.sqrt() / a.frobenius_norm()
    }

    #[test]
    fn rank_one_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (v, w, u) = (unit(4, &mut rng), unit(5, &mut rng), unit(6, &mut rng));
        let t = DenseTensor::from_fn(vec![4, 5, 6], |i| v[i[0]] * w[i[1]] * u[i[2]]).unwrap();
        let tt = tt_decompose(&t, 0.0).unwrap();
        assert_eq!(tt.ranks(), vec![1, 1, 1, 1]);
        assert!(rel_err(&t, &tt_to_full(&tt).unwrap()) < 1e-13);
    }

    #[test]
    fn exact_roundtrip() {
        let t = random_tensor(vec![4, 4, 4], 9);
        let back = tt_to_full(&tt_decompose(&t, 0.0).unwrap()).unwrap();
        assert!(rel_err(&t, &back) < 1e-12);
    }

    #[test]
    fn delta_tensor_from_identity_like_cores() {
        // diagonal tensor δ_{ijk} for n = 3 has TT-ranks (1, 3, 3, 1)
        let n = 3;
        let c0 = DenseTensor::from_fn(vec![1, n, n], |i| if i[1] == i[2] { 1.0 } else { 0.0 }).unwrap();
        let c1 = DenseTensor::from_fn(vec![n, n, n], |i| {
            if i[0] == i[1] && i[1] == i[2] { 1.0 } else { 0.0 }
        })
        .unwrap();
        let c2 = DenseTensor::from_fn(vec![n, n, 1], |i| if i[0] == i[1] { 1.0 } else { 0.0 }).unwrap();
        let full = tt_to_full(&TTTensor::new(vec![c0, c1, c2]).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let expect = if i == j && j == k { 1.0 } else { 0.0 };
                    assert_eq!(full.get(&[i, j, k]), expect);
                }
            }
        }
    }

    #[test]
    fn rank_one_cores_give_outer_product() {
        let v = [1.0, 2.0];
        let w = [3.0, -1.0, 0.5];
        let u = [2.0, 4.0];
        let tt = TTTensor::new(vec![
            DenseTensor::new(vec![1, 2, 1], v.to_vec()).unwrap(),
            DenseTensor::new(vec![1, 3, 1], w.to_vec()).unwrap(),
            DenseTensor::new(vec![1, 2, 1], u.to_vec()).unwrap(),
        ])
        .unwrap();
        let full = tt_to_full(&tt).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    assert_eq!(full.get(&[i, j, k]), v[i] * w[j] * u[k]);
                }
            }
        }
    }

    #[test]
    fn constructor_validates_ranks() {
        let c = |a, b, c| DenseTensor::<f64>::zeros(vec![a, b, c]).unwrap();
        assert!(TTTensor::new(vec![c(2, 3, 1)]).is_err());
        assert!(TTTensor::new(vec![c(1, 3, 2), c(3, 3, 1)]).is_err());
        assert!(TTTensor::new(vec![c(1, 2, 3), c(3, 3, 1)]).is_err()); // r_1 > n_1
        assert!(TTTensor::new(vec![c(1, 3, 2), c(2, 3, 1)]).is_ok());
    }

    #[test]
    fn element_budget() {
        let t = random_tensor(vec![4, 4, 4], 1);
        let tt = tt_decompose(&t, 0.0).unwrap();
        assert!(matches!(
            tt_to_full_with_budget(&tt, 10),
            Err(Error::ElementBudget { requested: 64, budget: 10 })
        ));
    }

    #[test]
    fn inner_contract_rank_one_is_product_of_inner_products() {
        let mk = |a: &[f64], b: &[f64]| {
            TTTensor::new(vec![
                DenseTensor::new(vec![1, a.len(), 1], a.to_vec()).unwrap(),
                DenseTensor::new(vec![1, b.len(), 1], b.to_vec()).unwrap(),
            ])
            .unwrap()
        };
        let x = mk(&[1.0, 2.0, 3.0], &[1.0, -1.0]);
        let y = mk(&[0.5, 0.0, 1.0], &[2.0, 4.0]);
        let g = tt_inner_contract(&x, &y, 2).unwrap();
        assert!((g[(0, 0)] - 3.5 * -2.0).abs() < 1e-15);
    }

    #[test]
    fn inner_contract_matches_dense_oracle() {
        let x = random_tensor(vec![4, 4, 8], 21);
        let y = random_tensor(vec![4, 4, 8], 22);
        let fx = snapshot_factorize(&x, &TtOptions::relative(0.0)).unwrap();
        let fy = snapshot_factorize(&y, &TtOptions::relative(0.0)).unwrap();
        let fast = tt_inner_contract(&fx.tt, &fy.tt, 2).unwrap();
        let dense = fx.m.transpose() * &fy.m;
        assert!(max_abs_diff(fast.as_ref(), dense.as_ref()) < 1e-10);
        // orthonormal part against itself
        let self_gram = tt_inner_contract(&fx.tt, &fx.tt, 2).unwrap();
        let eye = Mat::<f64>::identity(fx.rank(), fx.rank());
        assert!(max_abs_diff(self_gram.as_ref(), eye.as_ref()) < 1e-12);
    }

    #[test]
    fn inner_contract_dims_mismatch() {
        let x = tt_decompose(&random_tensor(vec![3, 4, 5], 1), 0.0).unwrap();
        let y = tt_decompose(&random_tensor(vec![4, 3, 5], 2), 0.0).unwrap();
        assert!(matches!(tt_inner_contract(&x, &y, 2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn snapshot_factors_reconstruct_unfolding() {
        let x = random_tensor(vec![3, 4, 6], 3);
        for eps in [0.0, 1e-2, 1e-1] {
            let f = snapshot_factorize(&x, &TtOptions::relative(eps)).unwrap();
            let unfold = x.matricize(&ModeSplit::leading(2, 3).unwrap()).unwrap();
            let err = (f.reconstruct() - &unfold).norm_l2();
            assert!(err <= eps * unfold.norm_l2() + 1e-12);
            let g = f.m.transpose() * &f.m;
            assert!(max_abs_diff(g.as_ref(), Mat::<f64>::identity(f.rank(), f.rank()).as_ref()) < 1e-12);
            assert!(f.sigma.iter().all(|&s| s > 0.0));
            assert_eq!((f.n.nrows(), f.n.ncols()), (f.rank(), 6));
        }
    }

    #[test]
    fn snapshot_factorize_rejects_degenerate() {
        let z = DenseTensor::<f64>::zeros(vec![3, 3, 4]).unwrap();
        assert!(matches!(snapshot_factorize(&z, &TtOptions::relative(0.0)), Err(Error::RankZero(_))));
        let one = random_tensor(vec![3, 3, 1], 1);
        assert!(matches!(snapshot_factorize(&one, &TtOptions::relative(0.0)), Err(Error::RankZero(_))));
    }

    #[test]
    fn absolute_mode_budget() {
        let opts = TtOptions { epsilon: 2.0, mode: ToleranceMode::Absolute, max_rank: None };
        assert!((opts.sweep_budget(5, 100.0) - 1.0).abs() < 1e-15);
        assert!((TtOptions::relative(0.1).sweep_budget(3, 10.0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }
}
