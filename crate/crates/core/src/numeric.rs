//! Dense kernels: truncated SVD, Moore-Penrose pseudo-inverse and
//! eigendecompositions, backed by `faer`.

use std::cmp::Ordering;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Thin SVD `a ≈ u · diag(sigma) · vᵀ` after truncation.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Mat<f64>,
    pub sigma: Vec<f64>,
    pub v: Mat<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Mat<f64> {
        let us = Mat::from_fn(self.u.nrows(), self.rank(), |i, k| self.u[(i, k)] * self.sigma[k]);
        &us * self.v.transpose()
    }
}

/// Complex eigenvalues with right eigenvectors as columns, in canonical order.
#[derive(Clone, Debug)]
pub struct EigResult {
    pub values: Vec<Complex64>,
    pub vectors: Mat<Complex64>,
}

pub fn frobenius(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}

/// Singular values at or below this fraction of the largest are treated as
/// roundoff and never retained.
fn roundoff_floor(nrows: usize, ncols: usize, sigma_max: f64) -> f64 {
    nrows.max(ncols) as f64 * f64::EPSILON * sigma_max
}

/// Smallest `k` such that the energy of `sigma[k..]` is at most `budget`.
pub(crate) fn retained_rank(sigma: &[f64], budget: f64) -> usize {
    let mut tail = 0.0;
    let mut k = sigma.len();
    while k > 0 {
        let next = tail + sigma[k - 1] * sigma[k - 1];
        if next.sqrt() > budget {
            break;
        }
        tail = next;
        k -= 1;
    }
    k
}

fn thin_svd(a: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("svd of {}x{}: {e:?}", a.nrows(), a.ncols())))?;
    let sigma: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    Ok((svd.U().to_owned(), sigma, svd.V().to_owned()))
}

/// SVD discarding a tail whose Frobenius energy is at most `budget` (absolute).
pub fn svd_with_tail_budget(
    a: MatRef<'_, f64>,
    budget: f64,
    max_rank: Option<usize>,
) -> Result<SvdResult> {
    if !(budget >= 0.0) {
        return Err(Error::arg(format!("truncation budget must be nonnegative, got {budget}")));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::RankZero("empty matrix".into()));
    }
    let (u, sigma, v) = thin_svd(a)?;
    let floor = roundoff_floor(a.nrows(), a.ncols(), sigma[0]);
    let numerical = sigma.iter().take_while(|&&s| s > floor).count();
    let mut rank = retained_rank(&sigma[..numerical], budget);
    if let Some(cap) = max_rank {
        rank = rank.min(cap);
    }
    if rank == 0 {
        return Err(Error::RankZero(format!(
            "all {} singular values of a {}x{} matrix truncated (largest {:e})",
            sigma.len(),
            a.nrows(),
            a.ncols(),
            sigma[0]
        )));
    }
    Ok(SvdResult {
        u: u.subcols(0, rank).to_owned(),
        sigma: sigma[..rank].to_vec(),
        v: v.subcols(0, rank).to_owned(),
    })
}

/// Truncated SVD whose discarded tail energy is at most `tail_tol · ‖a‖_F`.
pub fn truncated_svd(
    a: MatRef<'_, f64>,
    tail_tol: f64,
    max_rank: Option<usize>,
) -> Result<SvdResult> {
    svd_with_tail_budget(a, tail_tol * frobenius(a), max_rank)
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::arg("pseudo-inverse of an empty matrix"));
    }
    let (u, sigma, v) = thin_svd(a)?;
    let floor = roundoff_floor(a.nrows(), a.ncols(), sigma[0]);
    let rank = sigma.iter().take_while(|&&s| s > floor && s > 0.0).count();
    if rank == 0 {
        return Ok(Mat::zeros(a.ncols(), a.nrows()));
    }
    let v_scaled = Mat::from_fn(v.nrows(), rank, |i, k| v[(i, k)] / sigma[k]);
    Ok(&v_scaled * u.subcols(0, rank).transpose())
}

/// Least-squares solution of `a · x = b` for complex `a` via its SVD.
///
/// Returns the solution and the condition number of the retained part of `a`.
pub fn lstsq_complex(a: MatRef<'_, Complex64>, b: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    if a.nrows() != b.len() {
        return Err(Error::dims(format!("{} rows vs rhs of length {}", a.nrows(), b.len())));
    }
    let svd = a
        .thin_svd()
        .map_err(|e| Error::NumericalFailure(format!("complex svd: {e:?}")))?;
    let sigma: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
    let p = a.ncols();
    if sigma.is_empty() || sigma[0] == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); p], f64::INFINITY));
    }
    let floor = roundoff_floor(a.nrows(), a.ncols(), sigma[0]);
    let rank = sigma.iter().take_while(|&&s| s > floor).count();
    let u = svd.U();
    let v = svd.V();
    let mut x = vec![Complex64::new(0.0, 0.0); p];
    for k in 0..rank {
        let coef: Complex64 =
            (0..a.nrows()).map(|i| u[(i, k)].conj() * b[i]).sum::<Complex64>() / sigma[k];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += v[(j, k)] * coef;
        }
    }
    let cond = if rank < p { f64::INFINITY } else { sigma[0] / sigma[rank - 1] };
    Ok((x, cond))
}

/// Canonical eigenvalue order: modulus, then real part, then imaginary part,
/// all nonincreasing.
pub fn eigen_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then_with(|| b.re.total_cmp(&a.re))
        .then_with(|| b.im.total_cmp(&a.im))
}

/// Eigendecomposition of a general real square matrix.
pub fn eig_general(a: MatRef<'_, f64>) -> Result<EigResult> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(format!("eigendecomposition of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(EigResult { values: Vec::new(), vectors: Mat::zeros(0, 0) });
    }
    if a.as_ref().has_nan() || !a.as_ref().is_all_finite() {
        return Err(Error::NumericalFailure("non-finite entries in eigenproblem".into()));
    }
    let evd = a
        .eigen()
        .map_err(|e| Error::NumericalFailure(format!("eigendecomposition: {e:?}")))?;
    let raw_values: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    let raw_vectors = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigen_order(&raw_values[i], &raw_values[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| raw_values[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| raw_vectors[(r, order[c])]);
    Ok(EigResult { values, vectors })
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues nondecreasing.
pub fn sym_eig(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(format!("symmetric eigenproblem on {}x{}", a.nrows(), a.ncols())));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("symmetric eigendecomposition: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

pub fn to_complex(a: MatRef<'_, f64>) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| Complex64::new(a[(i, j)], 0.0))
}

pub fn max_abs_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}
