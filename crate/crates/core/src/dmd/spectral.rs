use std::f64::consts::PI;

use faer::MatRef;
use num_complex::Complex64;

use super::DmdResult;
use crate::error::{Error, Result};
use crate::numeric::lstsq_complex;
use crate::tensor::DenseTensor;

/// Condition number above which fitted amplitudes are reported as unreliable.
const COLLINEAR_MODES_COND: f64 = 1e12;

/// Snapshot `Σ_j λ_j^t a_j ψ_j` at integer time `t`.
pub fn reconstruct(
    result: &DmdResult,
    amplitudes: &[Complex64],
    t: i32,
) -> Result<DenseTensor<Complex64>> {
    if amplitudes.len() != result.n_modes() {
        return Err(Error::dims(format!(
            "{} amplitudes for {} modes",
            amplitudes.len(),
            result.n_modes()
        )));
    }
    let dims = result.mode_dims().to_vec();
    let mut out = DenseTensor::<Complex64>::zeros(dims)?;
    for (j, (&lambda, &a)) in result.eigenvalues.iter().zip(amplitudes).enumerate() {
        let coef = lambda.powi(t) * a;
        if coef == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o, &m) in out.values_mut().iter_mut().zip(result.mode(j)) {
            *o += coef * m;
        }
    }
    Ok(out)
}

/// Least-squares amplitudes `a` minimizing `‖Σ_j a_j ψ_j − snapshot‖`.
pub fn fit_amplitudes(result: &DmdResult, snapshot: &[f64]) -> Result<Vec<Complex64>> {
    let n = result.mode(0).len();
    if snapshot.len() != n {
        return Err(Error::dims(format!("snapshot of length {} vs modes of length {n}", snapshot.len())));
    }
    let p = result.n_modes();
    let modes = MatRef::from_column_major_slice(result.modes.values(), n, p);
    let rhs: Vec<Complex64> = snapshot.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (amps, cond) = lstsq_complex(modes, &rhs)?;
    if cond > COLLINEAR_MODES_COND {
        log::warn!("DMD modes are nearly collinear (condition number {cond:.3e}); amplitudes are not unique");
    }
    Ok(amps)
}

/// Relative eigenvalue error `|λ − λ̃| / |λ|`, normalized by the estimate `λ`.
pub fn eigenvalue_error(estimated: Complex64, truth: Complex64) -> Result<f64> {
    let denom = estimated.norm();
    if denom == 0.0 {
        return Err(Error::ZeroEigenvalue(estimated));
    }
    Ok((estimated - truth).norm() / denom)
}

/// Oscillation frequency `|Im log λ| / Δt / 2π`, in cycles per time unit.
pub fn mode_frequency(lambda: Complex64, dt: f64) -> Result<f64> {
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroEigenvalue(lambda));
    }
    if !(dt > 0.0) {
        return Err(Error::arg(format!("time step must be positive, got {dt}")));
    }
    Ok(lambda.arg().abs() / dt / (2.0 * PI))
}

/// Greedy nearest pairing of estimates to truths, largest-modulus truth first.
///
/// Entry `k` of the result is the index into `estimates` paired with
/// `truths[k]`, or `None` once the estimates run out.
pub fn match_eigenvalues(estimates: &[Complex64], truths: &[Complex64]) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..truths.len()).collect();
    order.sort_by(|&a, &b| truths[b].norm().total_cmp(&truths[a].norm()).then(a.cmp(&b)));
    let mut used = vec![false; estimates.len()];
    let mut out = vec![None; truths.len()];
    for k in order {
        let best = estimates
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|(_, a), (_, b)| (*a - truths[k]).norm().total_cmp(&(*b - truths[k]).norm()));
        if let Some((i, _)) = best {
            used[i] = true;
            out[k] = Some(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::{DmdMeta, Engine};
    use crate::tt::ToleranceMode;
    use faer::Mat;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn result_with(eigenvalues: Vec<Complex64>, modes: Vec<Vec<f64>>) -> DmdResult {
        let n = modes[0].len();
        let p = modes.len();
        let values = modes.into_iter().flatten().map(|v| c(v, 0.0)).collect();
        DmdResult {
            eigenvalues,
            modes: DenseTensor::new(vec![n, p], values).unwrap(),
            reduced: Mat::zeros(p, p),
            ranks: vec![1, p, 1],
            y_ranks: vec![],
            meta: DmdMeta {
                engine: Engine::ExactDmd,
                epsilon: 0.0,
                tolerance_mode: ToleranceMode::Relative,
                dropped_eigenvalues: vec![],
                runtime_secs: 0.0,
            },
        }
    }

    #[test]
    fn error_uses_estimate_as_denominator() {
        assert_eq!(eigenvalue_error(c(0.99, 0.0), c(0.99, 0.0)).unwrap(), 0.0);
        assert!((eigenvalue_error(c(1.0, 0.0), c(0.9, 0.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!((eigenvalue_error(c(0.9, 0.0), c(1.0, 0.0)).unwrap() - 0.1 / 0.9).abs() < 1e-15);
        assert!(matches!(eigenvalue_error(c(0.0, 0.0), c(1.0, 0.0)), Err(Error::ZeroEigenvalue(_))));
    }

    #[test]
    fn frequencies() {
        assert_eq!(mode_frequency(c(1.0, 0.0), 1.0).unwrap(), 0.0);
        let daily = Complex64::from_polar(1.0, 2.0 * PI / 24.0);
        assert!((mode_frequency(daily, 1.0).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert!((mode_frequency(daily.conj(), 1.0).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert!((mode_frequency(c(-0.5, 0.0), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(mode_frequency(c(0.0, 0.0), 1.0).is_err());
        assert!(mode_frequency(c(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn reconstruct_time_zero_and_constant_mode() {
        let r = result_with(vec![c(1.0, 0.0), c(0.5, 0.0)], vec![vec![1.0, 2.0], vec![3.0, -1.0]]);
        let a = [c(2.0, 0.0), c(1.0, 0.0)];
        let s0 = reconstruct(&r, &a, 0).unwrap();
        assert_eq!(s0.values(), &[c(5.0, 0.0), c(3.0, 0.0)]);
        let s2 = reconstruct(&r, &a, 2).unwrap();
        assert_eq!(s2.values(), &[c(2.75, 0.0), c(3.75, 0.0)]);
        let single = result_with(vec![c(1.0, 0.0)], vec![vec![1.0, -1.0]]);
        for t in 0..5 {
            let s = reconstruct(&single, &[c(1.0, 0.0)], t).unwrap();
            assert_eq!(s.values(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
        }
        assert!(reconstruct(&r, &a[..1], 0).is_err());
    }

    #[test]
    fn amplitudes_of_single_and_orthogonal_snapshots() {
        let r = result_with(
            vec![c(0.9, 0.0), c(0.5, 0.0)],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]],
        );
        let a = fit_amplitudes(&r, &[0.0, 1.0, 1.0]).unwrap();
        assert!((a[0]).norm() < 1e-14 && (a[1] - c(1.0, 0.0)).norm() < 1e-14);
        let z = fit_amplitudes(&r, &[0.0, 1.0, -1.0]).unwrap();
        assert!(z.iter().all(|v| v.norm() < 1e-14));
        assert!(fit_amplitudes(&r, &[1.0]).is_err());
    }

    #[test]
    fn greedy_matching() {
        let est = [c(0.91, 0.0), c(0.5, 0.2), c(0.98, 0.0)];
        let truths = [c(0.9, 0.0), c(0.99, 0.0)];
        assert_eq!(match_eigenvalues(&est, &truths), vec![Some(0), Some(2)]);
        assert_eq!(match_eigenvalues(&est[..1], &truths), vec![None, Some(0)]);
    }
}
