use faer::MatRef;
use serde::{Deserialize, Serialize};

use super::{derive_seed, stream};
use crate::dmd::{eigenvalue_error, exact_dmd, graph_dmd, match_eigenvalues, DmdResult, SnapshotPair};
use crate::error::Result;
use crate::graph::{synth_sequence, SynthParams, SynthTruth};
use crate::tt::{ToleranceMode, TtOptions};

/// Parameters of the two-mode synthetic benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthBench {
    pub sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub tolerance_mode: ToleranceMode,
    pub tau: usize,
    pub noise_var: f64,
    pub n_runs: usize,
    pub seed: u64,
    /// Relative SVD tail tolerance of the exact DMD baseline.
    pub exact_tail_tol: f64,
}

impl Default for SynthBench {
    fn default() -> Self {
        Self {
            sizes: vec![64, 256],
            epsilons: vec![1e-2, 1e-1],
            tolerance_mode: ToleranceMode::Relative,
            tau: 100,
            noise_var: 1e-2,
            n_runs: 10,
            seed: 0,
            exact_tail_tol: 0.0,
        }
    }
}

/// Mean relative eigenvalue error of one method on one mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub epsilon: Option<f64>,
    pub d: usize,
    /// 1 for the 0.99 component, 2 for the 0.9 component.
    pub mode: usize,
    pub mean_error: f64,
    /// Runs in which the method returned no eigenvalue for this mode.
    pub missing: usize,
}

fn errors(result: &DmdResult, truth: &SynthTruth) -> Result<Vec<Option<f64>>> {
    match_eigenvalues(&result.eigenvalues, &truth.eigenvalues)
        .iter()
        .zip(&truth.eigenvalues)
        .map(|(m, &t)| m.map(|i| eigenvalue_error(result.eigenvalues[i], t)).transpose())
        .collect()
}

/// Runs every method on `n_runs` noise draws per size and averages the errors.
pub fn run_synthetic(cfg: &SynthBench) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &d in &cfg.sizes {
        let n_methods = 1 + cfg.epsilons.len();
        // sums[method][mode] = (total, count)
        let mut sums = vec![[(0.0, 0usize); 2]; n_methods];
        for run in 0..cfg.n_runs {
            let seed = derive_seed(cfg.seed, stream::SYNTH_NOISE, run as u64);
            let (seq, truth) = synth_sequence(&SynthParams::new(d, cfg.tau, cfg.noise_var, seed))?;
            let steps = seq.len();
            let x = seq.stack(0..steps - 1)?;
            let y = seq.stack(1..steps)?;
            let unfold = |t: &crate::tensor::DenseTensor<f64>| {
                MatRef::from_column_major_slice(t.values(), d * d, steps - 1).to_owned()
            };
            let pair = SnapshotPair::<faer::Mat<f64>>::new(unfold(&x), unfold(&y))?;
            drop((x, y));
            let mut results = vec![exact_dmd(&pair, cfg.exact_tail_tol, None)?];
            drop(pair);
            for &eps in &cfg.epsilons {
                let opts = TtOptions { epsilon: eps, mode: cfg.tolerance_mode, max_rank: None };
                results.push(graph_dmd(&seq, &opts)?);
            }
            for (m, res) in results.iter().enumerate() {
                for (k, e) in errors(res, &truth)?.into_iter().enumerate() {
                    if let Some(e) = e {
                        sums[m][k].0 += e;
                        sums[m][k].1 += 1;
                    }
                }
            }
            log::info!("synthetic d={d} run {}/{} done", run + 1, cfg.n_runs);
        }
        for (m, per_mode) in sums.iter().enumerate() {
            let (method, epsilon) = match m {
                0 => ("exact-dmd".to_string(), None),
                _ => ("graph-dmd".to_string(), Some(cfg.epsilons[m - 1])),
            };
            for (k, &(total, count)) in per_mode.iter().enumerate() {
                rows.push(BenchRow {
                    method: method.clone(),
                    epsilon,
                    d,
                    mode: k + 1,
                    mean_error: if count > 0 { total / count as f64 } else { f64::NAN },
                    missing: cfg.n_runs - count,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_benchmark_is_exact() {
        let cfg = SynthBench {
            sizes: vec![12],
            epsilons: vec![1e-10],
            noise_var: 0.0,
            n_runs: 2,
            tau: 20,
            ..SynthBench::default()
        };
        let rows = run_synthetic(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert_eq!(r.missing, 0);
            assert!(r.mean_error < 1e-8, "{r:?}");
        }
    }
}
