use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{derive_seed, stream};
use crate::analysis::{
    classical_mds, distance_matrix, knn_cv_distances, spectrum_features, Embedding, FrequencyFeature,
};
use crate::dmd::{exact_dmd, graph_dmd, tdmd, Engine, SnapshotPair};
use crate::error::{Error, Result};
use crate::graph::{default_sigma_prime, gaussian_adjacency, sort_by_nearest_neighbors};
use crate::swarm::{simulate, Behavior, SwarmConfig, Trajectory};
use crate::tensor::DenseTensor;
use crate::tt::TtOptions;

/// Parameters of the three-behavior classification experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmExperiment {
    pub trials_per_type: usize,
    /// Frames per analysis window.
    pub window: usize,
    pub seed: u64,
    /// Simulator parameters; `r_o`, `seed` and `duration_steps` are set per trial.
    pub sim: SwarmConfig,
    pub sigma_prime: f64,
    pub sort_vertices: bool,
    pub psd_shift: bool,
    pub graph_epsilon: f64,
    pub tdmd_epsilon: f64,
    /// Relative SVD tail tolerance of the exact DMD comparison.
    pub exact_tail_tol: f64,
    /// Feature length; `None` uses the smallest mode count per engine.
    pub n_dims: Option<usize>,
    pub k_neighbors: usize,
    pub folds: usize,
    pub embedding_dims: usize,
}

impl Default for SwarmExperiment {
    fn default() -> Self {
        Self {
            trials_per_type: 15,
            window: 1000,
            seed: 0,
            sim: SwarmConfig::default(),
            sigma_prime: default_sigma_prime(),
            sort_vertices: true,
            psd_shift: false,
            graph_epsilon: 3e-4,
            tdmd_epsilon: 3e-4,
            exact_tail_tol: 3e-4,
            n_dims: None,
            k_neighbors: 3,
            folds: 3,
            embedding_dims: 2,
        }
    }
}

/// Eigenvalues of every engine for one simulated trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialSpectrum {
    pub behavior: Behavior,
    pub trial: usize,
    pub seed: u64,
    /// `(engine, eigenvalues)` in the order graph DMD, TDMD, exact DMD.
    pub spectra: Vec<(Engine, Vec<Complex64>)>,
}

#[derive(Clone, Debug)]
pub struct EngineReport {
    pub engine: Engine,
    pub features: Vec<FrequencyFeature>,
    pub distances: Mat<f64>,
    pub embedding: Embedding,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct SwarmReport {
    pub trials: Vec<TrialSpectrum>,
    pub labels: Vec<usize>,
    pub engines: Vec<EngineReport>,
}

impl SwarmReport {
    pub fn engine(&self, engine: Engine) -> Option<&EngineReport> {
        self.engines.iter().find(|e| e.engine == engine)
    }
}

impl SwarmExperiment {
    pub fn trial_config(&self, behavior: Behavior, trial: usize) -> SwarmConfig {
        let index = (behavior.index() * self.trials_per_type + trial) as u64;
        let mut cfg = SwarmConfig {
            r_o: behavior.orientation_radius(),
            seed: derive_seed(self.seed, stream::SWARM_TRIAL, index),
            ..self.sim.clone()
        };
        cfg.duration_steps = cfg.warmup_steps(behavior) + self.window;
        cfg
    }

    /// Analysis-window trajectory of one trial.
    pub fn trajectory(&self, behavior: Behavior, trial: usize) -> Result<Trajectory> {
        let cfg = self.trial_config(behavior, trial);
        simulate(&cfg)?.analysis_window(&cfg, behavior, self.window)
    }

    /// Spectra of the three engines on one analysis window.
    pub fn spectra(&self, window: &Trajectory) -> Result<Vec<(Engine, Vec<Complex64>)>> {
        let mut adj = gaussian_adjacency(&window.positions, self.sigma_prime, window.dt)?;
        if self.sort_vertices {
            adj = sort_by_nearest_neighbors(&adj)?.0;
        }
        if self.psd_shift {
            adj = adj.psd_shifted()?;
        }
        let g = graph_dmd(&adj, &TtOptions::relative(self.graph_epsilon))?;
        drop(adj);

        let coords = SnapshotPair::<DenseTensor<f64>>::from_sequence(&window.to_tensor()?)?;
        let t = tdmd(&coords, &TtOptions::relative(self.tdmd_epsilon))?;

        let dist = window.distance_unfolding();
        let e = exact_dmd(&SnapshotPair::<Mat<f64>>::from_sequence(dist.as_ref())?, self.exact_tail_tol, None)?;
        Ok(vec![
            (Engine::GraphDmd, g.eigenvalues),
            (Engine::Tdmd, t.eigenvalues),
            (Engine::ExactDmd, e.eigenvalues),
        ])
    }

    /// Feature, distance, embedding and k-NN stage on precomputed spectra.
    pub fn evaluate(&self, trials: Vec<TrialSpectrum>, dt: f64) -> Result<SwarmReport> {
        if trials.is_empty() {
            return Err(Error::EmptySelection("no trials".into()));
        }
        let labels: Vec<usize> = trials.iter().map(|t| t.behavior.index()).collect();
        let mut engines = Vec::new();
        for (slot, (engine, _)) in trials[0].spectra.iter().enumerate() {
            let n_dims = match self.n_dims {
                Some(n) => n,
                None => trials.iter().map(|t| t.spectra[slot].1.len()).min().unwrap_or(1).max(1),
            };
            let features = trials
                .iter()
                .map(|t| {
                    let source = format!("{}-{}", t.behavior.name(), t.trial);
                    spectrum_features(&t.spectra[slot].1, dt, n_dims, source)
                })
                .collect::<Result<Vec<_>>>()?;
            let distances = distance_matrix(&features)?;
            let cv_seed = derive_seed(self.seed, stream::CV_FOLDS, 0);
            let error = knn_cv_distances(distances.as_ref(), &labels, self.k_neighbors, self.folds, cv_seed)?;
            let embedding = classical_mds(distances.as_ref(), self.embedding_dims)?;
            engines.push(EngineReport { engine: *engine, features, distances, embedding, error });
        }
        Ok(SwarmReport { trials, labels, engines })
    }
}

/// Simulates every trial, decomposes it with the three engines and evaluates.
pub fn run_swarm(cfg: &SwarmExperiment) -> Result<SwarmReport> {
    let mut trials = Vec::new();
    for behavior in Behavior::ALL {
        for trial in 0..cfg.trials_per_type {
            let window = cfg.trajectory(behavior, trial)?;
            let spectra = cfg.spectra(&window)?;
            log::info!("swarm {} trial {} done", behavior.name(), trial);
            trials.push(TrialSpectrum {
                behavior,
                trial,
                seed: cfg.trial_config(behavior, trial).seed,
                spectra,
            });
        }
    }
    cfg.evaluate(trials, cfg.sim.dt)
}
