use std::path::{Path, PathBuf};

use graph_dmd::dmd::Engine;
use graph_dmd::experiments::{SwarmExperiment, SynthBench, TripsExperiment};
use graph_dmd::tt::ToleranceMode;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Settings read from the TOML file given with `--config`.
///
/// Top-level keys are shared by every command; each table configures one
/// command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub engine: Option<Engine>,
    pub out: Option<PathBuf>,
    pub synth: SynthBench,
    pub trips: TripsSection,
    pub swarm: SwarmSection,
    pub decompose: DecomposeSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripsSection {
    /// Trip CSV; when absent together with `stations`, a synthetic log is used.
    pub trips_csv: Option<PathBuf>,
    pub stations_csv: Option<PathBuf>,
    /// Station count of the synthetic log.
    pub fixture_stations: usize,
    pub params: TripsExperiment,
}

impl Default for TripsSection {
    fn default() -> Self {
        Self { trips_csv: None, stations_csv: None, fixture_stations: 50, params: TripsExperiment::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmSection {
    /// Also write every analysis-window trajectory with its simulator sidecar.
    pub save_trajectories: bool,
    pub params: SwarmExperiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeSection {
    /// `GDT1` tensor whose last mode is time.
    pub input: Option<PathBuf>,
    pub dt: f64,
    pub tolerance_mode: ToleranceMode,
    pub max_rank: Option<usize>,
    /// Also write the real part of the reconstructed snapshots.
    pub reconstruct: bool,
}

impl Default for DecomposeSection {
    fn default() -> Self {
        Self { input: None, dt: 1.0, tolerance_mode: ToleranceMode::Relative, max_rank: None, reconstruct: false }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_owned(), source: e })?;
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_owned(), msg: e.to_string() })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Invalid(format!("cannot serialize configuration: {e}")))
    }

    /// Copies the shared keys into the command tables.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            self.synth.seed = seed;
            self.swarm.params.seed = seed;
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(CliError::Invalid(format!("epsilon must be finite and non-negative, got {eps}")));
            }
            self.synth.epsilons = vec![eps];
            self.trips.params.epsilon = eps;
            self.swarm.params.graph_epsilon = eps;
            self.swarm.params.tdmd_epsilon = eps;
            self.swarm.params.exact_tail_tol = eps;
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
