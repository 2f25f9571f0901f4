use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{mode_amplitude_map, select_nearest_frequency};
use crate::dmd::{graph_dmd, mode_frequency, DmdResult};
use crate::error::{Error, Result};
use crate::graph::{aggregate_trips, AdjacencySequence, MonthWindow, StationRegistry, TripRecord};
use crate::tensor::DenseTensor;
use crate::tt::{ToleranceMode, TtOptions};

/// First day of one month's window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonthSpec {
    pub year: i32,
    pub month: u32,
    pub start_day: u32,
}

impl MonthSpec {
    pub fn window(&self) -> Result<MonthWindow> {
        MonthWindow::new(self.year, self.month, self.start_day)
    }
}

/// Windows starting on the second Sunday of every month of `year`.
pub fn second_sundays(year: i32) -> Result<Vec<MonthSpec>> {
    (1..=12)
        .map(|month| {
            let w = MonthWindow::nth_sunday(year, month, 2)?;
            Ok(MonthSpec { year, month, start_day: chrono::Datelike::day(&w.start) })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripsExperiment {
    pub window_days: usize,
    pub months: Vec<MonthSpec>,
    pub smoothing_window: usize,
    pub psd_shift: bool,
    pub epsilon: f64,
    pub tolerance_mode: ToleranceMode,
    /// Frequencies (cycles per hour) whose modes are extracted.
    pub targets: Vec<f64>,
    /// Largest accepted distance between a target and the selected frequency.
    pub target_tol: f64,
}

impl Default for TripsExperiment {
    fn default() -> Self {
        Self {
            window_days: 14,
            months: second_sundays(2014).expect("2014 has twelve second Sundays"),
            smoothing_window: 12,
            psd_shift: false,
            epsilon: 1e-2,
            tolerance_mode: ToleranceMode::Relative,
            targets: vec![1.0 / 24.0, 1.0 / 168.0],
            target_tol: 2e-3,
        }
    }
}

/// Modes extracted for one target frequency.
#[derive(Clone, Debug)]
pub struct TargetModes {
    pub target: f64,
    pub indices: Vec<usize>,
    pub frequency: Option<f64>,
    /// Mean modulus of the selected modes, `m × m`.
    pub amplitude: Option<DenseTensor<f64>>,
    /// `Re(λ^t)` of the leading selected eigenvalue over the observed window.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TripsReport {
    pub shape: Vec<usize>,
    pub result: DmdResult,
    pub targets: Vec<TargetModes>,
}

/// Aggregates the trips into an adjacency sequence under `cfg`.
pub fn trips_adjacency(
    records: &[TripRecord],
    stations: &StationRegistry,
    cfg: &TripsExperiment,
) -> Result<AdjacencySequence> {
    let months = cfg.months.iter().map(MonthSpec::window).collect::<Result<Vec<_>>>()?;
    let adj = aggregate_trips(records, stations, cfg.window_days, &months, cfg.smoothing_window)?;
    if cfg.psd_shift {
        adj.psd_shifted()
    } else {
        Ok(adj)
    }
}

/// Aggregation, Graph DMD and target-frequency mode extraction.
pub fn run_trips(records: &[TripRecord], stations: &StationRegistry, cfg: &TripsExperiment) -> Result<TripsReport> {
    let adj = trips_adjacency(records, stations, cfg)?;
    let shape = vec![adj.m(), adj.m(), adj.len()];
    let opts = TtOptions { epsilon: cfg.epsilon, mode: cfg.tolerance_mode, max_rank: None };
    let result = graph_dmd(&adj, &opts)?;
    let dt = adj.dt();
    let steps = adj.len();
    drop(adj);
    let targets = cfg
        .targets
        .iter()
        .map(|&target| {
            let indices = select_nearest_frequency(&result, dt, target, cfg.target_tol)?;
            let Some(&lead) = indices.first() else {
                return Ok(TargetModes { target, indices, frequency: None, amplitude: None, trace: Vec::new() });
            };
            let lambda = result.eigenvalues[lead];
            let trace = (0..steps).map(|t| lambda.powi(t as i32).re).collect();
            Ok(TargetModes {
                target,
                frequency: Some(mode_frequency(lambda, dt)?),
                amplitude: Some(mode_amplitude_map(&result, &indices)?),
                indices,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TripsReport { shape, result, targets })
}

/// Synthetic trip log: sparse random background traffic plus three edges
/// among stations 0, 1 and 2 whose hourly counts follow 24-hour sinusoids
/// shifted by a third of a day each.
#[derive(Clone, Debug)]
pub struct TripFixture {
    pub stations: StationRegistry,
    pub records: Vec<TripRecord>,
    /// Station index pairs of the periodic edges.
    pub periodic_edges: Vec<(usize, usize)>,
}

pub fn synthetic_trips(
    n_stations: usize,
    months: &[MonthSpec],
    window_days: usize,
    seed: u64,
) -> Result<TripFixture> {
    if n_stations < 3 {
        return Err(Error::arg(format!("need at least 3 stations, got {n_stations}")));
    }
    let stations = StationRegistry::from_ids((0..n_stations).map(|i| format!("{}", 31000 + i)))?;
    let ids = stations.ids().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = vec![(0, 1), (1, 2), (0, 2)];
    let mut records = Vec::new();
    for spec in months {
        let start = spec.window()?.start.and_hms_opt(0, 0, 0).expect("midnight exists");
        for h in 0..window_days * 24 {
            let when = start + Duration::hours(h as i64);
            for (k, &(a, b)) in edges.iter().enumerate() {
                let phase = 2.0 * std::f64::consts::PI * (h as f64 / 24.0 + k as f64 / 3.0);
                let count = (6.0 + 6.0 * phase.sin()).round() as u32;
                if count > 0 {
                    records.push(TripRecord { start: when, station_a: ids[a].clone(), station_b: ids[b].clone(), count });
                }
            }
            for _ in 0..n_stations / 4 {
                let a = rng.random_range(0..n_stations);
                let b = rng.random_range(0..n_stations);
                if a != b {
                    records.push(TripRecord {
                        start: when,
                        station_a: ids[a].clone(),
                        station_b: ids[b].clone(),
                        count: rng.random_range(1..=2),
                    });
                }
            }
        }
    }
    Ok(TripFixture { stations, records, periodic_edges: edges })
}

/// Argmax of an amplitude map, as `(row, col)`.
pub fn amplitude_peak(map: &DenseTensor<f64>) -> Option<(usize, usize)> {
    let m = map.dims()[0];
    let (best, _) = map
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    Some((best % m, best / m))
}
