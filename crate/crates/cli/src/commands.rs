use std::path::{Path, PathBuf};

use graph_dmd::dmd::{exact_dmd, fit_amplitudes, graph_dmd, reconstruct, tdmd, DmdResult, Engine, SnapshotPair};
use graph_dmd::experiments::{run_synthetic, run_trips, synthetic_trips, trips_adjacency, TrialSpectrum};
use graph_dmd::swarm::Behavior;
use graph_dmd::graph::{load_stations, load_trips, AdjacencySequence};
use graph_dmd::io;
use graph_dmd::tt::TtOptions;
use graph_dmd::DenseTensor;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const CONFIG_SIDECAR: &str = "config.toml";

fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io { path: out.clone(), source: e })?;
    let sidecar = out.join(CONFIG_SIDECAR);
    std::fs::write(&sidecar, cfg.to_toml()?).map_err(|e| CliError::Io { path: sidecar, source: e })?;
    Ok(out)
}

pub fn synth(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = prepare_out(cfg)?;
    let rows = run_synthetic(&cfg.synth)?;
    for r in &rows {
        log::info!("{} eps={:?} D={} mode {}: {:.3e}", r.method, r.epsilon, r.d, r.mode, r.mean_error);
    }
    io::write_rows(out.join("synth.csv"), &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct TargetRow {
    target: f64,
    frequency: Option<f64>,
    modes: String,
    peak_row: Option<usize>,
    peak_col: Option<usize>,
}

pub fn trips(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = prepare_out(cfg)?;
    let section = &cfg.trips;
    let (stations, records) = match (&section.trips_csv, &section.stations_csv) {
        (Some(t), Some(s)) => {
            let stations = load_stations(s)?;
            let records = load_trips(t, &stations)?;
            (stations, records)
        }
        (None, None) => {
            let fx = synthetic_trips(
                section.fixture_stations,
                &section.params.months,
                section.params.window_days,
                cfg.seed.unwrap_or(0),
            )?;
            (fx.stations, fx.records)
        }
        _ => return Err(CliError::Invalid("trips_csv and stations_csv must be given together".into())),
    };
    let adj = trips_adjacency(&records, &stations, &section.params)?;
    io::save_adjacency(out.join("adjacency.gdt1"), out.join("labels.csv"), &adj)?;
    let dt = adj.dt();
    drop(adj);

    let report = run_trips(&records, &stations, &section.params)?;
    io::save_result(&out, &report.result, dt)?;
    let mut rows = Vec::new();
    for (k, t) in report.targets.iter().enumerate() {
        let peak = t.amplitude.as_ref().and_then(graph_dmd::experiments::amplitude_peak);
        if let Some(map) = &t.amplitude {
            io::save_tensor(out.join(format!("amplitude_{k}.gdt1")), map)?;
        }
        rows.push(TargetRow {
            target: t.target,
            frequency: t.frequency,
            modes: t.indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
            peak_row: peak.map(|p| p.0),
            peak_col: peak.map(|p| p.1),
        });
    }
    io::write_rows(out.join("targets.csv"), &rows)?;

    let steps = report.shape[2];
    let mut header = vec!["step".to_string()];
    header.extend((0..report.targets.len()).map(|k| format!("target_{k}")));
    let table = (0..steps).map(|s| {
        let vals = report.targets.iter().map(|t| t.trace.get(s).map(|v| v.to_string()).unwrap_or_default()).collect();
        (s.to_string(), vals)
    });
    io::write_table(out.join("traces.csv"), &header, table)?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow {
    behavior: &'static str,
    trial: usize,
    seed: u64,
    engine: &'static str,
    index: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ErrorRow {
    engine: &'static str,
    error: f64,
    n_dims: usize,
}

pub fn swarm(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = prepare_out(cfg)?;
    let exp = &cfg.swarm.params;
    let mut trials = Vec::new();
    for behavior in Behavior::ALL {
        for trial in 0..exp.trials_per_type {
            let window = exp.trajectory(behavior, trial)?;
            let sim = exp.trial_config(behavior, trial);
            if cfg.swarm.save_trajectories {
                let stem = format!("trajectory_{}_{trial}", behavior.name());
                io::save_trajectory(out.join(format!("{stem}.gdt1")), out.join(format!("{stem}.json")), &window, &sim)?;
            }
            let spectra = exp.spectra(&window)?;
            log::info!("{} trial {trial}: {:?}", behavior.name(), spectra.iter().map(|s| s.1.len()).collect::<Vec<_>>());
            trials.push(TrialSpectrum { behavior, trial, seed: sim.seed, spectra });
        }
    }

    let mut spectrum_rows = Vec::new();
    for t in &trials {
        for (engine, eigs) in &t.spectra {
            for (index, l) in eigs.iter().enumerate() {
                spectrum_rows.push(SpectrumRow {
                    behavior: t.behavior.name(),
                    trial: t.trial,
                    seed: t.seed,
                    engine: engine.name(),
                    index,
                    re: l.re,
                    im: l.im,
                });
            }
        }
    }
    io::write_rows(out.join("spectra.csv"), &spectrum_rows)?;

    let report = exp.evaluate(trials, exp.sim.dt)?;
    let ids: Vec<(String, &'static str)> = report
        .trials
        .iter()
        .map(|t| (format!("{}-{}", t.behavior.name(), t.trial), t.behavior.name()))
        .collect();
    let mut errors = Vec::new();
    for e in &report.engines {
        let name = e.engine.name();
        let n_dims = e.features.first().map_or(0, |f| f.n_dims());
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..n_dims).map(|k| format!("f{k}")));
        let rows = ids.iter().zip(&e.features).map(|((id, label), f)| {
            let mut vals = vec![label.to_string()];
            vals.extend(f.frequencies.iter().map(|v| v.to_string()));
            (id.clone(), vals)
        });
        io::write_table(out.join(format!("features_{name}.csv")), &header, rows)?;

        let k = e.embedding.coordinates.ncols();
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..k).map(|j| format!("x{j}")));
        let rows = ids.iter().enumerate().map(|(i, (id, label))| {
            let mut vals = vec![label.to_string()];
            vals.extend((0..k).map(|j| e.embedding.coordinates[(i, j)].to_string()));
            (id.clone(), vals)
        });
        io::write_table(out.join(format!("embedding_{name}.csv")), &header, rows)?;
        println!("{name}: k-NN error {:.3}", e.error);
        errors.push(ErrorRow { engine: name, error: e.error, n_dims });
    }
    io::write_rows(out.join("errors.csv"), &errors)?;
    Ok(())
}

/// Runs one engine on a tensor whose last mode is time.
pub fn decompose_tensor(data: &DenseTensor<f64>, engine: Engine, epsilon: f64, cfg: &ExperimentConfig) -> Result<DmdResult, CliError> {
    let section = &cfg.decompose;
    let opts = TtOptions { epsilon, mode: section.tolerance_mode, max_rank: section.max_rank };
    let dims = data.dims();
    let result = match engine {
        Engine::GraphDmd => {
            let adj = AdjacencySequence::from_tensor(data, section.dt)?;
            graph_dmd(&adj, &opts)?
        }
        Engine::Tdmd => tdmd(&SnapshotPair::<DenseTensor<f64>>::from_sequence(data)?, &opts)?,
        Engine::ExactDmd => {
            if dims.len() < 2 {
                return Err(CliError::Invalid("exact DMD needs at least one spatial mode and a time mode".into()));
            }
            let pair = SnapshotPair::<DenseTensor<f64>>::from_sequence(data)?.unfold()?;
            let mut r = exact_dmd(&pair, epsilon, section.max_rank)?;
            let mut mode_dims = dims[..dims.len() - 1].to_vec();
            mode_dims.push(r.n_modes());
            r.modes = r.modes.reshape(mode_dims)?;
            r
        }
    };
    Ok(result)
}

pub fn decompose(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let input: &Path = cfg
        .decompose
        .input
        .as_deref()
        .ok_or_else(|| CliError::Invalid("decompose needs an input tensor (`--input` or `decompose.input`)".into()))?;
    let engine = cfg.engine.unwrap_or(Engine::GraphDmd);
    let epsilon = cfg.epsilon.unwrap_or(1e-2);
    let data: DenseTensor<f64> = io::load_tensor(input)?;
    let out = prepare_out(cfg)?;
    let result = decompose_tensor(&data, engine, epsilon, cfg)?;
    io::save_result(&out, &result, cfg.decompose.dt)?;
    println!("{}: {} modes", engine.name(), result.n_modes());
    if cfg.decompose.reconstruct {
        let steps = data.dims()[data.order() - 1];
        let amplitudes = fit_amplitudes(&result, data.last_mode_slice(0))?;
        let mut values = Vec::with_capacity(data.len());
        for t in 0..steps {
            let snap = reconstruct(&result, &amplitudes, t as i32)?;
            values.extend(snap.values().iter().map(|z: &Complex64| z.re));
        }
        io::save_tensor(out.join("reconstruction.gdt1"), &DenseTensor::new(data.dims().to_vec(), values)?)?;
    }
    Ok(())
}
