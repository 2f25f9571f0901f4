use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use graph_dmd::io;
use graph_dmd::numeric::sym_eig;
use graph_dmd::DenseTensor;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph-dmd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `4 × 5 × steps` tensor `Σ_k λ_k^t u_k`, noiseless and of rank 2.
fn low_rank_series(steps: usize) -> DenseTensor<f64> {
    let lambdas = [0.95f64, -0.7];
    let pattern = |k: usize, i: usize, j: usize| ((i + 2 * j + 3 * k) as f64 * 0.7).sin() + 0.1 * k as f64;
    DenseTensor::from_fn(vec![4, 5, steps], |idx| {
        (0..2).map(|k| lambdas[k].powi(idx[2] as i32) * pattern(k, idx[0], idx[1])).sum()
    })
    .unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn decompose_then_reconstruct_recovers_low_rank_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.gdt1");
    let data = low_rank_series(16);
    io::save_tensor(&input, &data).unwrap();
    let cfg = write_config(dir.path(), "[decompose]\nreconstruct = true\n");
    for engine in ["tdmd", "exact-dmd"] {
        let out = dir.path().join(engine);
        let res = run(&[
            "decompose", "--config", p(&cfg), "--input", p(&input), "--engine", engine, "--epsilon", "1e-10", "--out",
            p(&out),
        ]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        let back: DenseTensor<f64> = io::load_tensor(out.join("reconstruction.gdt1")).unwrap();
        assert_eq!(back.dims(), data.dims());
        let err = back.values().iter().zip(data.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{engine}: {err}");
        let eigs = io::read_eigenvalues(out.join("eigenvalues.csv")).unwrap();
        assert_eq!(eigs.len(), 2);
        let modes: DenseTensor<num_complex::Complex64> = io::load_tensor(out.join("modes.gdtc")).unwrap();
        assert_eq!(modes.dims(), &[4, 5, 2]);
        assert!(out.join("meta.json").exists());
    }
}

#[test]
fn oversized_epsilon_reports_empty_result() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.gdt1");
    io::save_tensor(&input, &low_rank_series(10)).unwrap();
    let out = dir.path().join("o");
    let res = run(&["decompose", "--input", p(&input), "--engine", "tdmd", "--epsilon", "2", "--out", p(&out)]);
    assert_eq!(code(&res), 3);
    assert!(String::from_utf8_lossy(&res.stderr).contains("empty result"));

    let res = run(&["decompose", "--input", p(&input), "--engine", "tdmd", "--epsilon", "0.5", "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(io::read_eigenvalues(out.join("eigenvalues.csv")).unwrap().len(), 1);
}

#[test]
fn malformed_magic_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.gdt1");
    std::fs::write(&input, b"GDTX\x01\x00\x00\x00").unwrap();
    let res = run(&["decompose", "--input", p(&input), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("byte 0"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[synth]\nno_such_key = 1\n");
    assert_eq!(code(&run(&["synth", "--config", p(&cfg)])), 1);
    assert_eq!(code(&run(&["synth", "--epsilon", "-1"])), 1);
    assert_eq!(code(&run(&["decompose", "--engine", "nope"])), 1);
    assert_eq!(code(&run(&["decompose", "--out", p(&dir.path().join("o"))])), 1);
    assert_eq!(code(&run(&["synth", "--config", p(&dir.path().join("missing.toml"))])), 2);
}

#[test]
fn synth_writes_benchmark_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[synth]\nsizes = [8]\nn_runs = 2\ntau = 20\nnoise_var = 0.0\n");
    let out = dir.path().join("o");
    let res = run(&["synth", "--config", p(&cfg), "--epsilon", "1e-10", "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("synth.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,epsilon,d,mode,mean_error,missing"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn trips_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[trips]\nfixture_stations = 10\n[trips.params]\nwindow_days = 3\nmonths = [{ year = 2014, month = 1, start_day = 12 }, { year = 2014, month = 2, start_day = 9 }]\n",
    );
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("o{k}"))).collect();
    for out in &outs {
        let res = run(&["trips", "--config", p(&cfg), "--seed", "5", "--out", p(out)]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    for file in ["adjacency.gdt1", "modes.gdtc", "operator.gdt1", "eigenvalues.csv", "targets.csv", "labels.csv"] {
        let a = std::fs::read(outs[0].join(file)).unwrap();
        let b = std::fs::read(outs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn trips_psd_shift_changes_spectrum_and_yields_psd_input() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[trips]\nfixture_stations = 8\n[trips.params]\nwindow_days = 2\nmonths = [{ year = 2014, month = 3, start_day = 9 }]\n";
    let mut spectra = Vec::new();
    for (k, shift) in [false, true].into_iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{base}psd_shift = {shift}\n"));
        let out = dir.path().join(format!("o{k}"));
        let res = run(&["trips", "--config", p(&cfg), "--out", p(&out)]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        spectra.push(io::read_eigenvalues(out.join("eigenvalues.csv")).unwrap());
        if shift {
            let adj = io::load_adjacency(out.join("adjacency.gdt1"), Some(&out.join("labels.csv")), 1.0).unwrap();
            for a in adj.matrices() {
                let (vals, _) = sym_eig(a.as_ref()).unwrap();
                assert!(vals[0] >= -1e-10, "{}", vals[0]);
            }
        }
    }
    assert_ne!(spectra[0], spectra[1]);
}

#[test]
fn unknown_station_is_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let stations = dir.path().join("stations.csv");
    std::fs::write(&stations, "id,name,lat,lon\n1,A,38.9,-77.0\n2,B,38.8,-77.1\n").unwrap();
    let trips = dir.path().join("trips.csv");
    std::fs::write(
        &trips,
        "start_hour_iso8601,station_a,station_b,count\n2014-01-12T00:00:00,1,2,3\n2014-01-12T01:00:00,1,9,1\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("[trips]\ntrips_csv = {:?}\nstations_csv = {:?}\n", p(&trips), p(&stations)),
    );
    let res = run(&["trips", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn swarm_writes_features_embeddings_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[swarm]\nsave_trajectories = true\n[swarm.params]\ntrials_per_type = 3\nwindow = 40\n[swarm.params.sim]\nn_agents = 12\n",
    );
    let out = dir.path().join("o");
    let res = run(&["swarm", "--config", p(&cfg), "--seed", "2", "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for engine in ["graph-dmd", "tdmd", "exact-dmd"] {
        let emb = std::fs::read_to_string(out.join(format!("embedding_{engine}.csv"))).unwrap();
        assert_eq!(emb.lines().count(), 10);
        assert!(out.join(format!("features_{engine}.csv")).exists());
    }
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 4);
    let (traj, sim) = io::load_trajectory(out.join("trajectory_torus_0.gdt1"), out.join("trajectory_torus_0.json")).unwrap();
    assert_eq!(traj.n_agents(), 12);
    assert_eq!(traj.n_frames(), 40);
    assert_eq!(sim.r_o, 10.0);
}
