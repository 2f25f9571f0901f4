//! Reproducible end-to-end pipelines.
//!
//! Every random draw derives from one root seed: [`derive_seed`] maps
//! `(root, stream, index)` to an independent ChaCha8 stream, with one stream
//! tag per purpose (synthetic noise, swarm trials, fold assignment).

mod swarm;
mod synthetic;
mod trips;


use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use swarm::{run_swarm, EngineReport, SwarmExperiment, SwarmReport, TrialSpectrum};
pub use synthetic::{run_synthetic, BenchRow, SynthBench};
pub use trips::{
    amplitude_peak, run_trips, second_sundays, synthetic_trips, trips_adjacency, MonthSpec, TargetModes,
    TripFixture, TripsExperiment, TripsReport,
};


/// Stream tags for [`derive_seed`].
pub mod stream {
    pub const SYNTH_NOISE: u64 = 1;
    pub const SWARM_TRIAL: u64 = 2;
    pub const CV_FOLDS: u64 = 3;
}

/// Seed for draw `index` of purpose `stream` under `root`.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream((stream << 32) | (index & 0xffff_ffff));
    rng.next_u64()
}
