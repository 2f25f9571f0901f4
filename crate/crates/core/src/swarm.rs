//! Zone-based collective motion in a circular arena.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Collective behavior produced by an orientation radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    Swarm,
    Torus,
    Parallel,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Swarm, Behavior::Torus, Behavior::Parallel];

    pub fn orientation_radius(self) -> f64 {
        match self {
            Behavior::Swarm => 2.0,
            Behavior::Torus => 10.0,
            Behavior::Parallel => 13.0,
        }
    }

    /// Seconds discarded before the analysis window.
    pub fn warmup_secs(self) -> f64 {
        match self {
            Behavior::Torus => 10.0,
            Behavior::Swarm | Behavior::Parallel => 30.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Swarm => "swarm",
            Behavior::Torus => "torus",
            Behavior::Parallel => "parallel",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub n_agents: usize,
    /// Mean cruising speed (m/s).
    pub speed: f64,
    /// Body length (m); recorded but unused by the dynamics.
    pub body_length: f64,
    pub boundary_radius: f64,
    pub r_r: f64,
    pub r_o: f64,
    pub r_a: f64,
    /// Maximum turn per step (degrees).
    pub beta_max_turn: f64,
    pub dt: f64,
    /// Relative standard deviation of the per-agent speed.
    pub speed_noise_sd: f64,
    pub duration_steps: usize,
    pub seed: u64,
    /// Negate the orientation/attraction combination.
    pub literal_sign: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_agents: 64,
            speed: 4.0,
            body_length: 0.5,
            boundary_radius: 25.0,
            r_r: 1.0,
            r_o: 10.0,
            r_a: 15.0,
            beta_max_turn: 30.0,
            dt: 1e-2,
            speed_noise_sd: 0.05,
            duration_steps: 2000,
            seed: 0,
            literal_sign: false,
        }
    }
}

impl SwarmConfig {
    /// Configuration whose duration covers the warm-up plus `window` frames.
    pub fn for_behavior(behavior: Behavior, window: usize, seed: u64) -> Self {
        let mut cfg = Self { r_o: behavior.orientation_radius(), seed, ..Self::default() };
        cfg.duration_steps = cfg.warmup_steps(behavior) + window;
        cfg
    }

    pub fn warmup_steps(&self, behavior: Behavior) -> usize {
        (behavior.warmup_secs() / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("speed", self.speed),
            ("dt", self.dt),
            ("r_r", self.r_r),
            ("boundary_radius", self.boundary_radius),
            ("beta_max_turn", self.beta_max_turn),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_agents == 0 {
            return Err(Error::arg("n_agents must be at least 1"));
        }
        if !(self.r_a >= self.r_o && self.r_o > 0.0) {
            return Err(Error::arg(format!("need 0 < r_o <= r_a, got r_o={} r_a={}", self.r_o, self.r_a)));
        }
        if !(self.speed_noise_sd >= 0.0) {
            return Err(Error::arg("speed_noise_sd must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<[f64; 2]>,
    /// Unit heading vectors.
    pub directions: Vec<[f64; 2]>,
    pub speeds: Vec<f64>,
}

impl SwarmState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Relabels agents so that new agent `i` is old agent `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            positions: perm.iter().map(|&p| self.positions[p]).collect(),
            directions: perm.iter().map(|&p| self.directions[p]).collect(),
            speeds: perm.iter().map(|&p| self.speeds[p]).collect(),
        }
    }
}

pub fn init_state(config: &SwarmConfig) -> Result<SwarmState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.speed_noise_sd).map_err(|e| Error::arg(e.to_string()))?;
    let n = config.n_agents;
    let mut state = SwarmState {
        positions: Vec::with_capacity(n),
        directions: Vec::with_capacity(n),
        speeds: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let radius = rng.random_range(6.0..=16.0);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = angle.sin_cos();
        state.positions.push([radius * c, radius * s]);
        state.directions.push([-s, c]);
    }
    for _ in 0..n {
        let factor = 1.0 + noise.sample(&mut rng);
        state.speeds.push(config.speed * factor.max(1e-3));
    }
    Ok(state)
}

fn normalize(v: [f64; 2]) -> Option<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    (n >= 1e-12).then(|| [v[0] / n, v[1] / n])
}

/// Turns `from` toward `to` by at most `max_turn` radians.
fn cap_turn(from: [f64; 2], to: [f64; 2], max_turn: f64) -> [f64; 2] {
    let cross = from[0] * to[1] - from[1] * to[0];
    let dot = from[0] * to[0] + from[1] * to[1];
    let theta = cross.atan2(dot);
    if theta.abs() <= max_turn {
        return to;
    }
    let rot = if theta >= 0.0 { max_turn } else { -max_turn };
    let (s, c) = rot.sin_cos();
    let out = [c * from[0] - s * from[1], s * from[0] + c * from[1]];
    normalize(out).unwrap_or(from)
}

/// Desired heading of agent `i` from the zone rules, before the turn cap.
fn desired_direction(state: &SwarmState, config: &SwarmConfig, i: usize) -> [f64; 2] {
    let pi = state.positions[i];
    let mut repulse = [0.0; 2];
    let mut orient = [0.0; 2];
    let mut attract = [0.0; 2];
    let (mut n_r, mut n_o, mut n_a) = (0usize, 0usize, 0usize);
    for (j, pj) in state.positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let rij = [pj[0] - pi[0], pj[1] - pi[1]];
        let dist = rij[0].hypot(rij[1]);
        if dist < config.r_r {
            n_r += 1;
            if dist > 0.0 {
                repulse[0] -= rij[0] / dist;
                repulse[1] -= rij[1] / dist;
            }
        } else if dist < config.r_o {
            n_o += 1;
            orient[0] += state.directions[j][0];
            orient[1] += state.directions[j][1];
        } else if dist < config.r_a {
            n_a += 1;
            attract[0] += rij[0] / dist;
            attract[1] += rij[1] / dist;
        }
    }
    if n_r > 0 {
        return repulse;
    }
    let mut v = [0.0; 2];
    if n_o > 0 {
        v = orient;
    }
    if n_a > 0 {
        v = [v[0] + attract[0], v[1] + attract[1]];
    }
    if n_o == 0 && n_a == 0 {
        return state.directions[i];
    }
    let scale = if n_o > 0 && n_a > 0 { 0.5 } else { 1.0 };
    let sign = if config.literal_sign { -1.0 } else { 1.0 };
    [sign * scale * v[0], sign * scale * v[1]]
}

/// Advances every agent by one synchronous step.
pub fn step(state: &SwarmState, config: &SwarmConfig) -> SwarmState {
    let max_turn = config.beta_max_turn.to_radians();
    let n = state.len();
    let mut next = state.clone();
    for i in 0..n {
        let old = state.directions[i];
        let desired = normalize(desired_direction(state, config, i)).unwrap_or(old);
        let mut dir = cap_turn(old, desired, max_turn);
        let p = state.positions[i];
        let stride = state.speeds[i] * config.dt;
        let provisional = [p[0] + stride * dir[0], p[1] + stride * dir[1]];
        if provisional[0].hypot(provisional[1]) > config.boundary_radius {
            if let Some(home) = normalize([-p[0], -p[1]]) {
                dir = home;
            }
        }
        next.directions[i] = dir;
        next.positions[i] = [p[0] + stride * dir[0], p[1] + stride * dir[1]];
    }
    next
}

/// Positions and headings at every recorded frame.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `positions[t][i]`, frame 0 being the initial state.
    pub positions: Vec<Vec<[f64; 2]>>,
    pub directions: Vec<Vec<[f64; 2]>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn n_frames(&self) -> usize {
        self.positions.len()
    }

    pub fn n_agents(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// Frames `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Trajectory> {
        if start + len > self.n_frames() {
            return Err(Error::arg(format!(
                "window {start}..{} exceeds {} frames",
                start + len,
                self.n_frames()
            )));
        }
        Ok(Trajectory {
            positions: self.positions[start..start + len].to_vec(),
            directions: self.directions[start..start + len].to_vec(),
            dt: self.dt,
        })
    }

    /// The `len`-frame window following the warm-up of `behavior`.
    pub fn analysis_window(&self, config: &SwarmConfig, behavior: Behavior, len: usize) -> Result<Trajectory> {
        self.window(config.warmup_steps(behavior), len)
    }

    /// `n_agents × 2 × frames` coordinate tensor.
    pub fn to_tensor(&self) -> Result<DenseTensor<f64>> {
        let n = self.n_agents();
        DenseTensor::from_fn(vec![n, 2, self.n_frames()], |idx| self.positions[idx[2]][idx[0]][idx[1]])
    }

    /// Reads positions from an `n × 2 × frames` tensor; headings are left empty.
    pub fn from_tensor(t: &DenseTensor<f64>, dt: f64) -> Result<Trajectory> {
        let d = t.dims();
        if d.len() != 3 || d[1] != 2 {
            return Err(Error::dims(format!("expected n x 2 x frames, got {d:?}")));
        }
        let positions = (0..d[2])
            .map(|f| (0..d[0]).map(|i| [t.get(&[i, 0, f]), t.get(&[i, 1, f])]).collect())
            .collect();
        Ok(Trajectory { positions, directions: Vec::new(), dt })
    }

    /// `n² × frames` matrix of pairwise distances, entry `(i + n·j, t)`.
    pub fn distance_unfolding(&self) -> faer::Mat<f64> {
        let n = self.n_agents();
        faer::Mat::from_fn(n * n, self.n_frames(), |row, t| {
            let (i, j) = (row % n, row / n);
            let (a, b) = (self.positions[t][i], self.positions[t][j]);
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
    }
}

/// Runs `duration_steps` steps from [`init_state`], recording every frame.
pub fn simulate(config: &SwarmConfig) -> Result<Trajectory> {
    let init = init_state(config)?;
    simulate_from(init, config)
}

pub fn simulate_from(init: SwarmState, config: &SwarmConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut positions = Vec::with_capacity(config.duration_steps + 1);
    let mut directions = Vec::with_capacity(config.duration_steps + 1);
    let mut state = init;
    positions.push(state.positions.clone());
    directions.push(state.directions.clone());
    for _ in 0..config.duration_steps {
        state = step(&state, config);
        positions.push(state.positions.clone());
        directions.push(state.directions.clone());
    }
    Ok(Trajectory { positions, directions, dt: config.dt })
}

/// Polarization `|Σ d_i| / n` of one frame.
pub fn polarization(directions: &[[f64; 2]]) -> f64 {
    let n = directions.len() as f64;
    let s = directions.iter().fold([0.0, 0.0], |acc, d| [acc[0] + d[0], acc[1] + d[1]]);
    s[0].hypot(s[1]) / n
}

/// Normalized angular momentum `|Σ r̂_ic × d_i| / n` about the centroid.
pub fn angular_momentum(positions: &[[f64; 2]], directions: &[[f64; 2]]) -> f64 {
    let n = positions.len() as f64;
    let c = positions.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let total: f64 = positions
        .iter()
        .zip(directions)
        .filter_map(|(p, d)| {
            let r = normalize([p[0] - c[0], p[1] - c[1]])?;
            Some(r[0] * d[1] - r[1] * d[0])
        })
        .sum();
    total.abs() / n
}

/// Mean polarization and angular momentum over a trajectory.
pub fn order_parameters(traj: &Trajectory) -> (f64, f64) {
    let f = traj.directions.len().max(1) as f64;
    let pol = traj.directions.iter().map(|d| polarization(d)).sum::<f64>() / f;
    let mom = traj
        .positions
        .iter()
        .zip(&traj.directions)
        .map(|(p, d)| angular_momentum(p, d))
        .sum::<f64>()
        / f;
    (pol, mom)
}
