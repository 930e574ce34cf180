//! Damped Newtonian dynamics with completely inelastic walls.
//!
//! Each particle obeys `m x'' = -∂U/∂x + F(x) - A x'`. A particle that
//! reaches a wall loses all its momentum there and sticks until the net
//! force on it points back into the segment. The total energy
//! `H = Σ m v²/2 + W` decreases at the rate `A Σ v²`, and impacts only
//! destroy kinetic energy, so `H` is a Lyapunov function of the flow.
//!
//! Time stepping is velocity Verlet with the damping term treated
//! implicitly in the closing half-kick. A step that would bring two
//! particles within `gap_floor` of each other, or that raises `H` while
//! `A > 0`, is retried as two half steps, down to `dt / 2^20`.

use serde::{Deserialize, Serialize};

use crate::chain::{distance_slices, ChainParams, Configuration};
use crate::error::{Error, Result};
use crate::fixedpoint::{conservative_forces, potential_energy};

/// Step halvings allowed before giving up.
pub const MAX_HALVINGS: u32 = 20;
/// Allowed energy rise per accepted step, relative to `1 + |H|`.
pub const ENERGY_SLACK: f64 = 1e-9;
/// Closest approach tolerated before sub-stepping, relative to `L`.
pub const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub stuck_left: bool,
    pub stuck_right: bool,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wall {
    Left,
    Right,
}

impl Wall {
    pub fn as_str(self) -> &'static str {
        match self {
            Wall::Left => "left",
            Wall::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallEvent {
    pub time: f64,
    pub side: Wall,
    /// Velocity of the particle just before it was stopped.
    pub v_pre: f64,
    pub kinetic_removed: f64,
    /// `H` at the start and end of the step containing the impact.
    pub energy_before: f64,
    pub energy_after: f64,
}

impl ChainState {
    /// Builds a state, sticking end particles that sit on a wall, move no
    /// further outward and are pressed into it.
    pub fn new(params: &ChainParams, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        let n = params.n();
        if positions.len() != n || velocities.len() != n {
            return Err(Error::domain(format!(
                "state needs {n} positions and velocities, got {} and {}",
                positions.len(),
                velocities.len()
            )));
        }
        let config = Configuration::new(positions)?;
        if !config.within(params.length()) {
            return Err(Error::domain("positions must lie inside [0, L]"));
        }
        if velocities.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("velocities must be finite"));
        }
        let mut state = Self {
            positions: config.into_positions(),
            velocities,
            stuck_left: false,
            stuck_right: false,
            time: 0.0,
        };
        let forces = conservative_forces(params.law(), params.field(), &state.positions)?;
        if state.positions[0] <= 0.0 && state.velocities[0] <= 0.0 && forces[0] <= 0.0 {
            state.velocities[0] = 0.0;
            state.stuck_left = true;
        }
        if state.positions[n - 1] >= params.length() && state.velocities[n - 1] >= 0.0 && forces[n - 1] >= 0.0 {
            state.velocities[n - 1] = 0.0;
            state.stuck_right = true;
        }
        Ok(state)
    }

    pub fn at_rest(params: &ChainParams, config: &Configuration) -> Result<Self> {
        Self::new(params, config.positions().to_vec(), vec![0.0; config.len()])
    }

    /// Equal spacing jittered by up to `amplitude` spacings per particle
    /// (ends stay within `amplitude/2` spacings of their wall), with
    /// velocities uniform in `[-speed, speed]`. Deterministic in `seed`.
    pub fn random(params: &ChainParams, seed: u64, amplitude: f64, speed: f64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        if !(0.0..0.9).contains(&amplitude) {
            return Err(Error::domain(format!("jitter amplitude must lie in [0, 0.9), got {amplitude}")));
        }
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(Error::domain(format!("speed must be non-negative, got {speed}")));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = params.n();
        let h = params.spacing();
        let positions: Vec<f64> = (0..n)
            .map(|k| {
                let u: f64 = rng.gen();
                if k == 0 {
                    0.5 * amplitude * h * u
                } else if k == n - 1 {
                    params.length() - 0.5 * amplitude * h * u
                } else {
                    h * (k as f64 + amplitude * (u - 0.5))
                }
            })
            .collect();
        let velocities = (0..n).map(|_| speed * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        Self::new(params, positions, velocities)
    }

    pub fn configuration(&self) -> Result<Configuration> {
        Configuration::new(self.positions.clone())
    }

    fn min_gap(&self) -> f64 {
        self.positions.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// `f(Δ_{k-1}) - f(Δ_k) + F(x_k) - A v_k` for every particle. Stuck
/// particles report the force they would feel if released.
pub fn net_force(params: &ChainParams, state: &ChainState) -> Result<Vec<f64>> {
    let mut forces = conservative_forces(params.law(), params.field(), &state.positions)?;
    let damping = params.damping();
    for (f, v) in forces.iter_mut().zip(&state.velocities) {
        *f -= damping * v;
    }
    Ok(forces)
}

/// `H = Σ m v²/2 + Σ V(Δ_k) - Σ ∫_0^{x_k} F`.
pub fn total_energy(params: &ChainParams, state: &ChainState) -> Result<f64> {
    let kinetic: f64 = state.velocities.iter().map(|v| 0.5 * params.mass() * v * v).sum();
    Ok(kinetic + potential_energy(params, &state.positions)?)
}

/// `0.01 sqrt(m (L/N)^(a+1) / alpha)` for power laws; tabulated laws use the
/// local stiffness at spacing `L/N`.
pub fn default_dt(params: &ChainParams) -> Result<f64> {
    let r = params.length() / params.n() as f64;
    let m = params.mass();
    match params.law() {
        crate::potential::PairLaw::Power(p) => Ok(0.01 * (m * r.powf(p.exponent() + 1.0) / p.alpha()).sqrt()),
        law => Ok(0.01 * (m / law.stiffness(r)?).sqrt()),
    }
}

/// One attempt at a step of exactly `dt`; `None` when it must be refined.
fn try_step(
    params: &ChainParams,
    state: &ChainState,
    energy: f64,
    dt: f64,
    events: &mut Vec<WallEvent>,
) -> Result<Option<(ChainState, f64)>> {
    let n = params.n();
    let length = params.length();
    let m = params.mass();
    let damping = params.damping();
    let half = 0.5 * dt / m;

    let forces = conservative_forces(params.law(), params.field(), &state.positions)?;
    let mut next = state.clone();
    let mut v_half: Vec<f64> = (0..n)
        .map(|k| state.velocities[k] + half * (forces[k] - damping * state.velocities[k]))
        .collect();
    if state.stuck_left {
        v_half[0] = 0.0;
    }
    if state.stuck_right {
        v_half[n - 1] = 0.0;
    }
    for k in 0..n {
        next.positions[k] = state.positions[k] + dt * v_half[k];
    }
    next.time = state.time + dt;

    let mut impacts: Vec<(Wall, f64)> = Vec::new();
    if next.positions[0] < 0.0 {
        impacts.push((Wall::Left, v_half[0]));
        next.positions[0] = 0.0;
        v_half[0] = 0.0;
        next.stuck_left = true;
    }
    if next.positions[n - 1] > length {
        impacts.push((Wall::Right, v_half[n - 1]));
        next.positions[n - 1] = length;
        v_half[n - 1] = 0.0;
        next.stuck_right = true;
    }
    if next.min_gap() <= GAP_FLOOR * length {
        return Ok(None);
    }

    let forces = conservative_forces(params.law(), params.field(), &next.positions)?;
    if next.stuck_left && forces[0] > 0.0 {
        next.stuck_left = false;
    }
    if next.stuck_right && forces[n - 1] < 0.0 {
        next.stuck_right = false;
    }
    let shrink = 1.0 + half * damping;
    for k in 0..n {
        next.velocities[k] = (v_half[k] + half * forces[k]) / shrink;
    }
    if next.stuck_left {
        next.velocities[0] = 0.0;
    }
    if next.stuck_right {
        next.velocities[n - 1] = 0.0;
    }

    let next_energy = total_energy(params, &next)?;
    if damping > 0.0 && next_energy > energy + ENERGY_SLACK * (1.0 + energy.abs()) {
        return Ok(None);
    }
    for (side, v_pre) in impacts {
        events.push(WallEvent {
            time: next.time,
            side,
            v_pre,
            kinetic_removed: 0.5 * m * v_pre * v_pre,
            energy_before: energy,
            energy_after: next_energy,
        });
    }
    Ok(Some((next, next_energy)))
}

fn advance(
    params: &ChainParams,
    state: ChainState,
    energy: f64,
    dt: f64,
    depth: u32,
    events: &mut Vec<WallEvent>,
    stats: &mut StepStats,
) -> Result<(ChainState, f64)> {
    let mark = events.len();
    if let Some(done) = try_step(params, &state, energy, dt, events)? {
        stats.accepted += 1;
        return Ok(done);
    }
    events.truncate(mark);
    stats.rejected += 1;
    if depth >= MAX_HALVINGS {
        return Err(Error::Stiffness {
            time: state.time,
            dt,
            min_gap: state.min_gap(),
            positions: state.positions,
            velocities: state.velocities,
        });
    }
    let (mid, e_mid) = advance(params, state, energy, 0.5 * dt, depth + 1, events, stats)?;
    advance(params, mid, e_mid, 0.5 * dt, depth + 1, events, stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Advances `state` by `dt`, halving the step where needed. Returns the new
/// state and the wall impacts that occurred.
pub fn step(params: &ChainParams, state: &ChainState, dt: f64) -> Result<(ChainState, Vec<WallEvent>)> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    let energy = total_energy(params, state)?;
    let mut events = Vec::new();
    let mut stats = StepStats::default();
    let (next, _) = advance(params, state.clone(), energy, dt, 0, &mut events, &mut stats)?;
    Ok((next, events))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub energy: f64,
    /// `rho(X(t), target)` when a target was given.
    pub rho: Option<f64>,
    pub wall_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub events: Vec<WallEvent>,
    pub final_state: ChainState,
    pub stats: StepStats,
    pub dt: f64,
}

impl TrajectoryRecord {
    /// Largest `(H(t2) - H(t1)) / (1 + |H(t1)|)` over consecutive samples.
    pub fn max_energy_rise(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / (1.0 + w[0].energy.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|H(t) - H(0)| / |H(0)|`.
    pub fn max_energy_drift(&self) -> f64 {
        let h0 = self.samples[0].energy;
        self.samples.iter().map(|s| (s.energy - h0).abs() / h0.abs()).fold(0.0, f64::max)
    }

    /// First sampled time at which `rho` drops below `tol`.
    pub fn first_passage(&self, tol: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.rho.is_some_and(|r| r < tol)).map(|s| s.time)
    }

    pub fn max_rho(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.rho).reduce(f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimulationSettings {
    /// Base step; [`default_dt`] when `None`.
    pub dt: Option<f64>,
}

/// Integrates from `init` to `t_end`, sampling `H` (and the distance to
/// `target`) every `sample_dt`.
pub fn simulate(
    params: &ChainParams,
    init: &ChainState,
    t_end: f64,
    sample_dt: f64,
    target: Option<&Configuration>,
    settings: SimulationSettings,
) -> Result<TrajectoryRecord> {
    if !(t_end > init.time) {
        return Err(Error::domain("t_end must exceed the initial time"));
    }
    if !(sample_dt > 0.0) {
        return Err(Error::domain("sample_dt must be positive"));
    }
    if let Some(t) = target {
        if t.len() != params.n() {
            return Err(Error::domain("target size does not match N"));
        }
    }
    let dt = match settings.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::domain(format!("dt must be positive, got {dt}"))),
        None => default_dt(params)?,
    };

    let rho = |s: &ChainState| -> Result<Option<f64>> {
        target.map(|t| distance_slices(&s.positions, t.positions())).transpose()
    };
    let mut state = init.clone();
    let mut energy = total_energy(params, &state)?;
    let mut events = Vec::new();
    let mut stats = StepStats::default();
    let mut samples = vec![Sample { time: state.time, energy, rho: rho(&state)?, wall_events: 0 }];

    let t0 = init.time;
    let mut index = 1u64;
    loop {
        let t_sample = (t0 + index as f64 * sample_dt).min(t_end);
        while state.time < t_sample {
            let h = dt.min(t_sample - state.time);
            let (next, e) = advance(params, state, energy, h, 0, &mut events, &mut stats)?;
            state = next;
            energy = e;
            if t_sample - state.time < 1e-12 * dt {
                state.time = t_sample;
            }
        }
        samples.push(Sample { time: state.time, energy, rho: rho(&state)?, wall_events: events.len() });
        if t_sample >= t_end {
            break;
        }
        index += 1;
    }
    Ok(TrajectoryRecord { samples, events, final_state: state, stats, dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ForceField;
    use crate::fixedpoint::{shoot_solve, zero_force_solution};
    use crate::potential::PairLaw;
    use approx::assert_relative_eq;

    fn chain(n: usize, field: ForceField, mass: f64, damping: f64) -> ChainParams {
        ChainParams::new(n, 1.0, mass, damping, PairLaw::unit_power(2.0).unwrap(), field).unwrap()
    }

    #[test]
    fn net_force_examples() {
        let p = chain(5, ForceField::zero(), 1.0, 0.0);
        let s = ChainState::at_rest(&p, &zero_force_solution(5, 1.0).unwrap()).unwrap();
        let f = net_force(&p, &s).unwrap();
        assert!(f[1..4].iter().all(|f| f.abs() < 1e-12));
        // end particles press into the walls with f(1/4) = 16
        assert_relative_eq!(f[0], -16.0, max_relative = 1e-14);
        assert_relative_eq!(f[4], 16.0, max_relative = 1e-14);

        let p = chain(2, ForceField::zero(), 1.0, 0.0);
        let s = ChainState::new(&p, vec![0.0, 0.5], vec![0.0, 0.0]).unwrap();
        let f = net_force(&p, &s).unwrap();
        assert_relative_eq!(f[0], -4.0, max_relative = 1e-15);
        assert_relative_eq!(f[1], 4.0, max_relative = 1e-15);
    }

    #[test]
    fn damping_is_linear_in_velocity() {
        let p = chain(4, ForceField::affine(1.0, -1.0), 1.0, 0.7);
        let x = vec![0.05, 0.3, 0.62, 0.9];
        let v = vec![0.3, -1.2, 0.5, 2.0];
        let moving = ChainState::new(&p, x.clone(), v.clone()).unwrap();
        let rest = ChainState::new(&p, x, vec![0.0; 4]).unwrap();
        let a = net_force(&p, &moving).unwrap();
        let b = net_force(&p, &rest).unwrap();
        for k in 0..4 {
            assert_relative_eq!(a[k] - b[k], -0.7 * v[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_examples() {
        let p = chain(2, ForceField::zero(), 1.0, 0.0);
        let s = ChainState::new(&p, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(total_energy(&p, &s).unwrap(), 1.0);

        let p = chain(2, ForceField::zero(), 2.0, 0.0);
        let s = ChainState { positions: vec![0.0, 1.0], velocities: vec![0.5, -0.5], stuck_left: false, stuck_right: false, time: 0.0 };
        assert_relative_eq!(total_energy(&p, &s).unwrap(), 1.5);

        let p = chain(2, ForceField::constant(1.0), 1.0, 0.0);
        let s = ChainState::new(&p, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(total_energy(&p, &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn stuck_particle_stays_on_wall() {
        // F(0) - f(x2) < 0: the first particle is pressed into the wall
        let p = chain(3, ForceField::constant(1.0), 1.0, 1.0);
        let mut s = ChainState::new(&p, vec![0.0, 0.45, 0.8], vec![0.0, 0.3, -0.2]).unwrap();
        assert!(s.stuck_left);
        for _ in 0..200 {
            s = step(&p, &s, 1e-3).unwrap().0;
            assert_eq!(s.positions[0], 0.0);
            assert_eq!(s.velocities[0], 0.0);
        }
    }

    #[test]
    fn equilibrium_is_stationary_per_step() {
        let p = chain(6, ForceField::constant(1.0), 1.0, 0.5);
        let x = shoot_solve(&p, 1e-14).unwrap().configuration;
        let s0 = ChainState::at_rest(&p, &x).unwrap();
        assert!(s0.stuck_left && s0.stuck_right);
        let (s1, events) = step(&p, &s0, default_dt(&p).unwrap()).unwrap();
        assert!(events.is_empty());
        for (a, b) in s0.positions.iter().zip(&s1.positions) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn incoming_particle_sticks_with_one_event() {
        let p = chain(3, ForceField::zero(), 1.0, 0.0);
        let s = ChainState::new(&p, vec![1e-4, 0.5, 1.0], vec![-1.0, 0.0, 0.0]).unwrap();
        assert!(!s.stuck_left);
        let (s, events) = step(&p, &s, 1e-3).unwrap();
        assert_eq!(s.positions[0], 0.0);
        assert_eq!(s.velocities[0], 0.0);
        assert!(s.stuck_left);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].side, Wall::Left);
        assert!(events[0].v_pre < 0.0 && events[0].kinetic_removed > 0.0);
    }

    #[test]
    fn stuck_particle_releases_when_pulled_inward() {
        // strong rightward field beats the pair force at the left wall
        let p = chain(3, ForceField::constant(50.0), 1.0, 1.0);
        let s = ChainState::new(&p, vec![0.0, 0.5, 1.0], vec![0.0; 3]).unwrap();
        assert!(!s.stuck_left);
        let (s, _) = step(&p, &s, 1e-3).unwrap();
        assert!(s.positions[0] > 0.0 && s.velocities[0] > 0.0);
    }

    #[test]
    fn random_state_is_seeded_and_ordered() {
        let p = chain(8, ForceField::constant(1.0), 1.0, 1.0);
        let a = ChainState::random(&p, 7, 0.5, 0.2).unwrap();
        assert_eq!(a, ChainState::random(&p, 7, 0.5, 0.2).unwrap());
        assert_ne!(a, ChainState::random(&p, 8, 0.5, 0.2).unwrap());
        assert!(a.configuration().unwrap().within(1.0));
        assert!(a.velocities.iter().all(|v| v.abs() <= 0.2));
        assert!(ChainState::random(&p, 7, 1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_step() {
        let p = chain(3, ForceField::zero(), 1.0, 0.0);
        let s = ChainState::at_rest(&p, &zero_force_solution(3, 1.0).unwrap()).unwrap();
        assert!(step(&p, &s, 0.0).is_err());
        assert!(ChainState::new(&p, vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(ChainState::new(&p, vec![0.0, 0.5, 1.5], vec![0.0; 3]).is_err());
    }

    #[test]
    fn stiffness_error_on_forced_collision() {
        // head-on approach far too fast for the floor step
        let p = chain(3, ForceField::zero(), 1.0, 1.0);
        let s = ChainState::new(&p, vec![0.0, 0.5, 0.5 + 1e-9], vec![0.0, 1e9, -1e9]).unwrap();
        assert!(matches!(step(&p, &s, 1.0), Err(Error::Stiffness { .. })));
    }

    #[test]
    fn simulate_holds_equilibrium() {
        let p = chain(8, ForceField::constant(1.0), 1.0, 1.0);
        let target = shoot_solve(&p, 1e-14).unwrap().configuration;
        let init = ChainState::at_rest(&p, &target).unwrap();
        let rec = simulate(&p, &init, 2.0, 0.1, Some(&target), SimulationSettings::default()).unwrap();
        assert!(rec.max_rho().unwrap() < 1e-10, "{:?}", rec.max_rho());
        assert!(rec.events.is_empty());
    }

    #[test]
    fn simulate_conserves_energy_without_damping() {
        let p = chain(8, ForceField::zero(), 1.0, 0.0);
        let eq = zero_force_solution(8, 1.0).unwrap();
        let h = p.spacing();
        let mut x = eq.into_positions();
        for (k, xi) in x.iter_mut().enumerate().take(7).skip(1) {
            *xi += 0.05 * h * if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        let init = ChainState::new(&p, x, vec![0.0; 8]).unwrap();
        let rec = simulate(&p, &init, 10.0, 0.05, None, SimulationSettings::default()).unwrap();
        assert!(rec.events.is_empty());
        assert!(rec.max_energy_drift() < 1e-6, "{}", rec.max_energy_drift());
    }

    #[test]
    fn simulate_relaxes_from_equispaced_start() {
        let p = chain(8, ForceField::constant(1.0), 1.0, 1.0);
        let target = shoot_solve(&p, 1e-14).unwrap().configuration;
        let init = ChainState::at_rest(&p, &zero_force_solution(8, 1.0).unwrap()).unwrap();
        let rec = simulate(&p, &init, 200.0, 0.5, Some(&target), SimulationSettings::default()).unwrap();
        let t = rec.first_passage(1e-4).expect("converges");
        assert!(t < 200.0);
        assert!(rec.max_energy_rise() <= ENERGY_SLACK);
    }
}
