//! Equilibrium configurations.
//!
//! With the first particle pinned at the left wall, the force balance of the
//! interior particles is a triangular system: given the second position
//! `x2`, each gap follows from the previous one through
//!
//! ```text
//! f(Δ_k) = f(Δ_{k-1}) + F(x_k) = f(x2) + Σ_{i=2..k} F(x_i)
//! ```
//!
//! so the whole chain is a function of `x2`. For a non-increasing field the
//! end position `x_N(x2)` is strictly increasing, and [`shoot_solve`] finds
//! the unique equilibrium by bisecting `x_N(x2) = L`.

mod interior;
mod oracle;

pub use interior::{interior_branch, BranchReport, InteriorReport};
pub use oracle::{oracle_minimize, potential_energy, OracleSettings};

use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, Configuration};
use crate::error::{Error, Result};
use crate::field::ForceField;
use crate::potential::PairLaw;

/// Default landing tolerance for `|x_N - L|`, relative to `L`.
pub const DEFAULT_TOL_POSITION: f64 = 1e-12;
/// Bisection iteration cap; exhausts a double-precision bracket.
pub const MAX_BISECTION_ITERATIONS: usize = 200;
/// Default knot count of the degenerate three-particle field.
pub const DEGENERATE_TABLE_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub x2: f64,
    /// Positions computed before the recursion stopped; all `N` on completion.
    pub positions: Vec<f64>,
    pub outcome: ShootOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShootOutcome {
    /// `|x_N - L|` within the caller's tolerance.
    Landed { x_n: f64 },
    /// `x_N > L`, or the recursion escaped: at particle `k_escape` (1-based)
    /// the required pair force `f(Δ_k)` was not positive, so no finite gap
    /// balances it. An escape counts as `x_N = +inf`.
    Overshoot { x_n: f64, k_escape: Option<usize> },
    Undershoot { x_n: f64 },
}

impl ShootOutcome {
    /// `x_N`, with `+inf` on escape.
    pub fn x_n(&self) -> f64 {
        match *self {
            ShootOutcome::Landed { x_n }
            | ShootOutcome::Overshoot { x_n, .. }
            | ShootOutcome::Undershoot { x_n } => x_n,
        }
    }
}

/// Runs the equilibrium recursion from `x1 = 0` and the given `x2`.
///
/// The field is evaluated with its argument clamped to `[0, L]`, which keeps
/// `x_N(x2)` continuous past the right wall.
pub fn propagate(params: &ChainParams, x2: f64, tol_position: f64) -> Result<ShootResult> {
    if !(x2 > 0.0) || !x2.is_finite() {
        return Err(Error::domain(format!("x2 must be positive, got {x2}")));
    }
    let n = params.n();
    let law = params.law();
    let length = params.length();
    let mut positions = Vec::with_capacity(n);
    positions.push(0.0);
    positions.push(x2);

    let first = law.force(x2)?;
    let mut required = first;
    for k in 2..n {
        let x_k = positions[k - 1];
        required += params.field_at(x_k);
        if !(required > 0.0) {
            return Ok(ShootResult {
                x2,
                positions,
                outcome: ShootOutcome::Overshoot { x_n: f64::INFINITY, k_escape: Some(k) },
            });
        }
        // an unchanged force level reproduces the first gap exactly
        let gap = if required == first { x2 } else { law.inverse_force(required)? };
        positions.push(x_k + gap);
    }

    let x_n = positions[n - 1];
    let outcome = if (x_n - length).abs() < tol_position {
        ShootOutcome::Landed { x_n }
    } else if x_n > length {
        ShootOutcome::Overshoot { x_n, k_escape: None }
    } else {
        ShootOutcome::Undershoot { x_n }
    };
    Ok(ShootResult { x2, positions, outcome })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub configuration: Configuration,
    pub x2: f64,
    pub residual_max: f64,
    pub bisection_iterations: usize,
    /// `f(x2) >= F(0)`: the first particle is pressed into the left wall.
    pub boundary_ok_left: bool,
    /// `f(Δ_{N-1}) + F(L) >= 0`: the last particle is pressed into the right wall.
    pub boundary_ok_right: bool,
    /// `x_N(x2)` stays at `L` on a neighbourhood of the root, so the fixed
    /// point is one of a continuum.
    pub non_unique: bool,
}

/// Finds the equilibrium with `x1 = 0`, `x_N = L` by bisection on `x2`.
///
/// `tol_position` bounds `|x_N - L|` before `x_N` is snapped onto the wall.
pub fn shoot_solve(params: &ChainParams, tol_position: f64) -> Result<FixedPointResult> {
    let n = params.n();
    let length = params.length();
    if n == 2 {
        let configuration = Configuration::new(vec![0.0, length])?;
        return finish(params, configuration, 0, false);
    }

    let spacing = params.spacing();
    let probe = |x2: f64| propagate(params, x2, tol_position);

    let mut iterations = 0;
    let mut lo = 0.5 * spacing;
    let floor = 1e-3 * spacing;
    let mut landed = None;
    loop {
        let r = probe(lo)?;
        match r.outcome {
            ShootOutcome::Undershoot { .. } => break,
            ShootOutcome::Landed { .. } => {
                landed = Some(r);
                break;
            }
            ShootOutcome::Overshoot { .. } => {
                if lo <= floor {
                    return Err(Error::NoBracket { lo, hi: 2.0 * spacing });
                }
                lo = (0.5 * lo).max(floor);
            }
        }
    }
    let mut hi = (2.0 * spacing).min(length);
    while landed.is_none() {
        let r = probe(hi)?;
        match r.outcome {
            ShootOutcome::Overshoot { .. } => break,
            ShootOutcome::Landed { .. } => landed = Some(r),
            ShootOutcome::Undershoot { .. } => {
                if hi >= length {
                    return Err(Error::NoBracket { lo, hi });
                }
                hi = (2.0 * hi).min(length);
            }
        }
    }

    while landed.is_none() && iterations < MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        iterations += 1;
        let r = probe(mid)?;
        match r.outcome {
            ShootOutcome::Landed { .. } => landed = Some(r),
            ShootOutcome::Overshoot { .. } => hi = mid,
            ShootOutcome::Undershoot { .. } => lo = mid,
        }
    }
    let Some(shot) = landed else {
        return Err(Error::NoSolution(format!(
            "bisection bracket [{lo}, {hi}] collapsed without |x_N - L| < {tol_position}"
        )));
    };

    let x2 = shot.x2;
    let mut positions = shot.positions;
    positions[n - 1] = length;
    let configuration = Configuration::new(positions)?;

    // Probe either side of the root: a strictly monotone x_N(x2) moves by
    // O(1e-3 L) here, a degenerate field keeps it pinned at L.
    let flat_tol = tol_position.max(1e-6 * length);
    let pinned = |x: f64| {
        propagate(params, x, flat_tol)
            .map(|r| matches!(r.outcome, ShootOutcome::Landed { .. }))
            .unwrap_or(false)
    };
    let non_unique = pinned(x2 * (1.0 - 1e-3)) || pinned(x2 * (1.0 + 1e-3));

    finish(params, configuration, iterations, non_unique)
}

fn finish(
    params: &ChainParams,
    configuration: Configuration,
    iterations: usize,
    non_unique: bool,
) -> Result<FixedPointResult> {
    let law = params.law();
    let x = configuration.positions();
    let n = x.len();
    let boundary_ok_left = law.force(x[1] - x[0])? >= params.field_at(0.0);
    let boundary_ok_right = law.force(x[n - 1] - x[n - 2])? + params.field_at(params.length()) >= 0.0;
    let residual_max = residual(params, &configuration)?.max_abs;
    Ok(FixedPointResult {
        x2: x[1],
        configuration,
        residual_max,
        bisection_iterations: iterations,
        boundary_ok_left,
        boundary_ok_right,
        non_unique,
    })
}

/// Net conservative force on each particle: pair repulsion plus field.
pub fn conservative_forces(law: &PairLaw, field: &ForceField, positions: &[f64]) -> Result<Vec<f64>> {
    let n = positions.len();
    let mut forces: Vec<f64> = positions.iter().map(|&x| field.eval(x)).collect();
    for k in 0..n.saturating_sub(1) {
        let gap = positions[k + 1] - positions[k];
        if !(gap > 0.0) {
            return Err(Error::domain(format!(
                "particles {} and {} coincide or cross (gap {gap})",
                k + 1,
                k + 2
            )));
        }
        let f = law.force(gap)?;
        forces[k] -= f;
        forces[k + 1] += f;
    }
    Ok(forces)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// Signed unbalanced force per particle; zero for a wall particle the
    /// net force presses into its wall.
    pub forces: Vec<f64>,
    pub max_abs: f64,
}

/// Force imbalance of a configuration.
pub fn residual(params: &ChainParams, config: &Configuration) -> Result<Residual> {
    let x = config.positions();
    if x.len() != params.n() {
        return Err(Error::domain(format!(
            "configuration has {} particles, params expect {}",
            x.len(),
            params.n()
        )));
    }
    let mut forces = conservative_forces(params.law(), params.field(), x)?;
    let n = forces.len();
    if x[0] <= 0.0 {
        forces[0] = forces[0].max(0.0);
    }
    if x[n - 1] >= params.length() {
        forces[n - 1] = forces[n - 1].min(0.0);
    }
    let max_abs = forces.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(Residual { forces, max_abs })
}

/// `x_k = L (k-1) / (N-1)`, the equilibrium without external force.
pub fn zero_force_solution(n: usize, length: f64) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::domain(format!("need N >= 2 particles, got {n}")));
    }
    let last = (n - 1) as f64;
    Configuration::new((0..n).map(|k| length * (k as f64 / last)).collect())
}

/// Field on `[0, 1]` equal to `f(1 - x) - f(x)` on `[y, 1 - y]` and constant
/// outside, for which every `(0, x2, 1)` with `x2` in `[y, 1 - y]` is an
/// equilibrium of three particles.
pub fn degenerate_three_body_field(law: &PairLaw, y: f64) -> Result<ForceField> {
    degenerate_three_body_field_with(law, y, DEGENERATE_TABLE_POINTS)
}

pub fn degenerate_three_body_field_with(law: &PairLaw, y: f64, points: usize) -> Result<ForceField> {
    if !(y > 0.0 && y < 0.5) {
        return Err(Error::domain(format!("y must lie in (0, 1/2), got {y}")));
    }
    if points < 2 {
        return Err(Error::domain("need at least two table points"));
    }
    let span = 1.0 - 2.0 * y;
    let knots = (0..points)
        .map(|j| {
            let x = if j == points - 1 { 1.0 - y } else { y + span * (j as f64 / (points - 1) as f64) };
            Ok((x, law.force(1.0 - x)? - law.force(x)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForceField::piecewise_linear(&knots)?.with_monotone_flag(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain(n: usize, field: ForceField) -> ChainParams {
        ChainParams::statics(n, 1.0, PairLaw::unit_power(2.0).unwrap(), field).unwrap()
    }

    // Independent scalar root of the three-particle balance
    // (1 - x)^-2 - x^-2 = F, by plain bisection.
    fn three_body_root(force: f64) -> f64 {
        let g = |x: f64| (1.0 - x).powi(-2) - x.powi(-2) - force;
        let (mut lo, mut hi) = (0.01, 0.99);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn frozen_three_body_root_matches_oracle() {
        // scipy brentq on the same equation gives 0.5310100564595692
        assert!((three_body_root(1.0) - 0.531_010_056_459_569_2).abs() < 1e-14);
    }

    #[test]
    fn propagate_zero_force_examples() {
        let p = chain(5, ForceField::zero());
        let r = propagate(&p, 0.25, 1e-12).unwrap();
        assert!(matches!(r.outcome, ShootOutcome::Landed { .. }));
        assert_eq!(r.positions, vec![0.0, 0.25, 0.5, 0.75, 1.0]);

        let r = propagate(&p, 0.5, 1e-12).unwrap();
        assert_eq!(r.outcome, ShootOutcome::Overshoot { x_n: 2.0, k_escape: None });
    }

    #[test]
    fn propagate_constant_force_three_particles() {
        let p = chain(3, ForceField::constant(1.0));
        let r = propagate(&p, 0.4, 1e-12).unwrap();
        // Δ2 = (0.4^-2 + 1)^(-1/2)
        match r.outcome {
            ShootOutcome::Undershoot { x_n } => assert_relative_eq!(x_n, 0.771_390_676_354_103_7, epsilon = 1e-14),
            other => panic!("expected undershoot, got {other:?}"),
        }
    }

    #[test]
    fn propagate_reports_escape() {
        // strong leftward field: required pair force hits zero mid-chain
        let p = chain(10, ForceField::constant(-5.0));
        let r = propagate(&p, 0.5, 1e-12).unwrap();
        assert_eq!(r.outcome, ShootOutcome::Overshoot { x_n: f64::INFINITY, k_escape: Some(2) });
        assert!(propagate(&p, 0.0, 1e-12).is_err());
        assert!(propagate(&p, -0.1, 1e-12).is_err());
    }

    #[test]
    fn translation_structure_under_zero_force() {
        let p = chain(40, ForceField::zero());
        for &x2 in &[0.003, 0.01, 0.0257, 0.1] {
            let r = propagate(&p, x2, 1e-12).unwrap();
            for w in r.positions.windows(2) {
                assert_relative_eq!(w[1] - w[0], x2, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn solve_three_body_examples() {
        let r = shoot_solve(&chain(3, ForceField::zero()), 1e-12).unwrap();
        let x = r.configuration.positions();
        assert_eq!((x[0], x[2]), (0.0, 1.0));
        assert!((x[1] - 0.5).abs() < 1e-12);

        let r = shoot_solve(&chain(3, ForceField::constant(1.0)), 1e-12).unwrap();
        assert!((r.x2 - three_body_root(1.0)).abs() < 1e-10, "{}", r.x2);
        assert!(r.residual_max < 1e-8);
        assert!(r.boundary_ok_left && r.boundary_ok_right);
        assert!(!r.non_unique);
    }

    #[test]
    fn solve_two_particles_is_analytic() {
        let r = shoot_solve(&chain(2, ForceField::constant(3.0)), 1e-12).unwrap();
        assert_eq!(r.configuration.positions(), &[0.0, 1.0]);
        assert_eq!(r.bisection_iterations, 0);
    }

    #[test]
    fn solve_zero_force_many_particles() {
        let r = shoot_solve(&chain(101, ForceField::zero()), 1e-12).unwrap();
        for g in r.configuration.gaps() {
            assert!((g - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_reports_missing_bracket() {
        // a field strong enough that no x2 above the floor undershoots
        let p = chain(6, ForceField::constant(-1e9));
        assert!(matches!(shoot_solve(&p, 1e-12), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn residual_examples() {
        let p = chain(5, ForceField::zero());
        let eq = zero_force_solution(5, 1.0).unwrap();
        let r = residual(&p, &eq).unwrap();
        assert_eq!(r.max_abs, 0.0);

        let p = chain(3, ForceField::constant(1.0));
        let c = Configuration::new(vec![0.0, 0.4, 1.0]).unwrap();
        let r = residual(&p, &c).unwrap();
        assert_relative_eq!(r.forces[1], 0.4f64.powi(-2) - 0.6f64.powi(-2) + 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.forces[1], 4.472_222_222_222_221, max_relative = 1e-14);
        // walls: both pressed outward
        assert_eq!(r.forces[0], 0.0);
        assert_eq!(r.forces[2], 0.0);
    }

    #[test]
    fn residual_counts_wall_escape() {
        // strong rightward push at the left wall pulls particle 1 off it
        let p = chain(3, ForceField::constant(10.0));
        let c = Configuration::new(vec![0.0, 0.5, 1.0]).unwrap();
        let r = residual(&p, &c).unwrap();
        assert_relative_eq!(r.forces[0], 10.0 - 4.0);
        // particle off the wall counts in full
        let c = Configuration::new(vec![0.1, 0.5, 1.0]).unwrap();
        let r = residual(&p, &c).unwrap();
        assert_relative_eq!(r.forces[0], 10.0 - 0.4f64.powi(-2), max_relative = 1e-14);
    }

    #[test]
    fn residual_rejects_bad_configuration() {
        let p = chain(3, ForceField::zero());
        assert!(residual(&p, &Configuration::new(vec![0.0, 1.0]).unwrap()).is_err());
        assert!(conservative_forces(p.law(), p.field(), &[0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_force_solution_examples() {
        assert_eq!(zero_force_solution(2, 1.0).unwrap().positions(), &[0.0, 1.0]);
        assert_eq!(zero_force_solution(5, 1.0).unwrap().positions(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(zero_force_solution(3, 2.0).unwrap().positions(), &[0.0, 1.0, 2.0]);
        assert!(zero_force_solution(1, 1.0).is_err());
        let c = zero_force_solution(7, 0.1).unwrap();
        assert_eq!(*c.positions().last().unwrap(), 0.1);
    }

    #[test]
    fn degenerate_field_examples() {
        let law = PairLaw::unit_power(2.0).unwrap();
        let field = degenerate_three_body_field(&law, 0.25).unwrap();
        let p = ChainParams::statics(3, 1.0, law.clone(), field).unwrap();
        let res = |x2: f64| residual(&p, &Configuration::new(vec![0.0, x2, 1.0]).unwrap()).unwrap().max_abs;
        assert!(res(0.5) < 1e-12);
        // linear interpolation error h^2/8 |F''| with F'' = f''(1-x) - f''(x)
        let h = 0.5 / (DEGENERATE_TABLE_POINTS - 1) as f64;
        let bound = |x: f64| h * h / 8.0 * (6.0 / x.powi(4) + 6.0 / (1.0 - x).powi(4)) * 1.05;
        for x2 in [0.3, 0.6] {
            assert!(res(x2) < bound(x2.min(1.0 - x2) - h), "{x2}: {}", res(x2));
        }
        assert!(degenerate_three_body_field(&law, 0.0).is_err());
        assert!(degenerate_three_body_field(&law, 0.5).is_err());

        let solved = shoot_solve(&p, 1e-12).unwrap();
        assert!(solved.non_unique);
        assert!(solved.residual_max < 1e-6);
    }
}
