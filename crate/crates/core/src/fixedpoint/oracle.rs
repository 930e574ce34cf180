//! Brute-force equilibrium by projected gradient descent on the potential
//! energy `W = Σ V(Δ_k) - Σ ∫_0^{x_k} F`.
//!
//! This shares nothing with the shooting recursion beyond the force law and
//! field evaluations, so it serves as an independent check on small chains.

use crate::chain::{ChainParams, Configuration};
use crate::error::{Error, Result};

use super::conservative_forces;

/// Largest chain the oracle accepts.
pub const ORACLE_MAX_PARTICLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub max_iterations: usize,
    /// Line-search contraction.
    pub backtrack: f64,
    /// First trial displacement, in units of `L / (N - 1)`.
    pub initial_step: f64,
    /// Smallest admissible gap, in units of `L`.
    pub gap_floor: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { max_iterations: 2_000_000, backtrack: 0.5, initial_step: 0.1, gap_floor: 1e-14 }
    }
}

/// `W(x) = Σ V(x_{k+1} - x_k) - Σ ∫_0^{x_k} F`.
pub fn potential_energy(params: &ChainParams, positions: &[f64]) -> Result<f64> {
    let law = params.law();
    let field = params.field();
    let mut w = 0.0;
    for pair in positions.windows(2) {
        w += law.potential(pair[1] - pair[0])?;
    }
    for &x in positions {
        w -= field.integral(x);
    }
    Ok(w)
}

/// Gradient of `W` with components that would push a wall particle through
/// its wall removed.
fn projected_gradient(params: &ChainParams, x: &[f64]) -> Result<Vec<f64>> {
    let mut g: Vec<f64> = conservative_forces(params.law(), params.field(), x)?
        .into_iter()
        .map(|f| -f)
        .collect();
    let n = x.len();
    if x[0] <= 0.0 && g[0] > 0.0 {
        g[0] = 0.0;
    }
    if x[n - 1] >= params.length() && g[n - 1] < 0.0 {
        g[n - 1] = 0.0;
    }
    Ok(g)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimises `W` over ordered configurations in `[0, L]` starting from `init`
/// until the projected gradient falls below `tol_grad` in max-norm.
pub fn oracle_minimize(
    params: &ChainParams,
    init: &Configuration,
    tol_grad: f64,
    settings: OracleSettings,
) -> Result<Configuration> {
    let n = params.n();
    let length = params.length();
    if init.len() != n {
        return Err(Error::domain(format!("init has {} particles, params expect {n}", init.len())));
    }
    if n > ORACLE_MAX_PARTICLES {
        return Err(Error::domain(format!("oracle limited to {ORACLE_MAX_PARTICLES} particles")));
    }
    if !init.within(length) {
        return Err(Error::domain("init must lie inside [0, L]"));
    }

    let max_move = settings.initial_step * params.spacing();
    let gap_floor = settings.gap_floor * length;
    let mut x = init.positions().to_vec();
    let mut w = potential_energy(params, &x)?;
    let mut g = projected_gradient(params, &x)?;
    let mut g_norm = sup_norm(&g);
    let mut step = f64::INFINITY;
    let mut trial = vec![0.0; n];
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        iterations += 1;
        if g_norm < tol_grad {
            return Configuration::new(x);
        }
        let g_sq: f64 = g.iter().map(|v| v * v).sum();
        let slack = 1e-13 * (1.0 + w.abs());
        step = (2.0 * step).min(max_move / g_norm);
        let mut accepted = false;
        for _ in 0..80 {
            for k in 0..n {
                trial[k] = (x[k] - step * g[k]).clamp(0.0, length);
            }
            let ordered = trial.windows(2).all(|p| p[1] - p[0] > gap_floor);
            if ordered {
                let w_new = potential_energy(params, &trial)?;
                // Once the predicted decrease drowns in the rounding of W,
                // accept on a shrinking gradient instead of on W.
                let accept = if step * g_sq > slack {
                    w_new <= w - 1e-4 * step * g_sq
                } else {
                    w_new <= w + slack
                };
                if accept {
                    let g_new = projected_gradient(params, &trial)?;
                    let g_new_norm = sup_norm(&g_new);
                    if step * g_sq > slack || g_new_norm < g_norm {
                        std::mem::swap(&mut x, &mut trial);
                        w = w_new;
                        g = g_new;
                        g_norm = g_new_norm;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= settings.backtrack;
        }
        if !accepted {
            break;
        }
    }
    if g_norm < tol_grad {
        return Configuration::new(x);
    }
    Err(Error::NotConverged { iterations, grad_norm: g_norm, last: x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::distance;
    use crate::field::ForceField;
    use crate::fixedpoint::{shoot_solve, zero_force_solution};
    use crate::potential::PairLaw;

    fn chain(n: usize, field: ForceField) -> ChainParams {
        ChainParams::statics(n, 1.0, PairLaw::unit_power(2.0).unwrap(), field).unwrap()
    }

    #[test]
    fn symmetric_three_body_minimum() {
        let p = chain(3, ForceField::zero());
        let init = Configuration::new(vec![0.0, 0.3, 1.0]).unwrap();
        let x = oracle_minimize(&p, &init, 1e-10, OracleSettings::default()).unwrap();
        assert!(distance(&x, &Configuration::new(vec![0.0, 0.5, 1.0]).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn matches_scalar_root_for_constant_push() {
        let p = chain(3, ForceField::constant(1.0));
        let init = zero_force_solution(3, 1.0).unwrap();
        let x = oracle_minimize(&p, &init, 1e-10, OracleSettings::default()).unwrap();
        // brentq root of (1-x)^-2 - x^-2 = 1
        assert!((x.positions()[1] - 0.531_010_056_459_569_2).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_shooting_for_linear_field() {
        let p = chain(8, ForceField::affine(1.0, -1.0));
        let init = zero_force_solution(8, 1.0).unwrap();
        let x = oracle_minimize(&p, &init, 1e-9, OracleSettings::default()).unwrap();
        let s = shoot_solve(&p, 1e-13).unwrap();
        assert!(distance(&x, &s.configuration).unwrap() < 1e-6);
    }

    #[test]
    fn energy_examples() {
        let p = chain(2, ForceField::zero());
        assert!((potential_energy(&p, &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let p = chain(2, ForceField::constant(1.0));
        assert!(potential_energy(&p, &[0.0, 1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let p = chain(3, ForceField::zero());
        let init = Configuration::new(vec![0.0, 1.0]).unwrap();
        assert!(oracle_minimize(&p, &init, 1e-8, OracleSettings::default()).is_err());
        let outside = Configuration::new(vec![-0.1, 0.5, 1.0]).unwrap();
        assert!(oracle_minimize(&p, &outside, 1e-8, OracleSettings::default()).is_err());
    }

    #[test]
    fn reports_iteration_cap() {
        let p = chain(6, ForceField::constant(1.0));
        let init = zero_force_solution(6, 1.0).unwrap();
        let settings = OracleSettings { max_iterations: 3, ..OracleSettings::default() };
        assert!(matches!(
            oracle_minimize(&p, &init, 1e-12, settings),
            Err(Error::NotConverged { iterations: 3, .. })
        ));
    }
}
