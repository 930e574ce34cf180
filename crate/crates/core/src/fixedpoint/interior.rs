//! Equilibria detached from a wall.
//!
//! If the first particle sits at `x1 > 0` it must balance on its own:
//! `f(x2 - x1) = F(x1)`, which needs `F(x1) > 0` and fixes the first gap
//! independently of `N`. The rest of the chain then follows from the same
//! recursion as the shooting solver, and for long chains it cannot fit in
//! the segment. Since `f(Δ_k) = Σ_{i<=k} F(x_i) <= C k` with `C = sup F`,
//! every gap is at least `f⁻¹(C k)`, and the sum of those bounds is an
//! analytic witness that no such equilibrium exists once it exceeds `L`.

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::Result;

/// Candidate left-end positions scanned on `(0, L)`.
pub const INTERIOR_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    /// `F <= 0` on the whole segment: a detached end cannot balance at all.
    pub trivially_infeasible: bool,
    pub candidates: usize,
    /// Candidates whose recursion produced all `N` positions.
    pub completed: usize,
    /// Completed candidates that fit, `x_N <= L` (necessary for an equilibrium).
    pub fitting: usize,
    /// Smallest `x_N - L` among completed candidates.
    pub min_excess: Option<f64>,
    /// Grid cells where a detached equilibrium is bracketed: either `x_N`
    /// crosses `L` with the last particle pressed into the wall, or the last
    /// particle balances freely inside the segment.
    pub equilibria: usize,
    /// `Σ_{k=1}^{N-1} f⁻¹(C k)` with `C = sup F`.
    pub witness_length: Option<f64>,
}

impl BranchReport {
    pub fn feasible(&self) -> bool {
        !self.trivially_infeasible && self.equilibria > 0
    }

    /// The analytic lower bound alone rules the branch out.
    pub fn witness_excludes(&self, length: f64) -> bool {
        self.trivially_infeasible || self.witness_length.is_some_and(|w| w > length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorReport {
    pub n: usize,
    /// First particle detached from the left wall.
    pub left: BranchReport,
    /// Last particle detached from the right wall (left branch of the mirror).
    pub right: BranchReport,
}

impl InteriorReport {
    pub fn feasible(&self) -> bool {
        self.left.feasible() || self.right.feasible()
    }
}

/// Screens for equilibria with `x1 > 0` or `x_N < L`.
pub fn interior_branch(params: &ChainParams) -> Result<InteriorReport> {
    Ok(InteriorReport {
        n: params.n(),
        left: left_branch(params)?,
        right: left_branch(&params.reflected())?,
    })
}

fn left_branch(params: &ChainParams) -> Result<BranchReport> {
    let n = params.n();
    let length = params.length();
    let law = params.law();
    let sup = params.field().sup_on(length);

    let mut report = BranchReport {
        trivially_infeasible: !(sup > 0.0),
        candidates: 0,
        completed: 0,
        fitting: 0,
        min_excess: None,
        equilibria: 0,
        witness_length: None,
    };
    if report.trivially_infeasible {
        return Ok(report);
    }

    let mut witness = 0.0;
    for k in 1..n {
        match law.inverse_force(sup * k as f64) {
            Ok(gap) => witness += gap,
            Err(_) => {
                witness = f64::NAN;
                break;
            }
        }
        if witness > length {
            break;
        }
    }
    report.witness_length = (!witness.is_nan()).then_some(witness);

    let mut prev: Option<Detached> = None;
    for j in 1..=INTERIOR_GRID {
        let x1 = length * j as f64 / (INTERIOR_GRID + 1) as f64;
        let force = params.field_at(x1);
        if !(force > 0.0) {
            prev = None;
            continue;
        }
        report.candidates += 1;
        let Some(cur) = run_detached(params, x1, force)? else {
            prev = None;
            continue;
        };
        report.completed += 1;
        report.min_excess = Some(report.min_excess.map_or(cur.excess, |m: f64| m.min(cur.excess)));
        if cur.excess <= 0.0 {
            report.fitting += 1;
        }
        let at_wall = cur.excess == 0.0 && cur.last_force >= 0.0;
        let free = cur.excess < 0.0 && cur.last_force == 0.0;
        let bracketed = prev.is_some_and(|p| {
            let crosses_wall = sign_change(p.excess, cur.excess)
                && (p.last_force >= 0.0 || cur.last_force >= 0.0);
            let balances = p.excess <= 0.0
                && cur.excess <= 0.0
                && sign_change(p.last_force, cur.last_force);
            crosses_wall || balances
        });
        if at_wall || free || bracketed {
            report.equilibria += 1;
        }
        prev = Some(cur);
    }
    Ok(report)
}

fn sign_change(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

#[derive(Debug, Clone, Copy)]
struct Detached {
    /// `x_N - L`
    excess: f64,
    /// net force `f(Δ_{N-1}) + F(x_N)` on the last particle; NaN when the
    /// recursion stopped early past the wall
    last_force: f64,
}

/// End state of the chain hanging off a detached first particle, or `None`
/// when the balance needs a non-positive pair force.
fn run_detached(params: &ChainParams, x1: f64, first_force: f64) -> Result<Option<Detached>> {
    let law = params.law();
    let length = params.length();
    let mut required = first_force;
    let mut x = x1 + law.inverse_force(required)?;
    for _ in 2..params.n() {
        if x > length {
            // gaps are positive: the chain already overran the wall
            return Ok(Some(Detached { excess: x - length, last_force: f64::NAN }));
        }
        required += params.field_at(x);
        if !(required > 0.0) {
            return Ok(None);
        }
        x += law.inverse_force(required)?;
    }
    Ok(Some(Detached { excess: x - length, last_force: required + params.field_at(x) }))
}
