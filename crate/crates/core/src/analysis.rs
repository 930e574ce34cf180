//! Gap statistics of equilibria and sweeps over the chain length.
//!
//! Writing each equilibrium gap as `Δ_k = L/(N-1) (1 + δ_k)`, a
//! non-increasing field forces `max |δ_k| -> 0` as `N -> ∞`. For a constant
//! field `F` and `f(r) = r^-a` the deviation has the leading form
//! `δ_k ≈ (F L^a / a) N^-a (N/2 - k)`, so the first gap exceeds the mean by
//! `b ≈ (F L^a / (2a)) N^(1-a)`.

use serde::{Deserialize, Serialize};

use crate::chain::{distance, ChainParams, Configuration};
use crate::error::{Error, Result};
use crate::field::ForceField;
use crate::fixedpoint::{
    degenerate_three_body_field_with, interior_branch, oracle_minimize, residual, shoot_solve,
    zero_force_solution, OracleSettings, DEFAULT_TOL_POSITION,
};
use crate::potential::PairLaw;

/// Largest chain length [`find_n0`] will try.
pub const N0_SEARCH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub gaps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub b: f64,
}

impl GapProfile {
    /// `max_k |δ_k|`.
    pub fn max_abs_delta(&self) -> f64 {
        self.deltas.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn delta_sum(&self) -> f64 {
        self.deltas.iter().sum()
    }
}

pub fn gap_profile(config: &Configuration, length: f64) -> Result<GapProfile> {
    let n = config.len();
    if n < 2 {
        return Err(Error::domain("a gap profile needs at least two particles"));
    }
    let gaps = config.gaps();
    let scale = (n - 1) as f64 / length;
    let deltas: Vec<f64> = gaps.iter().map(|g| g * scale - 1.0).collect();
    Ok(GapProfile { b: deltas[0], gaps, deltas })
}

/// `(F L^a / a) N^-a (N/2 - k)` for `k = 1..N-1`.
pub fn predicted_deltas(force: f64, exponent: f64, length: f64, n: usize) -> Vec<f64> {
    let nf = n as f64;
    let c = force * length.powf(exponent) / exponent * nf.powf(-exponent);
    (1..n).map(|k| c * (0.5 * nf - k as f64)).collect()
}

/// `(F L^a / (2a)) N^(1-a)`.
pub fn predicted_b(force: f64, exponent: f64, length: f64, n: usize) -> f64 {
    force * length.powf(exponent) / (2.0 * exponent) * (n as f64).powf(1.0 - exponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Uniform approach to equal spacing.
    UniformGaps,
    /// Leading-order correction for a constant field.
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub n: usize,
    /// Shooting parameter of the solved equilibrium; `propagate` from it
    /// reproduces the configuration.
    pub x2: f64,
    pub residual_max: f64,
    /// `D(N) = max_k |δ_k|`.
    pub max_rel_gap_deviation: f64,
    pub b_measured: f64,
    /// Present when the field is constant and `f(r) = r^-a`.
    pub prediction: Option<PredictionError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionError {
    pub b_predicted: f64,
    /// `max_k |δ_k - pred_k|`.
    pub max_abs_error: f64,
    /// `max_k |δ_k - pred_k| / max_k |pred_k|` (`E(N)`); zero when both vanish.
    pub relative_error: f64,
    /// The same ratio restricted to `k = 1` and `k = N-1`.
    pub edge_relative_error: f64,
    /// The same ratio over `2 <= k <= N-2`.
    pub bulk_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: Theorem,
    pub records: Vec<TheoremRecord>,
    pub threshold: f64,
    /// The tracked error strictly decreases along the sweep (or is
    /// identically zero).
    pub decreasing: bool,
    pub final_below_threshold: bool,
    /// `|b_measured / b_predicted - 1| <= B_TOLERANCE` at the largest `N`.
    pub b_within_tolerance: Option<bool>,
    pub passed: bool,
}

/// Allowed relative mismatch between measured and predicted `b`.
pub const B_TOLERANCE: f64 = 0.2;
/// Final-`N` bound on `E(N)`.
pub const THEOREM2_THRESHOLD: f64 = 0.1;

impl TheoremReport {
    pub fn tracked(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| match self.theorem {
                Theorem::UniformGaps => r.max_rel_gap_deviation,
                Theorem::SecondOrder => r.prediction.map_or(f64::NAN, |p| p.relative_error),
            })
            .collect()
    }
}

fn validate_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::domain("N list is empty"));
    }
    if n_list[0] < 2 {
        return Err(Error::domain("N list entries must be at least 2"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("N list must be strictly increasing"));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn map_n<T: Send>(n_list: &[usize], f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    n_list.par_iter().map(|&n| f(n).map_err(Error::at_n(n))).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_n<T: Send>(n_list: &[usize], f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    n_list.iter().map(|&n| f(n).map_err(Error::at_n(n))).collect()
}

fn prediction_error(profile: &GapProfile, force: f64, exponent: f64, length: f64) -> PredictionError {
    let n = profile.gaps.len() + 1;
    let pred = predicted_deltas(force, exponent, length, n);
    let scale = pred.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let errs: Vec<f64> = profile.deltas.iter().zip(&pred).map(|(d, p)| (d - p).abs()).collect();
    let ratio = |e: f64| if scale > 0.0 { e / scale } else if e == 0.0 { 0.0 } else { f64::INFINITY };
    let max_of = |it: &mut dyn Iterator<Item = &f64>| it.fold(0.0f64, |m, e| m.max(*e));
    let max_abs_error = max_of(&mut errs.iter());
    let edge = max_of(&mut [errs[0], errs[errs.len() - 1]].iter());
    let bulk = if errs.len() > 2 { max_of(&mut errs[1..errs.len() - 1].iter()) } else { 0.0 };
    PredictionError {
        b_predicted: predicted_b(force, exponent, length, n),
        max_abs_error,
        relative_error: ratio(max_abs_error),
        edge_relative_error: ratio(edge),
        bulk_relative_error: ratio(bulk),
    }
}

/// Constant field strength when the second-order prediction applies.
fn second_order_hypothesis(params: &ChainParams) -> Option<(f64, f64)> {
    let force = params.field().as_constant()?;
    match params.law() {
        PairLaw::Power(p) if p.alpha() == 1.0 => Some((force, p.exponent())),
        _ => None,
    }
}

/// Solves at every `N` with no hypothesis on the field, returning each
/// record with its configuration, ordered by `N`.
pub fn sweep(template: &ChainParams, n_list: &[usize], tol: f64) -> Result<Vec<(TheoremRecord, Configuration)>> {
    validate_n_list(n_list)?;
    map_n(n_list, |n| {
        let params = template.with_n(n)?;
        let solved = shoot_solve(&params, tol)?;
        let profile = gap_profile(&solved.configuration, params.length())?;
        let prediction = second_order_hypothesis(&params)
            .map(|(force, a)| prediction_error(&profile, force, a, params.length()));
        let record = TheoremRecord {
            n,
            x2: solved.x2,
            residual_max: solved.residual_max,
            max_rel_gap_deviation: profile.max_abs_delta(),
            b_measured: profile.b,
            prediction,
        };
        Ok((record, solved.configuration))
    })
}

fn strictly_decreasing_or_zero(values: &[f64]) -> bool {
    values.iter().all(|v| *v == 0.0) || values.windows(2).all(|w| w[1] < w[0])
}

/// Solves at every `N` and checks that `D(N)` decreases strictly and ends
/// below the last entry of `tol_schedule`.
pub fn check_theorem1(template: &ChainParams, n_list: &[usize], tol_schedule: &[f64]) -> Result<TheoremReport> {
    validate_n_list(n_list)?;
    let threshold = *tol_schedule
        .last()
        .ok_or_else(|| Error::domain("tolerance schedule is empty"))?;
    if !template.field().is_nonincreasing_on(template.length()) {
        return Err(Error::Hypothesis("the field must be non-increasing on [0, L]".into()));
    }
    let records: Vec<TheoremRecord> =
        sweep(template, n_list, DEFAULT_TOL_POSITION)?.into_iter().map(|(r, _)| r).collect();
    let d: Vec<f64> = records.iter().map(|r| r.max_rel_gap_deviation).collect();
    let decreasing = strictly_decreasing_or_zero(&d);
    let final_below_threshold = d[d.len() - 1] < threshold;
    Ok(TheoremReport {
        theorem: Theorem::UniformGaps,
        records,
        threshold,
        decreasing,
        final_below_threshold,
        b_within_tolerance: None,
        passed: decreasing && final_below_threshold,
    })
}

/// Compares the measured `δ_k` with `(F L^a / a) N^-a (N/2 - k)` at every `N`.
pub fn check_theorem2(template: &ChainParams, n_list: &[usize]) -> Result<TheoremReport> {
    validate_n_list(n_list)?;
    if template.field().as_constant().is_none() {
        return Err(Error::Hypothesis("the second-order prediction needs a constant field".into()));
    }
    if second_order_hypothesis(template).is_none() {
        return Err(Error::Hypothesis("the second-order prediction needs f(r) = r^-a".into()));
    }
    let records: Vec<TheoremRecord> =
        sweep(template, n_list, DEFAULT_TOL_POSITION)?.into_iter().map(|(r, _)| r).collect();
    let e: Vec<f64> = records
        .iter()
        .map(|r| r.prediction.expect("hypothesis checked").relative_error)
        .collect();
    let decreasing = strictly_decreasing_or_zero(&e);
    let final_below_threshold = e[e.len() - 1] < THEOREM2_THRESHOLD;
    let last = &records[records.len() - 1];
    let b_pred = last.prediction.expect("hypothesis checked").b_predicted;
    let b_ok = if b_pred == 0.0 {
        last.b_measured.abs() < 1e-12
    } else {
        (last.b_measured / b_pred - 1.0).abs() <= B_TOLERANCE
    };
    Ok(TheoremReport {
        theorem: Theorem::SecondOrder,
        records,
        threshold: THEOREM2_THRESHOLD,
        decreasing,
        final_below_threshold,
        b_within_tolerance: Some(b_ok),
        passed: decreasing && final_below_threshold && b_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct N0Report {
    /// Smallest `N` found with no detached equilibrium.
    pub n0: usize,
    /// Every `(N, feasible)` pair evaluated, in search order.
    pub probes: Vec<(usize, bool)>,
}

/// Doubles `N` from `n_start` until no detached equilibrium exists, then
/// bisects back to the smallest such `N`.
pub fn find_n0(template: &ChainParams, n_start: usize) -> Result<N0Report> {
    if n_start < 2 {
        return Err(Error::domain("N_start must be at least 2"));
    }
    let mut probes = Vec::new();
    let mut feasible = |n: usize| -> Result<bool> {
        let f = interior_branch(&template.with_n(n)?).map_err(Error::at_n(n))?.feasible();
        probes.push((n, f));
        Ok(f)
    };
    if !feasible(n_start)? {
        return Ok(N0Report { n0: n_start, probes });
    }
    let mut lo = n_start;
    let mut hi = n_start;
    loop {
        hi = hi.saturating_mul(2);
        if hi > N0_SEARCH_CAP {
            return Err(Error::SearchCap { last_n: lo });
        }
        if !feasible(hi)? {
            break;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(N0Report { n0: hi, probes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumReport {
    pub y: f64,
    pub table_points: usize,
    pub tolerance: f64,
    /// `(x2, max_k |residual_k|)` for each sampled `(0, x2, 1)`.
    pub samples: Vec<(f64, f64)>,
    pub max_residual: f64,
    pub below_tolerance: usize,
    /// At least two distinct sampled configurations are fixed points.
    pub passed: bool,
}

/// Residual tolerance for a sampled degenerate configuration.
pub const CONTINUUM_TOLERANCE: f64 = 1e-6;

/// Samples `(0, x2, 1)` for `sample_count` values of `x2` spanning `[y, 1-y]`
/// under the field that makes each of them an equilibrium.
pub fn continuum_study(law: &PairLaw, y: f64, sample_count: usize, table_points: usize) -> Result<ContinuumReport> {
    if sample_count < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let field = degenerate_three_body_field_with(law, y, table_points)?;
    let params = ChainParams::statics(3, 1.0, law.clone(), field)?;
    let mut samples = Vec::with_capacity(sample_count);
    for j in 0..sample_count {
        let x2 = if j + 1 == sample_count {
            1.0 - y
        } else {
            y + (1.0 - 2.0 * y) * j as f64 / (sample_count - 1) as f64
        };
        let config = Configuration::new(vec![0.0, x2, 1.0])?;
        samples.push((x2, residual(&params, &config)?.max_abs));
    }
    let max_residual = samples.iter().fold(0.0f64, |m, s| m.max(s.1));
    let below_tolerance = samples.iter().filter(|s| s.1 < CONTINUUM_TOLERANCE).count();
    Ok(ContinuumReport {
        y,
        table_points,
        tolerance: CONTINUUM_TOLERANCE,
        samples,
        max_residual,
        below_tolerance,
        passed: below_tolerance >= 2,
    })
}

/// `rho` between the equilibrium of the mirrored problem and the mirror
/// image of the original equilibrium.
pub fn reflection_defect(params: &ChainParams, tol: f64) -> Result<f64> {
    let direct = shoot_solve(params, tol)?.configuration;
    let mirrored = shoot_solve(&params.reflected(), tol)?.configuration;
    distance(&mirrored, &direct.mirrored(params.length()))
}

/// `rho` between the shooting solution and the energy minimiser started from
/// equal spacing.
pub fn oracle_defect(params: &ChainParams, tol_position: f64, tol_grad: f64) -> Result<f64> {
    let shot = shoot_solve(params, tol_position)?.configuration;
    let init = zero_force_solution(params.n(), params.length())?;
    let min = oracle_minimize(params, &init, tol_grad, OracleSettings::default())?;
    distance(&shot, &min)
}

/// Stable 16-hex-digit digest of a field, used to key sweep artifacts.
pub fn field_hash(field: &ForceField) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_string(field).expect("fields serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
