//! Run configuration: chain parameters plus one block per command.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::dynamics::ChainState;
use crate::error::{Error, Result};
use crate::field::ForceField;
use crate::fixedpoint::{shoot_solve, zero_force_solution, DEFAULT_TOL_POSITION};
use crate::potential::PairLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ChainParams,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub degenerate: DegenerateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub tol_position: f64,
    /// Accept when `residual_max < residual_rel_tol * f(L/N)`.
    pub residual_rel_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { tol_position: DEFAULT_TOL_POSITION, residual_rel_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub t_end: f64,
    pub sample_dt: f64,
    pub dt: Option<f64>,
    pub init: InitSpec,
    /// Track `rho` to the solved equilibrium (when `A > 0`).
    pub track_target: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { t_end: 50.0, sample_dt: 0.1, dt: None, init: InitSpec::default(), track_target: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// The solved equilibrium at rest.
    Equilibrium,
    /// Equal spacing at rest.
    Equispaced,
    Random {
        seed: u64,
        #[serde(default = "default_jitter")]
        amplitude: f64,
        #[serde(default)]
        speed: f64,
    },
    Explicit { positions: Vec<f64>, velocities: Vec<f64> },
}

fn default_jitter() -> f64 {
    0.3
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Random { seed: 0, amplitude: default_jitter(), speed: 0.0 }
    }
}

impl InitSpec {
    pub fn build(&self, params: &ChainParams, tol_position: f64) -> Result<ChainState> {
        match self {
            InitSpec::Equilibrium => ChainState::at_rest(params, &shoot_solve(params, tol_position)?.configuration),
            InitSpec::Equispaced => ChainState::at_rest(params, &zero_force_solution(params.n(), params.length())?),
            InitSpec::Random { seed, amplitude, speed } => ChainState::random(params, *seed, *amplitude, *speed),
            InitSpec::Explicit { positions, velocities } => {
                ChainState::new(params, positions.clone(), velocities.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_list: vec![50, 100, 200, 400, 800] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theorem1,
    Theorem2,
    N0,
    Continuum,
    Oracle,
    Reflection,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Theorem1, Suite::Theorem2, Suite::N0, Suite::Continuum, Suite::Oracle, Suite::Reflection];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::N0 => "n0",
            Suite::Continuum => "continuum",
            Suite::Oracle => "oracle",
            Suite::Reflection => "reflection",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub theorem1_n_list: Vec<usize>,
    pub theorem1_tol_schedule: Vec<f64>,
    pub theorem2_n_list: Vec<usize>,
    pub n0_start: usize,
    pub oracle_n_list: Vec<usize>,
    pub reflection_n: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            theorem1_n_list: vec![50, 200, 800],
            theorem1_tol_schedule: vec![0.2, 0.1, 0.05],
            theorem2_n_list: vec![100, 200, 400],
            n0_start: 2,
            oracle_n_list: vec![3, 6, 10],
            reflection_n: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegenerateConfig {
    pub y: f64,
    pub samples: usize,
    pub table_points: usize,
}

impl Default for DegenerateConfig {
    fn default() -> Self {
        Self { y: 0.25, samples: 33, table_points: crate::fixedpoint::DEGENERATE_TABLE_POINTS }
    }
}

impl Default for RunConfig {
    /// Eight particles, `f(r) = r^-2`, unit constant field, unit damping.
    fn default() -> Self {
        let params = ChainParams::new(8, 1.0, 1.0, 1.0, PairLaw::unit_power(2.0).expect("a = 2 is valid"), ForceField::constant(1.0))
            .expect("default parameters are valid");
        Self {
            params,
            output_dir: None,
            solve: SolveConfig::default(),
            simulate: SimulateConfig::default(),
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
            degenerate: DegenerateConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

fn n_list(name: &str, list: &[usize]) -> Result<()> {
    if list.is_empty() || list[0] < 2 || list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} must be a non-empty increasing list of N >= 2")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::domain(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        positive("solve.tol_position", self.solve.tol_position)?;
        positive("solve.residual_rel_tol", self.solve.residual_rel_tol)?;
        positive("simulate.t_end", self.simulate.t_end)?;
        positive("simulate.sample_dt", self.simulate.sample_dt)?;
        if let Some(dt) = self.simulate.dt {
            positive("simulate.dt", dt)?;
        }
        n_list("sweep.n_list", &self.sweep.n_list)?;
        n_list("verify.theorem1_n_list", &self.verify.theorem1_n_list)?;
        n_list("verify.theorem2_n_list", &self.verify.theorem2_n_list)?;
        n_list("verify.oracle_n_list", &self.verify.oracle_n_list)?;
        match self.verify.theorem1_tol_schedule.last() {
            Some(&t) => positive("verify.theorem1_tol_schedule", t)?,
            None => return Err(Error::domain("verify.theorem1_tol_schedule is empty")),
        }
        if self.verify.n0_start < 2 || self.verify.reflection_n < 2 {
            return Err(Error::domain("verify.n0_start and verify.reflection_n must be at least 2"));
        }
        if !(self.degenerate.y > 0.0 && self.degenerate.y < 0.5) {
            return Err(Error::domain(format!("degenerate.y must lie in (0, 1/2), got {}", self.degenerate.y)));
        }
        if self.degenerate.samples < 2 || self.degenerate.table_points < 2 {
            return Err(Error::domain("degenerate.samples and degenerate.table_points must be at least 2"));
        }
        Ok(())
    }

    /// Replaces `N`, the power-law exponent and/or the field by a constant.
    pub fn with_overrides(mut self, n: Option<usize>, exponent: Option<f64>, force: Option<f64>) -> Result<Self> {
        let p = &self.params;
        let law = match exponent {
            None => p.law().clone(),
            Some(a) => match p.law() {
                PairLaw::Power(pl) => PairLaw::power(pl.alpha(), a)?,
                PairLaw::Table(_) => return Err(Error::domain("--a needs a power-law pair force")),
            },
        };
        let field = force.map_or_else(|| p.field().clone(), ForceField::constant);
        self.params = ChainParams::new(n.unwrap_or(p.n()), p.length(), p.mass(), p.damping(), law, field)?;
        Ok(self)
    }

    /// `f(L/N)`, the force scale residuals are measured against.
    pub fn force_scale(&self) -> Result<f64> {
        self.params.law().force(self.params.length() / self.params.n() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"params":{"n":5,"pair_law":{"kind":"power","a":2},"field":{"kind":"constant","value":0}}}"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.params.n(), 5);
        assert_eq!(c.solve, SolveConfig::default());
        assert_eq!(c.verify.suites.len(), 6);
        assert_eq!(c.degenerate.table_points, 4096);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let extra = MINIMAL.replace("\"params\"", "\"bogus\":1,\"params\"");
        assert!(RunConfig::from_json(&extra).is_err());
        let nested = MINIMAL.replace("}}}", "}},\"solve\":{\"tol\":1}}");
        assert!(RunConfig::from_json(&nested).is_err());
        let neg = MINIMAL.replace("}}}", "}},\"simulate\":{\"t_end\":-1}}");
        assert!(RunConfig::from_json(&neg).is_err());
        let unsorted = MINIMAL.replace("}}}", "}},\"sweep\":{\"n_list\":[20,10]}}");
        assert!(RunConfig::from_json(&unsorted).is_err());
        assert!(RunConfig::from_json("{").is_err());
    }

    #[test]
    fn init_specs_parse() {
        let c = RunConfig::from_json(&MINIMAL.replace(
            "}}}",
            "}},\"simulate\":{\"init\":{\"kind\":\"random\",\"seed\":3,\"speed\":0.1}}}",
        ))
        .unwrap();
        assert_eq!(c.simulate.init, InitSpec::Random { seed: 3, amplitude: 0.3, speed: 0.1 });
        let s = c.simulate.init.build(&c.params, 1e-12).unwrap();
        assert_eq!(s.positions.len(), 5);
        let eq = InitSpec::Equispaced.build(&c.params, 1e-12).unwrap();
        assert_eq!(eq.positions, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn overrides() {
        let c = RunConfig::default().with_overrides(Some(3), Some(3.0), Some(2.0)).unwrap();
        assert_eq!(c.params.n(), 3);
        assert_eq!(c.params.law().exponent(), Some(3.0));
        assert_eq!(c.params.field().as_constant(), Some(2.0));
        assert!(RunConfig::default().with_overrides(Some(1), None, None).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::default();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
