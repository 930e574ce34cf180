//! `chainfix`: equilibria, damped dynamics and asymptotic checks for 1D
//! particle chains.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 no
//! equilibrium found (or residual above tolerance), 4 integrator stiffness,
//! 5 a verification suite failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainfix::analysis::{
    check_theorem1, check_theorem2, continuum_study, find_n0, oracle_defect, reflection_defect, sweep,
};
use chainfix::config::{RunConfig, Suite};
use chainfix::dynamics::{simulate, SimulationSettings, ENERGY_SLACK};
use chainfix::fixedpoint::{interior_branch, shoot_solve};
use chainfix::output::{
    continuum_csv, positions_csv, report_csv, result_json, sweep_key, to_pretty_json, trajectory_csv,
    wall_events_csv, write_artifacts,
};
use chainfix::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

const DEFAULT_OUT_DIR: &str = "chainfix-out";
const CONSERVATION_TOLERANCE: f64 = 1e-6;
const CONVERGENCE_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "chainfix", version, about = "Equilibria and damped dynamics of 1D particle chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the equilibrium with both end particles on the walls.
    Solve(Common),
    /// Integrate the damped dynamics and record energy and distance to equilibrium.
    Simulate(Common),
    /// Solve over a list of chain lengths and tabulate gap statistics.
    Sweep(Common),
    /// Run the verification suites selected in the config.
    Verify(Common),
    /// Sample the three-particle continuum of equilibria.
    Degenerate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of particles.
    #[arg(long)]
    n: Option<usize>,
    /// Pair-force exponent a in f(r) = alpha r^-a.
    #[arg(long)]
    a: Option<f64>,
    /// Replace the field by a constant.
    #[arg(long = "force-const", allow_negative_numbers = true)]
    force_const: Option<f64>,
    /// Output directory (else the config's output_dir, then $CHAIN_OUT_DIR).
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

struct Failure {
    code: u8,
    category: &'static str,
    message: String,
    details: Value,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, category: "config", message: message.into(), details: Value::Null }
    }

    fn io(e: std::io::Error) -> Self {
        Self { code: 1, category: "io", message: e.to_string(), details: Value::Null }
    }

    fn to_json(&self) -> Value {
        json!({ "error": self.category, "exit_code": self.code, "message": self.message, "details": self.details })
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e.root() {
            Error::Domain(_) | Error::Hypothesis(_) | Error::NotMonotone { .. } => Failure::config(message),
            Error::Stiffness { time, dt, min_gap, positions, velocities } => Failure {
                code: 4,
                category: "stiffness",
                message,
                details: json!({ "time": time, "dt": dt, "min_gap": min_gap, "positions": positions, "velocities": velocities }),
            },
            _ => Failure { code: 3, category: "no_solution", message, details: Value::Null },
        }
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(|e| Failure::config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    let config = config
        .with_overrides(common.n, common.a, common.force_const)
        .map_err(|e| Failure::config(e.to_string()))?;
    config.validate().map_err(|e| Failure::config(e.to_string()))?;
    let out_dir = common
        .out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os("CHAIN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok((config, out_dir))
}

type Files = Vec<(String, String)>;

fn cmd_solve(config: &RunConfig) -> Result<(Files, Value, Option<Failure>), Failure> {
    let result = shoot_solve(&config.params, config.solve.tol_position)?;
    let tolerance = config.solve.residual_rel_tol * config.force_scale()?;
    let summary = result_json(&result);
    let files = vec![
        ("positions.csv".to_string(), positions_csv(&result.configuration)),
        ("result.json".to_string(), to_pretty_json(&summary)),
    ];
    let failure = (result.residual_max >= tolerance).then(|| Failure {
        code: 3,
        category: "no_solution",
        message: format!("residual {:e} exceeds tolerance {:e}", result.residual_max, tolerance),
        details: summary.clone(),
    });
    Ok((files, summary, failure))
}

fn cmd_simulate(config: &RunConfig) -> Result<(Files, Value, Option<Failure>), Failure> {
    let p = &config.params;
    let sim = &config.simulate;
    let init = sim.init.build(p, config.solve.tol_position)?;
    let target = if p.damping() > 0.0 && sim.track_target {
        Some(shoot_solve(p, config.solve.tol_position)?.configuration)
    } else {
        None
    };
    let rec = simulate(p, &init, sim.t_end, sim.sample_dt, target.as_ref(), SimulationSettings { dt: sim.dt })?;
    let check = if p.damping() > 0.0 {
        let rise = rec.max_energy_rise();
        json!({ "kind": "dissipation", "max_energy_rise": rise, "passed": rise <= ENERGY_SLACK })
    } else {
        let drift = rec.max_energy_drift();
        json!({ "kind": "conservation", "max_energy_drift": drift, "passed": drift < CONSERVATION_TOLERANCE })
    };
    let summary = json!({
        "t_end": rec.final_state.time,
        "dt": rec.dt,
        "samples": rec.samples.len(),
        "wall_events": rec.events.len(),
        "steps_accepted": rec.stats.accepted,
        "steps_rejected": rec.stats.rejected,
        "final_energy": rec.samples.last().map(|s| s.energy),
        "final_rho": rec.samples.last().and_then(|s| s.rho),
        "first_passage": rec.first_passage(CONVERGENCE_TOLERANCE),
        "energy_check": check,
        "final_positions": rec.final_state.positions,
    });
    let files = vec![
        ("trajectory.csv".to_string(), trajectory_csv(&rec)),
        ("wall_events.csv".to_string(), wall_events_csv(&rec)),
        ("summary.json".to_string(), to_pretty_json(&summary)),
    ];
    Ok((files, summary, None))
}

fn cmd_sweep(config: &RunConfig) -> Result<(Files, Value, Option<Failure>), Failure> {
    let rows = sweep(&config.params, &config.sweep.n_list, config.solve.tol_position)?;
    let mut files = Vec::new();
    for (record, positions) in &rows {
        let key = sweep_key(&config.params.with_n(record.n)?);
        files.push((format!("sweep/{key}.csv"), positions_csv(positions)));
    }
    let records: Vec<_> = rows.into_iter().map(|(r, _)| r).collect();
    files.push(("report.csv".to_string(), report_csv(&records)));
    let summary = json!({ "records": records });
    files.push(("summary.json".to_string(), to_pretty_json(&summary)));
    Ok((files, summary, None))
}

/// Runs one suite; `Err` only for failures that are not verdicts.
fn run_suite(config: &RunConfig, suite: Suite, files: &mut Files) -> Result<Value, Error> {
    let p = &config.params;
    let v = &config.verify;
    let tol = config.solve.tol_position;
    Ok(match suite {
        Suite::Theorem1 => {
            let r = check_theorem1(p, &v.theorem1_n_list, &v.theorem1_tol_schedule)?;
            files.push(("theorem1/report.csv".into(), report_csv(&r.records)));
            json!({ "passed": r.passed, "D": r.tracked(), "decreasing": r.decreasing,
                    "threshold": r.threshold, "final_below_threshold": r.final_below_threshold })
        }
        Suite::Theorem2 => {
            let r = check_theorem2(p, &v.theorem2_n_list)?;
            files.push(("theorem2/report.csv".into(), report_csv(&r.records)));
            let last = r.records.last().and_then(|r| r.prediction);
            json!({ "passed": r.passed, "E": r.tracked(), "decreasing": r.decreasing,
                    "final_below_threshold": r.final_below_threshold, "b_within_tolerance": r.b_within_tolerance,
                    "edge_relative_error": last.map(|p| p.edge_relative_error),
                    "bulk_relative_error": last.map(|p| p.bulk_relative_error) })
        }
        Suite::N0 => {
            let r = find_n0(p, v.n0_start)?;
            let at = |n: usize| -> Result<bool, Error> { Ok(interior_branch(&p.with_n(n)?)?.feasible()) };
            let (f2, f4) = (at(2 * r.n0)?, at(4 * r.n0)?);
            json!({ "passed": !f2 && !f4, "n0": r.n0, "feasible_at_2n0": f2, "feasible_at_4n0": f4,
                    "probes": r.probes })
        }
        Suite::Continuum => {
            let d = &config.degenerate;
            let r = continuum_study(p.law(), d.y, d.samples, d.table_points)?;
            files.push(("continuum/degenerate.csv".into(), continuum_csv(&r)));
            json!({ "passed": r.passed, "below_tolerance": r.below_tolerance, "samples": r.samples.len(),
                    "max_residual": r.max_residual })
        }
        Suite::Oracle => {
            let mut rhos = Vec::new();
            let mut passed = true;
            for &n in &v.oracle_n_list {
                let rho = oracle_defect(&p.with_n(n)?, tol, 1e-10).map_err(Error::at_n(n))?;
                passed &= rho < 1e-6 * n as f64;
                rhos.push(json!({ "n": n, "rho": rho }));
            }
            json!({ "passed": passed, "rho": rhos })
        }
        Suite::Reflection => {
            let n = v.reflection_n;
            let rho = reflection_defect(&p.with_n(n)?, tol)?;
            json!({ "passed": rho < 1e-9 * n as f64, "n": n, "rho": rho })
        }
    })
}

fn cmd_verify(config: &RunConfig) -> Result<(Files, Value, Option<Failure>), Failure> {
    let mut files = Vec::new();
    let mut suites = serde_json::Map::new();
    let mut failing = Vec::new();
    for &suite in &config.verify.suites {
        let verdict = run_suite(config, suite, &mut files)
            .unwrap_or_else(|e| json!({ "passed": false, "error": e.to_string() }));
        if verdict["passed"] != Value::Bool(true) {
            failing.push(suite.name());
        }
        suites.insert(suite.name().to_string(), verdict);
    }
    let summary = json!({ "passed": failing.is_empty(), "failing": failing, "suites": suites });
    files.push(("summary.json".into(), to_pretty_json(&summary)));
    let failure = (!failing.is_empty()).then(|| Failure {
        code: 5,
        category: "verification",
        message: format!("failing suites: {}", failing.join(", ")),
        details: json!(failing),
    });
    Ok((files, summary, failure))
}

fn cmd_degenerate(config: &RunConfig) -> Result<(Files, Value, Option<Failure>), Failure> {
    let d = &config.degenerate;
    let r = continuum_study(config.params.law(), d.y, d.samples, d.table_points)?;
    let summary = json!({
        "y": r.y, "table_points": r.table_points, "tolerance": r.tolerance,
        "samples": r.samples.len(), "below_tolerance": r.below_tolerance,
        "max_residual": r.max_residual, "passed": r.passed,
    });
    let files = vec![
        ("degenerate.csv".to_string(), continuum_csv(&r)),
        ("summary.json".to_string(), to_pretty_json(&summary)),
    ];
    let failure = (!r.passed).then(|| Failure {
        code: 5,
        category: "verification",
        message: format!("only {} sampled configurations are fixed points", r.below_tolerance),
        details: Value::Null,
    });
    Ok((files, summary, failure))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    let (common, handler): (&Common, fn(&RunConfig) -> Result<(Files, Value, Option<Failure>), Failure>) =
        match &cli.command {
            Command::Solve(c) => (c, cmd_solve),
            Command::Simulate(c) => (c, cmd_simulate),
            Command::Sweep(c) => (c, cmd_sweep),
            Command::Verify(c) => (c, cmd_verify),
            Command::Degenerate(c) => (c, cmd_degenerate),
        };
    let (config, out_dir) = load(common)?;
    match handler(&config) {
        Ok((files, summary, failure)) => {
            write_artifacts(&out_dir, &files).map_err(Failure::io)?;
            match failure {
                None => Ok(summary),
                Some(f) => Err(f),
            }
        }
        Err(f) if f.code == 2 => Err(f),
        Err(f) => {
            write_error(&out_dir, &f)?;
            Err(f)
        }
    }
}

fn write_error(out_dir: &Path, failure: &Failure) -> Result<(), Failure> {
    write_artifacts(out_dir, &[("error.json".into(), to_pretty_json(&failure.to_json()))]).map_err(Failure::io)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", serde_json::to_string(&f.to_json()).expect("JSON values serialize"));
            ExitCode::from(f.code)
        }
    }
}
