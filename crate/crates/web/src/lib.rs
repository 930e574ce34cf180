//! Browser bindings for the `www/` demo page. Each export takes plain
//! numbers and returns a JSON string; the work happens in ordinary Rust
//! functions that are tested natively.

use chainfix::analysis::{gap_profile, predicted_deltas, sweep};
use chainfix::dynamics::{simulate, ChainState, SimulationSettings};
use chainfix::fixedpoint::{shoot_solve, DEFAULT_TOL_POSITION};
use chainfix::{ChainParams, ForceField, PairLaw};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest chain the page may request.
pub const MAX_PARTICLES: usize = 5000;
/// Largest chain the page may integrate in time.
pub const MAX_DYNAMIC_PARTICLES: usize = 200;

fn params(n: usize, a: f64, c0: f64, c1: f64, damping: f64) -> Result<ChainParams, String> {
    if n > MAX_PARTICLES {
        return Err(format!("N is limited to {MAX_PARTICLES}"));
    }
    let law = PairLaw::unit_power(a).map_err(|e| e.to_string())?;
    ChainParams::new(n, 1.0, 1.0, damping, law, ForceField::affine(c0, c1)).map_err(|e| e.to_string())
}

/// Equilibrium for `F(x) = c0 + c1 x` on `[0, 1]`: positions, relative gap
/// deviations and, for a constant field, the second-order prediction.
pub fn equilibrium(n: usize, a: f64, c0: f64, c1: f64) -> Result<Value, String> {
    let p = params(n, a, c0, c1, 0.0)?;
    let solved = shoot_solve(&p, DEFAULT_TOL_POSITION).map_err(|e| e.to_string())?;
    let profile = gap_profile(&solved.configuration, 1.0).map_err(|e| e.to_string())?;
    let predicted = (c1 == 0.0).then(|| predicted_deltas(c0, a, 1.0, n));
    Ok(json!({
        "positions": solved.configuration.positions(),
        "deltas": profile.deltas,
        "predicted": predicted,
        "max_abs_delta": profile.max_abs_delta(),
        "residual_max": solved.residual_max,
    }))
}

/// Damped relaxation from a seeded random start towards the equilibrium:
/// sampled energy and distance curves plus final positions.
pub fn relaxation(n: usize, a: f64, c0: f64, c1: f64, damping: f64, seed: u64, t_end: f64) -> Result<Value, String> {
    if !(t_end > 0.0 && t_end <= 500.0) {
        return Err("t_end must lie in (0, 500]".into());
    }
    if n > MAX_DYNAMIC_PARTICLES {
        return Err(format!("relaxation is limited to N = {MAX_DYNAMIC_PARTICLES}"));
    }
    let p = params(n, a, c0, c1, damping)?;
    let target = shoot_solve(&p, DEFAULT_TOL_POSITION).map_err(|e| e.to_string())?.configuration;
    let init = ChainState::random(&p, seed, 0.6, 0.5).map_err(|e| e.to_string())?;
    let rec = simulate(&p, &init, t_end, t_end / 400.0, Some(&target), SimulationSettings::default())
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "t": rec.samples.iter().map(|s| s.time).collect::<Vec<_>>(),
        "energy": rec.samples.iter().map(|s| s.energy).collect::<Vec<_>>(),
        "rho": rec.samples.iter().map(|s| s.rho).collect::<Vec<_>>(),
        "wall_events": rec.events.len(),
        "initial": init.positions,
        "final": rec.final_state.positions,
        "target": target.positions(),
    }))
}

/// `D(N)`, `E(N)` and the first-gap excess against its prediction over a
/// doubling sequence of chain lengths, for a constant field.
pub fn scaling(a: f64, force: f64, n_min: usize, steps: usize) -> Result<Value, String> {
    if n_min < 3 || steps == 0 || steps > 8 {
        return Err("need N_min >= 3 and 1 to 8 doublings".into());
    }
    let n_list: Vec<usize> = (0..steps).map(|i| n_min << i).collect();
    let p = params(n_min, a, force, 0.0, 0.0)?;
    if n_list[steps - 1] > MAX_PARTICLES {
        return Err(format!("N is limited to {MAX_PARTICLES}"));
    }
    let rows = sweep(&p, &n_list, DEFAULT_TOL_POSITION).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": n_list,
        "d": rows.iter().map(|(r, _)| r.max_rel_gap_deviation).collect::<Vec<_>>(),
        "e": rows.iter().map(|(r, _)| r.prediction.map(|p| p.relative_error)).collect::<Vec<_>>(),
        "b_measured": rows.iter().map(|(r, _)| r.b_measured).collect::<Vec<_>>(),
        "b_predicted": rows.iter().map(|(r, _)| r.prediction.map(|p| p.b_predicted)).collect::<Vec<_>>(),
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = equilibrium)]
pub fn equilibrium_js(n: usize, a: f64, c0: f64, c1: f64) -> Result<String, JsValue> {
    to_js(equilibrium(n, a, c0, c1))
}

#[wasm_bindgen(js_name = relaxation)]
pub fn relaxation_js(n: usize, a: f64, c0: f64, c1: f64, damping: f64, seed: u32, t_end: f64) -> Result<String, JsValue> {
    to_js(relaxation(n, a, c0, c1, damping, seed as u64, t_end))
}

#[wasm_bindgen(js_name = scaling)]
pub fn scaling_js(a: f64, force: f64, n_min: usize, steps: usize) -> Result<String, JsValue> {
    to_js(scaling(a, force, n_min, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_constant_field_has_prediction() {
        let v = equilibrium(50, 2.0, 1.0, 0.0).unwrap();
        assert_eq!(v["positions"].as_array().unwrap().len(), 50);
        assert_eq!(v["deltas"].as_array().unwrap().len(), 49);
        assert_eq!(v["predicted"].as_array().unwrap().len(), 49);
        let d1 = v["deltas"][0].as_f64().unwrap();
        let p1 = v["predicted"][0].as_f64().unwrap();
        assert!((d1 / p1 - 1.0).abs() < 0.1);
    }

    #[test]
    fn equilibrium_sloped_field_has_no_prediction() {
        let v = equilibrium(20, 2.0, 1.0, -1.0).unwrap();
        assert!(v["predicted"].is_null());
        assert!(equilibrium(1, 2.0, 1.0, 0.0).is_err());
        assert!(equilibrium(MAX_PARTICLES + 1, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn relaxation_dissipates_and_approaches_target() {
        let v = relaxation(8, 2.0, 1.0, 0.0, 1.0, 3, 40.0).unwrap();
        let h: Vec<f64> = v["energy"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(h.len(), 401);
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())));
        assert!(v["rho"][400].as_f64().unwrap() < 1e-4);
        assert!(relaxation(8, 2.0, 1.0, 0.0, 1.0, 3, 0.0).is_err());
        assert!(relaxation(MAX_DYNAMIC_PARTICLES + 1, 2.0, 1.0, 0.0, 1.0, 3, 1.0).is_err());
    }

    #[test]
    fn scaling_doubles_and_shrinks() {
        let v = scaling(2.0, 1.0, 25, 4).unwrap();
        assert_eq!(v["n"], json!([25, 50, 100, 200]));
        let d: Vec<f64> = v["d"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        assert!(scaling(2.0, 1.0, 25, 0).is_err());
        assert!(scaling(2.0, 1.0, 1000, 8).is_err());
    }
}
