//! Browser bindings. Each export takes an experiment config as JSON (the TOML
//! schema, same field names) and returns a JSON string.

use ruinsim_core::engine::{gbar_table, geometric_grid, EmpiricalTail};
use ruinsim_core::experiment::{Experiment, ExperimentConfig};
use ruinsim_core::tail::{deepest_decade, default_k, hill_estimator, loglog_slope, MIN_HILL_K};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const CURVE_POINTS: usize = 81;
const PROFILE_POINTS: usize = 25;

fn build(config: &str) -> Result<Experiment, String> {
    let config: ExperimentConfig = serde_json::from_str(config).map_err(|e| format!("config: {e}"))?;
    config.build().map_err(|e| e.to_string())
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Cumulant curve, exponential domain, positive root and condition report.
pub fn cumulant_json(config: &str) -> Result<String, String> {
    let exp = build(config)?;
    let d = exp.model.domain_bounds();
    let report = exp.conditions();
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "status": c.status.as_str(), "detail": c.detail }))
        .collect();
    let curve: Vec<Value> = exp.cumulant_curve(CURVE_POINTS).into_iter().map(|(q, h)| json!([q, finite(h)])).collect();
    Ok(json!({
        "beta": exp.beta.beta(),
        "a_v": exp.model.a_v(),
        "domain": [finite(d.q_lower), finite(d.q_upper)],
        "curve": curve,
        "overall": report.overall().as_str(),
        "checks": checks,
    })
    .to_string())
}

/// Bracket and direct crossing frequency on the configured thresholds.
pub fn ruin_json(config: &str) -> Result<String, String> {
    let exp = build(config)?;
    exp.beta.require().map_err(|e| e.to_string())?;
    let samples = exp.perpetuities().map_err(|e| e.to_string())?;
    let run = exp.ruin(&samples, None).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = run
        .table
        .iter()
        .map(|r| {
            json!({
                "u": r.u,
                "lower": r.lower,
                "upper": r.upper,
                "direct": r.direct.map(|d| d.value),
                "direct_stderr": r.direct.map(|d| d.stderr),
            })
        })
        .collect();
    Ok(json!({ "beta": exp.beta.beta(), "n_paths": samples.len(), "rows": rows }).to_string())
}

/// Empirical tail of the perpetuity on a geometric grid, with the log-log
/// slope over the deepest decade and the Hill estimate when there is enough data.
pub fn tail_json(config: &str) -> Result<String, String> {
    let exp = build(config)?;
    exp.beta.require().map_err(|e| e.to_string())?;
    let samples = exp.perpetuities().map_err(|e| e.to_string())?;
    let tail = EmpiricalTail::from_perpetuities(&samples).map_err(|e| e.to_string())?;
    let window = deepest_decade(&tail).ok().filter(|(lo, _)| *lo > 0.0);
    let hi = window.map_or_else(|| tail.quantile(0.999).max(1e-3), |w| w.1);
    let grid = geometric_grid(hi * 1e-3, hi, PROFILE_POINTS);
    let profile: Vec<Value> = gbar_table(&tail, &grid)
        .iter()
        .map(|p| json!({ "u": p.u, "gbar": p.gbar, "stderr": p.stderr }))
        .collect();
    let slope = window.and_then(|(lo, hi)| loglog_slope(&gbar_table(&tail, &geometric_grid(lo, hi, 11))).ok());
    let k = default_k(tail.sorted());
    let hill = if k >= MIN_HILL_K { hill_estimator(tail.sorted(), k).ok() } else { None };
    Ok(json!({
        "beta": exp.beta.beta(),
        "gbar0": tail.gbar(0.0),
        "profile": profile,
        "window": window.map(|(lo, hi)| [lo, hi]),
        "slope": slope.map(|s| json!({ "beta_hat": -s.slope, "stderr": s.stderr })),
        "hill": hill.map(|h| json!({ "beta_hat": h.value, "lo": h.lo, "hi": h.hi, "k": k })),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn cumulant(config: &str) -> Result<String, JsError> {
    cumulant_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ruin(config: &str) -> Result<String, JsError> {
    ruin_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tail(config: &str) -> Result<String, JsError> {
    tail_json(config).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(n_paths: u64) -> String {
        let mut c = ExperimentConfig::reference(5, n_paths);
        c.run.u_grid = Some("0.5,1".into());
        c.run.direct_paths = 200;
        serde_json::to_string(&c).unwrap()
    }

    #[test]
    fn cumulant_reports_the_root() {
        let v: Value = serde_json::from_str(&cumulant_json(&reference(10)).unwrap()).unwrap();
        assert!((v["beta"].as_f64().unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(v["curve"].as_array().unwrap().len(), CURVE_POINTS);
        assert_eq!(v["overall"], "pass");
    }

    #[test]
    fn ruin_rows_follow_the_grid() {
        let v: Value = serde_json::from_str(&ruin_json(&reference(500)).unwrap()).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r["direct"].as_f64().unwrap() > 0.0));
    }

    #[test]
    fn tail_profile_decreases() {
        let v: Value = serde_json::from_str(&tail_json(&reference(2000)).unwrap()).unwrap();
        let g: Vec<f64> = v["profile"].as_array().unwrap().iter().map(|p| p["gbar"].as_f64().unwrap()).collect();
        assert_eq!(g.len(), PROFILE_POINTS);
        assert!(g.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bad_config_is_an_error() {
        assert!(cumulant_json("{}").unwrap_err().starts_with("config"));
        let mut c = ExperimentConfig::reference(1, 10);
        c.model.a = 0.01;
        assert!(ruin_json(&serde_json::to_string(&c).unwrap()).is_err());
    }
}
