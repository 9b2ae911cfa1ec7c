use std::path::{Path, PathBuf};
use std::time::Instant;

use ruinsim_core::conditions::{CheckStatus, ConditionReport};
use ruinsim_core::engine::{flagged_fraction, EmpiricalTail, KestenDiagnostics, MAX_FLAGGED_FRACTION, MAX_UNEXPLAINED_FRACTION};
use ruinsim_core::experiment::{saturations, Experiment, ExperimentConfig};
use ruinsim_core::io;
use ruinsim_core::model::BetaStatus;
use ruinsim_core::tail::{analyze_tail, TailConfig};

use crate::config::{self, Overrides};
use crate::error::{io_err, CliError, CliResult};
use crate::manifest::{RunManifest, Tallies};
use crate::Common;

const OK: u8 = 0;
const WARN: u8 = 2;
const FAIL: u8 = 3;
const QUALITY: u8 = 4;

fn overrides(c: &Common) -> Overrides {
    Overrides {
        seed: c.seed,
        workers: c.workers,
        paths: c.paths,
        u_grid: c.u.clone(),
    }
}

fn load(c: &Common) -> CliResult<ExperimentConfig> {
    let path = c
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    config::load(path, &overrides(c))
}

fn out_dir(c: &Common) -> CliResult<PathBuf> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str, outputs: &mut Vec<String>) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(io_err(&path))?;
    outputs.push(name.to_string());
    Ok(())
}

fn condition_code(report: &ConditionReport) -> u8 {
    match report.overall() {
        CheckStatus::Pass => OK,
        CheckStatus::Warn => WARN,
        CheckStatus::Fail => FAIL,
    }
}

fn print_conditions(report: &ConditionReport) {
    out!("conditions: {}", report.overall().as_str());
    for c in &report.checks {
        out!("  {:<28} {:<4} {}", c.name, c.status.as_str(), c.detail);
    }
    for w in &report.warnings {
        out!("  warning: {w}");
    }
}

fn manifest(command: &str, exp: &Experiment, start: Instant, tallies: Tallies, outputs: Vec<String>) -> RunManifest {
    RunManifest {
        command: command.into(),
        config_hash: config::config_hash(&exp.config),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        tallies,
        outputs,
        config: exp.config.clone(),
    }
}

/// `(q, H(q))` on `[0, q_max]`, with `q_max` twice the root when it exists,
/// else the smaller of 10 and the domain edge.
pub fn model(c: &Common, require_beta: bool) -> CliResult<u8> {
    let start = Instant::now();
    let exp = load(c)?.build()?;
    let m = &exp.model;
    let d = m.domain_bounds();
    out!("a_V = {}", m.a_v());
    out!("drift between jumps = {}", m.drift_between_jumps());
    out!("domain = ({}, {})", d.q_lower, d.q_upper);
    out!("D+H(0) = {}", m.right_derivative_at_zero());
    match &exp.beta.status {
        BetaStatus::Found { beta } => out!("beta = {beta:.10}"),
        BetaStatus::NoPositiveRoot { reason } => out!("beta: no positive root ({reason})"),
        BetaStatus::DegenerateNonpositive { reason } => out!("beta: degenerate, nonpositive ({reason})"),
    }
    let grid = exp.cumulant_curve(41);
    let mut csv = String::from("q,h\n");
    for (q, h) in &grid {
        csv.push_str(&format!("{q},{h}\n"));
    }
    {
        use std::io::Write as _;
        let _ = std::io::stdout().write_all(csv.as_bytes());
    }
    let report = exp.conditions();
    print_conditions(&report);
    if c.out.is_some() {
        let dir = out_dir(c)?;
        let mut outputs = Vec::new();
        write(&dir, "cumulant.csv", &csv, &mut outputs)?;
        manifest("model", &exp, start, Tallies::default(), outputs).write(&dir)?;
    }
    if require_beta && exp.beta.beta().is_none() {
        return Ok(FAIL);
    }
    Ok(OK)
}

pub fn simulate(c: &Common, cycles: bool, perpetuities: bool) -> CliResult<u8> {
    let start = Instant::now();
    let exp = load(c)?.build()?;
    exp.beta.require()?;
    let dir = out_dir(c)?;
    let mut outputs = Vec::new();
    let mut tallies = Tallies::default();
    if cycles {
        let s = exp.cycles()?;
        tallies.cycles = s.len() as u64;
        tallies.saturated_cycles = saturations(&s);
        write(&dir, "cycles.csv", &io::write_cycles(&s), &mut outputs)?;
    }
    let mut flagged_share = 0.0;
    if perpetuities {
        let s = exp.perpetuities()?;
        tallies.perpetuities = s.len() as u64;
        tallies.flagged_perpetuities = s.iter().filter(|p| p.flagged).count() as u64;
        flagged_share = flagged_fraction(&s);
        write(&dir, "perpetuities.csv", &io::write_perpetuities(&s), &mut outputs)?;
    }
    out!(
        "cycles {} (saturated {}), perpetuities {} (flagged {})",
        tallies.cycles, tallies.saturated_cycles, tallies.perpetuities, tallies.flagged_perpetuities
    );
    let quality = tallies.saturated_cycles > 0 || flagged_share > MAX_FLAGGED_FRACTION;
    manifest("simulate", &exp, start, tallies, outputs).write(&dir)?;
    if quality {
        eprintln!("error: saturation or truncation-flag threshold exceeded");
        return Ok(QUALITY);
    }
    Ok(condition_code(&exp.conditions()))
}

fn kesten_csv(k: &KestenDiagnostics) -> String {
    let mut s = String::from("statistic,value,stderr,n\n");
    for (name, e) in [
        ("e_m_beta", k.e_m_beta),
        ("e_m_beta_logm_plus", k.e_m_beta_logm_plus),
        ("e_q_beta", k.e_q_beta),
    ] {
        s.push_str(&format!("{name},{},{},{}\n", e.value, e.stderr, k.n));
    }
    s
}

pub fn ruin(c: &Common, direct: Option<u64>) -> CliResult<u8> {
    let start = Instant::now();
    let mut cfg = load(c)?;
    if let Some(n) = direct {
        cfg.run.direct_paths = n;
    }
    let exp = cfg.build()?;
    let beta = exp.beta.require()?;
    let dir = out_dir(c)?;
    let samples = exp.perpetuities()?;
    let cycles = exp.cycles()?;
    let run = exp.ruin(&samples, Some(&cycles))?;
    let mut tallies = Tallies {
        cycles: cycles.len() as u64,
        perpetuities: samples.len() as u64,
        saturated_cycles: saturations(&cycles),
        flagged_perpetuities: run.flagged,
        direct_paths: exp.config.run.direct_paths,
        ..Tallies::default()
    };
    for d in &run.direct {
        tallies.censored = tallies.censored.max(d.censored);
        tallies.horizon_censored = tallies.horizon_censored.max(d.horizon_censored);
        tallies.relative_unexplained_mass = tallies.relative_unexplained_mass.max(d.relative_unexplained());
    }
    out!("beta = {beta}");
    out!("u,lower,upper,direct");
    for r in &run.table {
        let upper = r.upper.map_or("inf".to_string(), |u| u.to_string());
        let direct = r.direct.map_or(String::new(), |d| format!("{} +- {}", d.value, d.stderr));
        out!("{},{},{},{}", r.u, r.lower, upper, direct);
    }
    let mut outputs = Vec::new();
    write(&dir, "ruin.csv", &io::write_ruin_table(&run.table), &mut outputs)?;
    if let Some(k) = &run.kesten {
        out!(
            "kesten: E M^beta = {} +- {}, E M^beta (ln M)+ = {}, E |Q|^beta = {}",
            k.e_m_beta.value, k.e_m_beta.stderr, k.e_m_beta_logm_plus.value, k.e_q_beta.value
        );
        write(&dir, "kesten.csv", &kesten_csv(k), &mut outputs)?;
    }
    let quality = tallies.saturated_cycles > 0 || tallies.relative_unexplained_mass > MAX_UNEXPLAINED_FRACTION;
    manifest("ruin", &exp, start, tallies, outputs).write(&dir)?;
    if quality {
        eprintln!("error: saturation or censoring threshold exceeded");
        return Ok(QUALITY);
    }
    Ok(condition_code(&exp.conditions()))
}

pub fn tail(c: &Common, csv: Option<&Path>) -> CliResult<u8> {
    let start = Instant::now();
    let exp = match &c.config {
        Some(_) => Some(load(c)?.build()?),
        None => None,
    };
    let samples = match (csv, &exp) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            io::read_perpetuities(&text)?
        }
        (None, Some(e)) => {
            e.beta.require()?;
            e.perpetuities()?
        }
        (None, None) => return Err(CliError::Config("tail needs --config or --csv".into())),
    };
    let tail = EmpiricalTail::from_perpetuities(&samples)?;
    let grid = match &c.u {
        Some(spec) => Some(ruinsim_core::experiment::UGridSpec::parse(spec)?.points()),
        None => match &exp {
            Some(e) if e.config.run.u_grid.is_some() => Some(e.u_grid(&samples)?),
            _ => None,
        },
    };
    let model_beta = exp.as_ref().and_then(|e| e.beta.beta());
    let tail_config = exp.as_ref().map(|e| e.tail_config()).unwrap_or_else(|| TailConfig {
        seed: c.seed.unwrap_or(0),
        ..TailConfig::default()
    });
    // Without a model the constant is computed at the Hill estimate.
    let beta_for_constant = match model_beta {
        Some(b) => b,
        None => {
            let k = ruinsim_core::tail::default_k(tail.sorted());
            ruinsim_core::tail::hill_estimator(tail.sorted(), k)?.value
        }
    };
    let est = analyze_tail(&tail, beta_for_constant, grid.as_deref(), &tail_config)?;
    let rows = io::tail_rows(&est);
    for r in &rows {
        out!("{:<7} {} [{}, {}] ({})", r.estimator, r.value, r.ci_lo, r.ci_hi, r.k_or_window);
    }
    match model_beta {
        Some(b) => {
            for (name, i) in [("hill", est.beta_hat_hill), ("slope", est.beta_hat_slope)] {
                let half = 0.5 * (i.hi - i.lo);
                out!("{name}: beta_hat - beta = {:.4} ({:.2} CI half-widths)", i.value - b, (i.value - b) / half);
            }
        }
        None => out!("no model beta: C+ evaluated at the Hill estimate"),
    }
    for w in &est.warnings {
        out!("warning: {w}");
    }
    if let Some(e) = &exp {
        let dir = out_dir(c)?;
        let mut outputs = Vec::new();
        write(&dir, "tail.csv", &io::write_tail_report(&rows), &mut outputs)?;
        let tallies = Tallies {
            perpetuities: samples.len() as u64,
            flagged_perpetuities: samples.iter().filter(|p| p.flagged).count() as u64,
            ..Tallies::default()
        };
        manifest("tail", e, start, tallies, outputs).write(&dir)?;
        return Ok(condition_code(&e.conditions()));
    }
    let dir = out_dir(c)?;
    let path = dir.join("tail.csv");
    std::fs::write(&path, io::write_tail_report(&rows)).map_err(io_err(&path))?;
    Ok(OK)
}

pub fn check(c: &Common) -> CliResult<u8> {
    let exp = load(c)?.build()?;
    let report = exp.conditions();
    let json = serde_json::json!({
        "overall": report.overall(),
        "beta": exp.beta,
        "report": report,
    });
    out!("{}", serde_json::to_string_pretty(&json).expect("report serialises"));
    Ok(condition_code(&report))
}
