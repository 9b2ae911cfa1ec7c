//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria that use the Brownian grid are evaluated at the default step and
//! at half of it. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p ruinsim-core --test acceptance -- 1 7`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{reference_insurance, reference_model};
use rand::Rng;
use ruinsim_core::conditions::ExceptionalClass;
use ruinsim_core::cycle::{
    discounted_integral_exact, discounted_integral_grid, pure_jump_segments, sample_log_price, sample_segments_on_grid,
    Insurance, PathGridConfig,
};
use ruinsim_core::engine::{
    direct_ruin_estimates, empirical_unboundedness_probe, finite_horizon_ruin, gbar_table, geometric_grid,
    kesten_diagnostics, sample_cycles, sample_perpetuities, EmpiricalTail, PerpetuitySample, SimulationPlan,
};
use ruinsim_core::experiment::ExperimentConfig;
use ruinsim_core::inputs::JumpLaw;
use ruinsim_core::io;
use ruinsim_core::model::{derive_log_price_model, find_beta, JumpMeasure, LevyModel, RootTolerance};
use ruinsim_core::parallel::map_indexed;
use ruinsim_core::rng::{domain, stream};
use ruinsim_core::stats::{ks_two_sample, wilson_interval, RunningStats};
use ruinsim_core::tail::{deepest_decade, default_k, hill_estimator, loglog_slope};

// Criterion 1
const ROOT_CASES: usize = 20;
const ROOT_TOL: f64 = 1e-8;
const ROOT_RANGE: (f64, f64) = (0.1, 10.0);
// Criterion 2
const KESTEN_CYCLES: u64 = 1_000_000;
const KESTEN_SIGMAS: f64 = 3.0;
const DOUBLING_SIGMAS: f64 = 2.0;
// Criterion 3
const MARTINGALE_PATHS: u64 = 1_000_000;
const MARTINGALE_SIGMAS: f64 = 3.0;
const MARTINGALE_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
// Criterion 4
const TAIL_SAMPLES: u64 = 1_000_000;
const SLOPE_TOL: f64 = 0.3;
const HILL_REL_TOL: f64 = 0.15;
const FLATNESS_TOL: f64 = 0.5;
const WINDOW_POINTS: usize = 11;
// Criterion 5
const SANDWICH_U: [f64; 3] = [1.0, 5.0, 10.0];
const SANDWICH_SIGMAS: f64 = 3.0;
const DIRECT_PATHS: u64 = 200_000;
const MAX_UNEXPLAINED: f64 = 0.01;
// Criterion 6
const FIXED_POINT_N: u64 = 10_000;
const KS_ALPHA: f64 = 0.01;
// Criterion 7
const INTEGRATOR_PATHS: u64 = 100;
const RATIO_RANGE: (f64, f64) = (1.6, 2.4);
// Criterion 8
const DETERMINISM_WORKERS: [usize; 3] = [1, 4, 8];
const DETERMINISM_PATHS: u64 = 2_000;
// Criterion 9
const HORIZONS: [usize; 5] = [1, 10, 100, 1000, 3000];
const HORIZON_PATHS: u64 = 2_000;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn plans() -> [(&'static str, SimulationPlan); 2] {
    let base = SimulationPlan::new(SEED);
    let mut half = base;
    half.grid = PathGridConfig::default().refined();
    [("default step", base), ("half step", half)]
}

fn criterion_1() -> Outcome {
    let mut r = stream(SEED, domain::SYNTHETIC, 1);
    let mut worst = 0.0f64;
    for _ in 0..ROOT_CASES {
        let sigma2 = (r.random::<f64>() * (0.5f64.ln() - 0.01f64.ln()) + 0.01f64.ln()).exp();
        let target = ROOT_RANGE.0 + (ROOT_RANGE.1 - ROOT_RANGE.0) * r.random::<f64>();
        let a = 0.5 * (target + 1.0) * sigma2;
        let closed = 2.0 * a / sigma2 - 1.0;
        let model = LevyModel::gbm(a, sigma2).unwrap();
        match find_beta(&model, RootTolerance::default()).beta() {
            Some(b) => worst = worst.max((b - closed).abs()),
            None => return Outcome::new(false, format!("no root for a={a}, sigma2={sigma2}")),
        }
    }
    Outcome::new(
        worst <= ROOT_TOL,
        format!("{ROOT_CASES} random GBM configs, max |beta - (2a/sigma2 - 1)| = {worst:.2e} (tol {ROOT_TOL:e})"),
    )
}

fn criterion_2() -> Outcome {
    let model = reference_model();
    let ins = reference_insurance();
    let beta = find_beta(&model, RootTolerance::default()).beta().unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for (label, plan) in plans() {
        let cycles = sample_cycles(&model, &ins, &plan, 0, 2 * KESTEN_CYCLES).unwrap();
        let n = kesten_diagnostics(&cycles[..KESTEN_CYCLES as usize], beta);
        let n2 = kesten_diagnostics(&cycles, beta);
        let identity = (n.e_m_beta.value - 1.0).abs() <= KESTEN_SIGMAS * n.e_m_beta.stderr;
        let stable = |a: ruinsim_core::stats::Estimate, b: ruinsim_core::stats::Estimate| {
            (a.value - b.value).abs() < DOUBLING_SIGMAS * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
        };
        let ok = identity
            && n.is_finite()
            && n2.is_finite()
            && stable(n.e_m_beta_logm_plus, n2.e_m_beta_logm_plus)
            && stable(n.e_q_beta, n2.e_q_beta);
        pass &= ok;
        lines.push(format!(
            "{label}: E M^b = {:.5} +- {:.5}, E M^b(ln M)+ = {:.5} -> {:.5}, E|Q|^b = {:.4} -> {:.4}",
            n.e_m_beta.value,
            n.e_m_beta.stderr,
            n.e_m_beta_logm_plus.value,
            n2.e_m_beta_logm_plus.value,
            n.e_q_beta.value,
            n2.e_q_beta.value
        ));
    }
    Outcome::new(pass, lines.join("; "))
}

fn criterion_3() -> Outcome {
    let model = reference_model();
    let beta = find_beta(&model, RootTolerance::default()).beta().unwrap();
    let mut pass = true;
    let mut worst = 0.0f64;
    for (ti, &t) in MARTINGALE_TIMES.iter().enumerate() {
        let offset = ti as u64 * MARTINGALE_PATHS;
        let v = map_indexed(
            offset,
            offset + MARTINGALE_PATHS,
            0,
            || (),
            |_, i| sample_log_price(&model, t, &mut stream(SEED, domain::LOG_PRICE, i)),
        );
        for q in [beta / 2.0, beta] {
            let mut s = RunningStats::new();
            for x in &v {
                s.push((-q * x).exp());
            }
            let e = s.estimate();
            let err = (e.value.ln() - t * model.cumulant(q)).abs();
            let se = e.stderr / e.value;
            worst = worst.max(err / se);
            pass &= err <= MARTINGALE_SIGMAS * se;
        }
    }
    Outcome::new(
        pass,
        format!("q in {{beta/2, beta}}, t in {MARTINGALE_TIMES:?}: max |ln E e^(-qV_t) - tH(q)| = {worst:.2} stderr"),
    )
}

struct TailCheck {
    pass: bool,
    line: String,
}

fn tail_check(label: &str, samples: &[PerpetuitySample], beta: f64) -> TailCheck {
    let tail = EmpiricalTail::from_perpetuities(samples).unwrap();
    let (lo, hi) = deepest_decade(&tail).unwrap();
    let grid = geometric_grid(lo, hi, WINDOW_POINTS);
    let table = gbar_table(&tail, &grid);
    let slope = loglog_slope(&table).unwrap();
    let k = default_k(tail.sorted());
    let hill = hill_estimator(tail.sorted(), k).unwrap();
    let scaled: Vec<f64> = table.iter().map(|p| p.u.powf(beta) * p.gbar).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = max / min - 1.0;
    let slope_ok = (slope.slope + beta).abs() <= SLOPE_TOL;
    let hill_ok = (hill.value - beta).abs() <= HILL_REL_TOL * beta;
    let flat_ok = variation < FLATNESS_TOL;
    TailCheck {
        pass: slope_ok && hill_ok && flat_ok,
        line: format!(
            "{label}: window [{lo:.3}, {hi:.3}], G(0) = {:.2e}, slope = {:.3} ({}), Hill(k={k}) = {:.3} ({}), \
             u^b G(u) in [{min:.2e}, {max:.2e}] varies {:.0}% ({})",
            tail.gbar(0.0),
            slope.slope,
            verdict(slope_ok),
            hill.value,
            verdict(hill_ok),
            100.0 * variation,
            verdict(flat_ok)
        ),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out of tolerance"
    }
}

fn criterion_4(samples: &[(&str, Vec<PerpetuitySample>)]) -> Outcome {
    let beta = find_beta(&reference_model(), RootTolerance::default()).beta().unwrap();
    let checks: Vec<TailCheck> = samples.iter().map(|(l, s)| tail_check(l, s, beta)).collect();
    Outcome::new(
        checks.iter().all(|c| c.pass),
        checks.iter().map(|c| c.line.as_str()).collect::<Vec<_>>().join("; "),
    )
}

/// `sigma` of a bracket end from the z = 3 Wilson interval of its count.
fn wilson_sigma(count: u64, n: u64, upper_side: bool) -> f64 {
    let (lo, hi) = wilson_interval(count, n, SANDWICH_SIGMAS);
    let p = count as f64 / n as f64;
    if upper_side {
        (hi - p) / SANDWICH_SIGMAS
    } else {
        (p - lo) / SANDWICH_SIGMAS
    }
}

fn criterion_5(samples: &[(&str, Vec<PerpetuitySample>)]) -> Outcome {
    let model = reference_model();
    let ins = reference_insurance();
    let mut pass = true;
    let mut lines = Vec::new();
    for ((label, plan), (_, perp)) in plans().iter().zip(samples) {
        let tail = EmpiricalTail::from_perpetuities(perp).unwrap();
        let n = tail.len() as u64;
        let k0 = tail.exceedances(0.0);
        let direct = direct_ruin_estimates(&model, &ins, plan, &SANDWICH_U, DIRECT_PATHS, Some(&tail)).unwrap();
        for d in &direct {
            let ku = tail.exceedances(d.u);
            let lower = ku as f64 / n as f64;
            let upper = ku as f64 / k0 as f64;
            let se_d = d.frequency.stderr;
            let s_lo = (wilson_sigma(ku, n, false).powi(2) + se_d.powi(2)).sqrt();
            let s_hi = (wilson_sigma(ku, k0, true).powi(2) + se_d.powi(2)).sqrt();
            let psi = d.frequency.value;
            let inside = psi >= lower - SANDWICH_SIGMAS * s_lo && psi <= upper + SANDWICH_SIGMAS * s_hi;
            let censoring = d.relative_unexplained();
            let ok = inside && censoring < MAX_UNEXPLAINED;
            pass &= ok;
            lines.push(format!(
                "{label} u={}: direct {psi:.3e} +- {se_d:.1e} vs [{lower:.2e}, {upper:.2e}], unexplained {:.1e} ({})",
                d.u,
                censoring,
                verdict(ok)
            ));
        }
    }
    Outcome::new(pass, lines.join("; "))
}

fn criterion_6() -> Outcome {
    let model = reference_model();
    let ins = reference_insurance();
    let mut pass = true;
    let mut lines = Vec::new();
    for (label, plan) in plans() {
        let n = FIXED_POINT_N;
        let fresh: Vec<f64> = sample_perpetuities(&model, &ins, &plan, 0, n)
            .unwrap()
            .iter()
            .map(|p| p.y_inf)
            .collect();
        let other = sample_perpetuities(&model, &ins, &plan, n, 2 * n).unwrap();
        let cycles = sample_cycles(&model, &ins, &plan, 0, n).unwrap();
        let image: Vec<f64> = cycles.iter().zip(&other).map(|(c, y)| c.q + c.m * y.y_inf).collect();
        let ks = ks_two_sample(&fresh, &image);
        pass &= ks.passes(KS_ALPHA);
        lines.push(format!("{label}: D = {:.4}, p = {:.3}", ks.statistic, ks.p_value));
    }
    Outcome::new(pass, format!("n = {FIXED_POINT_N} per side; {}", lines.join("; ")))
}

fn criterion_7() -> Outcome {
    let configs = [
        ("uniform jumps", 0.3, 2.0, JumpLaw::UniformOnInterval { lo: -0.2, hi: 0.3 }),
        (
            "double-exponential jumps",
            -0.2,
            3.0,
            JumpLaw::DoubleExponentialOnLog {
                eta_plus: 4.0,
                eta_minus: 6.0,
                p_up: 0.5,
            },
        ),
        (
            "atomic jumps",
            0.5,
            1.0,
            JumpLaw::Atomic {
                points: vec![-0.3, 0.4],
                weights: vec![1.0, 1.0],
            },
        ),
    ];
    let t = 1.0;
    let base = PathGridConfig::default().step_for(t);
    let mut pass = true;
    let mut lines = Vec::new();
    for (ci, (name, a, lambda, law)) in configs.into_iter().enumerate() {
        let model = derive_log_price_model(a, 0.0, JumpMeasure::new(lambda, law)).unwrap();
        let steps = [base, base / 2.0, base / 4.0];
        let mut err = [0.0f64; 3];
        for p in 0..INTEGRATOR_PATHS {
            let mut r = stream(SEED, domain::SYNTHETIC, 1000 * (ci as u64 + 1) + p);
            let segments = pure_jump_segments(&model, t, &mut r);
            let exact = discounted_integral_exact(&segments);
            for (e, &h) in err.iter_mut().zip(&steps) {
                *e += (discounted_integral_grid(&sample_segments_on_grid(&segments, h)) - exact).abs();
            }
        }
        let r1 = err[0] / err[1];
        let r2 = err[1] / err[2];
        let ok = [r1, r2].iter().all(|r| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(r));
        pass &= ok;
        lines.push(format!("{name}: ratio {r1:.3} (default/half), {r2:.3} (half/quarter)"));
    }
    Outcome::new(pass, lines.join("; "))
}

fn csv_outputs(config: &ExperimentConfig) -> Vec<String> {
    let exp = config.build().unwrap();
    let cycles = exp.cycles().unwrap();
    let perp = exp.perpetuities().unwrap();
    let ruin = exp.ruin(&perp, Some(&cycles)).unwrap();
    vec![
        io::write_cycles(&cycles),
        io::write_perpetuities(&perp),
        io::write_ruin_table(&ruin.table),
    ]
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for (label, step) in [("default step", None), ("half step", Some(0.5 / 512.0))] {
        let mut config = ExperimentConfig::reference(SEED, DETERMINISM_PATHS);
        config.run.direct_paths = DETERMINISM_PATHS;
        config.run.u_grid = Some("0.5,1,2".into());
        config.run.base_step = step;
        let outputs: Vec<Vec<String>> = DETERMINISM_WORKERS
            .iter()
            .map(|&w| {
                config.run.workers = w;
                csv_outputs(&config)
            })
            .collect();
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        pass &= same;
        let bytes: usize = outputs[0].iter().map(|s| s.len()).sum();
        lines.push(format!("{label}: {bytes} bytes, identical = {same}"));
    }
    Outcome::new(pass, format!("workers {DETERMINISM_WORKERS:?}; {}", lines.join("; ")))
}

fn criterion_9() -> Outcome {
    let model = LevyModel::gbm(0.01, 0.04).unwrap();
    let ins = reference_insurance();
    let beta = find_beta(&model, RootTolerance::default());
    let freq = finite_horizon_ruin(&model, &ins, &SimulationPlan::new(SEED), 1.0, &HORIZONS, HORIZON_PATHS).unwrap();
    let values: Vec<f64> = freq.iter().map(|(_, e)| e.value).collect();
    let increasing = values.windows(2).all(|w| w[1] >= w[0]);
    let table: Vec<String> = freq.iter().map(|(h, e)| format!("n={h}: {:.3}", e.value)).collect();
    Outcome::new(
        increasing && values[values.len() - 1] > values[0],
        format!(
            "GBM 2a/sigma2 - 1 = -0.5 (root: {}), u = 1, ruin frequency by horizon: {}",
            beta.beta().map_or("none".to_string(), |b| b.to_string()),
            table.join(", ")
        ),
    )
}

fn heavy_tail_note(samples: &[PerpetuitySample]) -> String {
    let model = reference_model();
    let ins: Insurance = reference_insurance();
    let class = ExceptionalClass::classify(&model, &ins.claim, &ins.interarrival);
    let probe = empirical_unboundedness_probe(samples, &[], &class).unwrap();
    format!(
        "max Y = {:.2}, q_0.999 = {:.3}, max > 10 q_0.999: {}",
        probe.max, probe.quantile_999, probe.heavy_tail_visible
    )
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |c: u32| selected.is_empty() || selected.contains(&c);
    let mut results: Vec<(u32, bool, Outcome)> = Vec::new();
    let mut run = |id: u32, blocking: bool, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(id) {
            return;
        }
        let start = Instant::now();
        let o = f();
        println!(
            "criterion {id} {}{} ({:.1} s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            if blocking { "" } else { " [non-blocking]" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((id, blocking, o));
    };
    run(1, true, &mut criterion_1);
    run(2, true, &mut criterion_2);
    run(3, true, &mut criterion_3);
    let perpetuities: Vec<(&str, Vec<PerpetuitySample>)> = if wanted(4) || wanted(5) {
        let model = reference_model();
        let ins = reference_insurance();
        plans()
            .iter()
            .map(|(label, plan)| (*label, sample_perpetuities(&model, &ins, plan, 0, TAIL_SAMPLES).unwrap()))
            .collect()
    } else {
        Vec::new()
    };
    if !perpetuities.is_empty() {
        println!("note: heavy-tail probe at the default step: {}", heavy_tail_note(&perpetuities[0].1));
    }
    run(4, true, &mut || criterion_4(&perpetuities));
    run(5, true, &mut || criterion_5(&perpetuities));
    run(6, true, &mut criterion_6);
    run(7, true, &mut criterion_7);
    run(8, true, &mut criterion_8);
    run(9, false, &mut criterion_9);
    let failed: Vec<u32> = results.iter().filter(|(_, b, o)| *b && !o.pass).map(|(id, _, _)| *id).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.iter().filter(|r| r.2.pass).count(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
