//! Discrete-time reduction of the ruin problem.
//!
//! Monitoring reserves at claim epochs gives `X_{T_n} = e^{V_{T_n}} (u - Y_n)`
//! with
//!
//! ```text
//! Y_n = Q_1 + A_1 Q_2 + ... + A_{n-1} Q_n,    A_n = M_1 ... M_n,
//! ```
//!
//! so ruin is `theta^u = inf{n >= 1 : Y_n >= u} < inf`. The series converges
//! to the perpetuity `Y_inf`, whose tail `G(u) = P(Y_inf > u)` brackets the
//! ruin probability: `G(u) <= Psi(u) <= G(u) / G(0)`.

use serde::{Deserialize, Serialize};

use crate::conditions::ExceptionalClass;
use crate::cycle::{CycleSample, CycleSimulator, Insurance, PathGridConfig};
use crate::error::{invalid, Error, Result};
use crate::model::LevyModel;
use crate::parallel::map_indexed;
use crate::rng::{self, domain};
use crate::stats::{proportion, quantile_sorted, sort_floats, Estimate, RunningStats};

/// Largest tolerated fraction of flagged perpetuity samples.
pub const MAX_FLAGGED_FRACTION: f64 = 1e-4;

/// Largest tolerated censored crossing mass relative to the direct estimate.
pub const MAX_UNEXPLAINED_FRACTION: f64 = 0.01;

/// Stopping rule for a path of the chain: stop once `A_n <= delta_a` or after `n_max` cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub delta_a: f64,
    pub n_max: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            delta_a: 1e-9,
            n_max: 10_000,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_a > 0.0 && self.delta_a < 1.0) {
            return Err(invalid("delta_a", format!("must lie in (0, 1), got {}", self.delta_a)));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max", "must be >= 1"));
        }
        Ok(())
    }
}

/// Grid coarsening for cycles that enter the chain with a small weight
/// `A_{n-1}`: the step is multiplied by the largest power of two not above
/// `min(1 / A_{n-1}, max_factor)`. The absolute error a cycle contributes to
/// `Y` therefore never exceeds that of an unweighted cycle at the base step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coarsening {
    pub max_factor: u32,
}

impl Coarsening {
    pub const OFF: Coarsening = Coarsening { max_factor: 1 };

    fn factor(&self, log_a: f64) -> f64 {
        if self.max_factor <= 1 || log_a >= 0.0 {
            return 1.0;
        }
        let cap = (self.max_factor as f64).log2().floor();
        let k = (-log_a / std::f64::consts::LN_2).floor().min(cap);
        2f64.powi(k as i32)
    }
}

impl Default for Coarsening {
    fn default() -> Self {
        Self { max_factor: 256 }
    }
}

/// Everything that fixes a Monte Carlo run apart from the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub seed: u64,
    /// 0 lets the thread pool decide.
    pub workers: usize,
    pub grid: PathGridConfig,
    pub truncation: Truncation,
    pub coarsening: Coarsening,
}

impl SimulationPlan {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            workers: 0,
            grid: PathGridConfig::default(),
            truncation: Truncation::default(),
            coarsening: Coarsening::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.truncation.validate()
    }
}

/// One truncated realisation of `Y_inf = sum_n A_n Q_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpetuitySample {
    pub y_inf: f64,
    pub n_trunc: usize,
    pub a_trunc: f64,
    /// Saturated, or stopped at `n_max` with `A_n > delta_a`.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StopReason {
    Floor,
    Horizon,
    Saturated,
}

#[derive(Debug, Clone, Copy)]
struct Walk {
    y: f64,
    log_a: f64,
    n: usize,
    max_y: f64,
    reason: StopReason,
}

/// Runs the chain `Y_n` cycle by cycle.
pub struct ChainWalker<'a> {
    sim: CycleSimulator<'a>,
    coarsening: Coarsening,
}

impl<'a> ChainWalker<'a> {
    pub fn new(
        model: &'a LevyModel,
        insurance: &'a Insurance,
        grid: PathGridConfig,
        coarsening: Coarsening,
    ) -> Result<Self> {
        Ok(Self {
            sim: CycleSimulator::new(model, insurance, grid)?,
            coarsening,
        })
    }

    fn walk<R: rand::Rng + ?Sized>(&mut self, rng: &mut R, stop: Truncation, skip: usize) -> Walk {
        for _ in 0..skip {
            self.sim.simulate(rng);
        }
        let log_floor = stop.delta_a.ln();
        let (mut y, mut log_a, mut max_y) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
        let mut n = 0;
        loop {
            let cycle = self.sim.simulate_coarsened(rng, self.coarsening.factor(log_a));
            n += 1;
            y += log_a.exp() * cycle.q;
            log_a += cycle.log_m();
            max_y = max_y.max(y);
            let reason = if cycle.saturated || !y.is_finite() {
                Some(StopReason::Saturated)
            } else if log_a <= log_floor {
                Some(StopReason::Floor)
            } else if n >= stop.n_max {
                Some(StopReason::Horizon)
            } else {
                None
            };
            if let Some(reason) = reason {
                return Walk {
                    y,
                    log_a,
                    n,
                    max_y,
                    reason,
                };
            }
        }
    }

    /// Samples `Y_inf`, discarding the first `skip` cycles of the stream.
    pub fn perpetuity<R: rand::Rng + ?Sized>(&mut self, rng: &mut R, stop: Truncation, skip: usize) -> PerpetuitySample {
        let w = self.walk(rng, stop, skip);
        PerpetuitySample {
            y_inf: w.y,
            n_trunc: w.n,
            a_trunc: w.log_a.exp(),
            flagged: w.reason != StopReason::Floor,
        }
    }
}

/// Samples one perpetuity from `rng`.
pub fn sample_perpetuity<R: rand::Rng + ?Sized>(
    model: &LevyModel,
    insurance: &Insurance,
    truncation: Truncation,
    grid: PathGridConfig,
    coarsening: Coarsening,
    rng: &mut R,
) -> Result<PerpetuitySample> {
    truncation.validate()?;
    let mut walker = ChainWalker::new(model, insurance, grid, coarsening)?;
    Ok(walker.perpetuity(rng, truncation, 0))
}

/// Perpetuity samples for path indices `start..end`.
pub fn sample_perpetuities(
    model: &LevyModel,
    insurance: &Insurance,
    plan: &SimulationPlan,
    start: u64,
    end: u64,
) -> Result<Vec<PerpetuitySample>> {
    sample_perpetuities_shifted(model, insurance, plan, start, end, 0)
}

/// Perpetuity samples that start summing at cycle `skip` of each path stream.
pub fn sample_perpetuities_shifted(
    model: &LevyModel,
    insurance: &Insurance,
    plan: &SimulationPlan,
    start: u64,
    end: u64,
    skip: usize,
) -> Result<Vec<PerpetuitySample>> {
    plan.validate()?;
    ChainWalker::new(model, insurance, plan.grid, plan.coarsening)?;
    Ok(map_indexed(
        start,
        end,
        plan.workers,
        || ChainWalker::new(model, insurance, plan.grid, plan.coarsening).expect("validated"),
        |walker, i| {
            let mut r = rng::stream(plan.seed, domain::PERPETUITY, i);
            walker.perpetuity(&mut r, plan.truncation, skip)
        },
    ))
}

/// Independent cycles for indices `start..end`, one stream each.
pub fn sample_cycles(
    model: &LevyModel,
    insurance: &Insurance,
    plan: &SimulationPlan,
    start: u64,
    end: u64,
) -> Result<Vec<CycleSample>> {
    plan.validate()?;
    CycleSimulator::new(model, insurance, plan.grid)?;
    Ok(map_indexed(
        start,
        end,
        plan.workers,
        || CycleSimulator::new(model, insurance, plan.grid).expect("validated"),
        |sim, i| {
            let mut r = rng::stream(plan.seed, domain::CYCLES, i);
            sim.simulate(&mut r)
        },
    ))
}

/// Empirical survival function of a sample.
#[derive(Debug, Clone)]
pub struct EmpiricalTail {
    sorted: Vec<f64>,
}

impl EmpiricalTail {
    pub fn new(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut sorted: Vec<f64> = values.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::EmptySample);
        }
        sort_floats(&mut sorted);
        Ok(Self { sorted })
    }

    pub fn from_perpetuities(samples: &[PerpetuitySample]) -> Result<Self> {
        Self::new(samples.iter().map(|s| s.y_inf))
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of samples strictly above `u`.
    pub fn exceedances(&self, u: f64) -> u64 {
        let below = self.sorted.partition_point(|&y| y <= u);
        (self.sorted.len() - below) as u64
    }

    pub fn gbar(&self, u: f64) -> f64 {
        self.exceedances(u) as f64 / self.sorted.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.sorted, p)
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("non-empty")
    }
}

/// `G(u)` at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbarPoint {
    pub u: f64,
    pub gbar: f64,
    pub stderr: f64,
    pub exceedances: u64,
    pub n: u64,
}

pub fn flagged_fraction(samples: &[PerpetuitySample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|s| s.flagged).count() as f64 / samples.len() as f64
}

/// Exceedance frequencies of `Y_inf` over `u_grid` with binomial errors.
pub fn estimate_gbar(samples: &[PerpetuitySample], u_grid: &[f64]) -> Result<Vec<GbarPoint>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let flagged = flagged_fraction(samples);
    if flagged > MAX_FLAGGED_FRACTION {
        return Err(Error::Quality(format!(
            "{:.4}% of perpetuity samples flagged (limit {:.4}%)",
            100.0 * flagged,
            100.0 * MAX_FLAGGED_FRACTION
        )));
    }
    let tail = EmpiricalTail::from_perpetuities(samples)?;
    Ok(gbar_table(&tail, u_grid))
}

pub fn gbar_table(tail: &EmpiricalTail, u_grid: &[f64]) -> Vec<GbarPoint> {
    let n = tail.len() as u64;
    u_grid
        .iter()
        .map(|&u| {
            let k = tail.exceedances(u);
            let e = proportion(k, n);
            GbarPoint {
                u,
                gbar: e.value,
                stderr: e.stderr,
                exceedances: k,
                n,
            }
        })
        .collect()
}

/// `(G(u), G(u) / G(0))`; the upper bound is undefined when `G(0) = 0`.
pub fn ruin_bounds(gbar_u: f64, gbar_0: f64) -> (f64, Option<f64>) {
    let upper = if gbar_0 > 0.0 { Some(gbar_u / gbar_0) } else { None };
    (gbar_u, upper)
}

/// Crossing-frequency estimate of `Psi(u)` from finite-horizon paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub u: f64,
    pub frequency: Estimate,
    /// Paths stopped by the weight floor before crossing.
    pub censored: u64,
    /// Paths stopped by `n_max` before crossing.
    pub horizon_censored: u64,
    /// Upper bound on the crossing mass hidden by censoring,
    /// `sum Psi_hat((u - Y_n) / A_n) / n_paths` with `Psi_hat = G / G(0)`.
    pub unexplained_mass: f64,
    pub n_paths: u64,
}

impl DirectEstimate {
    /// Unexplained mass relative to the estimate, or to `1 / n_paths` when
    /// no path crossed.
    pub fn relative_unexplained(&self) -> f64 {
        self.unexplained_mass / self.frequency.value.max(1.0 / self.n_paths as f64)
    }
}

/// Direct crossing estimates for every `u` on common paths.
///
/// Each path runs the chain until `A_n < stop.delta_a` or `n = stop.n_max` and
/// records `max_k Y_k`. The estimator is biased low by the censored mass; when
/// `residual` (an empirical law of `Y_inf`) is given the censored mass is
/// bounded through the perpetuity tail.
pub fn direct_ruin_estimates(
    model: &LevyModel,
    insurance: &Insurance,
    plan: &SimulationPlan,
    u_grid: &[f64],
    n_paths: u64,
    residual: Option<&EmpiricalTail>,
) -> Result<Vec<DirectEstimate>> {
    plan.validate()?;
    if let Some(&u) = u_grid.iter().find(|&&u| !(u > 0.0)) {
        return Err(invalid("u", format!("must be positive, got {u}")));
    }
    ChainWalker::new(model, insurance, plan.grid, plan.coarsening)?;
    let walks = map_indexed(
        0,
        n_paths,
        plan.workers,
        || ChainWalker::new(model, insurance, plan.grid, plan.coarsening).expect("validated"),
        |walker, i| {
            let mut r = rng::stream(plan.seed, domain::DIRECT, i);
            walker.walk(&mut r, plan.truncation, 0)
        },
    );
    let gbar0 = residual.map(|t| t.gbar(0.0)).unwrap_or(0.0);
    Ok(u_grid
        .iter()
        .map(|&u| {
            let mut crossed = 0u64;
            let mut censored = 0u64;
            let mut horizon_censored = 0u64;
            let mut hidden = 0.0;
            for w in &walks {
                if w.max_y >= u {
                    crossed += 1;
                    continue;
                }
                match w.reason {
                    StopReason::Floor => censored += 1,
                    _ => horizon_censored += 1,
                }
                if let Some(tail) = residual {
                    let x = (u - w.y) / w.log_a.exp();
                    hidden += if gbar0 > 0.0 { (tail.gbar(x) / gbar0).min(1.0) } else { 1.0 };
                } else {
                    hidden += 1.0;
                }
            }
            DirectEstimate {
                u,
                frequency: proportion(crossed, n_paths),
                censored,
                horizon_censored,
                unexplained_mass: hidden / n_paths as f64,
                n_paths,
            }
        })
        .collect())
}

/// Single-threshold form of [`direct_ruin_estimates`].
pub fn direct_ruin_estimate(
    model: &LevyModel,
    insurance: &Insurance,
    plan: &SimulationPlan,
    u: f64,
    n_paths: u64,
    residual: Option<&EmpiricalTail>,
) -> Result<DirectEstimate> {
    Ok(direct_ruin_estimates(model, insurance, plan, &[u], n_paths, residual)?[0])
}

/// Per-threshold ruin estimate: the bracket from the perpetuity tail plus an
/// optional direct crossing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub u: f64,
    pub gbar_u: Estimate,
    pub gbar_0: Estimate,
    pub lower: f64,
    /// `None` when `G(0) = 0` in-sample.
    pub upper: Option<f64>,
    pub direct: Option<Estimate>,
    pub n_paths: u64,
}

pub fn ruin_table(
    samples: &[PerpetuitySample],
    u_grid: &[f64],
    direct: Option<&[DirectEstimate]>,
) -> Result<Vec<RuinEstimate>> {
    let at_zero = estimate_gbar(samples, &[0.0])?[0];
    let points = estimate_gbar(samples, u_grid)?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (lower, upper) = ruin_bounds(p.gbar, at_zero.gbar);
            RuinEstimate {
                u: p.u,
                gbar_u: Estimate {
                    value: p.gbar,
                    stderr: p.stderr,
                },
                gbar_0: Estimate {
                    value: at_zero.gbar,
                    stderr: at_zero.stderr,
                },
                lower,
                upper,
                direct: direct.and_then(|d| d.get(i)).map(|d| d.frequency),
                n_paths: p.n,
            }
        })
        .collect())
}

/// Sample moments behind the implicit-renewal conditions
/// `E M^beta = 1`, `E M^beta (ln M)^+ < inf`, `E |Q|^beta < inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KestenDiagnostics {
    pub beta: f64,
    pub e_m_beta: Estimate,
    pub e_m_beta_logm_plus: Estimate,
    pub e_q_beta: Estimate,
    pub n: u64,
}

impl KestenDiagnostics {
    pub fn is_finite(&self) -> bool {
        [self.e_m_beta, self.e_m_beta_logm_plus, self.e_q_beta]
            .iter()
            .all(|e| e.value.is_finite() && e.stderr.is_finite())
    }
}

pub fn kesten_diagnostics(cycles: &[CycleSample], beta: f64) -> KestenDiagnostics {
    let mut m_beta = RunningStats::new();
    let mut m_beta_log = RunningStats::new();
    let mut q_beta = RunningStats::new();
    for c in cycles {
        let log_m = c.log_m();
        let mb = (beta * log_m).exp();
        m_beta.push(mb);
        m_beta_log.push(mb * log_m.max(0.0));
        q_beta.push(c.q.abs().powf(beta));
    }
    KestenDiagnostics {
        beta,
        e_m_beta: m_beta.estimate(),
        e_m_beta_logm_plus: m_beta_log.estimate(),
        e_q_beta: q_beta.estimate(),
        n: cycles.len() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnboundednessReport {
    pub n: u64,
    pub max: f64,
    pub quantile_999: f64,
    /// `max > 10 * q_0.999` (only meaningful when the quantile is positive).
    pub heavy_tail_visible: bool,
    pub fraction_above: Vec<(f64, f64)>,
    /// Configuration lies in the pure-jump, bounded-claim exceptional class.
    pub exceptional_class: bool,
    pub note: String,
}

pub fn empirical_unboundedness_probe(
    samples: &[PerpetuitySample],
    u_grid: &[f64],
    exceptional: &ExceptionalClass,
) -> Result<UnboundednessReport> {
    let tail = EmpiricalTail::from_perpetuities(samples)?;
    let max = tail.max();
    let q = tail.quantile(0.999);
    let mut grid = u_grid.to_vec();
    sort_floats(&mut grid);
    let fraction_above = grid.iter().map(|&u| (u, tail.gbar(u))).collect();
    let note = if exceptional.active {
        if exceptional.interarrival_charges_zero {
            "exceptional class: unboundedness relies on P(T <= t) > 0 for all t, which holds".to_string()
        } else {
            "exceptional class and P(T <= t) > 0 fails: Y_inf may be bounded above".to_string()
        }
    } else {
        String::new()
    };
    Ok(UnboundednessReport {
        n: tail.len() as u64,
        max,
        quantile_999: q,
        heavy_tail_visible: q > 0.0 && max > 10.0 * q,
        fraction_above,
        exceptional_class: exceptional.active,
        note,
    })
}

/// Geometric grid between the empirical 90% and 99.99% quantiles of `Y_inf`.
/// When the 90% quantile is not positive the quantiles are taken over the
/// positive part of the sample instead.
pub fn default_u_grid(tail: &EmpiricalTail, count: usize) -> Vec<f64> {
    let sorted = tail.sorted();
    let lo = tail.quantile(0.90);
    let (lo, hi) = if lo > 0.0 {
        (lo, tail.quantile(0.9999))
    } else {
        let first = sorted.partition_point(|&y| y <= 0.0);
        let positive = &sorted[first..];
        if positive.is_empty() {
            return vec![1.0];
        }
        (quantile_sorted(positive, 0.90), quantile_sorted(positive, 0.9999))
    };
    geometric_grid(lo, hi.max(lo), count)
}

pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 || hi <= lo {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
}

/// Crossing frequency `P(max_{n <= h} Y_n >= u)` for each horizon `h`.
///
/// Needs no positive root: used to show `Psi = 1` when `beta <= 0`.
pub fn finite_horizon_ruin(
    model: &LevyModel,
    insurance: &Insurance,
    plan: &SimulationPlan,
    u: f64,
    horizons: &[usize],
    n_paths: u64,
) -> Result<Vec<(usize, Estimate)>> {
    plan.grid.validate()?;
    let longest = horizons.iter().copied().max().unwrap_or(0);
    CycleSimulator::new(model, insurance, plan.grid)?;
    let first_crossings = map_indexed(
        0,
        n_paths,
        plan.workers,
        || CycleSimulator::new(model, insurance, plan.grid).expect("validated"),
        |sim, i| {
            let mut r = rng::stream(plan.seed, domain::HORIZON, i);
            let (mut y, mut log_a) = (0.0f64, 0.0f64);
            for n in 1..=longest {
                let c = sim.simulate(&mut r);
                y += log_a.exp() * c.q;
                log_a += c.log_m();
                if y >= u {
                    return Some(n);
                }
                if c.saturated {
                    break;
                }
            }
            None
        },
    );
    Ok(horizons
        .iter()
        .map(|&h| {
            let k = first_crossings.iter().filter(|c| matches!(c, Some(n) if *n <= h)).count();
            (h, proportion(k as u64, n_paths))
        })
        .collect())
}
