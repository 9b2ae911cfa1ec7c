//! Experiment description shared by the command-line tool, the tests and the
//! browser demo, plus the pipelines that run it.
//!
//! The schema is format-agnostic (serde); the CLI reads it from TOML:
//!
//! ```toml
//! version = 1
//!
//! [model]
//! a = 0.08
//! sigma2 = 0.04
//! # optional finite jump measure of R
//! # [model.jumps]
//! # intensity = 0.5
//! # law = { family = "uniform_on_interval", lo = -0.2, hi = 0.3 }
//!
//! [insurance]
//! c = 1.0
//! claim = { family = "exponential", rate = 2.0 }
//! interarrival = { family = "exponential", rate = 1.0 }
//!
//! [run]
//! seed = 1
//! n_paths = 100000
//! delta_a = 1e-9
//! n_max = 10000
//! # base_step = 0.002      # absent: min(T, 1) / 512 per cycle
//! u_grid = "geom:1:10:11"  # absent: derived from the sample
//! workers = 0              # 0: all cores
//!
//! [analysis]
//! k = "sqrt"               # or a fixed integer
//! nonarithmetic_assertion = false
//! ```

use serde::{Deserialize, Serialize};

use crate::conditions::{validate_theorem_conditions, ConditionReport, ExceptionalClass};
use crate::cycle::{CycleSample, Insurance, PathGridConfig};
use crate::engine::{
    default_u_grid, direct_ruin_estimates, estimate_gbar, flagged_fraction, geometric_grid, kesten_diagnostics,
    ruin_table, sample_cycles, sample_perpetuities, Coarsening, DirectEstimate, EmpiricalTail,
    KestenDiagnostics, PerpetuitySample, RuinEstimate, SimulationPlan, Truncation,
};
use crate::error::{invalid, Result};
use crate::model::{derive_log_price_model, find_beta, BetaResult, JumpMeasure, LevyModel, RootTolerance};
use crate::tail::{analyze_tail, TailConfig, TailEstimate};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub a: f64,
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<JumpMeasure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub seed: u64,
    pub n_paths: u64,
    pub delta_a: f64,
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<String>,
    pub workers: usize,
    /// Paths for the direct crossing estimator; 0 disables it.
    pub direct_paths: u64,
}

impl Default for RunBlock {
    fn default() -> Self {
        let t = Truncation::default();
        Self {
            seed: 0,
            n_paths: 100_000,
            delta_a: t.delta_a,
            n_max: t.n_max,
            base_step: None,
            u_grid: None,
            workers: 0,
            direct_paths: 0,
        }
    }
}

/// Hill `k`: `"sqrt"` for `floor(sqrt(n_positive))`, or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KPolicy {
    Fixed(usize),
    Rule(KRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KRule {
    Sqrt,
}

impl KPolicy {
    pub fn fixed(&self) -> Option<usize> {
        match *self {
            KPolicy::Fixed(k) => Some(k),
            KPolicy::Rule(KRule::Sqrt) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisBlock {
    pub k: KPolicy,
    pub nonarithmetic_assertion: bool,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            k: KPolicy::Rule(KRule::Sqrt),
            nonarithmetic_assertion: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub model: ModelBlock,
    pub insurance: Insurance,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
}

impl ExperimentConfig {
    /// The reference configuration: GBM `a = 0.08`, `sigma2 = 0.04`,
    /// `Exp(1)` interarrivals, `Exp(2)` claims, `c = 1`.
    pub fn reference(seed: u64, n_paths: u64) -> Self {
        Self {
            version: CONFIG_VERSION,
            model: ModelBlock {
                a: 0.08,
                sigma2: 0.04,
                jumps: None,
            },
            insurance: Insurance {
                c: 1.0,
                claim: crate::inputs::ClaimLaw::Exponential { rate: 2.0 },
                interarrival: crate::inputs::InterarrivalLaw::Exponential { rate: 1.0 },
            },
            run: RunBlock {
                seed,
                n_paths,
                ..RunBlock::default()
            },
            analysis: AnalysisBlock::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(
                "version",
                format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version),
            ));
        }
        if self.run.n_paths == 0 {
            return Err(invalid("run.n_paths", "must be >= 1"));
        }
        if let Some(spec) = &self.run.u_grid {
            UGridSpec::parse(spec)?;
        }
        if let KPolicy::Fixed(0) = self.analysis.k {
            return Err(invalid("analysis.k", "must be >= 1"));
        }
        self.insurance.validate()?;
        self.plan().validate()
    }

    pub fn plan(&self) -> SimulationPlan {
        SimulationPlan {
            seed: self.run.seed,
            workers: self.run.workers,
            grid: PathGridConfig {
                base_step: self.run.base_step,
                refinement: 0,
            },
            truncation: Truncation {
                delta_a: self.run.delta_a,
                n_max: self.run.n_max,
            },
            coarsening: Coarsening::default(),
        }
    }

    /// Validates the configuration and derives the model and its root.
    pub fn build(&self) -> Result<Experiment> {
        self.validate()?;
        let jumps = self.model.jumps.clone().unwrap_or_else(JumpMeasure::none);
        let model = derive_log_price_model(self.model.a, self.model.sigma2, jumps)?;
        let beta = find_beta(&model, RootTolerance::default());
        Ok(Experiment {
            config: self.clone(),
            model,
            beta,
        })
    }
}

/// Threshold grid specification: `geom:lo:hi:count` or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub enum UGridSpec {
    Geometric { lo: f64, hi: f64, count: usize },
    List(Vec<f64>),
}

impl UGridSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |reason: String| invalid("u_grid", reason);
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("`{s}` is not a number")))
        };
        let grid = if let Some(rest) = spec.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad(format!("expected geom:lo:hi:count, got `{spec}`")));
            }
            let count = parts[2]
                .trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("`{}` is not a count", parts[2])))?;
            let (lo, hi) = (num(parts[0])?, num(parts[1])?);
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
                return Err(bad(format!("need 0 < lo <= hi and count >= 1, got `{spec}`")));
            }
            UGridSpec::Geometric { lo, hi, count }
        } else {
            let values = spec.split(',').map(num).collect::<Result<Vec<_>>>()?;
            if values.is_empty() || values.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
                return Err(bad(format!("thresholds must be positive and finite, got `{spec}`")));
            }
            UGridSpec::List(values)
        };
        Ok(grid)
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            UGridSpec::Geometric { lo, hi, count } => geometric_grid(*lo, *hi, *count),
            UGridSpec::List(v) => v.clone(),
        }
    }
}

/// A validated configuration with its derived model.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: LevyModel,
    pub beta: BetaResult,
}

/// Output of the ruin pipeline.
#[derive(Debug, Clone)]
pub struct RuinRun {
    pub table: Vec<RuinEstimate>,
    pub direct: Vec<DirectEstimate>,
    pub kesten: Option<KestenDiagnostics>,
    pub flagged: u64,
}

impl Experiment {
    pub fn plan(&self) -> SimulationPlan {
        self.config.plan()
    }

    pub fn insurance(&self) -> &Insurance {
        &self.config.insurance
    }

    pub fn conditions(&self) -> ConditionReport {
        let ins = self.insurance();
        validate_theorem_conditions(&self.model, &self.beta, &ins.claim, &ins.interarrival)
    }

    pub fn exceptional_class(&self) -> ExceptionalClass {
        let ins = self.insurance();
        ExceptionalClass::classify(&self.model, &ins.claim, &ins.interarrival)
    }

    /// `(q, H(q))` on `points` equispaced values from 0 to `2 beta`, kept
    /// inside the exponential domain (to 10 when there is no root).
    pub fn cumulant_curve(&self, points: usize) -> Vec<(f64, f64)> {
        let upper = self.model.domain_bounds().q_upper;
        let edge = if upper.is_finite() { upper * (1.0 - 1e-6) } else { f64::INFINITY };
        let q_max = match self.beta.beta() {
            Some(b) => (2.0 * b).min(edge),
            None => edge.min(10.0),
        };
        let last = points.saturating_sub(1).max(1) as f64;
        (0..points)
            .map(|i| {
                let q = q_max * i as f64 / last;
                (q, self.model.cumulant(q))
            })
            .collect()
    }

    pub fn cycles(&self) -> Result<Vec<CycleSample>> {
        sample_cycles(&self.model, self.insurance(), &self.plan(), 0, self.config.run.n_paths)
    }

    pub fn perpetuities(&self) -> Result<Vec<PerpetuitySample>> {
        sample_perpetuities(&self.model, self.insurance(), &self.plan(), 0, self.config.run.n_paths)
    }

    /// The configured grid, or the default one derived from `samples`.
    pub fn u_grid(&self, samples: &[PerpetuitySample]) -> Result<Vec<f64>> {
        match &self.config.run.u_grid {
            Some(spec) => Ok(UGridSpec::parse(spec)?.points()),
            None => Ok(default_u_grid(&EmpiricalTail::from_perpetuities(samples)?, 11)),
        }
    }

    /// Perpetuity bracket, direct estimates when `run.direct_paths > 0`, and
    /// the Kesten moments from `cycles` when given.
    pub fn ruin(&self, samples: &[PerpetuitySample], cycles: Option<&[CycleSample]>) -> Result<RuinRun> {
        let grid = self.u_grid(samples)?;
        estimate_gbar(samples, &grid)?;
        let direct = if self.config.run.direct_paths > 0 {
            let residual = EmpiricalTail::from_perpetuities(samples)?;
            direct_ruin_estimates(
                &self.model,
                self.insurance(),
                &self.plan(),
                &grid,
                self.config.run.direct_paths,
                Some(&residual),
            )?
        } else {
            Vec::new()
        };
        let table = ruin_table(samples, &grid, (!direct.is_empty()).then_some(&direct[..]))?;
        let kesten = match (cycles, self.beta.beta()) {
            (Some(c), Some(b)) if !c.is_empty() => Some(kesten_diagnostics(c, b)),
            _ => None,
        };
        let flagged = (flagged_fraction(samples) * samples.len() as f64).round() as u64;
        Ok(RuinRun {
            table,
            direct,
            kesten,
            flagged,
        })
    }

    pub fn tail(&self, samples: &[PerpetuitySample]) -> Result<TailEstimate> {
        let beta = self.beta.require()?;
        let tail = EmpiricalTail::from_perpetuities(samples)?;
        let grid = match &self.config.run.u_grid {
            Some(spec) => Some(UGridSpec::parse(spec)?.points()),
            None => None,
        };
        analyze_tail(&tail, beta, grid.as_deref(), &self.tail_config())
    }

    pub fn tail_config(&self) -> TailConfig {
        TailConfig {
            k: self.config.analysis.k.fixed(),
            nonarithmetic_asserted: self.config.analysis.nonarithmetic_assertion,
            seed: self.config.run.seed,
            ..TailConfig::default()
        }
    }
}

/// Saturated cycles in a batch; any of them is a numerical-quality failure.
pub fn saturations(cycles: &[CycleSample]) -> u64 {
    cycles.iter().filter(|c| c.saturated).count() as u64
}
