//! One renewal cycle of the risk process.
//!
//! Over `[0, T]`, `T` the first claim epoch, the log price `V` is simulated
//! and the cycle pair is formed:
//!
//! ```text
//! M = e^{-V_T},    Q = M |xi| - c * int_0^T e^{-V_r} dr
//! ```
//!
//! Pure-jump models (`sigma = 0`) integrate exactly between jumps. With a
//! Brownian part the integral is a left-point sum on a uniform grid that
//! contains every jump epoch as an extra node.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::inputs::{ClaimLaw, InterarrivalLaw};
use crate::model::LevyModel;

/// `|V|` beyond this makes `e^{-V}` leave the safe f64 range.
pub const SATURATION_EXPONENT: f64 = 700.0;

/// Below this `|slope * duration|` the segment integral uses its series.
const SERIES_THRESHOLD: f64 = 1e-8;

/// Default number of grid steps per `min(T, 1)`.
pub const DEFAULT_STEPS_PER_UNIT: f64 = 512.0;

/// Business side of the model: premium rate and the claim renewal process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insurance {
    /// Premium intensity `c > 0`.
    pub c: f64,
    pub claim: ClaimLaw,
    pub interarrival: InterarrivalLaw,
}

impl Insurance {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("premium rate must be positive, got {}", self.c)));
        }
        self.claim.validate()?;
        self.interarrival.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGridConfig {
    /// Fixed grid step. `None` means `min(T, 1) / 512` for a cycle of length `T`.
    pub base_step: Option<f64>,
    /// Number of halvings applied to the step.
    pub refinement: u32,
}

impl Default for PathGridConfig {
    fn default() -> Self {
        Self {
            base_step: None,
            refinement: 0,
        }
    }
}

impl PathGridConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(step) = self.base_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidGrid(format!("base_step must be positive, got {step}")));
            }
        }
        if self.refinement > 40 {
            return Err(Error::InvalidGrid(format!("refinement {} too deep", self.refinement)));
        }
        Ok(())
    }

    pub fn refined(self) -> Self {
        Self {
            refinement: self.refinement + 1,
            ..self
        }
    }

    /// Grid step for a cycle of length `t`.
    pub fn step_for(&self, t: f64) -> f64 {
        let base = self.base_step.unwrap_or_else(|| t.min(1.0) / DEFAULT_STEPS_PER_UNIT);
        base * 0.5f64.powi(self.refinement as i32)
    }
}

/// One cycle `(M, Q, T)` plus the terminal log price it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub m: f64,
    pub q: f64,
    pub t: f64,
    /// `V_T`; `m == exp(-v_end)`.
    pub v_end: f64,
    /// `|V|` exceeded [`SATURATION_EXPONENT`] somewhere on the cycle.
    pub saturated: bool,
}

impl CycleSample {
    pub fn log_m(&self) -> f64 {
        -self.v_end
    }
}

/// A stretch of linear log price between jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub start_value: f64,
    pub slope: f64,
}

fn segment_integral(duration: f64, start_value: f64, slope: f64) -> f64 {
    let x = slope * duration;
    let scale = (-start_value).exp();
    if x.abs() < SERIES_THRESHOLD {
        scale * duration * (1.0 - 0.5 * x)
    } else {
        scale * -(-x).exp_m1() / slope
    }
}

/// `int e^{-V}` over consecutive linear segments.
pub fn discounted_integral_exact(segments: &[Segment]) -> f64 {
    segments
        .iter()
        .map(|s| segment_integral(s.duration, s.start_value, s.slope))
        .sum()
}

/// A path sampled at increasing times. `values[i]` is the (right-continuous)
/// value at `times[i]`, so it is also the left limit just after that node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Left-point sum of `e^{-V}` along a sampled path.
pub fn discounted_integral_grid(path: &SampledPath) -> f64 {
    path.times
        .windows(2)
        .zip(&path.values)
        .map(|(w, v)| (-v).exp() * (w[1] - w[0]))
        .sum()
}

/// Samples a piecewise-linear path on the uniform grid of `step`, with the
/// segment boundaries inserted as extra nodes.
pub fn sample_segments_on_grid(segments: &[Segment], step: f64) -> SampledPath {
    let mut path = SampledPath::default();
    let mut seg_start = 0.0;
    for seg in segments {
        let seg_end = seg_start + seg.duration;
        path.times.push(seg_start);
        path.values.push(seg.start_value);
        let mut k = (seg_start / step).floor() + 1.0;
        loop {
            let t = k * step;
            if t >= seg_end - 1e-12 * step {
                break;
            }
            if t > seg_start {
                path.times.push(t);
                path.values.push(seg.start_value + seg.slope * (t - seg_start));
            }
            k += 1.0;
        }
        seg_start = seg_end;
    }
    if let Some(last) = segments.last() {
        path.times.push(seg_start);
        path.values.push(last.start_value + last.slope * last.duration);
    }
    path
}

/// Reusable cycle sampler holding scratch buffers for jump epochs.
pub struct CycleSimulator<'a> {
    model: &'a LevyModel,
    insurance: &'a Insurance,
    grid: PathGridConfig,
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
    segments: Vec<Segment>,
}

impl<'a> CycleSimulator<'a> {
    pub fn new(model: &'a LevyModel, insurance: &'a Insurance, grid: PathGridConfig) -> Result<Self> {
        grid.validate()?;
        insurance.validate()?;
        Ok(Self {
            model,
            insurance,
            grid,
            jump_times: Vec::new(),
            jump_sizes: Vec::new(),
            segments: Vec::new(),
        })
    }

    pub fn simulate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> CycleSample {
        self.simulate_coarsened(rng, 1.0)
    }

    /// Like [`Self::simulate`] with the grid step multiplied by `coarsening`.
    pub fn simulate_coarsened<R: Rng + ?Sized>(&mut self, rng: &mut R, coarsening: f64) -> CycleSample {
        let t = self.insurance.interarrival.sample(rng);
        self.draw_jumps(rng, t);
        let (v_end, integral, saturated) = if self.model.is_pure_jump() {
            self.exact_path(t)
        } else {
            let step = self.grid.step_for(t) * coarsening;
            self.grid_path(rng, t, step)
        };
        let claim = self.insurance.claim.sample(rng);
        let m = (-v_end).exp();
        CycleSample {
            m,
            q: m * claim - self.insurance.c * integral,
            t,
            v_end,
            saturated: saturated || !m.is_finite() || !integral.is_finite(),
        }
    }

    fn draw_jumps<R: Rng + ?Sized>(&mut self, rng: &mut R, t: f64) {
        self.jump_times.clear();
        self.jump_sizes.clear();
        let lambda = self.model.jump_intensity();
        if lambda <= 0.0 {
            return;
        }
        let n = Poisson::new(lambda * t).map(|p| p.sample(rng) as usize).unwrap_or(0);
        for _ in 0..n {
            self.jump_times.push(t * rng.random::<f64>());
        }
        self.jump_times.sort_by(|a, b| a.total_cmp(b));
        let law = &self.model.jumps().law;
        for _ in 0..n {
            self.jump_sizes.push(law.sample_log_jump(rng));
        }
    }

    fn exact_path(&mut self, t: f64) -> (f64, f64, bool) {
        let slope = self.model.drift_between_jumps();
        self.segments.clear();
        let mut v = 0.0;
        let mut start = 0.0;
        let mut saturated = false;
        for (&tau, &y) in self.jump_times.iter().zip(&self.jump_sizes) {
            self.segments.push(Segment {
                duration: tau - start,
                start_value: v,
                slope,
            });
            v += slope * (tau - start) + y;
            saturated |= v.abs() > SATURATION_EXPONENT;
            start = tau;
        }
        self.segments.push(Segment {
            duration: t - start,
            start_value: v,
            slope,
        });
        v += slope * (t - start);
        saturated |= v.abs() > SATURATION_EXPONENT;
        (v, discounted_integral_exact(&self.segments), saturated)
    }

    fn grid_path<R: Rng + ?Sized>(&mut self, rng: &mut R, t: f64, step: f64) -> (f64, f64, bool) {
        let drift = self.model.drift_between_jumps();
        let sigma = self.model.sigma();
        let full_mean = drift * step;
        let full_sd = sigma * step.sqrt();
        let tol = 1e-12 * step;
        let mut v = 0.0f64;
        let mut now = 0.0;
        // last uniform node at or before `now`
        let mut node: u64 = 0;
        let mut on_node = true;
        let mut integral = 0.0;
        let mut peak = 0.0f64;
        let advance = |v: &mut f64, integral: &mut f64, dt: f64, rng: &mut R| {
            *integral += (-*v).exp() * dt;
            let z: f64 = rng.sample(StandardNormal);
            *v += drift * dt + sigma * dt.sqrt() * z;
        };
        let n_events = self.jump_times.len();
        for i in 0..=n_events {
            let (until, jump) = if i < n_events {
                (self.jump_times[i], self.jump_sizes[i])
            } else {
                (t, 0.0)
            };
            // largest node strictly before `until`
            let last_node = (((until - tol) / step).ceil() as u64).saturating_sub(1);
            if !on_node && node < last_node {
                let next = (node + 1) as f64 * step;
                advance(&mut v, &mut integral, next - now, rng);
                peak = peak.max(v.abs());
                node += 1;
                on_node = true;
            }
            if on_node {
                let mut sum = 0.0;
                while node < last_node {
                    sum += (-v).exp();
                    let z: f64 = rng.sample(StandardNormal);
                    v += full_mean + full_sd * z;
                    peak = peak.max(v.abs());
                    node += 1;
                }
                integral += sum * step;
                now = node as f64 * step;
            }
            let dt = until - now;
            if dt > 0.0 {
                advance(&mut v, &mut integral, dt, rng);
                peak = peak.max(v.abs());
            }
            now = until;
            if (node + 1) as f64 * step <= until + tol {
                node += 1;
                on_node = true;
            } else {
                on_node = false;
            }
            v += jump;
            peak = peak.max(v.abs());
        }
        (v, integral, peak > SATURATION_EXPONENT)
    }
}

/// Simulates one cycle with a fresh simulator.
pub fn simulate_cycle<R: Rng + ?Sized>(
    model: &LevyModel,
    insurance: &Insurance,
    grid: PathGridConfig,
    rng: &mut R,
) -> Result<CycleSample> {
    Ok(CycleSimulator::new(model, insurance, grid)?.simulate(rng))
}

/// Exact draw of `V_t`: linear drift, a Gaussian increment and the
/// compound-Poisson sum of log-price jumps.
pub fn sample_log_price<R: Rng + ?Sized>(model: &LevyModel, t: f64, rng: &mut R) -> f64 {
    let mut v = model.drift_between_jumps() * t;
    if model.sigma2() > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        v += model.sigma() * t.sqrt() * z;
    }
    let lambda = model.jump_intensity();
    if lambda > 0.0 {
        let n = Poisson::new(lambda * t).map(|p| p.sample(rng) as u64).unwrap_or(0);
        for _ in 0..n {
            v += model.jumps().law.sample_log_jump(rng);
        }
    }
    v
}

/// Exact segments of a pure-jump log-price path on `[0, t]`, for
/// integrator comparisons.
pub fn pure_jump_segments<R: Rng + ?Sized>(model: &LevyModel, t: f64, rng: &mut R) -> Vec<Segment> {
    let slope = model.drift_between_jumps();
    let lambda = model.jump_intensity();
    let n = if lambda > 0.0 {
        Poisson::new(lambda * t).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    let mut times: Vec<f64> = (0..n).map(|_| t * rng.random::<f64>()).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let mut segments = Vec::with_capacity(n + 1);
    let (mut v, mut start) = (0.0, 0.0);
    for tau in times {
        segments.push(Segment {
            duration: tau - start,
            start_value: v,
            slope,
        });
        v += slope * (tau - start) + model.jumps().law.sample_log_jump(rng);
        start = tau;
    }
    segments.push(Segment {
        duration: t - start,
        start_value: v,
        slope,
    });
    segments
}
