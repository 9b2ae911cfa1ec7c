//! Distribution families for interarrival times, claim magnitudes and
//! price jumps, with the closed-form moment queries the engines rely on.
//!
//! Price jumps are described on the scale of the relative price `R`
//! (`x > -1`); the matching jump of the log price is `y = ln(1 + x)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]: safe under ln and negative powers.
    1.0 - rng.random::<f64>()
}

/// Law of the time between consecutive claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InterarrivalLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Deterministic { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InterarrivalLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(invalid("interarrival.rate", format!("must be positive, got {rate}")))
            }
            Self::Gamma { shape, rate } if !(shape > 0.0 && rate > 0.0) => Err(invalid(
                "interarrival.shape/rate",
                format!("must be positive, got shape={shape} rate={rate}"),
            )),
            Self::Deterministic { value } if !(value > 0.0 && value.is_finite()) => Err(invalid(
                "interarrival.value",
                format!("must be positive, got {value}"),
            )),
            Self::Uniform { lo, hi } if !(lo >= 0.0 && hi > lo && hi.is_finite()) => Err(invalid(
                "interarrival.lo/hi",
                format!("need 0 <= lo < hi, got lo={lo} hi={hi}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Self::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            Self::Deterministic { value } => value,
            Self::Uniform { lo, hi } => {
                // Strictly positive even when lo = 0.
                let t = lo + (hi - lo) * open_unit(rng);
                t.min(hi)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Gamma { shape, rate } => shape / rate,
            Self::Deterministic { value } => value,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// `E e^{sT}` for any real `s`; `+inf` where the transform diverges.
    pub fn mgf(&self, s: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                if s < rate {
                    rate / (rate - s)
                } else {
                    f64::INFINITY
                }
            }
            Self::Gamma { shape, rate } => {
                if s < rate {
                    (rate / (rate - s)).powf(shape)
                } else {
                    f64::INFINITY
                }
            }
            Self::Deterministic { value } => (s * value).exp(),
            Self::Uniform { lo, hi } => {
                let w = hi - lo;
                if s == 0.0 {
                    1.0
                } else {
                    (s * lo).exp() * (s * w).exp_m1() / (s * w)
                }
            }
        }
    }

    /// `E e^{eps T}` for `eps > 0`.
    pub fn exp_moment(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(invalid("eps", format!("must be positive, got {eps}")));
        }
        Ok(self.mgf(eps))
    }

    /// Supremum of the `eps` with `E e^{eps T} < inf` (the bound itself is excluded).
    pub fn exp_moment_sup(&self) -> f64 {
        match *self {
            Self::Exponential { rate } | Self::Gamma { rate, .. } => rate,
            Self::Deterministic { .. } | Self::Uniform { .. } => f64::INFINITY,
        }
    }

    /// Whether `P(T <= t) > 0` for every `t > 0`.
    pub fn charges_every_neighbourhood_of_zero(&self) -> bool {
        match *self {
            Self::Exponential { .. } | Self::Gamma { .. } => true,
            Self::Deterministic { .. } => false,
            Self::Uniform { lo, .. } => lo == 0.0,
        }
    }
}

/// Law of the claim magnitude `|xi|`; claims enter the reserve with a negative sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClaimLaw {
    Exponential { rate: f64 },
    Pareto { scale: f64, index: f64 },
    LogNormal { mu: f64, sigma: f64 },
    UniformBounded { lo: f64, hi: f64 },
}

impl ClaimLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(invalid("claim.rate", format!("must be positive, got {rate}")))
            }
            Self::Pareto { scale, index } if !(scale > 0.0 && index > 0.0) => Err(invalid(
                "claim.scale/index",
                format!("must be positive, got scale={scale} index={index}"),
            )),
            Self::LogNormal { sigma, mu } if !(sigma >= 0.0 && mu.is_finite()) => Err(invalid(
                "claim.mu/sigma",
                format!("need finite mu and sigma >= 0, got mu={mu} sigma={sigma}"),
            )),
            Self::UniformBounded { lo, hi } if !(lo >= 0.0 && hi >= lo && hi > 0.0 && hi.is_finite()) => {
                Err(invalid(
                    "claim.lo/hi",
                    format!("need 0 <= lo <= hi, hi > 0, got lo={lo} hi={hi}"),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Self::Pareto { scale, index } => scale * open_unit(rng).powf(-1.0 / index),
            Self::LogNormal { mu, sigma } => (mu + sigma * rng.sample::<f64, _>(StandardNormal)).exp(),
            Self::UniformBounded { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    lo + (hi - lo) * rng.random::<f64>()
                }
            }
        }
    }

    /// `E|xi|^p` for `p > 0`; `+inf` in-band when the moment diverges.
    pub fn fractional_moment(&self, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(invalid("p", format!("must be positive, got {p}")));
        }
        Ok(match *self {
            Self::Exponential { rate } => libm::tgamma(p + 1.0) / rate.powf(p),
            Self::Pareto { scale, index } => {
                if p < index {
                    scale.powf(p) * index / (index - p)
                } else {
                    f64::INFINITY
                }
            }
            Self::LogNormal { mu, sigma } => (p * mu + 0.5 * p * p * sigma * sigma).exp(),
            Self::UniformBounded { lo, hi } => {
                if lo == hi {
                    lo.powf(p)
                } else {
                    (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / ((p + 1.0) * (hi - lo))
                }
            }
        })
    }

    /// Supremum of the `p` with `E|xi|^p < inf`.
    pub fn moment_sup(&self) -> f64 {
        match *self {
            Self::Pareto { index, .. } => index,
            _ => f64::INFINITY,
        }
    }

    pub fn has_bounded_support(&self) -> bool {
        matches!(self, Self::UniformBounded { .. })
    }
}

/// Law of a single price jump (finite-activity jump measures only; the
/// intensity lives in [`crate::model::JumpMeasure`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum JumpLaw {
    /// Jumps of `R` at `points` with probabilities proportional to `weights`.
    Atomic { points: Vec<f64>, weights: Vec<f64> },
    /// Jumps of `R` uniform on `[lo, hi]`, `-1 < lo < hi`.
    UniformOnInterval { lo: f64, hi: f64 },
    /// Log-price jumps `y = ln(1 + x)` with an up-branch `Exp(eta_plus)` taken
    /// with probability `p_up` and a down-branch `-Exp(eta_minus)`.
    DoubleExponentialOnLog { eta_plus: f64, eta_minus: f64, p_up: f64 },
}

const LN_2: f64 = std::f64::consts::LN_2;

impl JumpLaw {
    pub fn atom(x: f64) -> Self {
        Self::Atomic {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Atomic { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(invalid(
                        "jumps.points/weights",
                        "need the same non-zero number of points and weights",
                    ));
                }
                if let Some(&x) = points.iter().find(|&&x| !(x > -1.0) || !x.is_finite()) {
                    return Err(crate::error::Error::JumpSupport(x));
                }
                if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(invalid("jumps.weights", "weights must be non-negative with positive sum"));
                }
                Ok(())
            }
            &Self::UniformOnInterval { lo, hi } => {
                if !(lo > -1.0) {
                    return Err(crate::error::Error::JumpSupport(lo));
                }
                if !(hi > lo && hi.is_finite()) {
                    return Err(invalid("jumps.lo/hi", format!("need lo < hi, got lo={lo} hi={hi}")));
                }
                Ok(())
            }
            &Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                if !(eta_plus > 0.0 && eta_minus > 0.0) {
                    return Err(invalid(
                        "jumps.eta_plus/eta_minus",
                        format!("must be positive, got {eta_plus}, {eta_minus}"),
                    ));
                }
                if !(0.0..=1.0).contains(&p_up) {
                    return Err(invalid("jumps.p_up", format!("must lie in [0, 1], got {p_up}")));
                }
                Ok(())
            }
        }
    }

    fn atoms(&self) -> Option<impl Iterator<Item = (f64, f64)> + '_> {
        match self {
            Self::Atomic { points, weights } => {
                let total: f64 = weights.iter().sum();
                Some(points.iter().zip(weights).map(move |(&x, &w)| (x, w / total)))
            }
            _ => None,
        }
    }

    /// Draws a jump of the log price, `y = ln(1 + x)`.
    pub fn sample_log_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Atomic { points, weights } => {
                if points.len() == 1 {
                    return points[0].ln_1p();
                }
                let total: f64 = weights.iter().sum();
                let mut target = rng.random::<f64>() * total;
                for (&x, &w) in points.iter().zip(weights) {
                    if target < w {
                        return x.ln_1p();
                    }
                    target -= w;
                }
                points[points.len() - 1].ln_1p()
            }
            &Self::UniformOnInterval { lo, hi } => (lo + (hi - lo) * rng.random::<f64>()).ln_1p(),
            &Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<f64>() < p_up {
                    e / eta_plus
                } else {
                    -e / eta_minus
                }
            }
        }
    }

    /// Draws a jump of `R` (always strictly above -1).
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::UniformOnInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            _ => self.sample_log_jump(rng).exp_m1(),
        }
    }

    /// Open interval of `q` on which `E (1 + X)^{-q}` is finite.
    pub fn exp_domain(&self) -> (f64, f64) {
        match *self {
            Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                let lo = if p_up > 0.0 { -eta_plus } else { f64::NEG_INFINITY };
                let hi = if p_up < 1.0 { eta_minus } else { f64::INFINITY };
                (lo, hi)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `E e^{-q Y} = E (1 + X)^{-q}`; `+inf` outside [`Self::exp_domain`].
    pub fn log_jump_laplace(&self, q: f64) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.map(|(x, w)| w * (-q * x.ln_1p()).exp()).sum();
        }
        match *self {
            Self::UniformOnInterval { lo, hi } => {
                let (l0, l1) = (lo.ln_1p(), hi.ln_1p());
                let s = 1.0 - q;
                let span = l1 - l0;
                let integral = if s == 0.0 {
                    span
                } else {
                    (s * l0).exp() * (s * span).exp_m1() / s
                };
                integral / (hi - lo)
            }
            Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                let (dlo, dhi) = self.exp_domain();
                if q <= dlo || q >= dhi {
                    return f64::INFINITY;
                }
                let up = if p_up > 0.0 { p_up * eta_plus / (eta_plus + q) } else { 0.0 };
                let down = if p_up < 1.0 {
                    (1.0 - p_up) * eta_minus / (eta_minus - q)
                } else {
                    0.0
                };
                up + down
            }
            Self::Atomic { .. } => unreachable!(),
        }
    }

    /// `E h(X)` with `h(x) = x 1{|x| <= 1}`.
    pub fn mean_truncated_jump(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.map(|(x, w)| w * truncate(x)).sum();
        }
        match *self {
            Self::UniformOnInterval { lo, hi } => {
                let (a, b) = (lo.max(-1.0), hi.min(1.0));
                if b > a {
                    (b * b - a * a) / (2.0 * (hi - lo))
                } else {
                    0.0
                }
            }
            Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                // |x| <= 1 with x = e^y - 1 is y <= ln 2.
                p_up * up_branch_h(eta_plus) - (1.0 - p_up) / (eta_minus + 1.0)
            }
            Self::Atomic { .. } => unreachable!(),
        }
    }

    /// `E |h(X)|`.
    pub fn mean_abs_truncated_jump(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.map(|(x, w)| w * truncate(x).abs()).sum();
        }
        match *self {
            Self::UniformOnInterval { lo, hi } => {
                let (a, b) = (lo.max(-1.0), hi.min(1.0));
                if b <= a {
                    0.0
                } else if a >= 0.0 {
                    (b * b - a * a) / (2.0 * (hi - lo))
                } else if b <= 0.0 {
                    (a * a - b * b) / (2.0 * (hi - lo))
                } else {
                    (a * a + b * b) / (2.0 * (hi - lo))
                }
            }
            Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                p_up * up_branch_h(eta_plus) + (1.0 - p_up) / (eta_minus + 1.0)
            }
            Self::Atomic { .. } => unreachable!(),
        }
    }

    /// `E h(Y)` for the log-price jump `Y = ln(1 + X)`.
    pub fn mean_truncated_log_jump(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.map(|(x, w)| w * truncate(x.ln_1p())).sum();
        }
        match *self {
            Self::UniformOnInterval { lo, hi } => {
                // |ln(1+x)| <= 1  <=>  x in [e^-1 - 1, e - 1]
                let a = lo.max((-1.0f64).exp_m1());
                let b = hi.min(1.0f64.exp_m1());
                if b > a {
                    (log_antiderivative(b) - log_antiderivative(a)) / (hi - lo)
                } else {
                    0.0
                }
            }
            Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                p_up * truncated_exp_mean(eta_plus) - (1.0 - p_up) * truncated_exp_mean(eta_minus)
            }
            Self::Atomic { .. } => unreachable!(),
        }
    }

    /// `E Y`.
    pub fn mean_log_jump(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.map(|(x, w)| w * x.ln_1p()).sum();
        }
        match *self {
            Self::UniformOnInterval { lo, hi } => (log_antiderivative(hi) - log_antiderivative(lo)) / (hi - lo),
            Self::DoubleExponentialOnLog { eta_plus, eta_minus, p_up } => {
                p_up / eta_plus - (1.0 - p_up) / eta_minus
            }
            Self::Atomic { .. } => unreachable!(),
        }
    }

    /// `E h_bar(Y)` with `h_bar(y) = y 1{|y| > 1}`.
    pub fn mean_large_log_jump(&self) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms
                .map(|(x, w)| {
                    let y = x.ln_1p();
                    w * (y - truncate(y))
                })
                .sum();
        }
        self.mean_log_jump() - self.mean_truncated_log_jump()
    }

    /// `(P(X < 0), P(X > 0))`.
    pub fn sign_masses(&self) -> (f64, f64) {
        if let Some(atoms) = self.atoms() {
            return atoms.fold((0.0, 0.0), |(n, p), (x, w)| {
                (n + if x < 0.0 { w } else { 0.0 }, p + if x > 0.0 { w } else { 0.0 })
            });
        }
        match *self {
            Self::UniformOnInterval { lo, hi } => {
                let w = hi - lo;
                let neg = (hi.min(0.0) - lo).max(0.0) / w;
                let pos = (hi - lo.max(0.0)).max(0.0) / w;
                (neg, pos)
            }
            Self::DoubleExponentialOnLog { p_up, .. } => (1.0 - p_up, p_up),
            Self::Atomic { .. } => unreachable!(),
        }
    }
}

fn truncate(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        x
    } else {
        0.0
    }
}

/// Antiderivative of `ln(1 + x)`.
fn log_antiderivative(x: f64) -> f64 {
    let u = 1.0 + x;
    u * x.ln_1p() - u
}

/// `int_0^1 y eta e^{-eta y} dy`.
fn truncated_exp_mean(eta: f64) -> f64 {
    (1.0 - (-eta).exp() * (1.0 + eta)) / eta
}

/// `int_0^{ln 2} (e^y - 1) eta e^{-eta y} dy`.
fn up_branch_h(eta: f64) -> f64 {
    let s = 1.0 - eta;
    let growth = if s == 0.0 { LN_2 } else { (s * LN_2).exp_m1() / s };
    eta * growth - (1.0 - (-eta * LN_2).exp())
}
