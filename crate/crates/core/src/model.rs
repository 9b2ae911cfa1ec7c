//! The price model: the Lévy triplet of the relative price `R`, the derived
//! triplet of the log price `V = ln E(R)`, the cumulant generating function
//! `H(q) = ln E e^{-q V_1}` with its effective domain, and the positive root
//! `beta` of `H` that governs the ruin-probability tail.
//!
//! Only finite-activity jump measures are supported. All jump integrals are
//! evaluated in closed form for the shipped jump families, using the
//! truncation function `h(x) = x 1{|x| <= 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inputs::JumpLaw;

/// Finite Lévy measure of `R`: `intensity` times the law of a single jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasure {
    pub intensity: f64,
    pub law: JumpLaw,
}

impl JumpMeasure {
    pub fn new(intensity: f64, law: JumpLaw) -> Self {
        Self { intensity, law }
    }

    /// The zero measure.
    pub fn none() -> Self {
        Self {
            intensity: 0.0,
            law: JumpLaw::atom(0.0),
        }
    }

    pub fn is_active(&self) -> bool {
        self.intensity > 0.0
    }

    fn validate(&self) -> Result<()> {
        if self.intensity.is_infinite() {
            return Err(Error::InfiniteActivity(self.intensity));
        }
        if !(self.intensity >= 0.0) {
            return Err(crate::error::invalid(
                "jumps.intensity",
                format!("must be >= 0, got {}", self.intensity),
            ));
        }
        self.law.validate()
    }
}

/// Lévy model of the relative price `R` together with the derived data of `V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyModel {
    a: f64,
    sigma2: f64,
    jumps: JumpMeasure,
    a_v: f64,
    /// Drift of `V` between jumps: `a_v - Pi_V(h)`.
    drift: f64,
}

/// Builds the model of `V` from the triplet `(a, sigma2, Pi)` of `R`.
///
/// `a_V = a - sigma2/2 + Pi(h(ln(1+x)) - h(x))`, `Pi_V = Pi o phi^{-1}` with
/// `phi(x) = ln(1+x)`.
pub fn derive_log_price_model(a: f64, sigma2: f64, jumps: JumpMeasure) -> Result<LevyModel> {
    if !a.is_finite() {
        return Err(crate::error::invalid("a", format!("must be finite, got {a}")));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(crate::error::invalid("sigma2", format!("must be finite and >= 0, got {sigma2}")));
    }
    jumps.validate()?;
    if sigma2 == 0.0 && !jumps.is_active() {
        return Err(Error::DeterministicModel);
    }
    let lambda = jumps.intensity;
    let (h_x, h_y) = if jumps.is_active() {
        (jumps.law.mean_truncated_jump(), jumps.law.mean_truncated_log_jump())
    } else {
        (0.0, 0.0)
    };
    let a_v = a - 0.5 * sigma2 + lambda * (h_y - h_x);
    let drift = a - 0.5 * sigma2 - lambda * h_x;
    Ok(LevyModel {
        a,
        sigma2,
        jumps,
        a_v,
        drift,
    })
}

/// Open effective domain `(q_lower, q_upper)` of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantDomain {
    pub q_lower: f64,
    pub q_upper: f64,
}

impl CumulantDomain {
    pub fn contains(&self, q: f64) -> bool {
        q > self.q_lower && q < self.q_upper
    }
}

impl LevyModel {
    /// Geometric Brownian motion: `R_t = a t + sigma W_t`.
    pub fn gbm(a: f64, sigma2: f64) -> Result<Self> {
        derive_log_price_model(a, sigma2, JumpMeasure::none())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    /// Drift of `V` in the canonical decomposition with truncation `h`.
    pub fn a_v(&self) -> f64 {
        self.a_v
    }

    /// Drift of `V` between jumps, i.e. `a_V - Pi_V(h)`.
    pub fn drift_between_jumps(&self) -> f64 {
        self.drift
    }

    pub fn jump_intensity(&self) -> f64 {
        self.jumps.intensity
    }

    pub fn domain_bounds(&self) -> CumulantDomain {
        let (q_lower, q_upper) = if self.jumps.is_active() {
            self.jumps.law.exp_domain()
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        CumulantDomain { q_lower, q_upper }
    }

    /// `H(q) = -a_V q + sigma2 q^2 / 2 + Pi_V(e^{-q y} - 1 + q h(y))`,
    /// `+inf` outside the effective domain.
    pub fn cumulant(&self, q: f64) -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        if !self.domain_bounds().contains(q) {
            return f64::INFINITY;
        }
        let mut h = -self.a_v * q + 0.5 * self.sigma2 * q * q;
        if self.jumps.is_active() {
            let law = &self.jumps.law;
            let laplace = law.log_jump_laplace(q);
            h += self.jumps.intensity * (laplace - 1.0 + q * law.mean_truncated_log_jump());
        }
        h
    }

    /// `D+H(0) = -a_V - Pi_V(h_bar)`, `h_bar(y) = y 1{|y| > 1}`.
    pub fn right_derivative_at_zero(&self) -> f64 {
        let large = if self.jumps.is_active() {
            self.jumps.intensity * self.jumps.law.mean_large_log_jump()
        } else {
            0.0
        };
        -self.a_v - large
    }

    /// Whether `sigma2 = 0` and `R` only jumps.
    pub fn is_pure_jump(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// `Pi(|h|)`.
    pub fn abs_truncated_jump_mass(&self) -> f64 {
        if self.jumps.is_active() {
            self.jumps.intensity * self.jumps.law.mean_abs_truncated_jump()
        } else {
            0.0
        }
    }

    /// `(Pi(]-1, 0[), Pi(]0, inf[))`.
    pub fn signed_jump_masses(&self) -> (f64, f64) {
        if self.jumps.is_active() {
            let (n, p) = self.jumps.law.sign_masses();
            (self.jumps.intensity * n, self.jumps.intensity * p)
        } else {
            (0.0, 0.0)
        }
    }
}

/// Stopping tolerances for the root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootTolerance {
    /// Bound on `|H(beta)|`.
    pub value: f64,
    /// Bound on the final bracket width.
    pub width: f64,
}

impl Default for RootTolerance {
    fn default() -> Self {
        Self {
            value: 1e-10,
            width: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BetaStatus {
    Found { beta: f64 },
    NoPositiveRoot { reason: String },
    DegenerateNonpositive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaResult {
    pub status: BetaStatus,
    pub h_right_derivative_at_zero: f64,
}

impl BetaResult {
    pub fn beta(&self) -> Option<f64> {
        match self.status {
            BetaStatus::Found { beta } => Some(beta),
            _ => None,
        }
    }

    pub fn require(&self) -> Result<f64> {
        match &self.status {
            BetaStatus::Found { beta } => Ok(*beta),
            BetaStatus::NoPositiveRoot { reason } | BetaStatus::DegenerateNonpositive { reason } => {
                Err(Error::NoBeta(reason.clone()))
            }
        }
    }
}

/// Number of halvings toward a finite `q_upper` before giving up.
pub const BOUNDARY_HALVINGS: i32 = 40;
const MAX_DOUBLINGS: i32 = 64;

/// Finds the unique root `beta` of `H` in `(0, q_upper)`.
pub fn find_beta(model: &LevyModel, tol: RootTolerance) -> BetaResult {
    let d0 = model.right_derivative_at_zero();
    let result = |status| BetaResult {
        status,
        h_right_derivative_at_zero: d0,
    };
    if d0 >= 0.0 {
        return result(BetaStatus::DegenerateNonpositive {
            reason: format!("D+H(0) = {d0} >= 0, so H >= 0 on (0, q_upper)"),
        });
    }
    if d0.is_nan() {
        return result(BetaStatus::NoPositiveRoot {
            reason: "D+H(0) is NaN".into(),
        });
    }

    let q_upper = model.domain_bounds().q_upper;
    let mut lo = 0.0;
    let mut hi = None;
    if q_upper.is_finite() {
        for k in 1..=BOUNDARY_HALVINGS {
            let q = q_upper * (1.0 - 2f64.powi(-k));
            let h = model.cumulant(q);
            if h.is_nan() {
                return result(BetaStatus::NoPositiveRoot {
                    reason: format!("H({q}) is NaN"),
                });
            }
            if h > 0.0 {
                hi = Some(q);
                break;
            }
            lo = q;
        }
        if hi.is_none() {
            return result(BetaStatus::NoPositiveRoot {
                reason: format!(
                    "H < 0 up to q_upper (1 - 2^-{BOUNDARY_HALVINGS}) = {lo}; root may lie within \
                     2^-{BOUNDARY_HALVINGS} q_upper of the boundary"
                ),
            });
        }
    } else {
        let mut q = 1.0;
        for _ in 0..MAX_DOUBLINGS {
            let h = model.cumulant(q);
            if h.is_nan() {
                return result(BetaStatus::NoPositiveRoot {
                    reason: format!("H({q}) is NaN"),
                });
            }
            if h > 0.0 {
                hi = Some(q);
                break;
            }
            lo = q;
            q *= 2.0;
        }
        if hi.is_none() {
            return result(BetaStatus::NoPositiveRoot {
                reason: format!("H < 0 on (0, {lo}]; H(q)/q does not turn positive"),
            });
        }
    }

    let mut hi = hi.unwrap();
    // H < 0 on (0, beta) and H > 0 on (beta, q_upper) by convexity.
    let mut best = (hi, model.cumulant(hi));
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h = model.cumulant(mid);
        if h.abs() < best.1.abs() {
            best = (mid, h);
        }
        if h == 0.0 {
            break;
        }
        if h < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol.width && best.1.abs() <= tol.value {
            break;
        }
    }
    if best.1.abs() > tol.value && hi - lo > 4.0 * f64::EPSILON * hi {
        return result(BetaStatus::NoPositiveRoot {
            reason: format!("bisection stalled with |H| = {:e} on [{lo}, {hi}]", best.1.abs()),
        });
    }
    result(BetaStatus::Found { beta: best.0 })
}
