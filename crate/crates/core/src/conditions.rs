//! Checkable hypotheses of the power-law ruin asymptotics.

use serde::Serialize;

use crate::inputs::{ClaimLaw, InterarrivalLaw};
use crate::model::{BetaResult, LevyModel, BOUNDARY_HALVINGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Warn => "warn",
            Self::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

/// Classifier for the pure-jump, bounded-claim configurations in which
/// unboundedness of the perpetuity needs `P(T <= t) > 0` for all `t > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalClass {
    pub sigma_zero: bool,
    pub claims_bounded: bool,
    /// `Pi(|h|)`.
    pub abs_truncated_mass: f64,
    /// `Pi(]-1,0[) * Pi(]0,inf[) = 0`.
    pub one_sided_jumps: bool,
    pub active: bool,
    /// `P(T <= t) > 0` for every `t > 0`.
    pub interarrival_charges_zero: bool,
}

impl ExceptionalClass {
    pub fn classify(model: &LevyModel, claim: &ClaimLaw, interarrival: &InterarrivalLaw) -> Self {
        let sigma_zero = model.is_pure_jump();
        let claims_bounded = claim.has_bounded_support();
        let abs_truncated_mass = model.abs_truncated_jump_mass();
        let (neg, pos) = model.signed_jump_masses();
        let one_sided_jumps = neg * pos == 0.0;
        let active = sigma_zero
            && claims_bounded
            && abs_truncated_mass > 0.0
            && abs_truncated_mass.is_finite()
            && one_sided_jumps;
        Self {
            sigma_zero,
            claims_bounded,
            abs_truncated_mass,
            one_sided_jumps,
            active,
            interarrival_charges_zero: interarrival.charges_every_neighbourhood_of_zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub beta: Option<f64>,
    pub checks: Vec<Check>,
    pub exceptional: ExceptionalClass,
    pub warnings: Vec<String>,
}

impl ConditionReport {
    pub fn overall(&self) -> CheckStatus {
        self.checks
            .iter()
            .map(|c| c.status)
            .max()
            .unwrap_or(CheckStatus::Pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Evaluates the hypotheses: interior root, `E|xi|^beta < inf`,
/// `E e^{eps T} < inf` for some `eps > 0`, and the exceptional-class classifier.
pub fn validate_theorem_conditions(
    model: &LevyModel,
    beta: &BetaResult,
    claim: &ClaimLaw,
    interarrival: &InterarrivalLaw,
) -> ConditionReport {
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let q_upper = model.domain_bounds().q_upper;
    let beta_value = beta.beta();

    match beta_value {
        Some(b) => {
            let margin = q_upper * (1.0 - 2f64.powi(-BOUNDARY_HALVINGS));
            let interior = b > 0.0 && (q_upper.is_infinite() || b < margin);
            checks.push(Check {
                name: "beta_interior",
                status: if interior { CheckStatus::Pass } else { CheckStatus::Fail },
                detail: format!("beta = {b}, q_upper = {q_upper}"),
            });
        }
        None => {
            checks.push(Check {
                name: "beta_interior",
                status: CheckStatus::Fail,
                detail: format!("no root: {:?}", beta.status),
            });
            warnings.push("no positive root of H; the power-law regime does not apply".into());
        }
    }

    match beta_value {
        Some(b) => {
            let moment = claim.fractional_moment(b).unwrap_or(f64::INFINITY);
            let ok = moment.is_finite();
            if !ok {
                warnings.push(format!(
                    "E|xi|^beta = inf (claim moments finite only below {}); hypothesis violated",
                    claim.moment_sup()
                ));
            }
            checks.push(Check {
                name: "claim_moment",
                status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
                detail: format!("E|xi|^{b} = {moment}"),
            });
        }
        None => checks.push(Check {
            name: "claim_moment",
            status: CheckStatus::Fail,
            detail: "skipped: beta unavailable".into(),
        }),
    }

    let eps_sup = interarrival.exp_moment_sup();
    let eps = if eps_sup.is_finite() { 0.5 * eps_sup } else { 1.0 };
    let mgf = interarrival.mgf(eps);
    checks.push(Check {
        name: "interarrival_exp_moment",
        status: if mgf.is_finite() { CheckStatus::Pass } else { CheckStatus::Fail },
        detail: format!("E e^({eps} T) = {mgf}"),
    });

    let exceptional = ExceptionalClass::classify(model, claim, interarrival);
    let status = match (exceptional.active, exceptional.interarrival_charges_zero) {
        (false, _) => CheckStatus::Pass,
        (true, true) => CheckStatus::Warn,
        (true, false) => CheckStatus::Fail,
    };
    if exceptional.active {
        warnings.push(format!(
            "exceptional class: sigma = 0, bounded claims, one-sided jumps with Pi(|h|) = {}; \
             needs P(T <= t) > 0 for all t > 0, which {}",
            exceptional.abs_truncated_mass,
            if exceptional.interarrival_charges_zero { "holds" } else { "fails" }
        ));
    }
    checks.push(Check {
        name: "exceptional_class",
        status,
        detail: format!(
            "sigma_zero={} claims_bounded={} abs_h_mass={} one_sided={} active={} P(T<=t)>0={}",
            exceptional.sigma_zero,
            exceptional.claims_bounded,
            exceptional.abs_truncated_mass,
            exceptional.one_sided_jumps,
            exceptional.active,
            exceptional.interarrival_charges_zero
        ),
    });

    ConditionReport {
        beta: beta_value,
        checks,
        exceptional,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inputs::JumpLaw;
    use crate::model::{derive_log_price_model, find_beta, JumpMeasure, RootTolerance};

    #[test]
    fn gbm_exponential_passes() {
        let m = LevyModel::gbm(0.08, 0.04).unwrap();
        let b = find_beta(&m, RootTolerance::default());
        let r = validate_theorem_conditions(
            &m,
            &b,
            &ClaimLaw::Exponential { rate: 2.0 },
            &InterarrivalLaw::Exponential { rate: 1.0 },
        );
        assert_eq!(r.overall(), CheckStatus::Pass);
        assert!(!r.exceptional.active);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn exceptional_class_with_deterministic_arrivals() {
        // Only downward jumps of R at -0.5 (inside |x| <= 1), sigma = 0.
        let m = derive_log_price_model(0.5, 0.0, JumpMeasure::new(1.0, JumpLaw::atom(-0.5))).unwrap();
        let b = find_beta(&m, RootTolerance::default());
        assert!(b.beta().is_some());
        let r = validate_theorem_conditions(
            &m,
            &b,
            &ClaimLaw::UniformBounded { lo: 0.5, hi: 1.5 },
            &InterarrivalLaw::Deterministic { value: 1.0 },
        );
        assert!(r.exceptional.active);
        assert!(!r.exceptional.interarrival_charges_zero);
        assert_eq!(r.check("exceptional_class").unwrap().status, CheckStatus::Fail);
        assert_eq!(r.overall(), CheckStatus::Fail);
    }

    #[test]
    fn pareto_claims_below_beta_fail_moment() {
        let m = LevyModel::gbm(0.08, 0.04).unwrap();
        let b = find_beta(&m, RootTolerance::default());
        let r = validate_theorem_conditions(
            &m,
            &b,
            &ClaimLaw::Pareto { scale: 1.0, index: 2.5 },
            &InterarrivalLaw::Exponential { rate: 1.0 },
        );
        assert_eq!(r.check("claim_moment").unwrap().status, CheckStatus::Fail);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn missing_beta_fails() {
        let m = LevyModel::gbm(0.01, 0.04).unwrap();
        let b = find_beta(&m, RootTolerance::default());
        let r = validate_theorem_conditions(
            &m,
            &b,
            &ClaimLaw::Exponential { rate: 1.0 },
            &InterarrivalLaw::Exponential { rate: 1.0 },
        );
        assert_eq!(r.check("beta_interior").unwrap().status, CheckStatus::Fail);
    }
}
