//! The four-parameter family (η, θ, σ, τ) of the free quadratic harness.
//!
//! The fifth quadratic-harness parameter is pinned to γ = −στ, which is what
//! makes the polynomial recurrences constant beyond level two. Admissible
//! parameters satisfy σ ≥ 0, τ ≥ 0, στ < 1 and 1 + αβ > 0, where
//!
//! ```text
//! α = (η + θσ) / (1 − στ),    β = (ητ + θ) / (1 − στ).
//! ```
//!
//! Two exact symmetries reduce any admissible parameter set to one of six
//! canonical cases: time inversion (t X_{1/t} swaps (η, σ) with (θ, τ)) and
//! sign negation (−X_t flips the signs of η and θ). [`HarnessParams::classify`]
//! finds a reduction using at most one of each.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters (η, θ, σ, τ) of a free quadratic harness; γ = −στ is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessParams {
    pub eta: f64,
    pub theta: f64,
    pub sigma: f64,
    pub tau: f64,
}

/// Derived parameters α and β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub alpha: f64,
    pub beta: f64,
}

impl DerivedParams {
    /// 1 + αβ, the positivity constraint and the scale of the recurrence tail.
    pub fn one_plus_ab(&self) -> f64 {
        1.0 + self.alpha * self.beta
    }
}

/// The six canonical constraint cases of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    /// σ, τ > 0 and η² ≤ 4σ.
    Case1,
    /// σ, τ > 0, η² > 4σ, θ² > 4τ and α + σβ > 0.
    Case2,
    /// σ > 0, τ = 0, θ ≠ 0 and η² ≤ 4σ.
    Case3,
    /// σ > 0, τ = 0, θ ≠ 0, η² > 4σ and α + σβ > 0.
    Case4,
    /// σ > 0, τ = θ = 0.
    Case5,
    /// σ = τ = 0.
    Case6,
}

/// A symmetry applied while reducing parameters to a canonical case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    /// η ↦ −η, θ ↦ −θ (the process −X_t).
    Negation,
    /// (η, σ) ↔ (θ, τ) (the process t X_{1/t}).
    TimeInversion,
}

/// Result of classification: the landing case and the reductions that reach it.
///
/// Applying `transforms` in order to the original parameters yields a set
/// that satisfies the constraints of `case` directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTag {
    pub case: CaseId,
    pub transforms: Vec<Reduction>,
}

impl CaseTag {
    pub fn needs_time_inversion(&self) -> bool {
        self.transforms.contains(&Reduction::TimeInversion)
    }

    pub fn needs_negation(&self) -> bool {
        self.transforms.contains(&Reduction::Negation)
    }
}

/// State space U of the process.
///
/// For σ > 0 with η² > 4σ this is the complement of the gap (b₋, b₊) between
/// the roots of σz² + ηz + 1. For σ = 0 and η ≠ 0 the quadratic degenerates
/// to a line with the single root −1/η and U is the closed ray on which
/// 1 + ηx ≥ 0; both rays therefore have endpoint −1/η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateSpace {
    FullLine,
    /// (−∞, end]
    LeftRay { end: f64 },
    /// [start, ∞)
    RightRay { start: f64 },
    /// ℝ ∖ (gap.0, gap.1)
    GapComplement { gap: (f64, f64) },
}

impl StateSpace {
    /// Membership with an absolute tolerance at the boundary.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        match *self {
            StateSpace::FullLine => true,
            StateSpace::LeftRay { end } => x <= end + tol,
            StateSpace::RightRay { start } => x >= start - tol,
            StateSpace::GapComplement { gap } => x <= gap.0 + tol || x >= gap.1 - tol,
        }
    }

    /// The excluded open interval, if any.
    pub fn gap(&self) -> Option<(f64, f64)> {
        match *self {
            StateSpace::FullLine => None,
            StateSpace::LeftRay { end } => Some((end, f64::INFINITY)),
            StateSpace::RightRay { start } => Some((f64::NEG_INFINITY, start)),
            StateSpace::GapComplement { gap } => Some(gap),
        }
    }
}

impl HarnessParams {
    /// Build and validate a parameter set.
    pub fn new(eta: f64, theta: f64, sigma: f64, tau: f64) -> Result<Self> {
        let p = HarnessParams { eta, theta, sigma, tau };
        p.validate()?;
        Ok(p)
    }

    /// γ = −στ, the free-harness value of the fifth parameter.
    pub fn gamma(&self) -> f64 {
        -self.sigma * self.tau
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.eta, self.theta, self.sigma, self.tau];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidParams("sigma must be >= 0".into()));
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidParams("tau must be >= 0".into()));
        }
        if self.sigma * self.tau >= 1.0 {
            return Err(Error::InvalidParams("sigma*tau must be < 1".into()));
        }
        let d = self.derived();
        if d.one_plus_ab() <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "1 + alpha*beta must be > 0 (got {})",
                d.one_plus_ab()
            )));
        }
        Ok(())
    }

    /// α = (η + θσ)/(1 − στ), β = (ητ + θ)/(1 − στ).
    pub fn derived(&self) -> DerivedParams {
        let denom = 1.0 - self.sigma * self.tau;
        DerivedParams {
            alpha: (self.eta + self.theta * self.sigma) / denom,
            beta: (self.eta * self.tau + self.theta) / denom,
        }
    }

    /// α + σβ, the quantity whose sign the negation reduction controls.
    pub fn alpha_plus_sigma_beta(&self) -> f64 {
        let d = self.derived();
        d.alpha + self.sigma * d.beta
    }

    /// Swap (η, σ) with (θ, τ). Involution; swaps α with β.
    pub fn time_invert(&self) -> Self {
        HarnessParams {
            eta: self.theta,
            theta: self.eta,
            sigma: self.tau,
            tau: self.sigma,
        }
    }

    /// Flip the signs of η and θ. Involution; flips the signs of α and β.
    pub fn negate(&self) -> Self {
        HarnessParams {
            eta: -self.eta,
            theta: -self.theta,
            sigma: self.sigma,
            tau: self.tau,
        }
    }

    /// The case the parameters satisfy without any reduction, if one exists.
    ///
    /// Boundary values η² = 4σ go to the `≤` branch (Cases 1 and 3), where
    /// 1 + ηx + σx² ≥ 0 still holds for all x.
    fn direct_case(&self) -> Option<CaseId> {
        let disc_eta = self.eta * self.eta;
        let disc_theta = self.theta * self.theta;
        if self.sigma == 0.0 && self.tau == 0.0 {
            return Some(CaseId::Case6);
        }
        if self.sigma > 0.0 && self.tau == 0.0 && self.theta == 0.0 {
            return Some(CaseId::Case5);
        }
        if self.sigma > 0.0 && self.tau > 0.0 {
            if disc_eta <= 4.0 * self.sigma {
                return Some(CaseId::Case1);
            }
            if disc_theta > 4.0 * self.tau && self.alpha_plus_sigma_beta() > 0.0 {
                return Some(CaseId::Case2);
            }
            return None;
        }
        if self.sigma > 0.0 {
            // tau == 0, theta != 0
            if disc_eta <= 4.0 * self.sigma {
                return Some(CaseId::Case3);
            }
            if self.alpha_plus_sigma_beta() > 0.0 {
                return Some(CaseId::Case4);
            }
            return None;
        }
        None // sigma == 0, tau > 0: only reachable through time inversion
    }

    /// Validate and classify into one of the six cases, searching the
    /// reductions in the order: none, negation, time inversion, both
    /// (negation applied before inversion; the two commute).
    ///
    /// Every admissible parameter set lands in a case through at most one
    /// negation and one time inversion; a parameter set for which the search
    /// fails would contradict the impossibility of α + σβ = 0 alongside the
    /// case-2/4 gap conditions, so that outcome is an internal error.
    pub fn classify(&self) -> Result<CaseTag> {
        self.validate()?;
        let combos: [&[Reduction]; 4] = [
            &[],
            &[Reduction::Negation],
            &[Reduction::TimeInversion],
            &[Reduction::Negation, Reduction::TimeInversion],
        ];
        for transforms in combos {
            let q = transforms
                .iter()
                .fold(*self, |acc, r| match r {
                    Reduction::Negation => acc.negate(),
                    Reduction::TimeInversion => acc.time_invert(),
                });
            if let Some(case) = q.direct_case() {
                return Ok(CaseTag {
                    case,
                    transforms: transforms.to_vec(),
                });
            }
        }
        Err(Error::Internal(
            "no case reachable with one negation and one time inversion".into(),
        ))
    }

    /// Classify and return the reduced parameter set alongside its tag.
    pub fn reduce(&self) -> Result<(HarnessParams, CaseTag)> {
        let tag = self.classify()?;
        let q = tag.transforms.iter().fold(*self, |acc, r| match r {
            Reduction::Negation => acc.negate(),
            Reduction::TimeInversion => acc.time_invert(),
        });
        Ok((q, tag))
    }

    /// State space U.
    pub fn state_space(&self) -> StateSpace {
        if self.sigma > 0.0 {
            let disc = self.eta * self.eta - 4.0 * self.sigma;
            if disc > 0.0 {
                let r = disc.sqrt();
                let lo = (-self.eta - r) / (2.0 * self.sigma);
                let hi = (-self.eta + r) / (2.0 * self.sigma);
                StateSpace::GapComplement { gap: (lo, hi) }
            } else {
                StateSpace::FullLine
            }
        } else if self.eta < 0.0 {
            StateSpace::LeftRay { end: -1.0 / self.eta }
        } else if self.eta > 0.0 {
            StateSpace::RightRay { start: -1.0 / self.eta }
        } else {
            StateSpace::FullLine
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, theta: f64, sigma: f64, tau: f64) -> HarnessParams {
        HarnessParams::new(eta, theta, sigma, tau).unwrap()
    }

    /// Raw construction for arithmetic-only checks; the values need not be
    /// admissible harness parameters.
    fn raw(eta: f64, theta: f64, sigma: f64, tau: f64) -> HarnessParams {
        HarnessParams { eta, theta, sigma, tau }
    }

    #[test]
    fn derive_alpha_beta_examples() {
        let d = params(0.0, 0.0, 0.5, 0.5).derived();
        assert_eq!((d.alpha, d.beta), (0.0, 0.0));

        // at στ = 0 the formulas collapse to (η, θ)
        let d = raw(3.0, -1.0, 0.0, 0.0).derived();
        assert_eq!((d.alpha, d.beta), (3.0, -1.0));

        let d = params(3.0, -1.0, 0.5, 0.5).derived();
        assert!((d.alpha - 10.0 / 3.0).abs() < 1e-15);
        assert!((d.beta - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn derived_invariants_hold() {
        let p = params(1.3, -0.7, 0.4, 0.6);
        let d = p.derived();
        let st = 1.0 - p.sigma * p.tau;
        assert!((d.alpha * st - (p.eta + p.theta * p.sigma)).abs() < 1e-15);
        assert!((d.beta * st - (p.eta * p.tau + p.theta)).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(matches!(
            HarnessParams::new(0.0, 0.0, 1.0, 1.0),
            Err(Error::InvalidParams(msg)) if msg.contains("sigma*tau must be < 1")
        ));
        assert!(HarnessParams::new(0.0, 0.0, -0.1, 0.0).is_err());
        assert!(HarnessParams::new(0.0, 0.0, 0.0, -0.1).is_err());
        // alpha*beta = -4 at eta=2, theta=-2, sigma=tau=0
        assert!(HarnessParams::new(2.0, -2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let tag = params(0.0, 0.0, 0.0, 0.0).classify().unwrap();
        assert_eq!(tag.case, CaseId::Case6);
        assert!(tag.transforms.is_empty());

        let tag = params(1.0, 1.0, 0.5, 0.5).classify().unwrap();
        assert_eq!(tag.case, CaseId::Case1);
        assert!(tag.transforms.is_empty());

        // eta^2 = 9 > 2 = 4*sigma but the inverted set has eta'^2 = 1 <= 2
        let tag = params(3.0, -1.0, 0.5, 0.5).classify().unwrap();
        assert_eq!(tag.case, CaseId::Case1);
        assert_eq!(tag.transforms, vec![Reduction::TimeInversion]);
    }

    #[test]
    fn classify_accepts_negative_unnecessary_quantity() {
        // 2 + eta*theta + 2*sigma*tau = -0.5 must be accepted
        let p = params(3.0, -1.0, 0.5, 0.5);
        assert!((2.0 + p.eta * p.theta + 2.0 * p.sigma * p.tau + 0.5).abs() < 1e-15);
        assert!(p.classify().is_ok());

        // and a set that stays in case 2 outright with the quantity at -3.9
        let p = params(4.0, -1.5, 0.1, 0.5);
        assert!(2.0 + p.eta * p.theta + 2.0 * p.sigma * p.tau < 0.0);
        let tag = p.classify().unwrap();
        assert_eq!(tag.case, CaseId::Case2);
        assert!(tag.transforms.is_empty());
    }

    #[test]
    fn classify_sigma_zero_needs_inversion_combinations() {
        // sigma=0, tau>0 has no direct case; inversion (with or without
        // negation) must land it in case 3/4/5.
        let tag = params(-0.1, 1.0, 0.0, 0.1).classify().unwrap();
        assert_eq!(tag.case, CaseId::Case4);
        assert_eq!(tag.transforms, vec![Reduction::TimeInversion]);

        let tag = params(0.1, -1.0, 0.0, 0.1).classify().unwrap();
        assert_eq!(tag.case, CaseId::Case4);
        assert_eq!(
            tag.transforms,
            vec![Reduction::Negation, Reduction::TimeInversion]
        );

        let tag = params(0.0, -3.0, 0.0, 0.5).classify().unwrap();
        assert_eq!(tag.case, CaseId::Case5);
    }

    #[test]
    fn involutions_are_exact() {
        let p = raw(1.7, -2.3, 0.3, 0.2);
        assert_eq!(p.time_invert().time_invert(), p);
        assert_eq!(p.negate().negate(), p);
        assert_eq!(params(0.0, 0.0, 0.0, 0.0).time_invert(), params(0.0, 0.0, 0.0, 0.0));
        assert_eq!(
            params(3.0, -1.0, 0.5, 0.5).time_invert(),
            params(-1.0, 3.0, 0.5, 0.5)
        );
        assert_eq!(
            params(3.0, -1.0, 0.5, 0.5).negate(),
            params(-3.0, 1.0, 0.5, 0.5)
        );
    }

    #[test]
    fn negate_flips_alpha_plus_sigma_beta() {
        let p = params(1.1, 0.4, 0.6, 0.3);
        assert!((p.alpha_plus_sigma_beta() + p.negate().alpha_plus_sigma_beta()).abs() < 1e-14);
    }

    #[test]
    fn state_space_branches() {
        assert_eq!(params(0.0, 0.0, 0.0, 0.0).state_space(), StateSpace::FullLine);

        // roots of 0.5 z^2 + 3 z + 1
        let sp = params(3.0, 0.0, 0.5, 0.0).state_space();
        match sp {
            StateSpace::GapComplement { gap } => {
                assert!((gap.0 - (-3.0 - 7f64.sqrt())).abs() < 1e-12);
                assert!((gap.1 - (-3.0 + 7f64.sqrt())).abs() < 1e-12);
            }
            other => panic!("expected gap, got {other:?}"),
        }

        // sigma = 0, eta < 0: left ray (−∞, −1/η] with −1/η = 1/2
        let sp = params(-2.0, 0.0, 0.0, 0.0).state_space();
        assert_eq!(sp, StateSpace::LeftRay { end: 0.5 });

        // sigma = 0, eta > 0: right ray [−1/η, ∞)
        let sp = params(2.0, 0.0, 0.0, 0.0).state_space();
        assert_eq!(sp, StateSpace::RightRay { start: -0.5 });

        // eta^2 < 4 sigma: full line
        assert_eq!(params(1.0, 0.0, 0.5, 0.0).state_space(), StateSpace::FullLine);
        // eta^2 = 4 sigma: empty gap, treated as the full line
        assert_eq!(params(2.0, 0.0, 1.0, 0.0).state_space(), StateSpace::FullLine);
    }

    #[test]
    fn state_space_mirrors_under_negation() {
        let p = params(2.0, 0.3, 0.0, 0.1);
        let (sp, spn) = (p.state_space(), p.negate().state_space());
        match (sp, spn) {
            (StateSpace::RightRay { start }, StateSpace::LeftRay { end }) => {
                assert!((start + end).abs() < 1e-15);
            }
            other => panic!("expected mirrored rays, got {other:?}"),
        }
    }
}
