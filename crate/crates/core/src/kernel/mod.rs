//! Markov structure: one-dimensional laws π_t, transition kernels
//! P_{s,t}(x, ·), the martingale identity for the polynomials p_n, and the
//! Chapman–Kolmogorov check.
//!
//! Forward kernels are constructed only for parameter sets whose
//! classification needs no time inversion: after reduction the spectral-gap
//! lemmas guarantee that every x in the support of π_s is admissible.
//! Parameter sets that classify through time inversion get their paths from
//! the joint-reversal wrapper in [`simulate_path`], and their
//! Chapman–Kolmogorov content is checked on the reduced process at the
//! inverted times.

mod sample;
mod path;

pub use path::{simulate_path, simulate_paths, PathConfig, PathSample, SeedRecord, DEFAULT_SEED};
pub use sample::{ks_statistic, uniform01, CdfTable, Sampler};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{HarnessParams, StateSpace};
use crate::recurrence::{conditional_recurrence, martingale_recurrence, IdentityReport};
use crate::spectral::{build_measure, moment_oracle, MeasureContext, SpectralMeasure};

/// Absolute slack allowed when testing x against the gap endpoints.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// The law π_t = P_{0,t}(0, ·), built from the martingale recurrence.
/// Valid for every admissible parameter set (the martingale recurrence is
/// always Favard-admissible).
pub fn law_pi(p: &HarnessParams, t: f64) -> Result<SpectralMeasure> {
    let rec = martingale_recurrence(p, t)?;
    build_measure(rec, p, MeasureContext::Marginal { t })
}

/// A transition kernel P_{s,t}(x, ·) with its spectral measure.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub measure: SpectralMeasure,
}

/// x is admissible at time s when it lies in the closure of the state space
/// and keeps the level-one recurrence coefficient nonnegative.
pub fn is_admissible(p: &HarnessParams, x: f64) -> bool {
    let scale = 1.0 + x.abs() + x * x;
    p.state_space().contains(x, ADMISSIBILITY_TOL * scale)
        && 1.0 + p.eta * x + p.sigma * x * x >= -ADMISSIBILITY_TOL * scale
}

/// Transition kernel P_{s,t}(x, ·).
///
/// Mean x, variance (t−s)(1+ηx+σx²)/(1+σs); the point mass δ_x at t = s.
pub fn transition(p: &HarnessParams, s: f64, x: f64, t: f64) -> Result<TransitionKernel> {
    let tag = p.classify()?;
    if tag.needs_time_inversion() {
        return Err(Error::Domain(
            "forward kernels exist only after time inversion for these parameters; \
             reduce them first or use simulate_path"
                .into(),
        ));
    }
    if !is_admissible(p, x) {
        return Err(Error::Domain(format!(
            "x = {x} lies outside the admissible state space at s = {s}"
        )));
    }
    let rec = conditional_recurrence(p, s, x, t)?;
    let measure = build_measure(rec, p, MeasureContext::Conditional { s, x, t })?;
    Ok(TransitionKernel { s, t, x, measure })
}

/// Check the martingale identity ∫ p_n(y;t) P_{s,t}(x,dy) = p_n(x;s) for
/// n ≤ n_max. Residuals are scaled by max(1, |p_n(x;s)|).
pub fn check_martingale(
    p: &HarnessParams,
    s: f64,
    x: f64,
    t: f64,
    n_max: usize,
    order: usize,
    tol: f64,
) -> Result<IdentityReport> {
    let cond = conditional_recurrence(p, s, x, t)?;
    let quad = crate::spectral::gauss_quadrature(&cond, order.max(n_max / 2 + 2))?;
    let rec_t = martingale_recurrence(p, t)?;
    let rec_s = martingale_recurrence(p, s)?;
    let rhs = rec_s.eval_polys(x, n_max);

    let mut lhs = vec![0.0; n_max + 1];
    for (&y, &w) in quad.nodes.iter().zip(&quad.weights) {
        let py = rec_t.eval_polys(y, n_max);
        for n in 0..=n_max {
            lhs[n] += w * py[n];
        }
    }
    let mut max_res = 0.0f64;
    for n in 0..=n_max {
        max_res = max_res.max((lhs[n] - rhs[n]).abs() / rhs[n].abs().max(1.0));
    }
    Ok(IdentityReport {
        identity: "martingale".into(),
        n_max,
        max_residual: max_res,
        pass: max_res <= tol,
    })
}

/// Mass the measure assigns outside a state space (should vanish).
pub fn confinement_defect(m: &SpectralMeasure, space: &StateSpace) -> f64 {
    match space.gap() {
        None => 0.0,
        Some((lo, hi)) => m.mass_in(lo, hi),
    }
}

/// Chapman–Kolmogorov report. When the parameters reduce through time
/// inversion the check runs on the reduced process at the inverted times,
/// which carries the same content; `times_used`, `x_used` and
/// `reduced_params` record what was actually integrated.
#[derive(Debug, Clone, Serialize)]
pub struct CkReport {
    pub identity: String,
    pub params: HarnessParams,
    pub reduced_params: HarnessParams,
    pub time_inverted: bool,
    pub negated: bool,
    pub times: (f64, f64, f64),
    pub times_used: (f64, f64, f64),
    pub x_used: Option<f64>,
    pub degree: usize,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Verify P_{s,u}(x,·) = ∫ P_{t,u}(y,·) P_{s,t}(x,dy) through moments up to
/// `degree`: the left side by the Jacobi-power oracle, the right side by
/// Gauss quadrature over the intermediate variable. At s = 0, x = 0 this is
/// the marginal form π_u = ∫ P_{t,u}(y,·) π_t(dy).
///
/// `x = None` picks the median Gauss node of the initial law, which is
/// always admissible. Residuals are scaled by max(1, |moment|).
pub fn check_chapman_kolmogorov(
    p: &HarnessParams,
    s: f64,
    t: f64,
    u: f64,
    x: Option<f64>,
    degree: usize,
    tol: f64,
) -> Result<CkReport> {
    if !(0.0 <= s && s < t && t < u) {
        return Err(Error::Domain(format!(
            "times must satisfy 0 <= s < t < u, got ({s}, {t}, {u})"
        )));
    }
    let (q, tag) = p.reduce()?;
    let inverted = tag.needs_time_inversion();
    let (su, tu, uu) = if inverted {
        (1.0 / u, 1.0 / t, if s > 0.0 { 1.0 / s } else { f64::INFINITY })
    } else {
        (s, t, u)
    };
    // marginal form when the start is the origin (or its inverted image)
    let marginal_form = if inverted { s == 0.0 } else { s == 0.0 && x.unwrap_or(0.0) == 0.0 };

    let order = degree + 4;
    // (t', u') are the conditioning and target times of the inner kernels
    let (x_used, lhs_rec, inner_times, mid_rule): (Option<f64>, _, (f64, f64), _) =
        if marginal_form {
            let (ts, tt) = if inverted { (su, tu) } else { (t, u) };
            let lhs = martingale_recurrence(&q, tt)?;
            let mid = crate::spectral::gauss_quadrature(&martingale_recurrence(&q, ts)?, order)?;
            (None, lhs, (ts, tt), mid)
        } else {
            let x0 = match x {
                Some(v) => v,
                None => {
                    let init =
                        crate::spectral::gauss_quadrature(&martingale_recurrence(&q, su)?, 21)?;
                    init.nodes[init.len() / 2]
                }
            };
            let lhs = conditional_recurrence(&q, su, x0, uu)?;
            let mid =
                crate::spectral::gauss_quadrature(&conditional_recurrence(&q, su, x0, tu)?, order)?;
            (Some(x0), lhs, (tu, uu), mid)
        };
    let (mid_t, mid_u) = inner_times;

    let mut residuals = Vec::with_capacity(degree + 1);
    let mut max_res = 0.0f64;
    // inner moments per node, then combine degree by degree
    let mut inner: Vec<Vec<f64>> = Vec::with_capacity(mid_rule.len());
    for &y in &mid_rule.nodes {
        let rec = conditional_recurrence(&q, mid_t, y, mid_u)?;
        inner.push((0..=degree).map(|k| moment_oracle(&rec, k)).collect());
    }
    for k in 0..=degree {
        let lhs = moment_oracle(&lhs_rec, k);
        let rhs: f64 = mid_rule
            .weights
            .iter()
            .zip(&inner)
            .map(|(&w, m)| w * m[k])
            .sum();
        let res = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
        residuals.push(res);
        max_res = max_res.max(res);
    }

    Ok(CkReport {
        identity: if marginal_form {
            "chapman-kolmogorov-marginal".into()
        } else {
            "chapman-kolmogorov".into()
        },
        params: *p,
        reduced_params: q,
        time_inverted: inverted,
        negated: tag.needs_negation(),
        times: (s, t, u),
        times_used: if marginal_form { (0.0, mid_t, mid_u) } else { (su, mid_t, mid_u) },
        x_used,
        degree,
        residuals,
        max_residual: max_res,
        pass: max_res <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, theta: f64, sigma: f64, tau: f64) -> HarnessParams {
        HarnessParams::new(eta, theta, sigma, tau).unwrap()
    }

    #[test]
    fn law_pi_semicircle() {
        let p = params(0.0, 0.0, 0.0, 0.0);
        let m = law_pi(&p, 1.0).unwrap();
        assert!((m.ac_interval.0 + 2.0).abs() < 1e-12);
        assert!((m.ac_interval.1 - 2.0).abs() < 1e-12);
        assert!(m.atoms.is_empty());
        assert!(m.mean().abs() < 1e-13);
        assert!((m.variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn law_pi_mean_zero_variance_t() {
        for (e, th, s, ta) in [(1.0, 1.0, 0.5, 0.5), (3.0, -1.0, 0.5, 0.5), (2.2, 2.2, 1.0, 0.2)] {
            let p = params(e, th, s, ta);
            for t in [0.4, 1.7] {
                let m = law_pi(&p, t).unwrap();
                assert!(m.mean().abs() < 1e-12);
                assert!((m.variance() - t).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn transition_mean_and_variance() {
        let p = params(1.0, 1.0, 0.5, 0.5);
        let (s, x, t) = (0.5, 0.7, 2.0);
        let k = transition(&p, s, x, t).unwrap();
        assert!((k.measure.mean() - x).abs() < 1e-12);
        let expect = (t - s) * (1.0 + p.eta * x + p.sigma * x * x) / (1.0 + p.sigma * s);
        assert!((k.measure.variance() - expect).abs() < 1e-11);
    }

    #[test]
    fn transition_at_equal_times_is_delta() {
        let p = params(0.0, 0.0, 0.0, 0.0);
        let k = transition(&p, 1.0, 0.3, 1.0).unwrap();
        assert_eq!(k.measure.point_mass(), Some(0.3));
    }

    #[test]
    fn transition_variance_flat_at_zero_params() {
        let p = params(0.0, 0.0, 0.0, 0.0);
        let k = transition(&p, 0.5, 0.9, 1.75).unwrap();
        assert!((k.measure.variance() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn transition_refuses_inversion_cases() {
        let p = params(3.0, -1.0, 0.5, 0.5);
        assert!(matches!(transition(&p, 0.5, 0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn transition_rejects_gap_x() {
        let p = params(2.2, 2.2, 1.0, 0.2);
        // the gap of σz²+ηz+1 contains its vertex
        let bad = -p.eta / (2.0 * p.sigma);
        assert!(matches!(transition(&p, 0.5, bad, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn martingale_identity_holds() {
        let p = params(1.0, 1.0, 0.5, 0.5);
        let quad = law_pi(&p, 0.5).unwrap().quadrature(9).unwrap();
        for &x in &quad.nodes[2..7] {
            let rep = check_martingale(&p, 0.5, x, 2.0, 10, 24, 1e-8).unwrap();
            assert!(rep.pass, "x={x}: residual {}", rep.max_residual);
        }
    }

    #[test]
    fn chapman_kolmogorov_direct_case() {
        let p = params(1.0, 1.0, 0.5, 0.5);
        let rep = check_chapman_kolmogorov(&p, 0.5, 1.0, 2.0, None, 10, 1e-7).unwrap();
        assert!(rep.pass, "max residual {}", rep.max_residual);
        assert!(!rep.time_inverted);

        // degree 0 and 1: mass and martingale mean are exact
        assert!(rep.residuals[0] < 1e-12);
        assert!(rep.residuals[1] < 1e-10);
    }

    #[test]
    fn chapman_kolmogorov_inverted_case() {
        // needs time inversion; 2 + ηθ + 2στ = −0.5 < 0
        let p = params(3.0, -1.0, 0.5, 0.5);
        let rep = check_chapman_kolmogorov(&p, 0.5, 1.0, 2.0, None, 10, 1e-7).unwrap();
        assert!(rep.time_inverted);
        assert!(rep.pass, "max residual {}", rep.max_residual);
    }

    #[test]
    fn chapman_kolmogorov_marginal_form() {
        let p = params(2.2, 2.2, 1.0, 0.2);
        let rep = check_chapman_kolmogorov(&p, 0.0, 0.4, 1.1, None, 8, 1e-7).unwrap();
        assert_eq!(rep.identity, "chapman-kolmogorov-marginal");
        assert!(rep.pass, "max residual {}", rep.max_residual);
    }

    #[test]
    fn confinement_in_state_space() {
        let p = params(2.2, 2.2, 1.0, 0.2);
        let space = p.state_space();
        for t in [0.2, 1.0, 4.0] {
            let m = law_pi(&p, t).unwrap();
            assert!(confinement_defect(&m, &space) < 1e-8, "t={t}");
        }
    }
}
