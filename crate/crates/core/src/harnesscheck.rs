//! End-to-end verification that the constructed process is a quadratic
//! harness: covariance E[X_s X_t] = min(s,t), the linear-regression identity
//! at polynomial level, the quadratic conditional-variance identity, and a
//! pointwise bridge conditional-variance check.
//!
//! All expectations are nested Gauss integrals against the kernels, so for
//! polynomial integrands they are exact up to rounding once the order
//! clears the degree. Parameters are reduced before checking; a time
//! inversion transforms the triple (s,t,u) into (1/u, 1/t, 1/s), which
//! carries the identical harness content.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{quadratic_coeffs, regression_coeffs};
use crate::params::HarnessParams;
use crate::recurrence::{conditional_recurrence, martingale_recurrence};
use crate::spectral::{cauchy_cf_boundary, gauss_legendre, gauss_quadrature, Quadrature};

/// Grid of time triples and polynomial degrees for the suites.
#[derive(Debug, Clone)]
pub struct TripleGrid {
    pub triples: Vec<(f64, f64, f64)>,
    pub max_degree: usize,
}

impl TripleGrid {
    pub fn new(triples: Vec<(f64, f64, f64)>, max_degree: usize) -> Result<Self> {
        for &(s, t, u) in &triples {
            if !(0.0 < s && s < t && t < u) {
                return Err(Error::Domain(format!(
                    "triples must satisfy 0 < s < t < u, got ({s}, {t}, {u})"
                )));
            }
        }
        if max_degree > MAX_DEGREE_CAP {
            return Err(Error::Domain(format!(
                "degree cap is {MAX_DEGREE_CAP}, got {max_degree}"
            )));
        }
        Ok(TripleGrid { triples, max_degree })
    }
}

/// The standard grid used by the suites.
pub fn standard_triple_grid() -> TripleGrid {
    TripleGrid {
        triples: vec![(0.5, 1.0, 2.0), (1.0, 2.0, 4.0), (0.25, 0.5, 0.75)],
        max_degree: 4,
    }
}

/// Hard cap on polynomial degrees in the suites.
pub const MAX_DEGREE_CAP: usize = 6;

/// One verified grid point.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub identity: String,
    pub s: f64,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Quadrature order and tolerances of the suites.
#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    /// Gauss order of every nesting level.
    pub order: usize,
    /// Tolerance of the polynomial-identity residuals.
    pub tolerance: f64,
    /// Tolerance of the covariance and mean checks.
    pub covariance_tolerance: f64,
    pub mean_tolerance: f64,
    /// Worker cap for the suite runner (None: rayon default).
    pub threads: Option<usize>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            order: 64,
            tolerance: 1e-6,
            covariance_tolerance: 1e-8,
            mean_tolerance: 1e-10,
            threads: None,
        }
    }
}

fn scaled_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// The nested quadrature cache for one reduced parameter set and one triple:
/// outer nodes over π_s, middle rules over P_{s,t}(x_i,·), inner p_m-sums
/// over P_{t,u}(y_ij,·), and the direct s→u rules used by the right-hand
/// sides.
struct TripleCache {
    order: usize,
    max_degree: usize,
    outer: Quadrature,
    /// p_n(x_i; s)
    outer_polys: Vec<Vec<f64>>,
    /// middle rule per outer node
    mid: Vec<Quadrature>,
    /// inner_sums[i][j][m] = Σ_k q_ijk p_m(z_ijk; u)
    inner_sums: Vec<Vec<Vec<f64>>>,
    /// direct s→u sums: direct[i][m][r] = Σ_k ρ_ik ζ^r p_m(ζ_ik; u), r = 0,1,2
    direct: Vec<Vec<[f64; 3]>>,
}

impl TripleCache {
    fn build(q: &HarnessParams, s: f64, t: f64, u: f64, cfg: &CheckConfig) -> Result<Self> {
        let order = cfg.order.max(8);
        let max_degree = MAX_DEGREE_CAP;
        let rec_s = martingale_recurrence(q, s)?;
        let rec_u = martingale_recurrence(q, u)?;
        let outer = gauss_quadrature(&rec_s, order)?;
        let outer_polys: Vec<Vec<f64>> = outer
            .nodes
            .iter()
            .map(|&x| rec_s.eval_polys(x, max_degree))
            .collect();

        let mut mid = Vec::with_capacity(order);
        let mut inner_sums = Vec::with_capacity(order);
        let mut direct = Vec::with_capacity(order);
        for &x in &outer.nodes {
            let mid_rule = gauss_quadrature(&conditional_recurrence(q, s, x, t)?, order)?;
            let mut sums_i = Vec::with_capacity(order);
            for &y in &mid_rule.nodes {
                let inner_rule = gauss_quadrature(&conditional_recurrence(q, t, y, u)?, order)?;
                let mut acc = vec![0.0f64; max_degree + 1];
                for (&z, &w) in inner_rule.nodes.iter().zip(&inner_rule.weights) {
                    let pm = rec_u.eval_polys(z, max_degree);
                    for (a, v) in acc.iter_mut().zip(pm) {
                        *a += w * v;
                    }
                }
                sums_i.push(acc);
            }
            mid.push(mid_rule);

            let direct_rule = gauss_quadrature(&conditional_recurrence(q, s, x, u)?, order)?;
            let mut dsum = vec![[0.0f64; 3]; max_degree + 1];
            for (&z, &w) in direct_rule.nodes.iter().zip(&direct_rule.weights) {
                let pm = rec_u.eval_polys(z, max_degree);
                for (slot, v) in dsum.iter_mut().zip(pm) {
                    slot[0] += w * v;
                    slot[1] += w * z * v;
                    slot[2] += w * z * z * v;
                }
            }
            direct.push(dsum);
            inner_sums.push(sums_i);
        }
        Ok(TripleCache {
            order,
            max_degree,
            outer,
            outer_polys,
            mid,
            inner_sums,
            direct,
        })
    }

    /// E[p_n(X_s;s) · X_t^pow · p_m(X_u;u)] through the s→t→u nesting.
    fn triple_expectation(&self, n: usize, m: usize, pow: u32) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.order {
            let mut mid_acc = 0.0;
            let rule = &self.mid[i];
            for j in 0..rule.len() {
                let y = rule.nodes[j];
                mid_acc += rule.weights[j] * y.powi(pow as i32) * self.inner_sums[i][j][m];
            }
            acc += self.outer.weights[i] * self.outer_polys[i][n] * mid_acc;
        }
        acc
    }

    /// E[p_n(X_s;s) · X_s^a · X_u^r · p_m(X_u;u)] through the direct s→u rule.
    fn direct_expectation(&self, n: usize, m: usize, s_pow: u32, u_pow: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.order {
            let x = self.outer.nodes[i];
            acc += self.outer.weights[i]
                * self.outer_polys[i][n]
                * x.powi(s_pow as i32)
                * self.direct[i][m][u_pow];
        }
        acc
    }

}

/// Covariance check: E[X_s X_t] computed as ∫ x · mean(P_{s,t}(x,·)) dπ_s
/// against min(s,t), and the mean at time t against 0.
pub fn check_covariance(p: &HarnessParams, s: f64, t: f64, cfg: &CheckConfig) -> Result<CheckReport> {
    if !(0.0 < s && s <= t) {
        return Err(Error::Domain("need 0 < s <= t".into()));
    }
    let (q, tag) = p.reduce()?;
    let (es, et) = if tag.needs_time_inversion() {
        (1.0 / t, 1.0 / s)
    } else {
        (s, t)
    };
    let rec = martingale_recurrence(&q, es)?;
    let outer = gauss_quadrature(&rec, cfg.order.max(8))?;
    let mut cov = 0.0;
    let mut mean_t = 0.0;
    for (&x, &w) in outer.nodes.iter().zip(&outer.weights) {
        let cond = gauss_quadrature(&conditional_recurrence(&q, es, x, et)?, cfg.order.max(8))?;
        let m = cond.integrate(|y| y);
        cov += w * x * m;
        mean_t += w * m;
    }
    // inversion scales the covariance: E[X_s X_t] = s·t·E[Y_{1/t} Y_{1/s}]
    let cov = if tag.needs_time_inversion() { s * t * cov } else { cov };
    let expected = s.min(t);
    let residual = (cov - expected).abs().max(mean_t.abs());
    Ok(CheckReport {
        identity: "covariance".into(),
        s,
        t,
        u: None,
        degree_n: None,
        degree_m: None,
        x: None,
        y: None,
        residual,
        tolerance: cfg.covariance_tolerance,
        pass: (cov - expected).abs() <= cfg.covariance_tolerance
            && mean_t.abs() <= cfg.mean_tolerance,
    })
}

fn reduce_triple(p: &HarnessParams, s: f64, t: f64, u: f64) -> Result<(HarnessParams, f64, f64, f64)> {
    let (q, tag) = p.reduce()?;
    if tag.needs_time_inversion() {
        Ok((q, 1.0 / u, 1.0 / t, 1.0 / s))
    } else {
        Ok((q, s, t, u))
    }
}

/// Linear-regression identity at polynomial level:
/// E[p_n(X_s;s) X_t p_m(X_u;u)] = a·E[p_n X_s p_m] + b·E[p_n X_u p_m]
/// with a = (u−t)/(u−s), b = (t−s)/(u−s).
pub fn check_linreg_polynomial(
    p: &HarnessParams,
    s: f64,
    t: f64,
    u: f64,
    n: usize,
    m: usize,
    cfg: &CheckConfig,
) -> Result<CheckReport> {
    let (q, rs, rt, ru) = reduce_triple(p, s, t, u)?;
    let cache = TripleCache::build(&q, rs, rt, ru, cfg)?;
    let residual = linreg_residual(&cache, &q, rs, rt, ru, n, m);
    Ok(CheckReport {
        identity: "linear-regression".into(),
        s,
        t,
        u: Some(u),
        degree_n: Some(n),
        degree_m: Some(m),
        x: None,
        y: None,
        residual,
        tolerance: cfg.tolerance,
        pass: residual <= cfg.tolerance,
    })
}

fn linreg_residual(
    cache: &TripleCache,
    _q: &HarnessParams,
    s: f64,
    t: f64,
    u: f64,
    n: usize,
    m: usize,
) -> f64 {
    let (a, b) = regression_coeffs(s, t, u);
    let lhs = cache.triple_expectation(n, m, 1);
    let term_s = cache.direct_expectation(n, m, 1, 0);
    let term_u = cache.direct_expectation(n, m, 0, 1);
    scaled_residual(lhs, a * term_s + b * term_u)
}

/// Quadratic conditional-variance identity at polynomial level:
/// E[p_n(X_s;s) X_t² p_m(X_u;u)] assembled against the six-coefficient
/// quadratic form in (X_s, X_u).
pub fn check_quadvar_polynomial(
    p: &HarnessParams,
    s: f64,
    t: f64,
    u: f64,
    n: usize,
    m: usize,
    cfg: &CheckConfig,
) -> Result<CheckReport> {
    let (q, rs, rt, ru) = reduce_triple(p, s, t, u)?;
    let cache = TripleCache::build(&q, rs, rt, ru, cfg)?;
    let residual = quadvar_residual(&cache, &q, rs, rt, ru, n, m);
    Ok(CheckReport {
        identity: "quadratic-variance".into(),
        s,
        t,
        u: Some(u),
        degree_n: Some(n),
        degree_m: Some(m),
        x: None,
        y: None,
        residual,
        tolerance: cfg.tolerance,
        pass: residual <= cfg.tolerance,
    })
}

fn quadvar_residual(
    cache: &TripleCache,
    q: &HarnessParams,
    s: f64,
    t: f64,
    u: f64,
    n: usize,
    m: usize,
) -> f64 {
    let c = quadratic_coeffs(q, s, t, u);
    let lhs = cache.triple_expectation(n, m, 2);
    let rhs = c.a * cache.direct_expectation(n, m, 2, 0)
        + c.b * cache.direct_expectation(n, m, 1, 1)
        + c.c * cache.direct_expectation(n, m, 0, 2)
        + c.d * cache.direct_expectation(n, m, 1, 0)
        + c.e * cache.direct_expectation(n, m, 0, 1)
        + c.f * cache.direct_expectation(n, m, 0, 0);
    scaled_residual(lhs, rhs)
}

/// Pointwise conditional variance of the bridge law given X_s = x, X_u = yv
/// against the closed quadratic form. Restricted to atom-free bridge
/// configurations; the bridge density at m is the product of the transition
/// densities (s,x) → (t,m) → (u,yv), normalized.
pub fn check_condvar_pointwise(
    p: &HarnessParams,
    s: f64,
    t: f64,
    u: f64,
    x: f64,
    yv: f64,
    cfg: &CheckConfig,
) -> Result<CheckReport> {
    let (q, tag) = p.reduce()?;
    let inverted = tag.needs_time_inversion();
    let (rs, rt, ru) = if inverted { (1.0 / u, 1.0 / t, 1.0 / s) } else { (s, t, u) };
    // endpoint values transform with the parameters: under inversion the
    // bridge (X_s = x, X_u = yv) becomes (Y_{1/u} = yv/u, Y_{1/s} = x/s)
    let (bx, by) = if inverted { (yv / u, x / s) } else { (x, yv) };
    let (bx, by) = if tag.needs_negation() { (-bx, -by) } else { (bx, by) };

    let rec_st = conditional_recurrence(&q, rs, bx, rt)?;
    let (lo, hi) = crate::spectral::tail_support(&rec_st);
    let gl = gauss_legendre(cfg.order.max(48));
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let density_at = |rec: &crate::recurrence::EcRecurrence, x: f64| -> f64 {
        let g = cauchy_cf_boundary(rec, x);
        if g.im.is_finite() {
            (-g.im / std::f64::consts::PI).max(0.0)
        } else {
            0.0
        }
    };
    let bridge = |mm: f64| -> Result<f64> {
        let da = density_at(&rec_st, mm);
        if da == 0.0 {
            return Ok(0.0);
        }
        let rec_tu = conditional_recurrence(&q, rt, mm, ru)?;
        Ok(da * density_at(&rec_tu, by))
    };

    // sine substitution removes the square-root edges of the outer density
    let mut z0 = 0.0;
    let mut z1 = 0.0;
    let mut z2 = 0.0;
    let panels = 8;
    let width = std::f64::consts::PI / panels as f64;
    for k in 0..panels {
        let c = -0.5 * std::f64::consts::PI + (k as f64 + 0.5) * width;
        for (&v, &w) in gl.nodes.iter().zip(&gl.weights) {
            let uvar = c + 0.5 * width * v;
            let mm = mid + half * uvar.sin();
            let f = bridge(mm)? * half * uvar.cos() * 0.5 * width * w;
            z0 += f;
            z1 += f * mm;
            z2 += f * mm * mm;
        }
    }
    if z0 < 1e-280 {
        return Err(Error::BridgeDensityZero);
    }
    let mean = z1 / z0;
    let var = (z2 / z0 - mean * mean).max(0.0);

    let gamma = q.gamma();
    let pref = (ru - rt) * (rt - rs) / (ru * (1.0 + q.sigma * rs) + q.tau - gamma * rs);
    let (rdu, rxs, rxu) = (ru - rs, bx, by);
    let expected = pref
        * (1.0
            + q.sigma * (ru * rxs - rs * rxu).powi(2) / (rdu * rdu)
            + q.eta * (ru * rxs - rs * rxu) / rdu
            + q.tau * (rxu - rxs).powi(2) / (rdu * rdu)
            + q.theta * (rxu - rxs) / rdu
            + (1.0 - gamma) * (rxu - rxs) * (rs * rxu - ru * rxs) / (rdu * rdu));

    let residual = scaled_residual(var, expected);
    Ok(CheckReport {
        identity: "conditional-variance-pointwise".into(),
        s,
        t,
        u: Some(u),
        degree_n: None,
        degree_m: None,
        x: Some(x),
        y: Some(yv),
        residual,
        tolerance: cfg.tolerance,
        pass: residual <= cfg.tolerance,
    })
}

/// Which identities to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Covariance,
    LinReg,
    QuadVar,
    CondVar,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "covariance" => Ok(Suite::Covariance),
            "linreg" => Ok(Suite::LinReg),
            "quadvar" => Ok(Suite::QuadVar),
            "condvar" => Ok(Suite::CondVar),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite '{other}'")),
        }
    }
}

/// Run a suite over the grid. Grid points are distributed across workers;
/// reports come back merged in deterministic grid order.
pub fn run_suite(
    p: &HarnessParams,
    suite: Suite,
    grid: &TripleGrid,
    cfg: &CheckConfig,
) -> Result<Vec<CheckReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| run_suite_inner(p, suite, grid, cfg))
}

fn run_suite_inner(
    p: &HarnessParams,
    suite: Suite,
    grid: &TripleGrid,
    cfg: &CheckConfig,
) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();

    if matches!(suite, Suite::Covariance | Suite::All) {
        let pairs: Vec<(f64, f64)> = grid
            .triples
            .iter()
            .flat_map(|&(s, t, u)| [(s, t), (t, u), (s, u), (s, s)])
            .collect();
        let mut cov: Vec<CheckReport> = pairs
            .par_iter()
            .map(|&(s, t)| check_covariance(p, s, t, cfg))
            .collect::<Result<_>>()?;
        reports.append(&mut cov);
    }

    if matches!(suite, Suite::LinReg | Suite::QuadVar | Suite::All) {
        let per_triple: Vec<Vec<CheckReport>> = grid
            .triples
            .par_iter()
            .map(|&(s, t, u)| -> Result<Vec<CheckReport>> {
                let (q, rs, rt, ru) = reduce_triple(p, s, t, u)?;
                let cache = TripleCache::build(&q, rs, rt, ru, cfg)?;
                let mut out = Vec::new();
                for n in 0..=grid.max_degree.min(cache.max_degree) {
                    for m in 0..=grid.max_degree.min(cache.max_degree) {
                        if matches!(suite, Suite::LinReg | Suite::All) {
                            let residual = linreg_residual(&cache, &q, rs, rt, ru, n, m);
                            out.push(CheckReport {
                                identity: "linear-regression".into(),
                                s,
                                t,
                                u: Some(u),
                                degree_n: Some(n),
                                degree_m: Some(m),
                                x: None,
                                y: None,
                                residual,
                                tolerance: cfg.tolerance,
                                pass: residual <= cfg.tolerance,
                            });
                        }
                        if matches!(suite, Suite::QuadVar | Suite::All) {
                            let residual = quadvar_residual(&cache, &q, rs, rt, ru, n, m);
                            out.push(CheckReport {
                                identity: "quadratic-variance".into(),
                                s,
                                t,
                                u: Some(u),
                                degree_n: Some(n),
                                degree_m: Some(m),
                                x: None,
                                y: None,
                                residual,
                                tolerance: cfg.tolerance,
                                pass: residual <= cfg.tolerance,
                            });
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for mut batch in per_triple {
            reports.append(&mut batch);
        }
    }

    if matches!(suite, Suite::CondVar | Suite::All) {
        // mild bridge endpoints near the center of the marginal laws, in
        // original coordinates
        let mut cond: Vec<CheckReport> = grid
            .triples
            .par_iter()
            .map(|&(s, t, u)| {
                let (q, tag) = p.reduce()?;
                let sgn = if tag.needs_negation() { -1.0 } else { 1.0 };
                let (x, yv) = if tag.needs_time_inversion() {
                    let ns = gauss_quadrature(&martingale_recurrence(&q, 1.0 / s)?, 9)?;
                    let nu = gauss_quadrature(&martingale_recurrence(&q, 1.0 / u)?, 9)?;
                    (sgn * s * ns.nodes[4], sgn * u * nu.nodes[4])
                } else {
                    let ns = gauss_quadrature(&martingale_recurrence(&q, s)?, 9)?;
                    let nu = gauss_quadrature(&martingale_recurrence(&q, u)?, 9)?;
                    (sgn * ns.nodes[4], sgn * nu.nodes[4])
                };
                check_condvar_pointwise(p, s, t, u, x, yv, cfg)
            })
            .collect::<Result<_>>()?;
        reports.append(&mut cond);
    }

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, theta: f64, sigma: f64, tau: f64) -> HarnessParams {
        HarnessParams::new(eta, theta, sigma, tau).unwrap()
    }

    fn fast_cfg() -> CheckConfig {
        CheckConfig { order: 20, ..CheckConfig::default() }
    }

    #[test]
    fn covariance_matches_min() {
        let cfg = fast_cfg();
        for (e, th, s, ta) in [(0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 0.5, 0.5), (3.0, -1.0, 0.5, 0.5)] {
            let p = params(e, th, s, ta);
            for (a, b) in [(1.0, 1.0), (1.0, 2.0), (0.5, 3.0)] {
                let rep = check_covariance(&p, a, b, &cfg).unwrap();
                assert!(rep.pass, "{:?} at ({a},{b}): residual {}", (e, th, s, ta), rep.residual);
            }
        }
    }

    #[test]
    fn linreg_holds_on_case1() {
        let cfg = fast_cfg();
        let p = params(1.0, 1.0, 0.5, 0.5);
        for n in 0..=3 {
            for m in 0..=3 {
                let rep = check_linreg_polynomial(&p, 0.5, 1.0, 2.0, n, m, &cfg).unwrap();
                assert!(rep.pass, "n={n} m={m}: residual {}", rep.residual);
            }
        }
    }

    #[test]
    fn linreg_degree_one_reproduces_covariance() {
        // n=1, m=0 reduces to a·s + b·s = s through the martingale property
        let cfg = fast_cfg();
        let p = params(1.0, 1.0, 0.5, 0.5);
        let rep = check_linreg_polynomial(&p, 0.5, 1.0, 2.0, 1, 0, &cfg).unwrap();
        assert!(rep.residual < 1e-10);
    }

    #[test]
    fn quadvar_holds_on_representative_cases() {
        let cfg = fast_cfg();
        // the last set is case 2 outright with 2 + ηθ + 2στ = −3.9
        for (e, th, s, ta) in [
            (0.0, 0.0, 0.0, 0.0),
            (1.0, 1.0, 0.5, 0.5),
            (3.0, -1.0, 0.5, 0.5),
            (2.2, 2.2, 1.0, 0.2),
            (4.0, -1.5, 0.1, 0.5),
        ] {
            let p = params(e, th, s, ta);
            for (n, m) in [(0, 0), (1, 2), (3, 1)] {
                let rep = check_quadvar_polynomial(&p, 0.5, 1.0, 2.0, n, m, &cfg).unwrap();
                assert!(
                    rep.pass,
                    "{:?} n={n} m={m}: residual {}",
                    (e, th, s, ta),
                    rep.residual
                );
            }
        }
    }

    #[test]
    fn quadvar_degree_zero_ties_back_to_covariance() {
        // at n=m=0 the identity reduces to E[X_t²] = A·s + B·s + C·u + F = t
        let cfg = fast_cfg();
        let p = params(0.0, 0.0, 0.0, 0.0);
        let (s, t, u) = (0.5, 1.0, 2.0);
        let c = quadratic_coeffs(&p, s, t, u);
        let rhs = c.a * s + c.b * s + c.c * u + c.f;
        assert!((rhs - t).abs() < 1e-12);
        let rep = check_quadvar_polynomial(&p, s, t, u, 0, 0, &cfg).unwrap();
        assert!(rep.residual < 1e-9);
    }

    #[test]
    fn condvar_free_brownian_bridge() {
        let cfg = CheckConfig { order: 48, tolerance: 1e-6, ..CheckConfig::default() };
        let p = params(0.0, 0.0, 0.0, 0.0);
        let rep = check_condvar_pointwise(&p, 0.5, 1.0, 2.0, 0.3, -0.4, &cfg).unwrap();
        assert!(rep.pass, "residual {}", rep.residual);
    }

    #[test]
    fn condvar_negation_symmetry() {
        let cfg = CheckConfig { order: 48, tolerance: 1e-6, ..CheckConfig::default() };
        let p = params(1.0, 1.0, 0.5, 0.5);
        let a = check_condvar_pointwise(&p, 0.5, 1.0, 2.0, 0.25, 0.4, &cfg).unwrap();
        let pn = params(-1.0, -1.0, 0.5, 0.5);
        let b = check_condvar_pointwise(&pn, 0.5, 1.0, 2.0, -0.25, -0.4, &cfg).unwrap();
        assert!(a.pass && b.pass);
        assert!((a.residual - b.residual).abs() < 1e-8);
    }

    #[test]
    fn brownian_scaling_of_bridge_variance() {
        // at zero parameters Var[X_t | X_s, X_u] scales linearly in the grid
        let cfg = CheckConfig { order: 48, ..CheckConfig::default() };
        let p = params(0.0, 0.0, 0.0, 0.0);
        for lambda in [1.0, 2.0] {
            let rep =
                check_condvar_pointwise(&p, 0.5 * lambda, 1.0 * lambda, 2.0 * lambda, 0.0, 0.0, &cfg)
                    .unwrap();
            assert!(rep.pass, "lambda={lambda}: residual {}", rep.residual);
        }
    }

    #[test]
    fn condvar_suite_handles_time_inverted_params() {
        // (3,−1,0.5,0.5) reduces through inversion, and on the (0.5,1,2)
        // triple the inverted time 1/u collides with s — the coordinate
        // mapping must come from the classification, not time comparison
        let cfg = CheckConfig { order: 48, tolerance: 1e-5, ..CheckConfig::default() };
        let grid = TripleGrid::new(vec![(0.5, 1.0, 2.0)], 2).unwrap();
        let p = params(3.0, -1.0, 0.5, 0.5);
        let reports = run_suite(&p, Suite::CondVar, &grid, &cfg).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass, "residual {}", reports[0].residual);
    }

    #[test]
    fn suite_runner_merges_in_grid_order() {
        let cfg = CheckConfig { order: 16, threads: Some(2), ..CheckConfig::default() };
        let grid = TripleGrid::new(vec![(0.5, 1.0, 2.0)], 2).unwrap();
        let p = params(1.0, 1.0, 0.5, 0.5);
        let a = run_suite(&p, Suite::LinReg, &grid, &cfg).unwrap();
        let b = run_suite(&p, Suite::LinReg, &grid, &cfg).unwrap();
        assert_eq!(a.len(), 9);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.residual, y.residual);
            assert_eq!((x.degree_n, x.degree_m), (y.degree_n, y.degree_m));
        }
        assert!(a.iter().all(|r| r.pass));
    }

    #[test]
    fn quadrature_order_stability() {
        // doubling the order moves the reported expectations by less than 1e-9
        let p = params(2.2, 2.2, 1.0, 0.2);
        let (s, t, u) = (0.5, 1.0, 2.0);
        let c1 = TripleCache::build(&p, s, t, u, &CheckConfig { order: 24, ..Default::default() })
            .unwrap();
        let c2 = TripleCache::build(&p, s, t, u, &CheckConfig { order: 48, ..Default::default() })
            .unwrap();
        for (n, m) in [(0usize, 0usize), (2, 1), (4, 4)] {
            for pow in [1u32, 2] {
                let a = c1.triple_expectation(n, m, pow);
                let b = c2.triple_expectation(n, m, pow);
                assert!(
                    (a - b).abs() / a.abs().max(1.0) < 1e-9,
                    "n={n} m={m} pow={pow}: {a} vs {b}"
                );
            }
        }
    }
}
