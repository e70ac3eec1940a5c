//! Three-term recurrences for the martingale polynomials p_n(y; t) and the
//! conditional polynomials Q_n(y; x, t, s), the verifier for the five
//! coefficient relations their Jacobi matrices satisfy, and the connection
//! coefficients b_k, c_k linking the two families.
//!
//! Recurrences are stored exactly in the printed normalization
//! `y·q_n = up·q_{n+1} + diag·q_n + down·q_{n−1}`; conversion to the
//! orthonormal (symmetric tridiagonal) form happens in [`crate::spectral`].
//! Both families share the same constant tail from level three on, which is
//! what makes their orthogonality measures Bernstein–Szegő.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::HarnessParams;

/// One level of a three-term recurrence: `y·q_n = up·q_{n+1} + diag·q_n + down·q_{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceRow {
    pub up: f64,
    pub diag: f64,
    pub down: f64,
}

/// A recurrence with a finite prefix of explicit rows and a constant tail.
#[derive(Debug, Clone, PartialEq)]
pub struct EcRecurrence {
    rows: Vec<RecurrenceRow>,
    tail: RecurrenceRow,
}

impl EcRecurrence {
    pub fn new(rows: Vec<RecurrenceRow>, tail: RecurrenceRow) -> Self {
        EcRecurrence { rows, tail }
    }

    /// First level at which the constant tail applies.
    pub fn tail_start(&self) -> usize {
        self.rows.len()
    }

    pub fn tail(&self) -> RecurrenceRow {
        self.tail
    }

    /// Coefficients at level `n`, resolving prefix versus tail.
    pub fn row(&self, n: usize) -> RecurrenceRow {
        if n < self.rows.len() {
            self.rows[n]
        } else {
            self.tail
        }
    }

    /// Favard admissibility: all leading coefficients positive and all
    /// `down` coefficients nonnegative from level one on.
    pub fn is_admissible(&self) -> bool {
        let prefix_ok = self
            .rows
            .iter()
            .enumerate()
            .all(|(n, r)| r.up > 0.0 && (n == 0 || r.down >= 0.0));
        prefix_ok && self.tail.up > 0.0 && self.tail.down >= 0.0
    }

    /// Evaluate q_0(y) .. q_{n_max}(y) by the forward recurrence; q_0 = 1.
    pub fn eval_polys(&self, y: f64, n_max: usize) -> Vec<f64> {
        let mut vals = Vec::with_capacity(n_max + 1);
        vals.push(1.0);
        if n_max == 0 {
            return vals;
        }
        let r0 = self.row(0);
        vals.push((y - r0.diag) / r0.up);
        for n in 1..n_max {
            let r = self.row(n);
            let next = ((y - r.diag) * vals[n] - r.down * vals[n - 1]) / r.up;
            vals.push(next);
        }
        vals
    }
}

/// Recurrence of the orthogonal martingale polynomials p_n(y; t):
///
/// ```text
/// y p_0 = p_1
/// y p_1 = (1+σt) p_2 + (αt+β) p_1 + t p_0
/// y p_2 = (1+σt) p_3 + ((α+σβ)t+β+ατ)/(1−στ) p_2 + (t+τ)(1+αβ)/(1−στ) p_1
/// y p_n = (1+σt) p_{n+1} + ((α+σβ)t+β+ατ)/(1−στ) p_n + (t+τ)(1+αβ)/(1−στ)² p_{n−1},  n ≥ 3
/// ```
pub fn martingale_recurrence(p: &HarnessParams, t: f64) -> Result<EcRecurrence> {
    p.validate()?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Domain(format!("time t must be > 0, got {t}")));
    }
    Ok(martingale_recurrence_unchecked(p, t))
}

pub(crate) fn martingale_recurrence_unchecked(p: &HarnessParams, t: f64) -> EcRecurrence {
    // coincides with the conditional recurrence at x = 0, s = 0
    conditional_recurrence_unchecked(p, 0.0, 0.0, t)
}

/// Recurrence of the conditional polynomials Q_n(y; x, t, s), which are
/// orthogonal under the transition kernel P_{s,t}(x, ·):
///
/// ```text
/// y Q_0 = Q_1 + x Q_0
/// y Q_1 = (1+σt) Q_2 + ((α+σx)t + β − s(η+σx))/(1+σs) Q_1
///         + (t−s)(1+ηx+σx²)/(1+σs) Q_0
/// y Q_2 = (1+σt) Q_3 + ((α+σβ)t+β+ατ)/(1−στ) Q_2
///         + (t+τ)(1+αβ)/((1+σs)(1−στ)) Q_1
/// y Q_n = tail as for p_n,  n ≥ 3
/// ```
///
/// Fails with a domain error when the level-one `down` coefficient
/// (t−s)(1+ηx+σx²)/(1+σs) is negative, which signals x outside the closure
/// of the support of π_s. Values within −1e−12 of zero are snapped to zero
/// so that quadrature nodes sitting on the gap endpoints stay usable.
pub fn conditional_recurrence(p: &HarnessParams, s: f64, x: f64, t: f64) -> Result<EcRecurrence> {
    p.validate()?;
    if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < s {
        return Err(Error::Domain(format!(
            "times must satisfy 0 <= s <= t, got s={s}, t={t}"
        )));
    }
    let mut rec = conditional_recurrence_unchecked(p, s, x, t);
    let q0 = rec.rows[1].down;
    let scale = 1.0 + (t - s).abs() * (1.0 + x.abs() + x * x);
    if q0 < -1e-12 * scale {
        return Err(Error::Domain(format!(
            "x = {x} is inadmissible at s = {s}: the level-one down coefficient is {q0}"
        )));
    }
    if q0 < 0.0 {
        rec.rows[1].down = 0.0;
    }
    Ok(rec)
}

/// The algebraic form of the conditional recurrence with no domain checks;
/// used where the recurrence is a formal object (connection coefficients at
/// t = 0, extraction of the Jacobi coefficients as functions of t).
pub(crate) fn conditional_recurrence_unchecked(
    p: &HarnessParams,
    s: f64,
    x: f64,
    t: f64,
) -> EcRecurrence {
    let d = p.derived();
    let st = 1.0 - p.sigma * p.tau;
    let os = 1.0 + p.sigma * s;
    let one_ab = d.one_plus_ab();
    let rows = vec![
        RecurrenceRow { up: 1.0, diag: x, down: 0.0 },
        RecurrenceRow {
            up: 1.0 + p.sigma * t,
            diag: ((d.alpha + p.sigma * x) * t + d.beta - s * (p.eta + p.sigma * x)) / os,
            down: (t - s) * (1.0 + p.eta * x + p.sigma * x * x) / os,
        },
        RecurrenceRow {
            up: 1.0 + p.sigma * t,
            diag: ((d.alpha + p.sigma * d.beta) * t + d.beta + d.alpha * p.tau) / st,
            down: (t + p.tau) * one_ab / (os * st),
        },
    ];
    let tail = RecurrenceRow {
        up: 1.0 + p.sigma * t,
        diag: ((d.alpha + p.sigma * d.beta) * t + d.beta + d.alpha * p.tau) / st,
        down: (t + p.tau) * one_ab / (st * st),
    };
    EcRecurrence::new(rows, tail)
}

// ---------------------------------------------------------------------------
// Jacobi coefficients linear in t and the five relations they satisfy
// ---------------------------------------------------------------------------

/// Entries of one Jacobi-matrix level, each linear in t:
/// subdiagonal σα_n t + β_n, diagonal γ_n t + δ_n, superdiagonal ε_n t + φ_n.
///
/// In the recurrence normalization above these appear as
/// `up_{n} = σα_{n+1} t + β_{n+1}`, `diag_n = γ_n t + δ_n`,
/// `down_n = ε_n t + φ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiLevel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub phi: f64,
}

/// Per-level sextuples (α_n, β_n, γ_n, δ_n, ε_n, φ_n) of a Jacobi matrix
/// linear in t.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearJacobi {
    levels: Vec<JacobiLevel>,
}

impl LinearJacobi {
    /// Extract the sextuples from a family of recurrences t ↦ rec(t), which
    /// must have coefficients linear in t. Levels 0..=n_levels are populated
    /// (level 0 carries only γ_0, δ_0).
    pub fn from_family(
        rec_at: impl Fn(f64) -> EcRecurrence,
        sigma: f64,
        n_levels: usize,
        t0: f64,
        t1: f64,
    ) -> Self {
        let r0 = rec_at(t0);
        let r1 = rec_at(t1);
        let dt = t1 - t0;
        let fit = |v0: f64, v1: f64| {
            let slope = (v1 - v0) / dt;
            (slope, v0 - slope * t0)
        };
        let mut levels = vec![
            JacobiLevel {
                alpha: 0.0,
                beta: 0.0,
                gamma: 0.0,
                delta: 0.0,
                epsilon: 0.0,
                phi: 0.0,
            };
            n_levels + 1
        ];
        for n in 0..=n_levels {
            let (c0, c1) = (r0.row(n), r1.row(n));
            let (gamma, delta) = fit(c0.diag, c1.diag);
            levels[n].gamma = gamma;
            levels[n].delta = delta;
            if n >= 1 {
                let (eps, phi) = fit(c0.down, c1.down);
                levels[n].epsilon = eps;
                levels[n].phi = phi;
            }
            if n < n_levels {
                let (sa, beta) = fit(c0.up, c1.up);
                // the subdiagonal slope is σ·α_{n+1}; at σ = 0 the slope
                // vanishes and α is immaterial (it only enters via σα)
                levels[n + 1].alpha = if sigma != 0.0 { sa / sigma } else { 0.0 };
                levels[n + 1].beta = beta;
            }
        }
        LinearJacobi { levels }
    }

    /// Sextuples of the process (martingale polynomial) Jacobi matrix.
    pub fn for_process(p: &HarnessParams, n_levels: usize) -> Self {
        Self::from_family(
            |t| martingale_recurrence_unchecked(p, t),
            p.sigma,
            n_levels,
            0.0,
            1.0,
        )
    }

    /// Sextuples of the conditional Jacobi matrix given X_r = x.
    pub fn for_conditional(p: &HarnessParams, x: f64, r: f64, n_levels: usize) -> Self {
        Self::from_family(
            |t| conditional_recurrence_unchecked(p, r, x, t),
            p.sigma,
            n_levels,
            r,
            r + 1.0,
        )
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &JacobiLevel {
        &self.levels[n]
    }

    /// Mutable access, used by negative controls that perturb a coefficient.
    pub fn level_mut(&mut self, n: usize) -> &mut JacobiLevel {
        &mut self.levels[n]
    }
}

/// Residual report for one verified identity.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub n_max: usize,
    pub max_residual: f64,
    pub pass: bool,
}

/// Outcome of checking the five coefficient relations.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientReport {
    pub relations: Vec<IdentityReport>,
    pub pass: bool,
}

impl CoefficientReport {
    /// Names of the relations that exceeded tolerance.
    pub fn violated(&self) -> Vec<&str> {
        self.relations
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.identity.as_str())
            .collect()
    }
}

/// Check the five quadratic relations among the sextuples for 1 ≤ n ≤ n_max,
/// with γ = −στ; `j` must be populated up to level n_max + 1.
///
/// Each relation's residual is scaled by the largest term entering it
/// (floored at 1): the sextuples grow like (1+αβ)/(1−στ)², so an absolute
/// residual would conflate coefficient size with violation.
pub fn verify_coefficient_relations(
    j: &LinearJacobi,
    p: &HarnessParams,
    n_max: usize,
    tol: f64,
) -> CoefficientReport {
    assert!(j.n_levels() > n_max, "jacobi not populated to n_max+1");
    let (eta, theta, sigma, tau, gamma) = (p.eta, p.theta, p.sigma, p.tau, p.gamma());
    let scaled = |terms: &[f64]| -> f64 {
        let lhs: f64 = terms.iter().sum();
        let scale = terms.iter().fold(1.0f64, |acc, t| acc.max(t.abs()));
        lhs.abs() / scale
    };
    let mut max_res = [0.0f64; 5];
    for n in 1..=n_max {
        let lo = j.level(n - 1);
        let md = j.level(n);
        let hi = j.level(n + 1);
        // products of the subdiagonal slope always carry the sigma factor
        let sa_n = sigma * md.alpha;
        let sa_n1 = sigma * hi.alpha;

        let r1 = scaled(&[
            sigma * tau * sa_n * hi.alpha,
            sa_n * hi.beta * gamma,
            sigma * md.beta * hi.beta,
            -sa_n1 * md.beta,
        ]);

        let r2 = scaled(&[
            hi.beta * hi.gamma,
            sa_n1 * md.delta,
            -sa_n1 * (md.gamma + hi.gamma) * tau,
            -(sa_n1 * hi.delta + hi.beta * md.gamma) * gamma,
            -hi.beta * (md.delta + hi.delta) * sigma,
            -sa_n1 * theta,
            -hi.beta * eta,
        ]);

        let r3 = scaled(&[
            hi.beta * hi.epsilon,
            md.gamma * md.delta,
            sa_n * md.phi,
            -(sa_n1 * hi.epsilon + md.gamma * md.gamma + sa_n * md.epsilon) * tau,
            -(sa_n1 * hi.phi + md.gamma * md.delta + md.beta * md.epsilon) * gamma,
            -(hi.beta * hi.phi + md.delta * md.delta + md.beta * md.phi) * sigma,
            -md.gamma * theta,
            -md.delta * eta,
            -1.0,
        ]);

        let r4 = scaled(&[
            lo.gamma * md.phi,
            md.delta * md.epsilon,
            -(lo.gamma + md.gamma) * md.epsilon * tau,
            -(md.gamma * md.phi + lo.delta * md.epsilon) * gamma,
            -(lo.delta + md.delta) * md.phi * sigma,
            -md.epsilon * theta,
            -md.phi * eta,
        ]);

        let r5 = scaled(&[
            md.epsilon * hi.phi,
            -md.epsilon * hi.epsilon * tau,
            -hi.epsilon * md.phi * gamma,
            -md.phi * hi.phi * sigma,
        ]);

        for (slot, r) in max_res.iter_mut().zip([r1, r2, r3, r4, r5]) {
            *slot = slot.max(r);
        }
    }
    let relations: Vec<IdentityReport> = max_res
        .iter()
        .enumerate()
        .map(|(i, &res)| IdentityReport {
            identity: format!("eq{}", i + 1),
            n_max,
            max_residual: res,
            pass: res <= tol,
        })
        .collect();
    let pass = relations.iter().all(|r| r.pass);
    CoefficientReport { relations, pass }
}

// ---------------------------------------------------------------------------
// Connection coefficients
// ---------------------------------------------------------------------------

/// Series cap for the rational generating function of b_k. The coefficients
/// grow or decay geometrically with ratio bounded by the reciprocal of the
/// smallest denominator root, so double precision is exhausted long before
/// this cap matters.
pub const CONNECTION_SERIES_CAP: usize = 64;

/// Connection coefficients at a fixed (x, s):
/// `Q_n(y; x, t, s) = c_n(x, s) + Σ_{k=1}^{n} b_{n−k}(x, s) p_k(y; t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Compute b_0..b_N and c_0..c_N.
///
/// The b_k are the power-series coefficients of the explicit rational
/// function
///
/// ```text
/// b̂(z,x,s) = 1/(1+σs) · ( (z²(1+αβ)s + z(1−στ)(s(α+σβ) − x(1−στ)) + σs(1−στ)²)
///                          / (z²τ(1+αβ) + z(β+ατ)(1−στ) + (1−στ)²)  + 1 )
/// ```
///
/// obtained by series division (the constant denominator term (1−στ)² is
/// always positive; τ = 0 merely drops the quadratic term). The c_n are
/// Q_n(0; x, 0, s).
pub fn connection_coefficients(
    p: &HarnessParams,
    x: f64,
    s: f64,
    n_max: usize,
) -> Result<ConnectionCoeffs> {
    p.validate()?;
    if n_max > CONNECTION_SERIES_CAP {
        return Err(Error::Domain(format!(
            "connection coefficient order {n_max} exceeds the series cap {CONNECTION_SERIES_CAP}"
        )));
    }
    let d = p.derived();
    let st = 1.0 - p.sigma * p.tau;
    let one_ab = d.one_plus_ab();

    let num = [
        p.sigma * s * st * st,
        st * (s * (d.alpha + p.sigma * d.beta) - x * st),
        one_ab * s,
    ];
    let den = [st * st, (d.beta + d.alpha * p.tau) * st, p.tau * one_ab];

    // series division num/den, then add 1 and divide by (1+σs)
    let mut series = vec![0.0f64; n_max + 1];
    for k in 0..=n_max {
        let mut acc = if k < 3 { num[k] } else { 0.0 };
        if k >= 1 {
            acc -= den[1] * series[k - 1];
        }
        if k >= 2 {
            acc -= den[2] * series[k - 2];
        }
        series[k] = acc / den[0];
    }
    let os = 1.0 + p.sigma * s;
    let b: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(k, &v)| (v + if k == 0 { 1.0 } else { 0.0 }) / os)
        .collect();

    let c = conditional_recurrence_unchecked(p, s, x, 0.0).eval_polys(0.0, n_max);
    Ok(ConnectionCoeffs { b, c })
}

/// Residual of the connection identity
/// `Q_n(y;x,t,s) = c_n(x,s) + Σ_{k=1}^n b_{n−k}(x,s) p_k(y;t)` for n ≤ n_max.
///
/// Residuals are scaled by max(1, |Q_n|) so the report is meaningful for the
/// large polynomial values reached at high degree.
#[allow(clippy::needless_range_loop)] // convolution indexing reads best as written
pub fn verify_connection_identity(
    p: &HarnessParams,
    x: f64,
    s: f64,
    t: f64,
    y: f64,
    n_max: usize,
    tol: f64,
) -> Result<IdentityReport> {
    let coeffs = connection_coefficients(p, x, s, n_max)?;
    let q = conditional_recurrence_unchecked(p, s, x, t).eval_polys(y, n_max);
    let pt = martingale_recurrence_unchecked(p, t).eval_polys(y, n_max);
    let mut max_res = 0.0f64;
    for n in 0..=n_max {
        let mut rhs = coeffs.c[n];
        for k in 1..=n {
            rhs += coeffs.b[n - k] * pt[k];
        }
        let res = (q[n] - rhs).abs() / q[n].abs().max(1.0);
        max_res = max_res.max(res);
    }
    Ok(IdentityReport {
        identity: "connection".into(),
        n_max,
        max_residual: max_res,
        pass: max_res <= tol,
    })
}

/// Residual of the difference form of the connection identity,
/// `Q_n(y;x,t,s) = Σ_{k=1}^n b_{n−k}(x,s) (p_k(y;t) − p_k(x;s))` for n ≥ 1,
/// together with the vanishing Q_n(x; x, s, s) = 0.
pub fn verify_identity_62(
    p: &HarnessParams,
    x: f64,
    s: f64,
    t: f64,
    y: f64,
    n_max: usize,
    tol: f64,
) -> Result<IdentityReport> {
    let coeffs = connection_coefficients(p, x, s, n_max)?;
    let q = conditional_recurrence_unchecked(p, s, x, t).eval_polys(y, n_max);
    let pt = martingale_recurrence_unchecked(p, t).eval_polys(y, n_max);
    let ps = martingale_recurrence_unchecked(p, s).eval_polys(x, n_max);
    let q_self = conditional_recurrence_unchecked(p, s, x, s).eval_polys(x, n_max);
    let mut max_res = 0.0f64;
    for n in 1..=n_max {
        let mut rhs = 0.0;
        for k in 1..=n {
            rhs += coeffs.b[n - k] * (pt[k] - ps[k]);
        }
        let res = (q[n] - rhs).abs() / q[n].abs().max(1.0);
        max_res = max_res.max(res);
        // Q_n at (y, t) = (x, s) must vanish identically
        max_res = max_res.max(q_self[n].abs() / ps[n].abs().max(1.0));
    }
    Ok(IdentityReport {
        identity: "connection-difference".into(),
        n_max,
        max_residual: max_res,
        pass: max_res <= tol,
    })
}
