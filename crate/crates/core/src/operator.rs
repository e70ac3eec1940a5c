//! Matrix representations of the polynomial operators on truncated monomial
//! bases: the 0-differentiation D (g ↦ (g(z) − g(0))/z), the multiplication
//! Z (g ↦ z·g), the operators x and y built from them, and the process
//! operator X_t = x + t·y.
//!
//! Truncation corrupts only the trailing rows and columns: every summand of
//! x and y shifts degree by at most one and reads at most two degrees ahead,
//! so compositions of two operators are exact on the leading (N−4) block.
//! All identity checks therefore report the maximal residual on that block.

use serde::Serialize;

use crate::params::HarnessParams;

/// Dense square matrix, row-major. The operators are banded (bandwidth ≤ 3)
/// but at the dimensions used here (N ≈ 40) dense storage is simpler.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub dim: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Mat { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Mat, factor: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in self.data.iter_mut() {
            *a *= factor;
        }
    }

    /// Maximal absolute entry of the leading block of side `dim − margin`.
    pub fn max_abs_leading(&self, margin: usize) -> f64 {
        let side = self.dim.saturating_sub(margin);
        let mut best = 0.0f64;
        for i in 0..side {
            for j in 0..side {
                best = best.max(self[(i, j)].abs());
            }
        }
        best
    }

    /// Largest |i − j| with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if self[(i, j)] != 0.0 {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Which operator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorLabel {
    D,
    Z,
    X,
    Y,
    Xt,
}

/// A truncated operator matrix with its label.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    pub label: OperatorLabel,
    pub mat: Mat,
}

impl BandedOperator {
    pub fn dim(&self) -> usize {
        self.mat.dim
    }
}

/// D on monomials: z^n ↦ z^{n−1}, 1 ↦ 0; entry (n−1, n) = 1.
pub fn op_d(dim: usize) -> BandedOperator {
    let mut m = Mat::zeros(dim);
    for n in 1..dim {
        m[(n - 1, n)] = 1.0;
    }
    BandedOperator { label: OperatorLabel::D, mat: m }
}

/// Z on monomials: z^n ↦ z^{n+1}; entry (n+1, n) = 1.
pub fn op_z(dim: usize) -> BandedOperator {
    let mut m = Mat::zeros(dim);
    for n in 0..dim.saturating_sub(1) {
        m[(n + 1, n)] = 1.0;
    }
    BandedOperator { label: OperatorLabel::Z, mat: m }
}

/// Assemble
///
/// ```text
/// x = D + β ZD + τ(1+αβ)/(1−στ) Z²D + τ(α+σβ)/(1−στ) Z²D² + στ²(1+αβ)/(1−στ)² Z³D²
/// y = Z + α ZD + σ ZD² + σ(β+ατ)/(1−στ) Z²D² + (αβ+στ)/(1−στ) Z²D + στ(1+αβ)/(1−στ)² Z³D²
/// ```
pub fn build_xy(p: &HarnessParams, dim: usize) -> (BandedOperator, BandedOperator) {
    let d = p.derived();
    let st = 1.0 - p.sigma * p.tau;
    let one_ab = d.one_plus_ab();

    let dd = op_d(dim).mat;
    let zz = op_z(dim).mat;
    let zd = zz.mul(&dd);
    let d2 = dd.mul(&dd);
    let z2 = zz.mul(&zz);
    let z2d = z2.mul(&dd);
    let zd2 = zz.mul(&d2);
    let z2d2 = z2.mul(&d2);
    let z3d2 = zz.mul(&z2d2);

    let mut x = dd.clone();
    x.add_scaled(&zd, d.beta);
    x.add_scaled(&z2d, p.tau * one_ab / st);
    x.add_scaled(&z2d2, p.tau * (d.alpha + p.sigma * d.beta) / st);
    x.add_scaled(&z3d2, p.sigma * p.tau * p.tau * one_ab / (st * st));

    let mut y = zz.clone();
    y.add_scaled(&zd, d.alpha);
    y.add_scaled(&zd2, p.sigma);
    y.add_scaled(&z2d2, p.sigma * (d.beta + d.alpha * p.tau) / st);
    y.add_scaled(&z2d, (d.alpha * d.beta + p.sigma * p.tau) / st);
    y.add_scaled(&z3d2, p.sigma * p.tau * one_ab / (st * st));

    (
        BandedOperator { label: OperatorLabel::X, mat: x },
        BandedOperator { label: OperatorLabel::Y, mat: y },
    )
}

/// X_t = x + t·y.
pub fn op_xt(p: &HarnessParams, t: f64, dim: usize) -> BandedOperator {
    let (x, y) = build_xy(p, dim);
    let mut m = x.mat;
    m.add_scaled(&y.mat, t);
    BandedOperator { label: OperatorLabel::Xt, mat: m }
}

/// Safe-block margin: the largest summand Z³D² shifts degree by one and
/// reads two ahead, so two-fold compositions are exact away from the last
/// four rows and columns.
pub const SAFE_BLOCK_MARGIN: usize = 4;

/// Residual report of one operator identity on the leading safe block.
///
/// `max_residual` is scaled by the largest entry among the term matrices of
/// the identity (floored at 1): operator entries grow like
/// (1+αβ)/(1−στ)², so an absolute residual would conflate entry size with
/// violation.
#[derive(Debug, Clone, Serialize)]
pub struct OpReport {
    pub identity: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub block: usize,
    pub max_residual: f64,
    pub pass: bool,
}

fn report(identity: &str, dim: usize, residual: &Mat, term_scale: f64, tol: f64) -> OpReport {
    let block = dim - SAFE_BLOCK_MARGIN;
    let max_residual = residual.max_abs_leading(SAFE_BLOCK_MARGIN) / term_scale.max(1.0);
    OpReport {
        identity: identity.into(),
        n: dim,
        block,
        max_residual,
        pass: max_residual <= tol,
    }
}

/// Verify the commutation identity xy − γyx = σx² + τy² + ηx + θy + I with
/// γ = −στ.
pub fn check_q_commutation(p: &HarnessParams, dim: usize, tol: f64) -> OpReport {
    let (x, y) = build_xy(p, dim);
    let (residual, scale) = q_commutation_residual(p, &x, &y);
    report("q-commutation", dim, &residual, scale, tol)
}

/// The residual matrix of the commutation identity together with the
/// largest term-entry scale; exposed for negative controls that perturb a
/// coefficient.
pub fn q_commutation_residual(
    p: &HarnessParams,
    x: &BandedOperator,
    y: &BandedOperator,
) -> (Mat, f64) {
    let gamma = p.gamma();
    let (xm, ym) = (&x.mat, &y.mat);
    let margin = SAFE_BLOCK_MARGIN;
    let mut scale = 0.0f64;
    let mut lhs = xm.mul(ym);
    scale = scale.max(lhs.max_abs_leading(margin));
    for (term, factor) in [
        (ym.mul(xm), -gamma),
        (xm.mul(xm), -p.sigma),
        (ym.mul(ym), -p.tau),
        (xm.clone(), -p.eta),
        (ym.clone(), -p.theta),
        (Mat::identity(xm.dim), -1.0),
    ] {
        scale = scale.max(factor.abs() * term.max_abs_leading(margin));
        lhs.add_scaled(&term, factor);
    }
    (lhs, scale)
}

/// Linear-regression coefficients a = (u−t)/(u−s), b = (t−s)/(u−s).
pub fn regression_coeffs(s: f64, t: f64, u: f64) -> (f64, f64) {
    ((u - t) / (u - s), (t - s) / (u - s))
}

/// Coefficients of the quadratic conditional-variance form at γ = −στ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFormCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

/// Evaluate
///
/// ```text
/// A = (u−t)(u(1+σt)+τ−γt) / ((u−s)(u(1+σs)+τ−γs))      B = (u−t)(t−s)(1+γ) / (…)
/// C = (t−s)(t(1+σs)+τ−γs) / (…)                        D = (u−t)(t−s)(uη−θ) / (…)
/// E = (u−t)(t−s)(θ−sη) / (…)                           F = (u−t)(t−s) / (u(1+σs)+τ−γs)
/// ```
///
/// with γ = −στ substituted, so the common denominator u(1+σs)+τ+στs is
/// positive for all valid parameters.
pub fn quadratic_coeffs(p: &HarnessParams, s: f64, t: f64, u: f64) -> QuadraticFormCoeffs {
    let gamma = p.gamma();
    let w = |v: f64, at: f64| v * (1.0 + p.sigma * at) + p.tau - gamma * at;
    let denom = (u - s) * w(u, s);
    QuadraticFormCoeffs {
        a: (u - t) * w(u, t) / denom,
        b: (u - t) * (t - s) * (1.0 + gamma) / denom,
        c: (t - s) * w(t, s) / denom,
        d: (u - t) * (t - s) * (u * p.eta - p.theta) / denom,
        e: (u - t) * (t - s) * (p.theta - s * p.eta) / denom,
        f: (u - t) * (t - s) / w(u, s),
    }
}

/// Verify the operator form of the conditional-variance identity,
/// X_t² = A·X_s² + B·X_u X_s + C·X_u² + D·X_s + E·X_u + F·I for s < t < u.
/// The cross term keeps the y-slot operator (X_u) on the left.
pub fn check_identity_435(p: &HarnessParams, s: f64, t: f64, u: f64, dim: usize, tol: f64) -> OpReport {
    let c = quadratic_coeffs(p, s, t, u);
    let xs = op_xt(p, s, dim).mat;
    let xt = op_xt(p, t, dim).mat;
    let xu = op_xt(p, u, dim).mat;
    let margin = SAFE_BLOCK_MARGIN;
    let mut residual = xt.mul(&xt);
    let mut scale = residual.max_abs_leading(margin);
    for (term, factor) in [
        (xs.mul(&xs), -c.a),
        (xu.mul(&xs), -c.b),
        (xu.mul(&xu), -c.c),
        (xs.clone(), -c.d),
        (xu.clone(), -c.e),
        (Mat::identity(dim), -c.f),
    ] {
        scale = scale.max(factor.abs() * term.max_abs_leading(margin));
        residual.add_scaled(&term, factor);
    }
    report("conditional-variance-operator", dim, &residual, scale, tol)
}

/// Verify that X_t acting on the monomial basis encodes the three-term
/// recurrence of the martingale polynomials: column n must be
/// A_{n−1}·e_{n−1} + B_n·e_n + C_{n+1}·e_{n+1}.
pub fn check_identity_439(p: &HarnessParams, t: f64, dim: usize, tol: f64) -> OpReport {
    let xt = op_xt(p, t, dim).mat;
    let rec = crate::recurrence::martingale_recurrence_unchecked(p, t);
    let mut residual = Mat::zeros(dim);
    let mut scale = 0.0f64;
    for col in 0..dim {
        for row in 0..dim {
            let expected = if row + 1 == col {
                rec.row(row).up
            } else if row == col {
                rec.row(row).diag
            } else if row == col + 1 {
                rec.row(row).down
            } else {
                0.0
            };
            scale = scale.max(expected.abs());
            residual[(row, col)] = xt[(row, col)] - expected;
        }
    }
    scale = scale.max(xt.max_abs_leading(SAFE_BLOCK_MARGIN));
    report("recurrence-encoding", dim, &residual, scale, tol)
}
