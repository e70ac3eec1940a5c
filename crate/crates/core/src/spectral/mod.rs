//! Orthogonality measures of eventually-constant recurrences: support
//! endpoints, Cauchy-transform inversion, atoms with residue weights, Gauss
//! quadrature, and moments.
//!
//! Every measure here is Bernstein–Szegő: an absolutely continuous part with
//! square-root decay at the endpoints of one interval, plus at most finitely
//! many atoms outside the interval.

mod cauchy;
mod quad;

pub use cauchy::{
    boundary_density, cauchy_cf, cauchy_cf_boundary, cauchy_closed_form, cf_reciprocal_on_axis,
    numeric_residue, spectral_bound, CauchyTransform,
};
pub use quad::{
    gauss_legendre, gauss_quadrature, gauss_rule, moment_oracle, tridiag_eigen_first_components,
    JacobiMatrix, Quadrature,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::HarnessParams;
use crate::recurrence::EcRecurrence;

/// A point mass of the measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Residues below this magnitude are treated as exact zeros: weights that
/// vanish analytically (such as p₊) come back from the numeric residue as
/// noise of this order.
pub const ATOM_THRESHOLD: f64 = 1e-12;

/// Tolerance for the total-mass check of a reconstructed measure.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
enum DensityRoute {
    /// Explicit density of π_t (square root over the quartic).
    MarginalClosedForm { params: HarnessParams, t: f64 },
    /// Stieltjes–Perron inversion of the continued fraction.
    ContinuedFraction,
    /// Point mass; no absolutely continuous part.
    None,
}

/// An orthogonality measure realized as density-plus-atoms.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    rec: EcRecurrence,
    pub ac_interval: (f64, f64),
    pub atoms: Vec<Atom>,
    pub mass_tolerance: f64,
    pub total_mass: f64,
    route: DensityRoute,
}

/// What the recurrence describes; decides the inversion route and the atom
/// search.
#[derive(Debug, Clone, Copy)]
pub enum MeasureContext {
    /// The marginal law π_t.
    Marginal { t: f64 },
    /// The conditional law P_{s,t}(x, ·).
    Conditional { s: f64, x: f64, t: f64 },
}

/// Endpoints of the absolutely continuous support of π_t,
/// a±(t) = ((α+σβ)t + β + τα ± 2√((1+σt)(t+τ)(1+αβ))) / (1−στ).
pub fn support_endpoints(p: &HarnessParams, t: f64) -> (f64, f64) {
    let d = p.derived();
    let st = 1.0 - p.sigma * p.tau;
    let mid = (d.alpha + p.sigma * d.beta) * t + d.beta + p.tau * d.alpha;
    let rad = ((1.0 + p.sigma * t) * (t + p.tau) * d.one_plus_ab()).max(0.0);
    let rad = 2.0 * rad.sqrt();
    ((mid - rad) / st, (mid + rad) / st)
}

/// Endpoints read off the constant tail of any eventually-constant
/// recurrence: b ± 2√(A·C). For the free-harness recurrences (marginal and
/// conditional alike) this coincides with [`support_endpoints`].
pub fn tail_support(rec: &EcRecurrence) -> (f64, f64) {
    let tail = rec.tail();
    let w = 2.0 * (tail.up * tail.down).max(0.0).sqrt();
    (tail.diag - w, tail.diag + w)
}

/// Real roots of a·z² + b·z + c, degenerating gracefully: a linear equation
/// when a = 0, no roots when everything degenerates or the discriminant is
/// negative. Roots are returned in increasing order.
pub fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let r = disc.sqrt();
    // the numerically stable pairing
    let q = -0.5 * (b + r.copysign(b));
    let mut roots = vec![q / a, c / q];
    roots.sort_by(f64::total_cmp);
    roots
}

/// Candidate atom locations of π_t: the real zeros of
/// (σz² + ηz + 1)(τz² + θtz + t²). For σ = 0 the first factor degenerates
/// to the single root −1/η (none when η = 0); for τ = 0 the second leaves
/// the single line c(t) = −t/θ (none when θ = 0).
pub fn atom_candidates(p: &HarnessParams, t: f64) -> Vec<f64> {
    let mut cands = real_quadratic_roots(p.sigma, p.eta, 1.0);
    cands.extend(real_quadratic_roots(p.tau, p.theta * t, t * t));
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    cands
}

/// Evaluate residues at the candidates and keep the genuine atoms
/// (weight above [`ATOM_THRESHOLD`]).
pub fn atom_weights(transform: &CauchyTransform, candidates: &[f64]) -> Result<Vec<Atom>> {
    let mut atoms = Vec::new();
    for &c in candidates {
        let w = transform.residue(c)?;
        if w > ATOM_THRESHOLD {
            atoms.push(Atom { location: c, weight: w });
        }
    }
    Ok(atoms)
}

/// Locate real poles of the continued-fraction transform outside the closed
/// interval, by sign-change bisection on the reciprocal 1/G. Used for
/// conditional measures, whose atoms have no printed closed form.
fn find_poles(rec: &EcRecurrence, interval: (f64, f64)) -> Vec<f64> {
    let bound = spectral_bound(rec) + 1.0;
    let margin = 1e-9 * (1.0 + interval.0.abs().max(interval.1.abs()));
    let mut poles = Vec::new();
    let sides = [(-bound, interval.0 - margin), (interval.1 + margin, bound)];
    for (lo, hi) in sides {
        if hi <= lo {
            continue;
        }
        let grid = 800;
        let mut prev_x = lo;
        let mut prev_f = cf_reciprocal_on_axis(rec, lo);
        for k in 1..=grid {
            let x = lo + (hi - lo) * (k as f64) / (grid as f64);
            let f = cf_reciprocal_on_axis(rec, x);
            if prev_f.is_finite() && f.is_finite() && prev_f.signum() != f.signum() {
                let (mut a, mut b) = (prev_x, x);
                let mut fa = prev_f;
                for _ in 0..90 {
                    let m = 0.5 * (a + b);
                    let fm = cf_reciprocal_on_axis(rec, m);
                    if !fm.is_finite() {
                        break;
                    }
                    if fa.signum() != fm.signum() {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                let root = 0.5 * (a + b);
                // a sign change can also bracket a pole of 1/G; keep only
                // genuine zeros
                if cf_reciprocal_on_axis(rec, root).abs() < 1e-5 * (1.0 + root.abs()) {
                    poles.push(root);
                }
            }
            prev_x = x;
            prev_f = f;
        }
    }
    poles
}

impl SpectralMeasure {
    /// The generating recurrence.
    pub fn recurrence(&self) -> &EcRecurrence {
        &self.rec
    }

    /// Density of the absolutely continuous part (zero outside the interval).
    pub fn density(&self, x: f64) -> f64 {
        if !(self.ac_interval.0 < x && x < self.ac_interval.1) {
            return 0.0;
        }
        match &self.route {
            DensityRoute::None => 0.0,
            DensityRoute::MarginalClosedForm { params: p, t } => {
                let t = *t;
                let (am, ap) = self.ac_interval;
                let q1 = (p.sigma * x + p.eta) * x + 1.0;
                let q2 = (p.tau * x + p.theta * t) * x + t * t;
                let rad = ((ap - x) * (x - am)).max(0.0);
                t * (1.0 - p.sigma * p.tau) * rad.sqrt()
                    / (2.0 * std::f64::consts::PI * q1 * q2)
            }
            DensityRoute::ContinuedFraction => {
                let g = cauchy_cf_boundary(&self.rec, x);
                if g.im.is_finite() {
                    (-g.im / std::f64::consts::PI).max(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// The Cauchy transform matching this measure's construction route.
    pub fn transform(&self) -> CauchyTransform {
        match &self.route {
            DensityRoute::MarginalClosedForm { params, t } => CauchyTransform::ClosedForm {
                params: *params,
                t: *t,
            },
            _ => CauchyTransform::ContinuedFraction(self.rec.clone()),
        }
    }

    /// Gauss rule of this measure (exact for polynomials of degree < 2n).
    pub fn quadrature(&self, n: usize) -> Result<Quadrature> {
        gauss_quadrature(&self.rec, n)
    }

    /// k-th moment through the Jacobi-matrix power oracle.
    pub fn moment(&self, k: usize) -> f64 {
        moment_oracle(&self.rec, k)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2) - m * m
    }

    /// Some(location) if this measure is a single point mass.
    pub fn point_mass(&self) -> Option<f64> {
        match self.route {
            DensityRoute::None => self.atoms.first().map(|a| a.location),
            _ => None,
        }
    }

    /// ∫ f(x)·density(x) dx over the interval, with the sine substitution
    /// that removes the square-root endpoint behavior. Panels are graded
    /// dyadically toward the endpoints: a pole of the Bernstein–Szegő
    /// denominator just outside the interval puts structure at arbitrarily
    /// small distance from an endpoint, which uniform panels miss.
    pub fn integrate_density(&self, panels: usize, order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (am, ap) = self.ac_interval;
        if ap <= am || matches!(self.route, DensityRoute::None) {
            return 0.0;
        }
        let mid = 0.5 * (am + ap);
        let half = 0.5 * (ap - am);
        let gl = gauss_legendre(order);

        // breakpoints of [-π/2, π/2]: a uniform base grid plus dyadic
        // refinement toward both ends (endpoint structure can sit at
        // arbitrarily small distance when a denominator zero hugs the
        // interval)
        let levels = 12i32;
        let quarter = 0.5 * std::f64::consts::PI;
        let base = panels.max(8);
        let mut breaks: Vec<f64> = (0..=base)
            .map(|k| -quarter + 2.0 * quarter * k as f64 / base as f64)
            .collect();
        for k in 1..=levels {
            breaks.push(-quarter + quarter * 2f64.powi(-k));
            breaks.push(quarter - quarter * 2f64.powi(-k));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            if h <= 0.0 {
                continue;
            }
            acc += gl.integrate(|v| {
                let u = c + h * v;
                let x = mid + half * u.sin();
                f(x) * self.density(x) * half * u.cos()
            }) * h;
        }
        acc
    }

    /// Mass of the absolutely continuous part.
    pub fn ac_mass(&self) -> f64 {
        self.integrate_density(16, 24, |_| 1.0)
    }

    /// Measure of the open interval (lo, hi): density mass plus atoms
    /// strictly inside. Atoms within a relative ulp-scale margin of the
    /// endpoints count as boundary, not interior: an atom can sit exactly
    /// at a root computed through a different but equivalent formula.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let a = lo.max(self.ac_interval.0);
        let b = hi.min(self.ac_interval.1);
        let mut acc = 0.0;
        if b > a && !matches!(self.route, DensityRoute::None) {
            let gl = gauss_legendre(32);
            let panels = 16;
            let w = (b - a) / panels as f64;
            for k in 0..panels {
                let c = a + (k as f64 + 0.5) * w;
                acc += gl.integrate(|v| self.density(c + 0.5 * w * v)) * 0.5 * w;
            }
        }
        let margin = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        acc + self
            .atoms
            .iter()
            .filter(|at| at.location > lo + margin && at.location < hi - margin)
            .map(|at| at.weight)
            .sum::<f64>()
    }
}

/// Recover the measure of a Favard-admissible recurrence.
///
/// Marginal measures take the closed-form density and the explicit atom
/// candidates; conditional measures invert the continued fraction and find
/// atoms by pole search. A vanishing level-one coefficient short-circuits to
/// the point mass δ at the level-zero diagonal. The total mass is checked
/// against 1 (not renormalized) and a defect beyond [`MASS_TOLERANCE`] is an
/// error.
pub fn build_measure(
    rec: EcRecurrence,
    p: &HarnessParams,
    ctx: MeasureContext,
) -> Result<SpectralMeasure> {
    let lam1 = rec.row(0).up * rec.row(1).down;
    if lam1 < 0.0 {
        return Err(Error::Domain(
            "recurrence is not Favard-admissible at level one".into(),
        ));
    }
    if lam1 == 0.0 {
        let loc = rec.row(0).diag;
        return Ok(SpectralMeasure {
            rec,
            ac_interval: (loc, loc),
            atoms: vec![Atom { location: loc, weight: 1.0 }],
            mass_tolerance: MASS_TOLERANCE,
            total_mass: 1.0,
            route: DensityRoute::None,
        });
    }

    let (interval, atoms, route) = match ctx {
        MeasureContext::Marginal { t } => {
            let interval = support_endpoints(p, t);
            let transform = CauchyTransform::ClosedForm { params: *p, t };
            let atoms = atom_weights(&transform, &atom_candidates(p, t))?;
            (interval, atoms, DensityRoute::MarginalClosedForm { params: *p, t })
        }
        MeasureContext::Conditional { .. } => {
            let interval = tail_support(&rec);
            let poles = find_poles(&rec, interval);
            let transform = CauchyTransform::ContinuedFraction(rec.clone());
            let atoms = atom_weights(&transform, &poles)?;
            (interval, atoms, DensityRoute::ContinuedFraction)
        }
    };

    let mut measure = SpectralMeasure {
        rec,
        ac_interval: interval,
        atoms,
        mass_tolerance: MASS_TOLERANCE,
        total_mass: 0.0,
        route,
    };
    let mass = measure.ac_mass() + measure.atoms.iter().map(|a| a.weight).sum::<f64>();
    measure.total_mass = mass;
    let defect = (mass - 1.0).abs();
    if defect > MASS_TOLERANCE {
        return Err(Error::MassDefect { defect, tolerance: MASS_TOLERANCE });
    }
    Ok(measure)
}
