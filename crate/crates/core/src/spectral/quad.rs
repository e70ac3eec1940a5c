//! Gauss quadrature from the Jacobi matrix of a recurrence, the moment
//! oracle, and the symmetric tridiagonal eigensolver underneath both.

use crate::error::{Error, Result};
use crate::recurrence::EcRecurrence;

/// A quadrature rule: nodes with nonnegative weights.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Symmetrized Jacobi matrix of a recurrence: diagonal B_n, off-diagonal
/// √(A_n C_{n+1}).
#[derive(Debug, Clone)]
pub struct JacobiMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl JacobiMatrix {
    /// Truncate the recurrence to its leading `dim`×`dim` symmetric block.
    ///
    /// Product coefficients within −1e−13 (relative) of zero are snapped to
    /// zero so quadrature nodes sitting exactly on a gap endpoint stay
    /// usable; anything more negative violates Favard admissibility.
    pub fn from_recurrence(rec: &EcRecurrence, dim: usize) -> Result<Self> {
        let mut diag = Vec::with_capacity(dim);
        let mut offdiag = Vec::with_capacity(dim.saturating_sub(1));
        for n in 0..dim {
            diag.push(rec.row(n).diag);
        }
        for n in 0..dim.saturating_sub(1) {
            let prod = rec.row(n).up * rec.row(n + 1).down;
            if prod < 0.0 {
                if prod > -1e-13 * (1.0 + prod.abs()) {
                    offdiag.push(0.0);
                    continue;
                }
                return Err(Error::Domain(format!(
                    "recurrence is not Favard-admissible: A_{n}·C_{} = {prod} < 0",
                    n + 1
                )));
            }
            offdiag.push(prod.sqrt());
        }
        Ok(JacobiMatrix { diag, offdiag })
    }

    /// y ← J x for the symmetric tridiagonal J.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = self.diag[i] * x[i];
            if i > 0 {
                y[i] += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                y[i] += self.offdiag[i] * x[i + 1];
            }
        }
        y
    }

    /// A bound on the spectral radius (Gershgorin discs).
    pub fn spectral_bound(&self) -> f64 {
        let n = self.diag.len();
        let mut bound = 0.0f64;
        for i in 0..n {
            let lo = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let hi = if i < n - 1 { self.offdiag[i].abs() } else { 0.0 };
            bound = bound.max(self.diag[i].abs() + lo + hi);
        }
        bound
    }
}

/// Eigenvalues and first components of the orthonormal eigenvectors of a
/// symmetric tridiagonal matrix, by the implicit QL iteration with Wilkinson
/// shift. Only the first row of the eigenvector matrix is accumulated, which
/// is all Gauss weights need.
pub fn tridiag_eigen_first_components(
    diag: &[f64],
    offdiag: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    assert!(offdiag.len() + 1 == n || (n == 0 && offdiag.is_empty()));
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    if n > 1 {
        e[..n - 1].copy_from_slice(offdiag);
    }
    let mut z = vec![0.0f64; n];
    if n > 0 {
        z[0] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::EigenFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Gauss rule of a measure given by its recurrence: nodes are the
/// eigenvalues of the leading N×N symmetrized Jacobi block, weights the
/// squared first eigenvector components (total mass 1).
pub fn gauss_quadrature(rec: &EcRecurrence, n: usize) -> Result<Quadrature> {
    if n == 0 {
        return Err(Error::Domain("quadrature order must be >= 1".into()));
    }
    let jac = JacobiMatrix::from_recurrence(rec, n)?;
    gauss_rule(&jac, 1.0)
}

/// Golub–Welsch on an explicit Jacobi matrix with total mass `mu0`.
pub fn gauss_rule(jac: &JacobiMatrix, mu0: f64) -> Result<Quadrature> {
    let (d, z) = tridiag_eigen_first_components(&jac.diag, &jac.offdiag)?;
    let mut pairs: Vec<(f64, f64)> = d
        .into_iter()
        .zip(z.into_iter().map(|v| mu0 * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Quadrature {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Gauss–Legendre rule on [−1, 1] (weight 1, total mass 2).
pub fn gauss_legendre(n: usize) -> Quadrature {
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let jac = JacobiMatrix { diag, offdiag };
    gauss_rule(&jac, 2.0).expect("Legendre Jacobi matrix is well conditioned")
}

/// k-th moment of the orthogonality measure, computed as the top-left entry
/// of the k-th power of the symmetrized Jacobi matrix. Exact in exact
/// arithmetic, which makes it the independent oracle for quadrature,
/// density integration, and sampling.
pub fn moment_oracle(rec: &EcRecurrence, k: usize) -> f64 {
    let dim = k / 2 + 2;
    let jac = match JacobiMatrix::from_recurrence(rec, dim) {
        Ok(j) => j,
        // Matrix powers only need |offdiag|²; admissibility is not required here.
        Err(_) => {
            let diag = (0..dim).map(|n| rec.row(n).diag).collect();
            let offdiag = (0..dim - 1)
                .map(|n| (rec.row(n).up * rec.row(n + 1).down).max(0.0).sqrt())
                .collect();
            JacobiMatrix { diag, offdiag }
        }
    };
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    for _ in 0..k {
        v = jac.apply(&v);
    }
    v[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::HarnessParams;
    use crate::recurrence::martingale_recurrence;

    fn semicircle_rec(t: f64) -> EcRecurrence {
        let p = HarnessParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        martingale_recurrence(&p, t).unwrap()
    }

    #[test]
    fn legendre_small_orders() {
        let q = gauss_legendre(2);
        let v = 1.0 / 3f64.sqrt();
        assert!((q.nodes[0] + v).abs() < 1e-14);
        assert!((q.nodes[1] - v).abs() < 1e-14);
        assert!((q.weights[0] - 1.0).abs() < 1e-14);

        let q = gauss_legendre(3);
        assert!(q.nodes[1].abs() < 1e-14);
        assert!((q.nodes[2] - (0.6f64).sqrt()).abs() < 1e-14);
        assert!((q.weights[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((q.weights[0] - 5.0 / 9.0).abs() < 1e-14);

        // integrates polynomials exactly up to degree 2n-1
        let q = gauss_legendre(8);
        let exact = |k: u32| if k.is_multiple_of(2) { 2.0 / (k as f64 + 1.0) } else { 0.0 };
        for k in 0..16u32 {
            assert!((q.integrate(|x| x.powi(k as i32)) - exact(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn semicircle_rule_order_two() {
        let q = gauss_quadrature(&semicircle_rec(1.0), 2).unwrap();
        assert!((q.nodes[0] + 1.0).abs() < 1e-14);
        assert!((q.nodes[1] - 1.0).abs() < 1e-14);
        assert!((q.weights[0] - 0.5).abs() < 1e-14);
        assert!((q.weights[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn single_node_rule_is_the_mean() {
        let p = HarnessParams::new(1.3, -0.4, 0.2, 0.4).unwrap();
        let rec = martingale_recurrence(&p, 0.8).unwrap();
        let q = gauss_quadrature(&rec, 1).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q.nodes[0] - rec.row(0).diag).abs() < 1e-14);
        assert!((q.weights[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn semicircle_moments_are_catalan() {
        let rec = semicircle_rec(1.0);
        let catalan = [1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 14.0];
        for (k, &c) in catalan.iter().enumerate() {
            assert!((moment_oracle(&rec, k) - c).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn quadrature_matches_moment_oracle() {
        for (e, th, s, ta) in [
            (0.0, 0.0, 0.0, 0.0),
            (3.0, -1.0, 0.5, 0.5),
            (2.2, 2.2, 1.0, 0.2),
            (2.0, 0.5, 0.5, 0.0),
        ] {
            let p = HarnessParams::new(e, th, s, ta).unwrap();
            let rec = martingale_recurrence(&p, 1.3).unwrap();
            let n = 12;
            let q = gauss_quadrature(&rec, n).unwrap();
            assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..=(2 * n - 1) {
                let exact = moment_oracle(&rec, k);
                let quad = q.integrate(|x| x.powi(k as i32));
                // odd moments cancel to ~0; scale by the absolute moment,
                // which is the size of the summands actually added
                let abs_moment = q.integrate(|x| x.abs().powi(k as i32));
                let rel = (exact - quad).abs() / exact.abs().max(abs_moment).max(1.0);
                assert!(rel < 1e-9, "degree {k}: oracle {exact} vs quadrature {quad}");
            }
        }
    }

    #[test]
    fn process_mean_zero_variance_t() {
        for t in [0.3, 1.0, 2.5] {
            let p = HarnessParams::new(1.1, -0.6, 0.4, 0.3).unwrap();
            let rec = martingale_recurrence(&p, t).unwrap();
            assert!(moment_oracle(&rec, 1).abs() < 1e-14);
            assert!((moment_oracle(&rec, 2) - t).abs() < 1e-13);
        }
    }

    #[test]
    fn eigen_handles_decoupled_blocks() {
        // point-mass recurrence: off-diagonal zero at the first coupling
        let (d, z) = tridiag_eigen_first_components(&[0.7, 0.0, 0.0], &[0.0, 1.0]).unwrap();
        let idx = d.iter().position(|&v| (v - 0.7).abs() < 1e-14).unwrap();
        assert!((z[idx].abs() - 1.0).abs() < 1e-14);
    }
}
