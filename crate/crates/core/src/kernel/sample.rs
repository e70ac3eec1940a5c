//! Exact sampling from a spectral measure by inverse CDF with atoms.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::spectral::{Atom, SpectralMeasure};

/// Uniform draw in [0, 1) from the top 53 bits of the next word.
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone)]
enum Piece {
    Jump { x: f64, mass: f64 },
    Panel { lo: f64, hi: f64, mass: f64, d_lo: f64, d_hi: f64 },
}

impl Piece {
    fn mass(&self) -> f64 {
        match *self {
            Piece::Jump { mass, .. } | Piece::Panel { mass, .. } => mass,
        }
    }

    fn position(&self) -> f64 {
        match *self {
            Piece::Jump { x, .. } => x,
            Piece::Panel { lo, .. } => lo,
        }
    }
}

/// Tabulated CDF: absolutely continuous panels interleaved with atom jumps,
/// in increasing position, normalized to total mass one.
#[derive(Debug, Clone)]
pub struct CdfTable {
    pieces: Vec<Piece>,
    /// cumulative mass before each piece
    cum: Vec<f64>,
    /// unnormalized total the table was built from
    pub raw_total: f64,
    pub atoms: Vec<Atom>,
}

impl CdfTable {
    /// Build from a measure: `panels` initial panels over the ac interval,
    /// with one refinement pass splitting panels whose midpoint density
    /// exceeds ten times the median.
    pub fn build(m: &SpectralMeasure, panels: usize) -> Result<CdfTable> {
        let mut edges: Vec<f64> = Vec::new();
        let (lo, hi) = m.ac_interval;
        if hi > lo && m.point_mass().is_none() {
            let n = panels.max(8);
            for k in 0..=n {
                edges.push(lo + (hi - lo) * k as f64 / n as f64);
            }
            // one refinement pass where the density is top-heavy
            let mut mids: Vec<f64> = edges
                .windows(2)
                .map(|w| m.density(0.5 * (w[0] + w[1])))
                .collect();
            let mut sorted = mids.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2].max(1e-300);
            let mut refined = vec![edges[0]];
            for (k, w) in edges.windows(2).enumerate() {
                if mids[k] > 10.0 * median {
                    for j in 1..4 {
                        refined.push(w[0] + (w[1] - w[0]) * j as f64 / 4.0);
                    }
                }
                refined.push(w[1]);
            }
            edges = refined;
            mids.clear();
        }

        // panel masses by 4-point Gauss-Legendre
        const GL4_X: [f64; 4] = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_26,
            0.339_981_043_584_856_26,
            0.861_136_311_594_052_6,
        ];
        const GL4_W: [f64; 4] = [
            0.347_854_845_137_453_85,
            0.652_145_154_862_546_2,
            0.652_145_154_862_546_2,
            0.347_854_845_137_453_85,
        ];
        let mut pieces: Vec<Piece> = Vec::with_capacity(edges.len() + m.atoms.len());
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = 0.5 * (b - a);
            let c = 0.5 * (a + b);
            let mass: f64 = GL4_X
                .iter()
                .zip(GL4_W.iter())
                .map(|(&x, &wt)| wt * m.density(c + h * x))
                .sum::<f64>()
                * h;
            pieces.push(Piece::Panel {
                lo: a,
                hi: b,
                mass: mass.max(0.0),
                d_lo: m.density(a).max(0.0),
                d_hi: m.density(b).max(0.0),
            });
        }
        for atom in &m.atoms {
            pieces.push(Piece::Jump { x: atom.location, mass: atom.weight });
        }
        pieces.sort_by(|a, b| a.position().total_cmp(&b.position()));

        let raw_total: f64 = pieces.iter().map(|p| p.mass()).sum();
        if raw_total <= 0.0 {
            return Err(Error::Domain("measure has no mass to tabulate".into()));
        }
        // normalize so the table is an exact probability distribution
        for p in pieces.iter_mut() {
            match p {
                Piece::Jump { mass, .. } => *mass /= raw_total,
                Piece::Panel { mass, d_lo, d_hi, .. } => {
                    *mass /= raw_total;
                    *d_lo /= raw_total;
                    *d_hi /= raw_total;
                }
            }
        }
        let mut cum = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            cum.push(acc);
            acc += p.mass();
        }
        Ok(CdfTable {
            pieces,
            cum,
            raw_total,
            atoms: m.atoms.clone(),
        })
    }

    /// Right-continuous CDF.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.pieces {
            match *p {
                Piece::Jump { x: loc, mass } => {
                    if loc <= x {
                        acc += mass;
                    }
                }
                Piece::Panel { lo, hi, mass, d_lo, d_hi } => {
                    if hi <= x {
                        acc += mass;
                    } else if lo < x {
                        acc += Self::partial(lo, hi, mass, d_lo, d_hi, x);
                    }
                }
            }
        }
        acc
    }

    /// Left limit of the CDF.
    pub fn eval_left(&self, x: f64) -> f64 {
        let jump: f64 = self
            .pieces
            .iter()
            .filter_map(|p| match *p {
                Piece::Jump { x: loc, mass } if loc == x => Some(mass),
                _ => None,
            })
            .sum();
        self.eval(x) - jump
    }

    fn partial(lo: f64, hi: f64, mass: f64, d_lo: f64, d_hi: f64, x: f64) -> f64 {
        let w = hi - lo;
        let xi = (x - lo).clamp(0.0, w);
        let trap_total = 0.5 * (d_lo + d_hi) * w;
        if trap_total <= 0.0 {
            return mass * xi / w;
        }
        let raw = d_lo * xi + 0.5 * (d_hi - d_lo) * xi * xi / w;
        mass * raw / trap_total
    }

    /// Quantile (generalized inverse CDF) at u in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let idx = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        // walk forward over zero-mass pieces
        let mut i = idx;
        while i + 1 < self.pieces.len() && self.cum[i] + self.pieces[i].mass() <= u {
            i += 1;
        }
        match self.pieces[i] {
            Piece::Jump { x, .. } => x,
            Piece::Panel { lo, hi, mass, d_lo, d_hi } => {
                let w = hi - lo;
                if mass <= 0.0 {
                    return lo;
                }
                let v = (u - self.cum[i]) / mass; // target fraction of the panel
                let trap_total = 0.5 * (d_lo + d_hi) * w;
                if trap_total <= 0.0 {
                    return lo + v * w;
                }
                let target = v * trap_total;
                // solve d_lo ξ + (d_hi − d_lo) ξ²/(2w) = target
                let a = 0.5 * (d_hi - d_lo) / w;
                let xi = if a.abs() < 1e-300 {
                    target / d_lo.max(1e-300)
                } else {
                    let disc = (d_lo * d_lo + 4.0 * a * target).max(0.0);
                    (-d_lo + disc.sqrt()) / (2.0 * a)
                };
                lo + xi.clamp(0.0, w)
            }
        }
    }
}

/// Inverse-CDF sampler over a precomputed table.
#[derive(Debug, Clone)]
pub struct Sampler {
    table: CdfTable,
}

impl Sampler {
    pub fn new(m: &SpectralMeasure, panels: usize) -> Result<Sampler> {
        Ok(Sampler { table: CdfTable::build(m, panels)? })
    }

    pub fn table(&self) -> &CdfTable {
        &self.table
    }

    pub fn draw(&self, rng: &mut impl RngCore) -> f64 {
        self.table.quantile(uniform01(rng))
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against the table.
///
/// Handles ties in the sample (atoms produce blocks of identical draws):
/// at each distinct value v the comparisons are F_n(v) against F(v) and
/// F_n(v⁻) against F(v⁻); reference atoms not present in the sample are
/// extra candidate points.
pub fn ks_statistic(samples: &mut [f64], table: &CdfTable) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0usize;
    while i < samples.len() {
        let v = samples[i];
        let mut j = i + 1;
        while j < samples.len() && samples[j] == v {
            j += 1;
        }
        d = d.max((j as f64 / n - table.eval(v)).abs());
        d = d.max((i as f64 / n - table.eval_left(v)).abs());
        i = j;
    }
    for atom in &table.atoms {
        let right = samples.partition_point(|&v| v <= atom.location) as f64 / n;
        let left = samples.partition_point(|&v| v < atom.location) as f64 / n;
        d = d.max((right - table.eval(atom.location)).abs());
        d = d.max((left - table.eval_left(atom.location)).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::law_pi;
    use crate::params::HarnessParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn point_mass_always_returns_location() {
        let p = HarnessParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let rec = crate::recurrence::conditional_recurrence(&p, 1.0, 0.3, 1.0).unwrap();
        let m = crate::spectral::build_measure(
            rec,
            &p,
            crate::spectral::MeasureContext::Conditional { s: 1.0, x: 0.3, t: 1.0 },
        )
        .unwrap();
        let sampler = Sampler::new(&m, 64).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sampler.draw(&mut rng), 0.3);
        }
    }

    #[test]
    fn semicircle_cdf_table_is_consistent() {
        let p = HarnessParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let m = law_pi(&p, 1.0).unwrap();
        let table = CdfTable::build(&m, 1024).unwrap();
        // per-panel Gauss underresolves the square-root edges slightly; the
        // table is normalized, so only the raw total carries this error
        assert!((table.raw_total - 1.0).abs() < 1e-5);
        assert!((table.eval(2.1) - 1.0).abs() < 1e-12);
        assert_eq!(table.eval(-2.1), 0.0);
        // semicircle CDF at 0 is exactly 1/2
        assert!((table.eval(0.0) - 0.5).abs() < 1e-9);
        // quantile inverts eval
        for u in [0.01, 0.2, 0.5, 0.77, 0.99] {
            let x = table.quantile(u);
            assert!((table.eval(x) - u).abs() < 1e-6, "u={u}");
        }
    }

    #[test]
    fn empirical_mean_of_semicircle_draws() {
        let p = HarnessParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let m = law_pi(&p, 1.0).unwrap();
        let sampler = Sampler::new(&m, 2048).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sampler.draw(&mut rng)).sum::<f64>() / n as f64;
        // variance 1 so 4σ/√n bound
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn ks_statistic_of_own_draws_is_small() {
        let p = HarnessParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let m = law_pi(&p, 1.0).unwrap();
        let sampler = Sampler::new(&m, 4096).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 100_000usize;
        let mut draws: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
        let d = ks_statistic(&mut draws, sampler.table());
        // 1% critical value 1.6276/sqrt(n)
        assert!(d < 1.6276 / (n as f64).sqrt(), "KS statistic {d}");
    }
}
