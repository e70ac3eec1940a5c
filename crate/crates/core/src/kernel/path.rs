//! Markov path simulation, including the joint-reversal wrapper for
//! parameter sets whose classification applies time inversion.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::HarnessParams;
use crate::recurrence::{conditional_recurrence, martingale_recurrence};
use crate::spectral::{build_measure, MeasureContext};

use super::sample::Sampler;

/// Fixed default seed so runs are reproducible without flags.
pub const DEFAULT_SEED: u64 = 271_828;

/// Identifies the counter-based random stream a path was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
}

/// One sampled trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: SeedRecord,
}

/// Tuning knobs for the per-transition samplers.
#[derive(Debug, Clone, Copy)]
pub struct PathConfig {
    /// Panels of each transition CDF table. Paths rebuild a table per step,
    /// so this is deliberately coarser than the standalone sampler default.
    pub table_panels: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { table_panels: 512 }
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulate one path of the process at the given strictly increasing
/// positive times.
///
/// Parameters are reduced first. Without time inversion the path is drawn
/// forward: X at the first time from π, then through the transition
/// kernels. With time inversion the reduced process Y is simulated forward
/// at the reciprocal times and mapped back through X_t = t·Y_{1/t}. A
/// logged negation flips the values at the end.
pub fn simulate_path(
    p: &HarnessParams,
    times: &[f64],
    seed: u64,
    stream: u64,
    cfg: &PathConfig,
) -> Result<PathSample> {
    if times.is_empty() {
        return Err(Error::Domain("at least one time is required".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) || times[0] <= 0.0 {
        return Err(Error::Domain(
            "times must be strictly increasing and positive".into(),
        ));
    }
    let (q, tag) = p.reduce()?;
    let inverted = tag.needs_time_inversion();
    let negated = tag.needs_negation();

    let sim_times: Vec<f64> = if inverted {
        times.iter().rev().map(|&t| 1.0 / t).collect()
    } else {
        times.to_vec()
    };

    let mut rng = path_rng(seed, stream);
    let mut sim_values = Vec::with_capacity(sim_times.len());

    let t0 = sim_times[0];
    let m0 = build_measure(martingale_recurrence(&q, t0)?, &q, MeasureContext::Marginal { t: t0 })?;
    sim_values.push(Sampler::new(&m0, cfg.table_panels)?.draw(&mut rng));
    for k in 1..sim_times.len() {
        let (s, t) = (sim_times[k - 1], sim_times[k]);
        let x = sim_values[k - 1];
        let rec = conditional_recurrence(&q, s, x, t)?;
        let m = build_measure(rec, &q, MeasureContext::Conditional { s, x, t })?;
        sim_values.push(Sampler::new(&m, cfg.table_panels)?.draw(&mut rng));
    }

    let mut values: Vec<f64> = if inverted {
        // sim index k corresponds to original index n−1−k; X_t = t·Y_{1/t}
        sim_values
            .iter()
            .rev()
            .zip(times.iter())
            .map(|(&y, &t)| t * y)
            .collect()
    } else {
        sim_values
    };
    if negated {
        for v in values.iter_mut() {
            *v = -*v;
        }
    }
    Ok(PathSample {
        times: times.to_vec(),
        values,
        seed: SeedRecord { seed, stream },
    })
}

/// Simulate `n_paths` independent paths; path i uses random stream i, so
/// the result is reproducible and independent of the worker count.
pub fn simulate_paths(
    p: &HarnessParams,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    cfg: &PathConfig,
) -> Result<Vec<PathSample>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|stream| simulate_path(p, times, seed, stream, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::moment_oracle;

    fn params(eta: f64, theta: f64, sigma: f64, tau: f64) -> HarnessParams {
        HarnessParams::new(eta, theta, sigma, tau).unwrap()
    }

    #[test]
    fn rejects_bad_time_grids() {
        let p = params(0.0, 0.0, 0.0, 0.0);
        let cfg = PathConfig::default();
        assert!(simulate_path(&p, &[], 1, 0, &cfg).is_err());
        assert!(simulate_path(&p, &[0.0, 1.0], 1, 0, &cfg).is_err());
        assert!(simulate_path(&p, &[1.0, 1.0], 1, 0, &cfg).is_err());
    }

    #[test]
    fn paths_are_reproducible() {
        let p = params(1.0, 1.0, 0.5, 0.5);
        let cfg = PathConfig::default();
        let a = simulate_path(&p, &[0.5, 1.0, 2.0], 9, 3, &cfg).unwrap();
        let b = simulate_path(&p, &[0.5, 1.0, 2.0], 9, 3, &cfg).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_path(&p, &[0.5, 1.0, 2.0], 9, 4, &cfg).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn single_time_marginal_matches_law() {
        let p = params(0.0, 0.0, 0.0, 0.0);
        let cfg = PathConfig { table_panels: 1024 };
        let n = 20_000;
        let paths = simulate_paths(&p, &[1.0], n, 5, &cfg).unwrap();
        let rec = martingale_recurrence(&p, 1.0).unwrap();
        for k in 1..=4usize {
            let emp: f64 =
                paths.iter().map(|pa| pa.values[0].powi(k as i32)).sum::<f64>() / n as f64;
            let exact = moment_oracle(&rec, k);
            let var = moment_oracle(&rec, 2 * k) - exact * exact;
            let se = (var / n as f64).sqrt();
            assert!(
                (emp - exact).abs() < 5.0 * se + 1e-3,
                "degree {k}: {emp} vs {exact}"
            );
        }
    }

    #[test]
    fn increments_are_conditionally_centered() {
        let p = params(1.0, 1.0, 0.5, 0.5);
        let cfg = PathConfig::default();
        let (s, t) = (1.0, 2.0);
        let n = 4_000;
        let paths = simulate_paths(&p, &[s, t], n, 12, &cfg).unwrap();
        // E[(X_t − X_s) X_s^k] = 0; its Monte Carlo spread is
        // E[Var(X_t|X_s) X_s^{2k}]/n, computable by quadrature over π_s
        let pi_s = crate::kernel::law_pi(&p, s).unwrap();
        let rule = pi_s.quadrature(24).unwrap();
        let cond_var =
            |x: f64| (t - s) * (1.0 + p.eta * x + p.sigma * x * x) / (1.0 + p.sigma * s);
        for pw in 0..3i32 {
            let emp: f64 = paths
                .iter()
                .map(|pa| (pa.values[1] - pa.values[0]) * pa.values[0].powi(pw))
                .sum::<f64>()
                / n as f64;
            let var = rule.integrate(|x| cond_var(x) * x.powi(2 * pw));
            let bound = 4.5 * (var / n as f64).sqrt();
            assert!(emp.abs() < bound, "power {pw}: {emp} (bound {bound})");
        }
    }

    #[test]
    fn inverted_route_reproduces_marginal_moments() {
        // parameters that force time inversion
        let p = params(3.0, -1.0, 0.5, 0.5);
        assert!(p.classify().unwrap().needs_time_inversion());
        let cfg = PathConfig::default();
        let n = 4_000;
        let t = 1.5;
        let paths = simulate_paths(&p, &[t], n, 23, &cfg).unwrap();
        let rec = martingale_recurrence(&p, t).unwrap();
        for k in 1..=3usize {
            let emp: f64 =
                paths.iter().map(|pa| pa.values[0].powi(k as i32)).sum::<f64>() / n as f64;
            let exact = moment_oracle(&rec, k);
            let var = moment_oracle(&rec, 2 * k) - exact * exact;
            let se = (var / n as f64).sqrt();
            assert!(
                (emp - exact).abs() < 5.0 * se + 2e-2,
                "degree {k}: {emp} vs {exact}"
            );
        }
    }

    #[test]
    fn path_values_stay_in_state_space() {
        let p = params(2.2, 2.2, 1.0, 0.2);
        let space = p.state_space();
        let cfg = PathConfig::default();
        let paths = simulate_paths(&p, &[0.3, 0.8, 1.5], 200, 31, &cfg).unwrap();
        for pa in &paths {
            for &v in &pa.values {
                assert!(space.contains(v, 1e-9), "value {v} escaped the state space");
            }
        }
    }
}
