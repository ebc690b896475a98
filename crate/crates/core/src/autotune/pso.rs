use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AutotuneError;

/// Particle-swarm settings. The coefficients are the constriction values.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PsoConfig {
    pub particles: usize,
    pub max_iters: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit per dimension as a fraction of the bound range.
    pub vmax_frac: f64,
    /// Stop once the global best reaches this cost.
    pub target: Option<f64>,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 100,
            max_iters: 60,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            vmax_frac: 0.2,
            target: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PsoResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    /// Global best after each iteration; the first entry covers the
    /// initial swarm.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Minimize `f` over the box `[lower, upper]`.
///
/// `start`, if given, replaces the first particle's random initial position.
pub fn pso_optimize(
    lower: &[f64],
    upper: &[f64],
    start: Option<&[f64]>,
    cfg: &PsoConfig,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<PsoResult, AutotuneError> {
    pso_optimize_batch(lower, upper, start, cfg, |xs| xs.iter().map(|x| f(x)).collect())
}

/// As [`pso_optimize`], but the objective scores a whole swarm at once so
/// callers can evaluate particles concurrently. It must return one cost per
/// position, in order.
pub fn pso_optimize_batch(
    lower: &[f64],
    upper: &[f64],
    start: Option<&[f64]>,
    cfg: &PsoConfig,
    mut eval: impl FnMut(&[Vec<f64>]) -> Vec<f64>,
) -> Result<PsoResult, AutotuneError> {
    let dim = lower.len();
    if upper.len() != dim {
        return Err(AutotuneError::DimensionMismatch {
            expected: dim,
            got: upper.len(),
        });
    }
    if let Some(s) = start {
        if s.len() != dim {
            return Err(AutotuneError::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
    }
    for (index, (lo, hi)) in lower.iter().zip(upper).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(AutotuneError::DegenerateBounds { index });
        }
    }
    if cfg.max_iters == 0 {
        return Err(AutotuneError::ZeroIterations);
    }
    if cfg.particles == 0 {
        return Err(AutotuneError::ZeroParticles);
    }

    let n = cfg.particles;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vmax: Vec<f64> = lower.iter().zip(upper).map(|(l, h)| cfg.vmax_frac * (h - l)).collect();
    let mut pos: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|d| rng.random_range(lower[d]..=upper[d])).collect())
        .collect();
    if let Some(s) = start {
        pos[0] = (0..dim).map(|d| s[d].clamp(lower[d], upper[d])).collect();
    }
    let mut vel: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|d| rng.random_range(-vmax[d]..=vmax[d])).collect())
        .collect();

    let mut pbest = pos.clone();
    let mut pbest_cost = vec![f64::INFINITY; n];
    let mut gbest = pos[0].clone();
    let mut gbest_cost = f64::INFINITY;
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut evaluations = 0;

    for iter in 0..cfg.max_iters {
        if iter > 0 {
            for i in 0..n {
                for d in 0..dim {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let v = cfg.inertia * vel[i][d]
                        + cfg.cognitive * r1 * (pbest[i][d] - pos[i][d])
                        + cfg.social * r2 * (gbest[d] - pos[i][d]);
                    vel[i][d] = v.clamp(-vmax[d], vmax[d]);
                    pos[i][d] = (pos[i][d] + vel[i][d]).clamp(lower[d], upper[d]);
                }
            }
        }
        let costs = eval(&pos);
        if costs.len() != n {
            return Err(AutotuneError::BatchSize {
                expected: n,
                got: costs.len(),
            });
        }
        evaluations += n;
        for (i, &c) in costs.iter().enumerate() {
            // NaN never improves a best.
            if c < pbest_cost[i] {
                pbest_cost[i] = c;
                pbest[i].clone_from(&pos[i]);
            }
            if c < gbest_cost {
                gbest_cost = c;
                gbest.clone_from(&pos[i]);
            }
        }
        trace.push(gbest_cost);
        if cfg.target.is_some_and(|t| gbest_cost <= t) {
            break;
        }
    }

    Ok(PsoResult {
        best: gbest,
        best_cost: gbest_cost,
        iterations: trace.len(),
        trace,
        evaluations,
    })
}
