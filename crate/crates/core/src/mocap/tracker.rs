use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Detection;
use crate::linalg::cholesky;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrackerConfig {
    pub particles: usize,
    /// Process noise, px/s².
    pub sigma_accel: f64,
    /// Measurement noise, px.
    pub sigma_meas: f64,
    /// Velocity spread at initialization, px/s.
    pub sigma_v0: f64,
    /// Resample when the effective sample size drops below this fraction.
    pub resample_below: f64,
    /// Kernel bandwidth `h ∈ [0, 1)` of the post-resampling jitter, relative
    /// to the particle covariance. Zero disables it.
    pub kernel_bandwidth: f64,
    /// A detection this many measurement sigmas beyond the predicted cloud
    /// restarts the filter at the detection.
    pub reinit_sigmas: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            particles: 200,
            sigma_accel: 50.0,
            sigma_meas: 1.0,
            sigma_v0: 1000.0,
            resample_below: 0.5,
            kernel_bandwidth: 0.6,
            reinit_sigmas: 10.0,
        }
    }
}

/// Constant-velocity particle filter over `(x, y, vx, vy)`.
#[derive(Clone, Debug)]
pub struct ParticleFilter {
    states: Vec<[f64; 4]>,
    weights: Vec<f64>,
    scratch: Vec<[f64; 4]>,
    /// Weighted mean and position variance taken before any resampling.
    estimate: ([f64; 4], [f64; 2]),
}

impl ParticleFilter {
    /// All particles at `at` with zero-mean Gaussian velocities.
    pub fn new(at: [f64; 2], cfg: &TrackerConfig, rng: &mut impl Rng) -> Self {
        let n = cfg.particles.max(1);
        let states = (0..n)
            .map(|_| {
                let vx: f64 = rng.sample(StandardNormal);
                let vy: f64 = rng.sample(StandardNormal);
                [at[0], at[1], vx * cfg.sigma_v0, vy * cfg.sigma_v0]
            })
            .collect();
        let mut f = Self {
            states,
            weights: alloc::vec![1.0 / n as f64; n],
            scratch: Vec::with_capacity(n),
            estimate: ([0.0; 4], [0.0; 2]),
        };
        f.snapshot();
        f
    }

    pub fn predict(&mut self, dt: f64, cfg: &TrackerConfig, rng: &mut impl Rng) {
        for s in &mut self.states {
            let ax: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.sigma_accel;
            let ay: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.sigma_accel;
            s[0] += s[2] * dt + 0.5 * ax * dt * dt;
            s[1] += s[3] * dt + 0.5 * ay * dt * dt;
            s[2] += ax * dt;
            s[3] += ay * dt;
        }
        self.snapshot();
    }

    pub fn update(&mut self, z: [f64; 2], cfg: &TrackerConfig, rng: &mut impl Rng) {
        let inv = 1.0 / (2.0 * cfg.sigma_meas * cfg.sigma_meas);
        let mut max_log = f64::NEG_INFINITY;
        for (w, s) in self.weights.iter_mut().zip(&self.states) {
            let (dx, dy) = (s[0] - z[0], s[1] - z[1]);
            *w = w.ln() - (dx * dx + dy * dy) * inv;
            max_log = max_log.max(*w);
        }
        let mut sum = 0.0;
        for w in &mut self.weights {
            *w = (*w - max_log).exp();
            sum += *w;
        }
        self.weights.iter_mut().for_each(|w| *w /= sum);
        self.snapshot();
        if self.ess() < cfg.resample_below * self.states.len() as f64 {
            let (m, cov) = self.weighted_moments();
            self.resample(rng);
            self.regularize(cfg.kernel_bandwidth, &m, &cov, rng);
        }
    }

    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    fn resample(&mut self, rng: &mut impl Rng) {
        let n = self.states.len();
        let step = 1.0 / n as f64;
        let mut u = rng.random::<f64>() * step;
        let mut c = self.weights[0];
        let mut i = 0;
        self.scratch.clear();
        for _ in 0..n {
            while u > c && i + 1 < n {
                i += 1;
                c += self.weights[i];
            }
            self.scratch.push(self.states[i]);
            u += step;
        }
        core::mem::swap(&mut self.states, &mut self.scratch);
        self.weights.iter_mut().for_each(|w| *w = step);
    }

    fn weighted_moments(&self) -> ([f64; 4], [f64; 16]) {
        let m = self.weighted_mean();
        let mut cov = [0.0; 16];
        for (w, s) in self.weights.iter().zip(&self.states) {
            for i in 0..4 {
                for j in 0..4 {
                    cov[i * 4 + j] += w * (s[i] - m[i]) * (s[j] - m[j]);
                }
            }
        }
        (m, cov)
    }

    /// Shrink particles toward the pre-resampling mean `m` by
    /// `sqrt(1 - h²)` and add Gaussian jitter with covariance `h²·cov`, so
    /// duplicates separate while the cloud keeps its first two moments. A
    /// singular `cov` falls back to its diagonal.
    fn regularize(&mut self, h: f64, m: &[f64; 4], cov: &[f64; 16], rng: &mut impl Rng) {
        if h <= 0.0 {
            return;
        }
        let l = cholesky(cov, 4, 0.0).unwrap_or_else(|| {
            let mut d = [0.0; 16];
            for i in 0..4 {
                d[i * 5] = cov[i * 5].max(0.0).sqrt();
            }
            d.to_vec()
        });
        let a = (1.0 - h * h).sqrt();
        for s in &mut self.states {
            let e: [f64; 4] = core::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
            for i in 0..4 {
                let jitter: f64 = (0..=i).map(|k| l[i * 4 + k] * e[k]).sum();
                s[i] = a * s[i] + (1.0 - a) * m[i] + h * jitter;
            }
        }
    }

    fn snapshot(&mut self) {
        let m = self.weighted_mean();
        let mut v = [0.0; 2];
        for (w, s) in self.weights.iter().zip(&self.states) {
            v[0] += w * (s[0] - m[0]).powi(2);
            v[1] += w * (s[1] - m[1]).powi(2);
        }
        self.estimate = (m, v);
    }

    /// Weighted mean state, accumulated around the first particle so that
    /// identical particles give their exact common value.
    fn weighted_mean(&self) -> [f64; 4] {
        let a = self.states[0];
        let mut m = [0.0; 4];
        for (w, s) in self.weights.iter().zip(&self.states) {
            for k in 0..4 {
                m[k] += w * (s[k] - a[k]);
            }
        }
        [a[0] + m[0], a[1] + m[1], a[2] + m[2], a[3] + m[3]]
    }

    /// Whether `z` lies more than `reinit_sigmas` measurement sigmas beyond
    /// the predicted spread.
    fn is_lost(&self, z: [f64; 2], cfg: &TrackerConfig) -> bool {
        let (m, v) = self.estimate;
        let d2 = (m[0] - z[0]).powi(2) + (m[1] - z[1]).powi(2);
        let spread = (v[0] + v[1]).sqrt() + cfg.reinit_sigmas * cfg.sigma_meas;
        cfg.reinit_sigmas > 0.0 && d2 > spread * spread
    }

    /// Posterior mean `(x, y, vx, vy)` after the latest predict or update.
    /// Taken before resampling, which only adds Monte-Carlo noise.
    pub fn mean(&self) -> [f64; 4] {
        self.estimate.0
    }

    /// Posterior position variance per axis.
    pub fn variance(&self) -> [f64; 2] {
        self.estimate.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackedCentroid {
    pub id: u32,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub variance: [f64; 2],
    /// Whether a detection was fused this step.
    pub observed: bool,
}

/// One particle filter per marker id.
#[derive(Clone, Debug)]
pub struct CentroidTracker {
    cfg: TrackerConfig,
    rng: ChaCha8Rng,
    filters: Vec<(u32, ParticleFilter)>,
}

impl CentroidTracker {
    pub fn new(cfg: TrackerConfig, seed: u64) -> Self {
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            filters: Vec::new(),
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Advance every filter by `dt` seconds and fuse this step's detections.
    /// A marker seen for the first time starts exactly at its detection.
    pub fn step(&mut self, detections: &[Detection], dt: f64) -> Vec<TrackedCentroid> {
        assert!(dt > 0.0, "dt must be positive");
        let cfg = self.cfg;
        for (_, f) in &mut self.filters {
            f.predict(dt, &cfg, &mut self.rng);
        }
        let mut fresh = Vec::new();
        for d in detections {
            match self.filters.iter_mut().find(|(id, _)| *id == d.id) {
                Some((_, f)) if f.is_lost(d.centroid, &cfg) => *f = ParticleFilter::new(d.centroid, &cfg, &mut self.rng),
                Some((_, f)) => f.update(d.centroid, &cfg, &mut self.rng),
                None => fresh.push(d),
            }
        }
        for d in fresh {
            let f = ParticleFilter::new(d.centroid, &cfg, &mut self.rng);
            self.filters.push((d.id, f));
        }
        self.filters.sort_by_key(|(id, _)| *id);
        self.filters
            .iter()
            .map(|(id, f)| {
                let m = f.mean();
                TrackedCentroid {
                    id: *id,
                    position: [m[0], m[1]],
                    velocity: [m[2], m[3]],
                    variance: f.variance(),
                    observed: detections.iter().any(|d| d.id == *id),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(id: u32, u: f64, v: f64) -> Detection {
        Detection {
            id,
            centroid: [u, v],
            support: 4,
            t: 0,
        }
    }

    #[test]
    fn first_detection_is_exact() {
        let mut t = CentroidTracker::new(TrackerConfig::default(), 1);
        let out = t.step(&[det(3, 12.25, 40.5)], 0.002);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].position, [12.25, 40.5]);
        assert_eq!(out[0].variance, [0.0, 0.0]);
        assert!(out[0].observed);
    }

    #[test]
    fn stationary_converges() {
        let mut t = CentroidTracker::new(TrackerConfig::default(), 2);
        let mut last = [0.0; 2];
        for _ in 0..50 {
            last = t.step(&[det(0, 100.3, 50.7)], 0.002)[0].position;
        }
        assert!((last[0] - 100.3).abs() < 0.1 && (last[1] - 50.7).abs() < 0.1, "{last:?}");
    }

    #[test]
    fn coasts_through_dropouts() {
        let mut t = CentroidTracker::new(TrackerConfig::default(), 3);
        let dt = 0.002;
        let v = [300.0, -150.0];
        let truth = |k: usize| [50.0 + v[0] * dt * k as f64, 200.0 + v[1] * dt * k as f64];
        for k in 0..100 {
            let p = truth(k);
            t.step(&[det(7, p[0], p[1])], dt);
        }
        let mut out = Vec::new();
        for _ in 0..3 {
            out = t.step(&[], dt);
        }
        let p = truth(102);
        assert!(!out[0].observed);
        let e = ((out[0].position[0] - p[0]).powi(2) + (out[0].position[1] - p[1]).powi(2)).sqrt();
        assert!(e < 1.0, "{e}");
    }

    #[test]
    fn sharp_likelihood_does_not_freeze() {
        let cfg = TrackerConfig {
            sigma_meas: 0.05,
            ..Default::default()
        };
        for seed in 0..20 {
            let mut t = CentroidTracker::new(cfg, seed);
            let mut last = [0.0; 2];
            for _ in 0..100 {
                last = t.step(&[det(0, 100.5, 50.5)], 0.002)[0].position;
            }
            assert!((last[0] - 100.5).abs() < 1.0 && (last[1] - 50.5).abs() < 1.0, "seed {seed}: {last:?}");
        }
    }

    #[test]
    fn far_detection_restarts() {
        let mut t = CentroidTracker::new(TrackerConfig::default(), 5);
        for _ in 0..10 {
            t.step(&[det(0, 10.0, 10.0)], 0.002);
        }
        let out = t.step(&[det(0, 200.0, 10.0)], 0.002);
        assert_eq!(out[0].position, [200.0, 10.0]);
    }

    #[test]
    fn systematic_resampling_keeps_count() {
        let cfg = TrackerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut f = ParticleFilter::new([0.0, 0.0], &cfg, &mut rng);
        f.predict(0.05, &cfg, &mut rng);
        f.update([3.0, 0.0], &cfg, &mut rng);
        assert_eq!(f.states.len(), 200);
        assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
