use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::{Behavior, SimCamera, SynthError};
use crate::autotune::{cost_from_counts, ScenePoint, TuningScene, ALPHA0};
use crate::mocap::REFERENCE_LEDS;
use crate::{Event, EventStream};

/// Subsamples per pixel side for spot coverage.
const COVERAGE_SUBSAMPLES: usize = 8;

/// A blinking LED imaged as a flat disk.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedSpot {
    pub center: [f64; 2],
    pub freq_hz: f64,
    /// Fraction of each period the LED is on.
    pub duty: f64,
    /// Log-intensity step of a fully covered pixel.
    pub contrast: f64,
    pub radius_px: f64,
}

impl LedSpot {
    pub fn period_us(&self) -> f64 {
        1e6 / self.freq_hz
    }

    pub fn on_us(&self) -> f64 {
        self.duty * self.period_us()
    }

    fn validate(&self, index: usize) -> Result<(), SynthError> {
        let ok = self.freq_hz.is_finite()
            && self.freq_hz > 0.0
            && self.duty > 0.0
            && self.duty < 1.0
            && self.contrast.is_finite()
            && self.contrast > 0.0
            && self.radius_px.is_finite()
            && self.radius_px > 0.0
            && self.center.iter().all(|c| c.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SynthError::InvalidSpot { index })
        }
    }
}

/// Static LED scene. Spurious events are only simulated within
/// `noise_margin_px` of each spot's rim.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedScene {
    pub width: u32,
    pub height: u32,
    pub spots: Vec<LedSpot>,
    pub duration_s: f64,
    pub noise_margin_px: f64,
}

impl LedScene {
    pub fn duration_us(&self) -> u64 {
        (self.duration_s * 1e6).round() as u64
    }

    fn reach(&self, s: &LedSpot) -> f64 {
        s.radius_px + self.noise_margin_px.max(0.0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.duration_s > 0.0) || self.duration_us() == 0 {
            return Err(SynthError::NonPositiveDuration);
        }
        if !(self.noise_margin_px >= 0.0) {
            return Err(SynthError::InvalidSpot { index: 0 });
        }
        for (index, s) in self.spots.iter().enumerate() {
            s.validate(index)?;
            let r = self.reach(s) + 0.5;
            let inside = s.center[0] - r >= -0.5
                && s.center[1] - r >= -0.5
                && s.center[0] + r <= f64::from(self.width) - 0.5
                && s.center[1] + r <= f64::from(self.height) - 0.5;
            if !inside {
                return Err(SynthError::SpotOutsideFrame { index });
            }
        }
        for a in 0..self.spots.len() {
            for b in a + 1..self.spots.len() {
                let (p, q) = (self.spots[a], self.spots[b]);
                let d = ((p.center[0] - q.center[0]).powi(2) + (p.center[1] - q.center[1]).powi(2)).sqrt();
                if d <= self.reach(&p) + self.reach(&q) + 1.0 {
                    return Err(SynthError::OverlappingSpots { a, b });
                }
            }
        }
        self.tuning_scene().validate().map_err(SynthError::Scene)
    }

    /// Marker centers and frequencies for the autotune objective.
    pub fn tuning_scene(&self) -> TuningScene {
        TuningScene {
            width: self.width,
            height: self.height,
            markers: self
                .spots
                .iter()
                .map(|s| ScenePoint {
                    center: s.center,
                    freq_hz: s.freq_hz,
                })
                .collect(),
            duration_s: self.duration_s,
        }
    }

    /// Simulated pixels as `(x, y, spot, on-level)`; pixels in the noise
    /// margin carry level 0.
    pub fn pixels(&self) -> Vec<(u16, u16, usize, f64)> {
        let mut out = Vec::new();
        for (k, s) in self.spots.iter().enumerate() {
            let r = self.reach(s);
            let x0 = (s.center[0] - r).round().max(0.0) as u32;
            let y0 = (s.center[1] - r).round().max(0.0) as u32;
            let x1 = ((s.center[0] + r).round() as u32).min(self.width - 1);
            let y1 = ((s.center[1] + r).round() as u32).min(self.height - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d = ((x as f64 - s.center[0]).powi(2) + (y as f64 - s.center[1]).powi(2)).sqrt();
                    if d > r + 0.5 {
                        continue;
                    }
                    let a = spot_coverage(x as f64, y as f64, s.center, s.radius_px);
                    out.push((x as u16, y as u16, k, pixel_level(a, s.contrast)));
                }
            }
        }
        out
    }
}

/// Fraction of pixel `(x, y)` (a unit square around its center) inside the
/// disk.
pub fn spot_coverage(x: f64, y: f64, center: [f64; 2], radius: f64) -> f64 {
    let (dx, dy) = (x - center[0], y - center[1]);
    let d = (dx * dx + dy * dy).sqrt();
    if d >= radius + core::f64::consts::FRAC_1_SQRT_2 {
        return 0.0;
    }
    if d + core::f64::consts::FRAC_1_SQRT_2 <= radius {
        return 1.0;
    }
    let n = COVERAGE_SUBSAMPLES;
    let mut hit = 0;
    for i in 0..n {
        for j in 0..n {
            let sx = dx - 0.5 + (i as f64 + 0.5) / n as f64;
            let sy = dy - 0.5 + (j as f64 + 0.5) / n as f64;
            if sx * sx + sy * sy <= radius * radius {
                hit += 1;
            }
        }
    }
    hit as f64 / (n * n) as f64
}

/// Log-intensity step of a pixel that sees a fraction `a` of a spot with
/// full contrast `c`.
pub fn pixel_level(a: f64, c: f64) -> f64 {
    (1.0 + a * (c.exp() - 1.0)).ln()
}

/// The reference markers at their measured rates and duty cycles on a VGA
/// sensor, contrasts 1.0 to 1.2.
pub fn reference_led_scene(duration_s: f64) -> LedScene {
    const CENTERS: [[f64; 2]; 5] = [[200.0, 150.0], [440.0, 150.0], [320.0, 240.0], [200.0, 330.0], [440.0, 330.0]];
    LedScene {
        width: 640,
        height: 480,
        spots: REFERENCE_LEDS
            .iter()
            .zip(CENTERS)
            .enumerate()
            .map(|(k, (&(freq_hz, duty), center))| LedSpot {
                center,
                freq_hz,
                duty,
                contrast: 1.0 + 0.05 * k as f64,
                radius_px: 2.5,
            })
            .collect(),
        duration_s,
        noise_margin_px: 2.0,
    }
}

pub(crate) fn pixel_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One pixel's response to a periodic on/off stimulus.
///
/// Cycle `k` starts at `k·period`; the pixel drives toward `level(k)` for
/// `on_us`, then back toward 0. Each edge is a first-order response with
/// time constant `tau_lp_us`, so crossing times are exact. After an event
/// the reference moves to the crossed level; with a refractory period the
/// pixel is blind until release, when the reference is re-sampled from the
/// current level. Spurious events follow the signal.
pub(crate) fn simulate_pixel(
    b: &Behavior,
    period_us: f64,
    on_us: f64,
    duration_us: u64,
    mut level: impl FnMut(u64) -> f64,
    rng: &mut ChaCha8Rng,
    emit: &mut impl FnMut(u64, i8),
) {
    let end = duration_us as f64;
    let mut px = PixelState::new(b, rng);
    let mut k = 0u64;
    loop {
        let t_on = k as f64 * period_us;
        if t_on >= end {
            break;
        }
        let c = level(k);
        let mut out = |t: f64, p: i8| {
            if t < end {
                emit(t as u64, p);
            }
        };
        px.segment(t_on, t_on + on_us, c, rng, &mut out);
        px.segment(t_on + on_us, (k + 1) as f64 * period_us, 0.0, rng, &mut out);
        k += 1;
    }
    spurious(b, duration_us, rng, emit);
}

/// Poisson background activity with random polarity.
pub(crate) fn spurious(b: &Behavior, duration_us: u64, rng: &mut ChaCha8Rng, emit: &mut impl FnMut(u64, i8)) {
    let lambda = b.noise_rate_hz * duration_us as f64 * 1e-6;
    if lambda <= 0.0 {
        return;
    }
    let Ok(pois) = Poisson::new(lambda) else { return };
    let n = pois.sample(rng) as u64;
    for _ in 0..n {
        let t = rng.random_range(0..duration_us);
        let p = if rng.random::<bool>() { 1 } else { -1 };
        emit(t, p);
    }
}

pub(crate) struct PixelState<'a> {
    b: &'a Behavior,
    reference: f64,
    level: f64,
    blind_until: f64,
    pending: bool,
    gain_on: f64,
    gain_off: f64,
    th_on: f64,
    th_off: f64,
}

impl<'a> PixelState<'a> {
    pub(crate) fn new(b: &'a Behavior, rng: &mut ChaCha8Rng) -> Self {
        let gain_on = jittered(1.0, b.threshold_mismatch, rng);
        let gain_off = jittered(1.0, b.threshold_mismatch, rng);
        Self {
            b,
            reference: 0.0,
            level: 0.0,
            blind_until: f64::NEG_INFINITY,
            pending: false,
            gain_on,
            gain_off,
            th_on: jittered(b.theta_on * gain_on, b.threshold_jitter, rng),
            th_off: jittered(b.theta_off * gain_off, b.threshold_jitter, rng),
        }
    }

    /// Drive toward `target` over `[s0, s1)` from the current level.
    fn segment(&mut self, s0: f64, s1: f64, target: f64, rng: &mut ChaCha8Rng, emit: &mut impl FnMut(f64, i8)) {
        let tau = self.b.tau_lp_us;
        let l0 = self.level;
        let at = |t: f64| {
            if tau <= 0.0 {
                target
            } else {
                target + (l0 - target) * (-(t - s0) / tau).exp()
            }
        };
        // First time >= `from` at which the response reaches `goal`.
        let reach = |goal: f64, from: f64| {
            if tau <= 0.0 {
                return from;
            }
            let r = (goal - target) / (l0 - target);
            (s0 - tau * r.ln()).max(from)
        };
        let mut cursor = s0;
        loop {
            if self.pending {
                if self.blind_until >= s1 {
                    break;
                }
                cursor = cursor.max(self.blind_until);
                self.reference = at(cursor);
                self.pending = false;
            }
            let now = at(cursor);
            let up = self.reference + self.th_on;
            let down = self.reference - self.th_off;
            let (t, p, crossed) = if now >= up {
                (cursor, 1, up)
            } else if now <= down {
                (cursor, -1, down)
            } else if target > up {
                (reach(up, cursor), 1, up)
            } else if target < down {
                (reach(down, cursor), -1, down)
            } else {
                break;
            };
            if t >= s1 {
                break;
            }
            emit(t, p);
            if self.b.p_double > 0.0 && rng.random::<f64>() < self.b.p_double {
                emit(t + self.b.refractory_us.max(1.0), p);
            }
            self.reference = crossed;
            if p > 0 {
                self.th_on = jittered(self.b.theta_on * self.gain_on, self.b.threshold_jitter, rng);
            } else {
                self.th_off = jittered(self.b.theta_off * self.gain_off, self.b.threshold_jitter, rng);
            }
            if self.b.refractory_us > 0.0 {
                self.pending = true;
                self.blind_until = t + self.b.refractory_us;
            }
            cursor = t;
        }
        self.level = at(s1);
    }
}

fn jittered(theta: f64, jitter: f64, rng: &mut ChaCha8Rng) -> f64 {
    if jitter <= 0.0 {
        return theta;
    }
    let z: f64 = rng.sample(StandardNormal);
    theta * (1.0 + jitter * z).max(0.05)
}

/// Events of a static LED scene, sorted by `(t, y, x, p)`.
pub fn simulate_led_events(scene: &LedScene, camera: &SimCamera, seed: u64) -> Result<EventStream, SynthError> {
    camera.validate()?;
    scene.validate()?;
    if camera.width != scene.width || camera.height != scene.height {
        return Err(SynthError::SensorMismatch);
    }
    let t_end = scene.duration_us();
    let mut events = Vec::new();
    for (x, y, k, c) in scene.pixels() {
        let s = &scene.spots[k];
        let mut rng = pixel_rng(seed, u64::from(y) * u64::from(scene.width) + u64::from(x));
        simulate_pixel(&camera.behavior, s.period_us(), s.on_us(), t_end, |_| c, &mut rng, &mut |t, p| {
            events.push(Event::new(x, y, t, p))
        });
    }
    events.sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    Ok(EventStream::new(scene.width, scene.height, events))
}

/// Autotune cost of `behavior` on `scene`. Only the patch pixels are
/// simulated; the result equals
/// `total_cost(&simulate_led_events(scene, camera, seed)?, &scene.tuning_scene())`.
pub fn led_tuning_cost(scene: &LedScene, behavior: &Behavior, seed: u64) -> Result<f64, SynthError> {
    behavior.validate()?;
    scene.validate()?;
    let ts = scene.tuning_scene();
    let t_end = scene.duration_us();
    let mut counts = Vec::with_capacity(scene.spots.len());
    for (k, s) in scene.spots.iter().enumerate() {
        let mut patch = [(0u64, 0u64); 9];
        for (i, (x, y)) in ts.patch_pixels(k).into_iter().enumerate() {
            let c = pixel_level(spot_coverage(x as f64, y as f64, s.center, s.radius_px), s.contrast);
            let mut rng = pixel_rng(seed, u64::from(y) * u64::from(scene.width) + u64::from(x));
            let n = &mut patch[i];
            simulate_pixel(behavior, s.period_us(), s.on_us(), t_end, |_| c, &mut rng, &mut |_, p| {
                if p > 0 {
                    n.0 += 1
                } else {
                    n.1 += 1
                }
            });
        }
        counts.push(patch);
    }
    Ok(cost_from_counts(&counts, &ts, ALPHA0))
}
