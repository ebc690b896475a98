//! Camera bias autotuning.
//!
//! A static scene of blinking markers should make every pixel of each
//! marker's 3×3 center patch fire exactly once per brightness transition.
//! [`event_ratio`] measures the per-polarity excess, [`pixel_cost`]
//! penalizes missing events four times harder than extra ones and
//! [`total_cost`] sums it over all patches. [`pso_optimize`] searches the
//! bias box for the minimum.

mod pso;

use alloc::vec;
use alloc::vec::Vec;

use crate::event::EventStream;

pub use pso::{pso_optimize, pso_optimize_batch, PsoConfig, PsoResult};

/// Upper edge of the cost-free band for positive event ratios.
pub const ALPHA0: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AutotuneError {
    #[error("max_iters must be positive")]
    ZeroIterations,
    #[error("particle count must be positive")]
    ZeroParticles,
    #[error("bounds of parameter {index} are empty or not finite")]
    DegenerateBounds { index: usize },
    #[error("expected {expected} dimensions, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective returned {got} costs for {expected} particles")]
    BatchSize { expected: usize, got: usize },
    #[error("tuning scene has no markers")]
    NoMarkers,
    #[error("capture duration and marker frequencies must be positive")]
    NonPositiveTiming,
    #[error("patch of marker {index} at ({x}, {y}) leaves the {width}x{height} frame")]
    PatchOutsideFrame {
        index: usize,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("patches of markers {a} and {b} overlap")]
    OverlappingPatches { a: usize, b: usize },
}

/// The six tunable biases in the order `diff_off, diff_on, bias_fo,
/// bias_hpf, bias_pr, bias_refr`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasVector {
    pub diff_off: f64,
    pub diff_on: f64,
    pub bias_fo: f64,
    pub bias_hpf: f64,
    pub bias_pr: f64,
    pub bias_refr: f64,
}

pub const BIAS_NAMES: [&str; 6] = ["diff_off", "diff_on", "bias_fo", "bias_hpf", "bias_pr", "bias_refr"];

/// Factory biases of the Gen3 sensor.
pub const FACTORY_BIAS: BiasVector = BiasVector {
    diff_off: 225.0,
    diff_on: 375.0,
    bias_fo: 1725.0,
    bias_hpf: 1500.0,
    bias_pr: 1500.0,
    bias_refr: 1500.0,
};

/// Biases reported after tuning the real sensor on its marker scene.
pub const TUNED_BIAS: BiasVector = BiasVector {
    diff_off: 176.0,
    diff_on: 529.0,
    bias_fo: 1665.0,
    bias_hpf: 1724.0,
    bias_pr: 1768.0,
    bias_refr: 1538.0,
};

impl BiasVector {
    pub const DIM: usize = 6;

    pub fn to_array(&self) -> [f64; 6] {
        [self.diff_off, self.diff_on, self.bias_fo, self.bias_hpf, self.bias_pr, self.bias_refr]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            diff_off: a[0],
            diff_on: a[1],
            bias_fo: a[2],
            bias_hpf: a[3],
            bias_pr: a[4],
            bias_refr: a[5],
        }
    }

    /// Panics unless `s` has six entries.
    pub fn from_slice(s: &[f64]) -> Self {
        Self::from_array(s.try_into().expect("bias vector has six entries"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bound {
    pub min: f64,
    pub max: f64,
    pub default: f64,
}

impl Bound {
    pub const fn new(min: f64, max: f64, default: f64) -> Self {
        Self { min, max, default }
    }
}

/// Box constraints per bias, plus the starting point.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasBounds {
    pub diff_off: Bound,
    pub diff_on: Bound,
    pub bias_fo: Bound,
    pub bias_hpf: Bound,
    pub bias_pr: Bound,
    pub bias_refr: Bound,
}

impl Default for BiasBounds {
    fn default() -> Self {
        let d = FACTORY_BIAS;
        Self {
            diff_off: Bound::new(100.0, 400.0, d.diff_off),
            diff_on: Bound::new(200.0, 700.0, d.diff_on),
            bias_fo: Bound::new(1200.0, 1900.0, d.bias_fo),
            bias_hpf: Bound::new(1200.0, 1900.0, d.bias_hpf),
            bias_pr: Bound::new(1200.0, 1900.0, d.bias_pr),
            bias_refr: Bound::new(1200.0, 1900.0, d.bias_refr),
        }
    }
}

impl BiasBounds {
    pub fn as_array(&self) -> [Bound; 6] {
        [self.diff_off, self.diff_on, self.bias_fo, self.bias_hpf, self.bias_pr, self.bias_refr]
    }

    pub fn lower(&self) -> Vec<f64> {
        self.as_array().iter().map(|b| b.min).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.as_array().iter().map(|b| b.max).collect()
    }

    pub fn defaults(&self) -> BiasVector {
        BiasVector::from_array(self.as_array().map(|b| b.default))
    }

    /// Every range must be finite with `min < max` and contain its default.
    pub fn validate(&self) -> Result<(), AutotuneError> {
        for (index, b) in self.as_array().iter().enumerate() {
            let ok = b.min.is_finite() && b.max.is_finite() && b.min < b.max;
            if !ok || !(b.min..=b.max).contains(&b.default) {
                return Err(AutotuneError::DegenerateBounds { index });
            }
        }
        Ok(())
    }

    pub fn contains(&self, v: &BiasVector) -> bool {
        self.as_array()
            .iter()
            .zip(v.to_array())
            .all(|(b, x)| (b.min..=b.max).contains(&x))
    }
}

/// Per-polarity event excess `(α⁺, α⁻)` of one pixel: the count divided by
/// the `t·f` expected transitions, minus one.
pub fn event_ratio(stream: &EventStream, x: u16, y: u16, freq_hz: f64, t_s: f64) -> (f64, f64) {
    let (mut pos, mut neg) = (0u64, 0u64);
    for e in stream.events.iter().filter(|e| e.x == x && e.y == y) {
        if e.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    ratio_from_counts(pos, neg, freq_hz, t_s)
}

#[inline]
pub fn ratio_from_counts(pos: u64, neg: u64, freq_hz: f64, t_s: f64) -> (f64, f64) {
    let n = t_s * freq_hz;
    (pos as f64 / n - 1.0, neg as f64 / n - 1.0)
}

/// Asymmetric per-pixel cost with the default slack band `[0, 0.5]`.
#[inline]
pub fn pixel_cost(alpha: f64) -> f64 {
    pixel_cost_with(alpha, ALPHA0)
}

#[inline]
pub fn pixel_cost_with(alpha: f64, alpha0: f64) -> f64 {
    if alpha < 0.0 {
        4.0 * alpha * alpha
    } else if alpha <= alpha0 {
        0.0
    } else {
        (alpha - alpha0) * (alpha - alpha0)
    }
}

/// A statically placed blinking marker.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenePoint {
    /// Spot center in pixels.
    pub center: [f64; 2],
    pub freq_hz: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TuningScene {
    pub width: u32,
    pub height: u32,
    pub markers: Vec<ScenePoint>,
    /// Capture duration in seconds.
    pub duration_s: f64,
}

impl TuningScene {
    pub fn validate(&self) -> Result<(), AutotuneError> {
        if self.markers.is_empty() {
            return Err(AutotuneError::NoMarkers);
        }
        if !(self.duration_s > 0.0) || self.markers.iter().any(|m| !(m.freq_hz > 0.0)) {
            return Err(AutotuneError::NonPositiveTiming);
        }
        let centers = self.patch_centers();
        for (index, m) in self.markers.iter().enumerate() {
            let [x, y] = m.center;
            let inside = x.is_finite()
                && y.is_finite()
                && x.round() >= 1.0
                && y.round() >= 1.0
                && x.round() + 1.0 < f64::from(self.width)
                && y.round() + 1.0 < f64::from(self.height);
            if !inside {
                return Err(AutotuneError::PatchOutsideFrame {
                    index,
                    x,
                    y,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        for a in 0..centers.len() {
            for b in a + 1..centers.len() {
                let (pa, pb) = (centers[a], centers[b]);
                if pa.0.abs_diff(pb.0) <= 2 && pa.1.abs_diff(pb.1) <= 2 {
                    return Err(AutotuneError::OverlappingPatches { a, b });
                }
            }
        }
        Ok(())
    }

    /// Integer patch center per marker: the pixel containing the spot center.
    pub fn patch_centers(&self) -> Vec<(u16, u16)> {
        self.markers
            .iter()
            .map(|m| (m.center[0].round().max(0.0) as u16, m.center[1].round().max(0.0) as u16))
            .collect()
    }

    /// The 9 pixels of marker `k`'s patch, row-major.
    pub fn patch_pixels(&self, k: usize) -> [(u16, u16); 9] {
        let (cx, cy) = self.patch_centers()[k];
        core::array::from_fn(|i| (cx + (i % 3) as u16 - 1, cy + (i / 3) as u16 - 1))
    }
}

/// Sum of [`pixel_cost`] over both polarities of every patch pixel.
/// `scene` must have passed [`TuningScene::validate`].
pub fn total_cost(stream: &EventStream, scene: &TuningScene) -> f64 {
    total_cost_with(stream, scene, ALPHA0)
}

pub fn total_cost_with(stream: &EventStream, scene: &TuningScene, alpha0: f64) -> f64 {
    let counts = patch_counts(stream, scene);
    cost_from_counts(&counts, scene, alpha0)
}

/// `(positive, negative)` counts per patch pixel, marker-major, in one pass
/// over the stream.
pub fn patch_counts(stream: &EventStream, scene: &TuningScene) -> Vec<[(u64, u64); 9]> {
    let k = scene.markers.len();
    let w = stream.width as usize;
    let mut slot = vec![u32::MAX; w * stream.height as usize];
    for m in 0..k {
        for (i, (x, y)) in scene.patch_pixels(m).into_iter().enumerate() {
            let idx = usize::from(y) * w + usize::from(x);
            if idx < slot.len() {
                slot[idx] = (m * 9 + i) as u32;
            }
        }
    }
    let mut counts = vec![[(0u64, 0u64); 9]; k];
    for e in &stream.events {
        let idx = usize::from(e.y) * w + usize::from(e.x);
        let Some(&s) = slot.get(idx) else { continue };
        if s == u32::MAX || usize::from(e.x) >= w {
            continue;
        }
        let c = &mut counts[s as usize / 9][s as usize % 9];
        if e.is_positive() {
            c.0 += 1;
        } else {
            c.1 += 1;
        }
    }
    counts
}

pub fn cost_from_counts(counts: &[[(u64, u64); 9]], scene: &TuningScene, alpha0: f64) -> f64 {
    let mut j = 0.0;
    for (m, patch) in scene.markers.iter().zip(counts) {
        for &(pos, neg) in patch {
            let (ap, an) = ratio_from_counts(pos, neg, m.freq_hz, scene.duration_s);
            j += pixel_cost_with(ap, alpha0) + pixel_cost_with(an, alpha0);
        }
    }
    j
}
