#[allow(unused_imports)]
use num_traits::Float;

use super::SynthError;
use crate::autotune::BiasVector;

/// Pixel-level behavior of the simulated sensor.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Behavior {
    /// ON contrast threshold in log-intensity units.
    pub theta_on: f64,
    /// OFF contrast threshold in log-intensity units.
    pub theta_off: f64,
    /// Dead time after each event, µs. The reference level is re-sampled
    /// when the pixel comes back.
    pub refractory_us: f64,
    /// Photoreceptor low-pass time constant, µs.
    pub tau_lp_us: f64,
    /// Spurious events per second and pixel, split evenly by polarity.
    pub noise_rate_hz: f64,
    /// Probability of a false repeat of each signal event.
    pub p_double: f64,
    /// Relative standard deviation of the per-event threshold.
    pub threshold_jitter: f64,
    /// Relative standard deviation of each pixel's fixed threshold gain.
    pub threshold_mismatch: f64,
}

impl Behavior {
    /// One event per threshold crossing and nothing else.
    pub const IDEAL: Behavior = Behavior {
        theta_on: 0.7,
        theta_off: 0.7,
        refractory_us: 0.0,
        tau_lp_us: 0.0,
        noise_rate_hz: 0.0,
        p_double: 0.0,
        threshold_jitter: 0.0,
        threshold_mismatch: 0.0,
    };

    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = self.theta_on.is_finite()
            && self.theta_on > 0.0
            && self.theta_off.is_finite()
            && self.theta_off > 0.0
            && self.refractory_us.is_finite()
            && self.refractory_us >= 0.0
            && self.tau_lp_us.is_finite()
            && self.tau_lp_us >= 0.0
            && self.noise_rate_hz.is_finite()
            && self.noise_rate_hz >= 0.0
            && (0.0..=1.0).contains(&self.p_double)
            && (0.0..0.5).contains(&self.threshold_jitter)
            && (0.0..0.5).contains(&self.threshold_mismatch);
        if ok {
            Ok(())
        } else {
            Err(SynthError::InvalidBehavior)
        }
    }
}

/// Relative threshold jitter of the biased sensor.
pub const BIASED_JITTER: f64 = 0.03;
/// Relative pixel-to-pixel threshold spread of the biased sensor.
pub const BIASED_MISMATCH: f64 = 0.15;

/// Map sensor biases to pixel behavior.
///
/// - `theta_on = 0.7 · exp((diff_on − 530)/200)`
/// - `theta_off = 0.7 · exp((diff_off − 175)/100)`
/// - `tau_lp = 3 · exp((bias_fo − 1700)/100) · exp((1500 − bias_pr)/250)` µs
/// - `refractory = exp((bias_refr − 1500)/100)` µs
/// - `noise = 100 · exp((1500 − bias_hpf)/100) · exp((0.5 − θ_min)/0.08) / tau_lp` Hz
/// - `p_double = min(0.95, 0.1 · exp((1500 − bias_refr)/120) · exp((0.5 − θ_min)/0.05))`
///
/// with `θ_min` the smaller threshold. Every output is continuous and
/// monotone in each bias.
pub fn biased_behavior(bias: &BiasVector) -> Behavior {
    let e = |x: f64| x.exp();
    let theta_on = 0.7 * e((bias.diff_on - 530.0) / 200.0);
    let theta_off = 0.7 * e((bias.diff_off - 175.0) / 100.0);
    let theta_min = theta_on.min(theta_off);
    let tau_lp_us = 3.0 * e((bias.bias_fo - 1700.0) / 100.0) * e((1500.0 - bias.bias_pr) / 250.0);
    Behavior {
        theta_on,
        theta_off,
        refractory_us: e((bias.bias_refr - 1500.0) / 100.0),
        tau_lp_us,
        noise_rate_hz: 100.0 * e((1500.0 - bias.bias_hpf) / 100.0) * e((0.5 - theta_min) / 0.08) / tau_lp_us,
        p_double: (0.1 * e((1500.0 - bias.bias_refr) / 120.0) * e((0.5 - theta_min) / 0.05)).min(0.95),
        threshold_jitter: BIASED_JITTER,
        threshold_mismatch: BIASED_MISMATCH,
    }
}

/// A simulated sensor.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimCamera {
    pub width: u32,
    pub height: u32,
    pub behavior: Behavior,
}

impl SimCamera {
    pub fn new(width: u32, height: u32, behavior: Behavior) -> Self {
        Self {
            width,
            height,
            behavior,
        }
    }

    pub fn from_bias(width: u32, height: u32, bias: &BiasVector) -> Self {
        Self::new(width, height, biased_behavior(bias))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 || self.width > 1 << 16 || self.height > 1 << 16 {
            return Err(SynthError::InvalidSensor {
                width: self.width,
                height: self.height,
            });
        }
        self.behavior.validate()
    }
}
