use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{fft_in_place, DisturbanceError};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct WelchConfig {
    /// Samples per segment; a power of two.
    pub segment: usize,
    /// Samples shared by consecutive segments.
    pub overlap: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment: 1024,
            overlap: 512,
        }
    }
}

/// One-sided power spectral density, units²/Hz, at `freqs` (0 to Nyquist).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub segments: usize,
}

impl Psd {
    pub fn df(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Integrated power, which equals the variance of a stationary input.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.df()
    }
}

/// Welch estimate: mean-removed Hann-windowed segments, averaged
/// periodograms, one-sided density scaling.
pub fn welch_psd(signal: &[f64], fs: f64, cfg: &WelchConfig) -> Result<Psd, DisturbanceError> {
    let n = cfg.segment;
    if n < 8 || !n.is_power_of_two() {
        return Err(DisturbanceError::BadSegment(n));
    }
    if cfg.overlap >= n {
        return Err(DisturbanceError::BadOverlap);
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(DisturbanceError::BadSampleRate);
    }
    if signal.len() < 2 * n {
        return Err(DisturbanceError::InsufficientData {
            need: 2 * n,
            got: signal.len(),
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(DisturbanceError::NonFinite);
    }
    // Periodic Hann.
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * core::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let u: f64 = window.iter().map(|w| w * w).sum();
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    let hop = n - cfg.overlap;
    let mut segments = 0;
    let mut start = 0;
    while start + n <= signal.len() {
        let seg = &signal[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for i in 0..n {
            re[i] = (seg[i] - mean) * window[i];
            im[i] = 0.0;
        }
        fft_in_place(&mut re, &mut im);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += re[k] * re[k] + im[k] * im[k];
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (fs * u * segments as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    Ok(Psd { freqs, power, segments })
}

/// Mean of `power` over `bands` equal slices of the bins `1..len-1`
/// (DC and Nyquist excluded), with the bin count of each slice.
pub fn band_means(power: &[f64], bands: usize) -> Vec<(f64, usize)> {
    let inner = &power[1..power.len().saturating_sub(1).max(1)];
    let bands = bands.clamp(1, inner.len().max(1));
    (0..bands)
        .map(|b| {
            let lo = b * inner.len() / bands;
            let hi = (b + 1) * inner.len() / bands;
            let s = &inner[lo..hi];
            (s.iter().sum::<f64>() / s.len().max(1) as f64, s.len())
        })
        .collect()
}
