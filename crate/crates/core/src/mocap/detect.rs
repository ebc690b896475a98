use alloc::vec;
use alloc::vec::Vec;

use super::{estimate_period, MocapError, Sdtv};
use crate::linalg::Vec3;

/// One blinking marker on the rigid body.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Marker {
    pub id: u32,
    /// Body-frame position in meters.
    #[cfg_attr(feature = "serde", serde(rename = "xyz_m"))]
    pub position: Vec3,
    #[cfg_attr(feature = "serde", serde(rename = "freq_hz"))]
    pub freq: f64,
    /// On-fraction of the period.
    pub duty: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct MarkerConfig {
    pub markers: Vec<Marker>,
}

impl MarkerConfig {
    pub fn new(markers: Vec<Marker>) -> Result<Self, MocapError> {
        let cfg = Self { markers };
        cfg.validate()?;
        Ok(cfg)
    }

    /// At least four markers, distinct positive frequencies within a factor
    /// of two, unique ids and duty cycles in (0, 1).
    pub fn validate(&self) -> Result<(), MocapError> {
        let m = &self.markers;
        if m.len() < 4 {
            return Err(MocapError::TooFewMarkers { n: m.len() });
        }
        for (i, a) in m.iter().enumerate() {
            if !(a.freq > 0.0) || !(a.duty > 0.0 && a.duty < 1.0) {
                return Err(MocapError::InvalidMarker { id: a.id });
            }
            for b in &m[i + 1..] {
                if a.id == b.id {
                    return Err(MocapError::DuplicateId { id: a.id });
                }
                if a.freq == b.freq {
                    return Err(MocapError::DuplicateFrequency { freq: a.freq });
                }
            }
        }
        let (lo, hi) = self.freq_range();
        if hi / lo >= 2.0 {
            return Err(MocapError::FrequencyAliasing { ratio: hi / lo });
        }
        Ok(())
    }

    fn freq_range(&self) -> (f64, f64) {
        self.markers
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m.freq), hi.max(m.freq)))
    }

    /// Smallest `|f_i - f_j| / max(f_i, f_j)` over marker pairs.
    pub fn min_relative_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for (i, a) in self.markers.iter().enumerate() {
            for b in &self.markers[i + 1..] {
                g = g.min((a.freq - b.freq).abs() / a.freq.max(b.freq));
            }
        }
        g
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.markers.iter().position(|m| m.id == id)
    }

    /// Tolerances must be positive and small enough that no configured
    /// frequency falls inside another marker's band.
    pub fn check_tolerance(&self, rel_tol: f64) -> Result<(), MocapError> {
        let max = self.min_relative_gap();
        if !(rel_tol > 0.0) || rel_tol >= max {
            return Err(MocapError::ToleranceOverlap { rel_tol, max });
        }
        Ok(())
    }

    /// Marker index whose band `|f - f_k| <= rel_tol·f_k` contains `freq`.
    /// Where two bands meet the relatively nearer frequency wins.
    pub fn classify(&self, freq: f64, rel_tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, m) in self.markers.iter().enumerate() {
            let rel = (freq - m.freq).abs() / m.freq;
            if rel <= rel_tol && best.is_none_or(|(_, r)| rel < r) {
                best = Some((k, rel));
            }
        }
        best.map(|(k, _)| k)
    }
}

/// Per-pixel marker indices, `None` where no marker matched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Option<u16>>,
}

impl LabelImage {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![None; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<u16> {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: Option<u16>) {
        self.labels[y * self.width + x] = label;
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Label every full-stack pixel whose blink frequency matches a marker.
pub fn detect_markers(sdtv: &Sdtv, cfg: &MarkerConfig, rel_tol: f64) -> Result<LabelImage, MocapError> {
    detect_markers_with(
        sdtv,
        cfg,
        &DetectOptions {
            rel_tol,
            ..DetectOptions::full_stack(sdtv.depth())
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectOptions {
    pub rel_tol: f64,
    /// Pixels with fewer stored deltas are skipped.
    pub min_deltas: usize,
    /// Pixels whose last event is older than this are skipped. A moving
    /// spot leaves filled stacks behind.
    pub since: u64,
}

impl DetectOptions {
    pub fn full_stack(depth: usize) -> Self {
        Self {
            rel_tol: super::DEFAULT_REL_TOL,
            min_deltas: depth,
            since: 0,
        }
    }
}

pub fn detect_markers_with(sdtv: &Sdtv, cfg: &MarkerConfig, opts: &DetectOptions) -> Result<LabelImage, MocapError> {
    cfg.validate()?;
    cfg.check_tolerance(opts.rel_tol)?;
    let mut out = LabelImage::empty(sdtv.width(), sdtv.height());
    let mut buf = Vec::with_capacity(sdtv.depth());
    let need = opts.min_deltas.clamp(1, sdtv.depth());
    for y in 0..sdtv.height() {
        for x in 0..sdtv.width() {
            if sdtv.len_at(x, y) < need || sdtv.last_t(x, y) < opts.since {
                continue;
            }
            sdtv.stack_into(x, y, &mut buf);
            if let Some(p) = estimate_period(&buf) {
                let k = cfg.classify(1e6 / p, opts.rel_tol);
                out.set(x, y, k.map(|k| k as u16));
            }
        }
    }
    Ok(out)
}

/// A marker observation in one image.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub id: u32,
    /// Subpixel centroid `(u, v)`.
    pub centroid: [f64; 2],
    pub support: usize,
    pub t: u64,
}

/// 8-connected components per label; for each label the largest component
/// becomes a detection at its mean pixel coordinate. Output is ordered by
/// marker index.
pub fn cluster_detections(labels: &LabelImage, cfg: &MarkerConfig, t: u64) -> Vec<Detection> {
    let (w, h) = (labels.width, labels.height);
    let mut seen = vec![false; w * h];
    // (size, sum_x, sum_y) of the best component per marker index.
    let mut best: Vec<Option<(usize, f64, f64)>> = vec![None; cfg.markers.len()];
    let mut stack = Vec::new();
    for start in 0..w * h {
        let Some(label) = labels.labels[start] else {
            continue;
        };
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            n += 1;
            sx += x as f64;
            sy += y as f64;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && labels.labels[j] == Some(label) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let slot = &mut best[label as usize];
        if slot.is_none_or(|(m, _, _)| n > m) {
            *slot = Some((n, sx, sy));
        }
    }
    best.iter()
        .enumerate()
        .filter_map(|(k, b)| {
            b.map(|(n, sx, sy)| Detection {
                id: cfg.markers[k].id,
                centroid: [sx / n as f64, sy / n as f64],
                support: n,
                t,
            })
        })
        .collect()
}

/// Measured frequencies and duty cycles of the five reference LEDs.
pub const REFERENCE_LEDS: [(f64, f64); 5] = [
    (1730.0, 0.0066),
    (1980.0, 0.0075),
    (2290.0, 0.0087),
    (2610.0, 0.0099),
    (2860.0, 0.0109),
];

/// Default body layout: four markers on ±7 cm arms and one raised marker.
pub const REFERENCE_LAYOUT: [Vec3; 5] = [
    [0.07, 0.0, 0.0],
    [0.0, 0.07, 0.0],
    [-0.07, 0.0, 0.0],
    [0.0, -0.07, 0.0],
    [0.0, 0.03, -0.04],
];

/// The reference LEDs on the default layout, ids 0..5.
pub fn reference_markers() -> MarkerConfig {
    MarkerConfig {
        markers: REFERENCE_LEDS
            .iter()
            .zip(REFERENCE_LAYOUT.iter())
            .enumerate()
            .map(|(i, (&(freq, duty), &position))| Marker {
                id: i as u32,
                position,
                freq,
                duty,
            })
            .collect(),
    }
}
