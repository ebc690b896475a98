use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::led::{pixel_level, pixel_rng, simulate_pixel, spot_coverage};
use super::{SimCamera, SynthError};
use crate::linalg::{exp_so3, log_so3, mat_mul, scale, transpose};
use crate::mocap::{CameraModel, MarkerConfig, Pose};
use crate::{Event, EventStream};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimedPose {
    pub t_us: u64,
    pub pose: Pose,
}

/// Appearance of every marker spot.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SpotStyle {
    pub radius_px: f64,
    pub contrast: f64,
    /// Spurious events are simulated this far beyond the rim, px.
    pub noise_margin_px: f64,
}

impl Default for SpotStyle {
    fn default() -> Self {
        Self {
            radius_px: 2.5,
            contrast: 1.1,
            noise_margin_px: 2.0,
        }
    }
}

/// Pose at `t_us`, linear in translation and geodesic in rotation between
/// the bracketing samples, held constant outside them. `poses` must be
/// sorted by time and non-empty.
pub fn pose_at(poses: &[TimedPose], t_us: f64) -> Pose {
    let i = poses.partition_point(|p| (p.t_us as f64) <= t_us);
    if i == 0 {
        return poses[0].pose;
    }
    if i == poses.len() {
        return poses[i - 1].pose;
    }
    let (a, b) = (&poses[i - 1], &poses[i]);
    let s = (t_us - a.t_us as f64) / (b.t_us - a.t_us) as f64;
    let d = log_so3(&mat_mul(&transpose(&a.pose.rotation), &b.pose.rotation));
    let r = mat_mul(&a.pose.rotation, &exp_so3(scale(d, s)));
    let ta = a.pose.translation;
    let tb = b.pose.translation;
    Pose::new(r, core::array::from_fn(|k| ta[k] + s * (tb[k] - ta[k])))
}

/// Events of markers blinking while the target follows `poses`.
///
/// Cycle `k` of a marker starts at `k / f` and uses the pose of that
/// instant; the spot keeps its position through the cycle. Spots are
/// simulated per marker, so overlapping spots fire independently. The
/// stream spans `[0, last pose time)`; markers are dark before the first
/// pose. Returns the stream and the ground-truth poses.
pub fn simulate_trajectory(
    markers: &MarkerConfig,
    camera: &CameraModel,
    sensor: &SimCamera,
    poses: &[TimedPose],
    style: &SpotStyle,
    seed: u64,
) -> Result<(EventStream, Vec<TimedPose>), SynthError> {
    markers.validate()?;
    camera.validate()?;
    sensor.validate()?;
    if camera.width != sensor.width || camera.height != sensor.height {
        return Err(SynthError::SensorMismatch);
    }
    if poses.is_empty() || poses.windows(2).any(|w| w[1].t_us <= w[0].t_us) {
        return Err(SynthError::InvalidTrajectory);
    }
    if !(style.radius_px > 0.0 && style.contrast > 0.0 && style.noise_margin_px >= 0.0) {
        return Err(SynthError::InvalidSpot { index: 0 });
    }
    let t_first = poses[0].t_us as f64;
    let t_end = poses[poses.len() - 1].t_us;
    if t_end == 0 {
        return Err(SynthError::NonPositiveDuration);
    }
    let reach = style.radius_px + style.noise_margin_px;
    let (w, h) = (f64::from(sensor.width), f64::from(sensor.height));

    let mut events = Vec::new();
    for (mi, m) in markers.markers.iter().enumerate() {
        let period = 1e6 / m.freq;
        let cycles = (t_end as f64 / period).ceil() as u64;
        // Pixel -> (cycle, level) in cycle order.
        let mut touched: BTreeMap<(u16, u16), Vec<(u64, f64)>> = BTreeMap::new();
        for k in 0..cycles {
            let t = k as f64 * period;
            if t < t_first {
                continue;
            }
            let pose = pose_at(poses, t);
            let t_us = t as u64;
            let c = camera
                .project(pose.transform(m.position))
                .map_err(|_| SynthError::MarkerBehindCamera { id: m.id, t_us })?;
            if !(c[0] - reach >= -0.5 && c[1] - reach >= -0.5 && c[0] + reach <= w - 0.5 && c[1] + reach <= h - 0.5) {
                return Err(SynthError::MarkerOutsideFrame { id: m.id, t_us });
            }
            let x0 = (c[0] - reach).round() as u16;
            let x1 = (c[0] + reach).round() as u16;
            let y0 = (c[1] - reach).round() as u16;
            let y1 = (c[1] + reach).round() as u16;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let a = spot_coverage(f64::from(x), f64::from(y), c, style.radius_px);
                    let entry = touched.entry((y, x)).or_default();
                    if a > 0.0 {
                        entry.push((k, pixel_level(a, style.contrast)));
                    }
                }
            }
        }
        for ((y, x), levels) in touched {
            let index = ((mi as u64) << 40) | (u64::from(y) * u64::from(sensor.width) + u64::from(x));
            let mut rng = pixel_rng(seed, index);
            let level = |k: u64| match levels.binary_search_by_key(&k, |e| e.0) {
                Ok(i) => levels[i].1,
                Err(_) => 0.0,
            };
            simulate_pixel(&sensor.behavior, period, m.duty * period, t_end, level, &mut rng, &mut |t, p| {
                events.push(Event::new(x, y, t, p))
            });
        }
    }
    events.sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    Ok((EventStream::new(sensor.width, sensor.height, events), poses.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rotation_angle, IDENTITY3};

    #[test]
    fn interpolation_midpoint() {
        let a = TimedPose {
            t_us: 0,
            pose: Pose::new(IDENTITY3, [0.0, 0.0, 1.0]),
        };
        let b = TimedPose {
            t_us: 100,
            pose: Pose::new(exp_so3([0.0, 0.0, 0.4]), [0.2, 0.0, 1.0]),
        };
        let m = pose_at(&[a, b], 50.0);
        assert!((m.translation[0] - 0.1).abs() < 1e-12);
        assert!((rotation_angle(&m.rotation) - 0.2).abs() < 1e-12);
        assert_eq!(pose_at(&[a, b], -5.0), a.pose);
        assert_eq!(pose_at(&[a, b], 500.0), b.pose);
    }
}
