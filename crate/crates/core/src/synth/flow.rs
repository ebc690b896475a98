#[allow(unused_imports)]
use num_traits::Float;

use super::SynthError;

/// Inner radius of the pipe cross-section, m.
pub const PIPE_RADIUS_M: f64 = 0.19;
/// Highest flow speed a preset may reach anywhere in the pipe, m/s.
pub const MAX_SPEED_MPS: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Sense {
    Cw,
    Ccw,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Ccw => 1.0,
            Sense::Cw => -1.0,
        }
    }
}

/// Kinematic flow presets in the pipe cross-section. `y` points right and
/// `z` up, both in meters from the pipe axis.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum FlowKind {
    /// Constant velocity, m/s.
    Uniform { vy: f64, vz: f64 },
    /// Solid-body rotation at `omega` rad/s about `center`.
    Vortex { center: [f64; 2], omega: f64, sense: Sense },
    /// Two counter-rotating Rankine vortices centered at `y = ∓R/2`, the
    /// left one counter-clockwise. Sizes are core radii in meters; the peak
    /// speed of each is `speed`.
    DualVortex { left_size: f64, right_size: f64, speed: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowFieldSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: FlowKind,
    /// Multiplies every velocity.
    #[cfg_attr(feature = "serde", serde(default = "unit_scale"))]
    pub speed_scale: f64,
}

#[cfg(feature = "serde")]
fn unit_scale() -> f64 {
    1.0
}

impl FlowFieldSpec {
    pub fn new(kind: FlowKind) -> Self {
        Self { kind, speed_scale: 1.0 }
    }

    pub fn uniform(vy: f64, vz: f64) -> Self {
        Self::new(FlowKind::Uniform { vy, vz })
    }

    /// Velocity `(vy, vz)` in m/s at `(y, z)`. The presets are steady; `t`
    /// is accepted so samplers share one signature.
    pub fn velocity(&self, y: f64, z: f64, _t: f64) -> (f64, f64) {
        let (vy, vz) = match self.kind {
            FlowKind::Uniform { vy, vz } => (vy, vz),
            FlowKind::Vortex { center, omega, sense } => {
                let w = omega * sense.sign();
                (-w * (z - center[1]), w * (y - center[0]))
            }
            FlowKind::DualVortex {
                left_size,
                right_size,
                speed,
            } => {
                let (ay, az) = rankine(y + PIPE_RADIUS_M / 2.0, z, left_size, speed);
                let (by, bz) = rankine(y - PIPE_RADIUS_M / 2.0, z, right_size, speed);
                (ay - by, az - bz)
            }
        };
        (vy * self.speed_scale, vz * self.speed_scale)
    }

    /// Largest speed on a grid over the pipe disk.
    pub fn max_speed(&self) -> f64 {
        let n = 60;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let y = PIPE_RADIUS_M * (2.0 * i as f64 / n as f64 - 1.0);
                let z = PIPE_RADIUS_M * (2.0 * j as f64 / n as f64 - 1.0);
                if y * y + z * z <= PIPE_RADIUS_M * PIPE_RADIUS_M {
                    let (vy, vz) = self.velocity(y, z, 0.0);
                    m = m.max((vy * vy + vz * vz).sqrt());
                }
            }
        }
        m
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let finite = match self.kind {
            FlowKind::Uniform { vy, vz } => vy.is_finite() && vz.is_finite(),
            FlowKind::Vortex { center, omega, .. } => center.iter().all(|c| c.is_finite()) && omega.is_finite(),
            FlowKind::DualVortex {
                left_size,
                right_size,
                speed,
            } => left_size > 0.0 && right_size > 0.0 && speed.is_finite() && left_size.is_finite() && right_size.is_finite(),
        };
        if !finite || !(self.speed_scale.is_finite() && self.speed_scale >= 0.0) {
            return Err(SynthError::InvalidFlow("non-finite or non-positive parameter"));
        }
        let m = self.max_speed();
        if m > MAX_SPEED_MPS {
            return Err(SynthError::FlowTooFast { speed: m });
        }
        Ok(())
    }
}

/// Counter-clockwise Rankine vortex of core radius `a` and peak speed `u`.
fn rankine(dy: f64, dz: f64, a: f64, u: f64) -> (f64, f64) {
    let r = (dy * dy + dz * dz).sqrt();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let vt = if r <= a { u * r / a } else { u * a / r };
    (-vt * dz / r, vt * dy / r)
}
