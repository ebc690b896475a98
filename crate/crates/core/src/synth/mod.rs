//! Deterministic synthetic scenes.
//!
//! A [`SimCamera`] turns log-intensity changes into events according to a
//! [`Behavior`], which [`biased_behavior`] derives from sensor biases. On
//! top of it sit three scene generators: static blinking LEDs
//! ([`simulate_led_events`]), advected smoke in a lightsheet
//! ([`simulate_smoke_events`]) and markers moving along a pose trajectory
//! ([`simulate_trajectory`]). Every generator is a pure function of its
//! spec and seed; each pixel draws from its own ChaCha stream.

mod camera;
mod flow;
mod led;
mod smoke;
mod trajectory;

pub use camera::{biased_behavior, Behavior, SimCamera, BIASED_JITTER, BIASED_MISMATCH};
pub use led::{
    led_tuning_cost, pixel_level, reference_led_scene, simulate_led_events, spot_coverage, LedScene, LedSpot,
};

pub use flow::{FlowFieldSpec, FlowKind, Sense, MAX_SPEED_MPS, PIPE_RADIUS_M};
pub use smoke::{simulate_smoke_events, SmokeSceneSpec, SmokeTruth};
pub use trajectory::{pose_at, simulate_trajectory, SpotStyle, TimedPose};

use crate::autotune::AutotuneError;
use crate::mocap::MocapError;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid camera behavior: thresholds must be positive, probabilities in [0, 1]")]
    InvalidBehavior,
    #[error("invalid sensor size {width}x{height}")]
    InvalidSensor { width: u32, height: u32 },
    #[error("camera and scene sizes differ")]
    SensorMismatch,
    #[error("duration must be positive")]
    NonPositiveDuration,
    #[error("spot {index} has invalid frequency, duty, contrast or radius")]
    InvalidSpot { index: usize },
    #[error("spot {index} does not fit inside the frame")]
    SpotOutsideFrame { index: usize },
    #[error("spots {a} and {b} overlap")]
    OverlappingSpots { a: usize, b: usize },
    #[error("invalid flow field: {0}")]
    InvalidFlow(&'static str),
    #[error("flow reaches {speed:.2} m/s inside the pipe, above the 6 m/s limit")]
    FlowTooFast { speed: f64 },
    #[error("invalid smoke scene: counts, sizes, intensities and times must be positive")]
    InvalidSmoke,
    #[error("trajectory must be non-empty with strictly increasing timestamps")]
    InvalidTrajectory,
    #[error("marker {id} leaves the frame at t = {t_us} us")]
    MarkerOutsideFrame { id: u32, t_us: u64 },
    #[error("marker {id} is behind the camera at t = {t_us} us")]
    MarkerBehindCamera { id: u32, t_us: u64 },
    #[error(transparent)]
    Scene(#[from] AutotuneError),
    #[error(transparent)]
    Mocap(#[from] MocapError),
}
