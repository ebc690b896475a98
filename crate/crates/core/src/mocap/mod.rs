//! Blinking-LED motion capture.
//!
//! Events feed a signed delta-time volume ([`Sdtv`]). Each full pixel stack
//! yields a blink period, which is matched against the configured marker
//! frequencies; labeled pixels are clustered into [`Detection`]s, tracked
//! with one particle filter per marker and turned into a [`Pose`] by PnP.

mod camera;
mod detect;
mod noise;
mod period;
mod pipeline;
mod pnp;
mod sdtv;
mod tracker;

pub use camera::{Behind, CameraKind, CameraModel};
pub use detect::{
    cluster_detections, detect_markers, detect_markers_with, DetectOptions, reference_markers, Detection, LabelImage, Marker, MarkerConfig,
    REFERENCE_LAYOUT, REFERENCE_LEDS,
};
pub use noise::{loglog_slope, pose_noise_analysis, simulate_static_poses, PoseNoise, MIN_NOISE_SAMPLES};
pub use period::{estimate_period, periods};
pub use pipeline::{MocapPipeline, PipelineConfig, PipelineStep};
pub use pnp::{axis_rotations, reprojection_rmse, solve_pnp, solve_pnp_with, PnpOptions, PnpSolution, Pose};
pub use sdtv::{Sdtv, DEFAULT_DEPTH, MAX_DELTA};
pub use tracker::{CentroidTracker, ParticleFilter, TrackedCentroid, TrackerConfig};

/// Default relative frequency tolerance for marker labeling.
pub const DEFAULT_REL_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MocapError {
    #[error("need at least 4 markers, got {n}")]
    TooFewMarkers { n: usize },
    #[error("marker {id}: frequency and duty cycle must lie in (0, inf) and (0, 1)")]
    InvalidMarker { id: u32 },
    #[error("duplicate marker id {id}")]
    DuplicateId { id: u32 },
    #[error("duplicate marker frequency {freq} Hz")]
    DuplicateFrequency { freq: f64 },
    #[error("marker frequencies span a factor {ratio:.3}, must stay below 2")]
    FrequencyAliasing { ratio: f64 },
    #[error("tolerance {rel_tol} must lie in (0, {max:.4}) so frequency bands stay apart")]
    ToleranceOverlap { rel_tol: f64, max: f64 },
    #[error("invalid camera intrinsics")]
    InvalidCamera,
    #[error("pixel ({u}, {v}) is outside the camera model's valid region")]
    OutsideImageDomain { u: f64, v: f64 },
    #[error("{points} points but {pixels} pixels")]
    LengthMismatch { points: usize, pixels: usize },
    #[error("PnP needs at least 4 correspondences, got {n}")]
    TooFewCorrespondences { n: usize },
    #[error("correspondences are collinear")]
    DegenerateGeometry,
    #[error("pose estimation failed after {seeds} seeds: {reason}")]
    EstimationFailed { seeds: usize, reason: &'static str },
    #[error("need at least {need} samples, got {have}")]
    InsufficientSamples { need: usize, have: usize },
    #[error("a marker projects behind the camera")]
    MarkerBehindCamera,
    #[error("invalid noise level")]
    InvalidNoise,
    #[error("invalid pipeline settings")]
    InvalidPipeline,
}
