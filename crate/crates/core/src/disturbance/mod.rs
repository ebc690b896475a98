//! Disturbance-signal modeling.
//!
//! Residual disturbances are summarized by their power spectral density
//! ([`welch_psd`]), fitted with an autoregressive model ([`yule_walker_fit`])
//! and re-synthesized by filtering white noise through it
//! ([`ar_generate`]). The position-dependent mean is a ridge-regressed
//! basis expansion over the pipe cross-section ([`fit_disturbance_map`]).

mod ar;
mod fft;
mod map;
mod psd;

pub use ar::{ar_generate, sample_autocovariance, yule_walker_fit, ArModel, DEFAULT_AR_ORDER};
pub use fft::fft_in_place;
pub use map::{eval_disturbance_map, fit_disturbance_map, Basis, DisturbanceMap, DisturbanceSample, Wrench};
pub use psd::{band_means, welch_psd, Psd, WelchConfig};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DisturbanceError {
    #[error("need at least {need} samples, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("segment length {0} must be a power of two and at least 8")]
    BadSegment(usize),
    #[error("overlap must be smaller than the segment length")]
    BadOverlap,
    #[error("sample rate must be positive and finite")]
    BadSampleRate,
    #[error("model order must be at least 1")]
    ZeroOrder,
    #[error("singular system: the data carry no usable variation")]
    Singular,
    #[error("model is not stationary")]
    NonStationary,
    #[error("innovation variance must be positive and finite")]
    BadVariance,
    #[error("burn-in must be at least {need} samples")]
    BurnInTooShort { need: usize },
    #[error("invalid basis: {0}")]
    BadBasis(&'static str),
    #[error("ridge parameter must be finite and non-negative")]
    BadLambda,
    #[error("non-finite input value")]
    NonFinite,
    #[error("point ({y}, {z}) lies outside the pipe cross-section")]
    OutsidePipe { y: f64, z: f64 },
}
