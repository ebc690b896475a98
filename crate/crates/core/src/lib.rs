#![no_std]
//! Event-camera processing primitives.
//!
//! The crate is `no_std` + `alloc` and carries no IO. It covers:
//!
//! - [`event`] – the event data model, the fixed binary record codec,
//!   stream validation and binning into event frames.
//! - [`velocimetry`] – sparse smoke velocimetry: stacked Gaussian-blurred
//!   event frames, normalized-SSD template matching over a patch grid and
//!   quadratic subpixel refinement with a curvature confidence.
//! - [`mocap`] – blinking-LED motion capture: the signed delta-time volume,
//!   blink-period estimation, marker labeling and clustering, particle-filter
//!   centroid tracking, pinhole / double-sphere cameras and PnP.
//! - [`autotune`] – event-ratio statistics, the asymmetric tuning cost and a
//!   particle-swarm optimizer.
//! - [`synth`] – deterministic synthetic scenes (LED markers, advected smoke,
//!   marker trajectories) on top of a parametric event-camera model.
//! - [`disturbance`] – Welch PSD, Yule-Walker AR fitting, AR noise synthesis
//!   and a ridge-regressed position-dependent disturbance map.
//!
//! Enable the `serde` feature to derive `Serialize`/`Deserialize` on the
//! configuration and result types.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autotune;
pub mod disturbance;
pub mod event;
pub mod linalg;
pub mod mocap;
pub mod synth;
pub mod velocimetry;

pub use event::{Event, EventFrame, EventStream};
