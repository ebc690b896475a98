//! Sparse smoke velocimetry on event frames.
//!
//! The pipeline per output frame `k`:
//!
//! 1. sum the last `n` event frames and blur with a normalized Gaussian
//!    ([`stack_and_blur`]);
//! 2. for each of the `P×P` grid patches evaluate the normalized SSD against
//!    the previous blurred frame over all integer displacements
//!    ([`cost_surface`]);
//! 3. take the integer argmin ([`match_patch`]) and refine it with a
//!    least-squares quadratic through its 3×3 neighborhood
//!    ([`quadratic_refine`]), discarding non-minima and far offsets.
//!
//! Patches are independent; [`estimate_patch`] exposes the per-patch unit
//! so callers can schedule them however they like.

mod blur;
mod cost;
mod refine;

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::event::EventFrame;

pub use blur::{blur_separable, gaussian_kernel_1d, sum_and_blur, BlurredFrame};
pub use cost::{cost_surface, match_patch, CostSurface, PatchError, PatchSpec, ENERGY_EPS};
pub use refine::{fit_quadratic, quadratic_refine, refine_neighborhood, Discard, Refinement};

/// Patch grid, search range and stacking parameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FlowGridConfig {
    /// Patches per side (P).
    pub patches: usize,
    /// Patch side length in pixels (w).
    pub window: usize,
    /// Grid step in pixels (Δ).
    pub step: usize,
    pub u_max: i32,
    pub v_max: i32,
    /// Number of event frames stacked per blurred frame (n).
    pub stack: usize,
    pub sigma_blur: f64,
    pub blur_kernel: usize,
    /// Frame period in microseconds.
    pub dt_us: u64,
    /// Grid origin (i0, j0) in pixels.
    pub origin: (usize, usize),
    /// Image resolution in the lightsheet plane.
    pub px_per_mm: f64,
}

impl Default for FlowGridConfig {
    fn default() -> Self {
        Self {
            patches: 11,
            window: 32,
            step: 24,
            u_max: 8,
            v_max: 8,
            stack: 3,
            sigma_blur: 1.75,
            blur_kernel: 7,
            dt_us: 2000,
            origin: (8, 8),
            px_per_mm: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("blur kernel size {0} must be odd")]
    EvenKernel(usize),
    #[error("grid origin ({i0}, {j0}) is closer to the image edge than the search range ({u_max}, {v_max})")]
    OriginInsideSearch {
        i0: usize,
        j0: usize,
        u_max: i32,
        v_max: i32,
    },
    #[error("patch grid needs a {need_w}x{need_h} image, frame is {width}x{height}")]
    GridExceedsFrame {
        need_w: usize,
        need_h: usize,
        width: usize,
        height: usize,
    },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VelocimetryError {
    #[error("need {need} frames of history, have {have}")]
    InsufficientHistory { need: usize, have: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl FlowGridConfig {
    /// Image size the grid needs, search margin included.
    pub fn required_extent(&self) -> (usize, usize) {
        let span = (self.patches.saturating_sub(1)) * self.step + self.window;
        (
            self.origin.0 + span + self.u_max.max(0) as usize,
            self.origin.1 + span + self.v_max.max(0) as usize,
        )
    }

    /// Check the parameter invariants that do not depend on the frame size.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.patches == 0 {
            return Err(ConfigError::NonPositive("patches"));
        }
        if self.window == 0 {
            return Err(ConfigError::NonPositive("window"));
        }
        if self.stack == 0 {
            return Err(ConfigError::NonPositive("stack"));
        }
        if self.u_max < 0 || self.v_max < 0 {
            return Err(ConfigError::NonPositive("u_max/v_max"));
        }
        if !(self.sigma_blur > 0.0) {
            return Err(ConfigError::NonPositive("sigma_blur"));
        }
        if self.blur_kernel == 0 {
            return Err(ConfigError::NonPositive("blur_kernel"));
        }
        if self.blur_kernel.is_multiple_of(2) {
            return Err(ConfigError::EvenKernel(self.blur_kernel));
        }
        if self.dt_us == 0 {
            return Err(ConfigError::NonPositive("dt_us"));
        }
        if !(self.px_per_mm > 0.0) {
            return Err(ConfigError::NonPositive("px_per_mm"));
        }
        let (i0, j0) = self.origin;
        if (i0 as i64) < i64::from(self.u_max) || (j0 as i64) < i64::from(self.v_max) {
            return Err(ConfigError::OriginInsideSearch {
                i0,
                j0,
                u_max: self.u_max,
                v_max: self.v_max,
            });
        }
        Ok(())
    }

    /// Full validation against a frame size.
    pub fn validate_for(&self, width: usize, height: usize) -> Result<(), ConfigError> {
        self.validate()?;
        let (need_w, need_h) = self.required_extent();
        if need_w > width || need_h > height {
            return Err(ConfigError::GridExceedsFrame {
                need_w,
                need_h,
                width,
                height,
            });
        }
        Ok(())
    }

    pub fn kernel(&self) -> Vec<f64> {
        gaussian_kernel_1d(self.blur_kernel, self.sigma_blur)
    }

    /// Top-left corner of patch `(i, j)`; `i` runs along x.
    pub fn patch_origin(&self, i: usize, j: usize) -> (usize, usize) {
        (self.origin.0 + i * self.step, self.origin.1 + j * self.step)
    }

    pub fn patch_spec(&self, i: usize, j: usize) -> PatchSpec {
        let (x0, y0) = self.patch_origin(i, j);
        PatchSpec {
            x0,
            y0,
            window: self.window,
            u_max: self.u_max,
            v_max: self.v_max,
        }
    }

    /// Frame period in seconds.
    pub fn dt_s(&self) -> f64 {
        self.dt_us as f64 * 1e-6
    }
}

/// Sum the last `cfg.stack` frames of `frames` and blur once.
pub fn stack_and_blur(
    frames: &[EventFrame],
    cfg: &FlowGridConfig,
) -> Result<BlurredFrame, VelocimetryError> {
    cfg.validate()?;
    if frames.len() < cfg.stack {
        return Err(VelocimetryError::InsufficientHistory {
            need: cfg.stack,
            have: frames.len(),
        });
    }
    Ok(sum_and_blur(
        &frames[frames.len() - cfg.stack..],
        &cfg.kernel(),
    ))
}

/// Flow of one patch in px/frame plus its confidence. Discarded patches are
/// all zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowVector {
    pub u: f64,
    pub v: f64,
    pub conf: f64,
}

impl FlowVector {
    pub const DISCARDED: FlowVector = FlowVector {
        u: 0.0,
        v: 0.0,
        conf: 0.0,
    };

    pub fn is_discarded(&self) -> bool {
        self.conf == 0.0
    }
}

/// `P×P` grid of flow vectors for one frame.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseFlowField {
    pub patches: usize,
    pub k: u64,
    /// Row-major in `j`: `vectors[j * patches + i]`.
    pub vectors: Vec<FlowVector>,
}

impl SparseFlowField {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FlowVector {
        self.vectors[j * self.patches + i]
    }

    /// `(i, j, vector)` for every patch.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, FlowVector)> + '_ {
        self.vectors
            .iter()
            .enumerate()
            .map(move |(n, v)| (n % self.patches, n / self.patches, *v))
    }

    pub fn accepted(&self) -> impl Iterator<Item = (usize, usize, FlowVector)> + '_ {
        self.iter().filter(|(_, _, v)| !v.is_discarded())
    }

    pub fn discard_fraction(&self) -> f64 {
        let n = self.vectors.len();
        if n == 0 {
            return 0.0;
        }
        self.vectors.iter().filter(|v| v.is_discarded()).count() as f64 / n as f64
    }
}

/// Why a patch produced no flow vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PatchOutcome {
    Accepted(FlowVector),
    Undefined(PatchError),
    Discarded(Discard),
}

impl PatchOutcome {
    pub fn vector(&self) -> FlowVector {
        match self {
            PatchOutcome::Accepted(v) => *v,
            _ => FlowVector::DISCARDED,
        }
    }
}

/// Run match + refine for patch `(i, j)`.
pub fn estimate_patch(
    curr: &BlurredFrame,
    prev: &BlurredFrame,
    cfg: &FlowGridConfig,
    i: usize,
    j: usize,
) -> PatchOutcome {
    let cost = match cost_surface(curr, prev, cfg.patch_spec(i, j)) {
        Ok(c) => c,
        Err(e) => return PatchOutcome::Undefined(e),
    };
    let (u, v) = match_patch(&cost);
    match quadratic_refine(&cost, (u, v)) {
        Ok(r) => PatchOutcome::Accepted(FlowVector {
            u: f64::from(u) + r.du,
            v: f64::from(v) + r.dv,
            conf: r.conf,
        }),
        Err(d) => PatchOutcome::Discarded(d),
    }
}

/// Flow between two consecutive blurred frames over the configured grid.
pub fn estimate_flow(
    curr: &BlurredFrame,
    prev: &BlurredFrame,
    cfg: &FlowGridConfig,
) -> Result<SparseFlowField, ConfigError> {
    cfg.validate_for(curr.width.min(prev.width), curr.height.min(prev.height))?;
    let p = cfg.patches;
    let mut vectors = Vec::with_capacity(p * p);
    for j in 0..p {
        for i in 0..p {
            vectors.push(estimate_patch(curr, prev, cfg, i, j).vector());
        }
    }
    Ok(SparseFlowField {
        patches: p,
        k: curr.k,
        vectors,
    })
}

/// Convert px/frame to m/s.
pub fn px_per_frame_to_mps(px: f64, px_per_mm: f64, dt_s: f64) -> f64 {
    px / px_per_mm / dt_s / 1000.0
}

/// Physical in-plane velocity `(v_y, v_z)` of every patch in m/s. The `y`
/// axis follows image columns and `z` follows image rows.
pub fn flow_to_velocity(field: &SparseFlowField, cfg: &FlowGridConfig) -> Vec<(f64, f64)> {
    let dt = cfg.dt_s();
    field
        .vectors
        .iter()
        .map(|f| {
            (
                px_per_frame_to_mps(f.u, cfg.px_per_mm, dt),
                px_per_frame_to_mps(f.v, cfg.px_per_mm, dt),
            )
        })
        .collect()
}

/// Time a smoke structure stays trackable in a sheet of thickness
/// `sheet_thickness_m` crossed at `out_of_plane_speed_mps`: half the sheet
/// over the speed. Zero speed gives `f64::INFINITY`.
pub fn tracking_timescale(sheet_thickness_m: f64, out_of_plane_speed_mps: f64) -> f64 {
    if out_of_plane_speed_mps == 0.0 {
        return f64::INFINITY;
    }
    0.5 * sheet_thickness_m / out_of_plane_speed_mps.abs()
}

/// Streaming estimator: feed event frames in order, get a flow field once
/// two blurred frames exist.
#[derive(Clone, Debug)]
pub struct FlowEstimator {
    cfg: FlowGridConfig,
    kernel: Vec<f64>,
    history: VecDeque<EventFrame>,
    prev: Option<BlurredFrame>,
}

impl FlowEstimator {
    pub fn new(cfg: FlowGridConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            kernel: cfg.kernel(),
            history: VecDeque::with_capacity(cfg.stack),
            prev: None,
            cfg,
        })
    }

    pub fn config(&self) -> &FlowGridConfig {
        &self.cfg
    }

    /// Push the next frame. Returns the flow between the newest two blurred
    /// frames when enough history exists.
    pub fn push(&mut self, frame: EventFrame) -> Result<Option<SparseFlowField>, ConfigError> {
        if self.history.len() == self.cfg.stack {
            self.history.pop_front();
        }
        self.history.push_back(frame);
        if self.history.len() < self.cfg.stack {
            return Ok(None);
        }
        let frames: Vec<EventFrame> = self.history.iter().cloned().collect();
        let curr = sum_and_blur(&frames, &self.kernel);
        let out = match &self.prev {
            Some(prev) => Some(estimate_flow(&curr, prev, &self.cfg)?),
            None => {
                self.cfg.validate_for(curr.width, curr.height)?;
                None
            }
        };
        self.prev = Some(curr);
        Ok(out)
    }
}
