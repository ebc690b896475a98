use alloc::vec;
use alloc::vec::Vec;

use super::{
    cluster_detections, detect_markers_with, solve_pnp, CameraModel, CentroidTracker, DetectOptions, MarkerConfig,
    MocapError, Pose, Sdtv, TrackedCentroid, TrackerConfig, DEFAULT_DEPTH, DEFAULT_REL_TOL,
};
use crate::Event;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PipelineConfig {
    /// Processing cadence, µs.
    pub step_us: u64,
    pub depth: usize,
    pub rel_tol: f64,
    /// Stacks with fewer deltas are not labeled. A moving spot has to be
    /// picked up well before its pixels fill the whole stack.
    pub min_deltas: usize,
    /// Pixels silent for longer than this many periods of the slowest
    /// marker are ignored.
    pub recent_periods: f64,
    pub tracker: TrackerConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            step_us: 2000,
            depth: DEFAULT_DEPTH,
            rel_tol: DEFAULT_REL_TOL,
            min_deltas: 8,
            recent_periods: 2.0,
            tracker: TrackerConfig::default(),
            seed: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), MocapError> {
        let t = &self.tracker;
        let ok = self.step_us > 0
            && self.depth >= 2
            && self.min_deltas >= 2
            && self.recent_periods > 0.0
            && self.recent_periods.is_finite()
            && t.particles > 0
            && t.sigma_meas > 0.0
            && t.sigma_accel >= 0.0
            && t.sigma_v0 >= 0.0
            && (0.0..1.0).contains(&t.kernel_bandwidth);
        if ok {
            Ok(())
        } else {
            Err(MocapError::InvalidPipeline)
        }
    }
}

/// State after one processing step.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineStep {
    pub t_us: u64,
    pub tracked: Vec<TrackedCentroid>,
    /// PnP over the markers observed this step, if at least four were.
    pub pose: Option<Pose>,
    pub rmse_px: Option<f64>,
    pub n_markers: usize,
}

/// SDTV, labeling, clustering, tracking and PnP chained at a fixed cadence.
#[derive(Clone, Debug)]
pub struct MocapPipeline {
    sdtv: Sdtv,
    tracker: CentroidTracker,
    markers: MarkerConfig,
    camera: CameraModel,
    cfg: PipelineConfig,
    recent_us: u64,
    prior: Option<Pose>,
    next_t: u64,
    /// Steps in which each marker was observed.
    seen: Vec<u64>,
    steps: u64,
}

impl MocapPipeline {
    pub fn new(markers: MarkerConfig, camera: CameraModel, cfg: PipelineConfig) -> Result<Self, MocapError> {
        markers.validate()?;
        markers.check_tolerance(cfg.rel_tol)?;
        camera.validate()?;
        cfg.validate()?;
        let slowest = markers.markers.iter().map(|m| m.freq).fold(f64::INFINITY, f64::min);
        Ok(Self {
            sdtv: Sdtv::new(camera.width as usize, camera.height as usize, cfg.depth, 0),
            tracker: CentroidTracker::new(cfg.tracker, cfg.seed),
            recent_us: (cfg.recent_periods * 1e6 / slowest) as u64,
            seen: vec![0; markers.markers.len()],
            markers,
            camera,
            prior: None,
            next_t: cfg.step_us,
            steps: 0,
            cfg,
        })
    }

    pub fn markers(&self) -> &MarkerConfig {
        &self.markers
    }

    /// Fraction of steps in which each marker was observed, in marker order.
    pub fn detection_rates(&self) -> Vec<f64> {
        self.seen
            .iter()
            .map(|&n| if self.steps == 0 { 0.0 } else { n as f64 / self.steps as f64 })
            .collect()
    }

    /// Feed time-ordered events; runs every step whose boundary they pass.
    pub fn push(&mut self, events: &[Event]) -> Vec<PipelineStep> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < events.len() {
            let j = i + events[i..].partition_point(|e| e.t < self.next_t);
            self.sdtv.update(&events[i..j]);
            i = j;
            if i < events.len() {
                out.push(self.step());
            }
        }
        out
    }

    /// Run the step that covers the last pushed events.
    pub fn finish(&mut self) -> PipelineStep {
        self.step()
    }

    /// Whole stream, one step per `step_us` up to and including the step
    /// that contains the last event.
    pub fn run(&mut self, events: &[Event]) -> Vec<PipelineStep> {
        let mut out = self.push(events);
        if !events.is_empty() {
            out.push(self.finish());
        }
        out
    }

    fn step(&mut self) -> PipelineStep {
        let t = self.next_t;
        self.next_t += self.cfg.step_us;
        self.steps += 1;
        let opts = DetectOptions {
            rel_tol: self.cfg.rel_tol,
            min_deltas: self.cfg.min_deltas,
            since: t.saturating_sub(self.recent_us),
        };
        let labels = detect_markers_with(&self.sdtv, &self.markers, &opts).expect("configuration checked at construction");
        let det = cluster_detections(&labels, &self.markers, t);
        let tracked = self.tracker.step(&det, self.cfg.step_us as f64 * 1e-6);
        let mut pts = Vec::new();
        let mut px = Vec::new();
        for c in tracked.iter().filter(|c| c.observed) {
            if let Some(k) = self.markers.index_of(c.id) {
                self.seen[k] += 1;
                pts.push(self.markers.markers[k].position);
                px.push(c.position);
            }
        }
        let sol = if pts.len() >= 4 {
            solve_pnp(&pts, &px, &self.camera, self.prior.as_ref()).ok()
        } else {
            None
        };
        if let Some(s) = &sol {
            self.prior = Some(s.pose);
        }
        PipelineStep {
            t_us: t,
            tracked,
            pose: sol.map(|s| s.pose),
            rmse_px: sol.map(|s| s.rmse),
            n_markers: pts.len(),
        }
    }
}
