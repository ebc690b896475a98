use std::path::Path;

use evpipe_core::event::{binned_dims, FrameIter};
use evpipe_core::velocimetry::{flow_to_velocity, FlowEstimator, FlowGridConfig, SparseFlowField};
use serde::{Deserialize, Serialize};

use crate::cli::{load_json_or_default, out_file, CliError, OutArgs, ReportFormat, SCHEMA_VERSION};
use crate::io::{fmt_f64, read_events, table_csv, write_atomic, write_json, EventFormat};

/// Grid settings plus the spatial binning applied before framing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocimetryConfig {
    #[serde(flatten)]
    pub grid: FlowGridConfig,
    #[serde(default = "one")]
    pub bin: u32,
}

fn one() -> u32 {
    1
}

impl Default for VelocimetryConfig {
    fn default() -> Self {
        Self {
            grid: FlowGridConfig::default(),
            bin: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowRecord {
    pub k: u64,
    pub i: usize,
    pub j: usize,
    /// `None` for discarded patches.
    pub u_px: Option<f64>,
    pub v_px: Option<f64>,
    pub conf: f64,
    pub vy_mps: Option<f64>,
    pub vz_mps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameSummary {
    pub k: u64,
    pub discard_fraction: f64,
    pub median_speed_px: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VelocimetrySummary {
    pub schema_version: u32,
    pub events: usize,
    pub frames: usize,
    pub records: usize,
    /// Over every accepted vector of every frame, px/frame.
    pub median_speed_px: Option<f64>,
    pub median_speed_mps: Option<f64>,
    pub mean_discard_fraction: Option<f64>,
    pub per_frame: Vec<FrameSummary>,
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn records(field: &SparseFlowField, cfg: &FlowGridConfig) -> Vec<FlowRecord> {
    let vel = flow_to_velocity(field, cfg);
    field
        .iter()
        .zip(vel)
        .map(|((i, j, f), (vy, vz))| {
            let ok = !f.is_discarded();
            FlowRecord {
                k: field.k,
                i,
                j,
                u_px: ok.then_some(f.u),
                v_px: ok.then_some(f.v),
                conf: f.conf,
                vy_mps: ok.then_some(vy),
                vz_mps: ok.then_some(vz),
            }
        })
        .collect()
}

/// Flow records and summary of a stream, without touching the filesystem.
pub fn process(
    stream: &evpipe_core::EventStream,
    cfg: &VelocimetryConfig,
) -> Result<(Vec<FlowRecord>, VelocimetrySummary), CliError> {
    if cfg.bin == 0 {
        return Err(CliError::Config("bin must be at least 1".into()));
    }
    let mut est = FlowEstimator::new(cfg.grid.clone()).map_err(CliError::config)?;
    let (w, h) = binned_dims(stream.width, stream.height, cfg.bin);
    cfg.grid.validate_for(w, h).map_err(CliError::config)?;
    let mut all = Vec::new();
    let mut per_frame = Vec::new();
    let mut speeds = Vec::new();
    let mut frames = 0;
    for frame in FrameIter::new(stream, cfg.grid.dt_us, cfg.bin) {
        let Some(field) = est.push(frame).map_err(CliError::config)? else {
            continue;
        };
        frames += 1;
        let mut s: Vec<f64> = field.accepted().map(|(_, _, f)| f.u.hypot(f.v)).collect();
        speeds.extend_from_slice(&s);
        per_frame.push(FrameSummary {
            k: field.k,
            discard_fraction: field.discard_fraction(),
            median_speed_px: median(&mut s),
        });
        all.extend(records(&field, &cfg.grid));
    }
    let median_speed_px = median(&mut speeds);
    let summary = VelocimetrySummary {
        schema_version: SCHEMA_VERSION,
        events: stream.len(),
        frames,
        records: all.len(),
        median_speed_px,
        median_speed_mps: median_speed_px
            .map(|s| evpipe_core::velocimetry::px_per_frame_to_mps(s, cfg.grid.px_per_mm, cfg.grid.dt_s())),
        mean_discard_fraction: (!per_frame.is_empty())
            .then(|| per_frame.iter().map(|f| f.discard_fraction).sum::<f64>() / per_frame.len() as f64),
        per_frame,
    };
    Ok((all, summary))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn run(input: &Path, config: Option<&Path>, out: &OutArgs) -> Result<(), CliError> {
    let cfg: VelocimetryConfig = load_json_or_default(config)?;
    cfg.grid.validate().map_err(CliError::config)?;
    let stream = read_events(input, EventFormat::from_path(input))?;
    let (recs, summary) = process(&stream, &cfg)?;
    let flow = out_file(out, &format!("flow.{}", out.format.ext()))?;
    match out.format {
        ReportFormat::Json => write_json(&flow, &recs)?,
        ReportFormat::Csv => {
            let rows = recs.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    r.i.to_string(),
                    r.j.to_string(),
                    opt(r.u_px),
                    opt(r.v_px),
                    fmt_f64(r.conf),
                    opt(r.vy_mps),
                    opt(r.vz_mps),
                ]
            });
            write_atomic(&flow, &table_csv(&["k", "i", "j", "u_px", "v_px", "conf", "vy_mps", "vz_mps"], rows))?;
        }
    }
    write_json(&out_file(out, "summary.json")?, &summary)?;
    Ok(())
}
