use std::path::Path;

use evpipe_core::mocap::{
    pose_noise_analysis, CameraModel, MarkerConfig, MocapPipeline, PipelineConfig, PoseNoise, MIN_NOISE_SAMPLES,
};
use evpipe_core::EventStream;
use serde::Serialize;

use crate::cli::{load_json, load_json_or_default, out_file, CliError, OutArgs, ReportFormat, SCHEMA_VERSION};
use crate::io::{fmt_f64, read_events, table_csv, write_atomic, write_json, EventFormat};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoseRow {
    pub t_us: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub rmse_px: f64,
    pub n_markers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkerRate {
    pub id: u32,
    pub detection_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MocapSummary {
    pub schema_version: u32,
    pub events: usize,
    pub steps: usize,
    pub poses: usize,
    pub mean_rmse_px: Option<f64>,
    pub markers: Vec<MarkerRate>,
    /// Spread of the pose sequence; present from 100 poses on.
    pub pose_noise: Option<PoseNoise>,
}

pub fn process(
    stream: &EventStream,
    markers: MarkerConfig,
    camera: CameraModel,
    cfg: PipelineConfig,
) -> Result<(Vec<PoseRow>, MocapSummary), CliError> {
    if stream.width != camera.width || stream.height != camera.height {
        return Err(CliError::Config(format!(
            "stream is {}x{} but the camera is {}x{}",
            stream.width, stream.height, camera.width, camera.height
        )));
    }
    let mut p = MocapPipeline::new(markers, camera, cfg).map_err(CliError::config)?;
    let steps = p.run(&stream.events);
    let mut rows = Vec::new();
    let mut poses = Vec::new();
    for s in &steps {
        if let (Some(pose), Some(rmse)) = (s.pose, s.rmse_px) {
            let [qw, qx, qy, qz] = pose.quaternion();
            let [x, y, z] = pose.translation;
            rows.push(PoseRow {
                t_us: s.t_us,
                x,
                y,
                z,
                qw,
                qx,
                qy,
                qz,
                rmse_px: rmse,
                n_markers: s.n_markers,
            });
            poses.push(pose);
        }
    }
    let summary = MocapSummary {
        schema_version: SCHEMA_VERSION,
        events: stream.len(),
        steps: steps.len(),
        poses: rows.len(),
        mean_rmse_px: (!rows.is_empty()).then(|| rows.iter().map(|r| r.rmse_px).sum::<f64>() / rows.len() as f64),
        markers: p
            .markers()
            .markers
            .iter()
            .zip(p.detection_rates())
            .map(|(m, r)| MarkerRate {
                id: m.id,
                detection_rate: r,
            })
            .collect(),
        pose_noise: if poses.len() >= MIN_NOISE_SAMPLES {
            pose_noise_analysis(&poses).ok()
        } else {
            None
        },
    };
    Ok((rows, summary))
}

pub fn run(
    input: &Path,
    markers: &Path,
    camera: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &OutArgs,
) -> Result<(), CliError> {
    let markers: MarkerConfig = load_json(markers)?;
    markers.validate().map_err(CliError::config)?;
    let camera: CameraModel = load_json(camera)?;
    camera.validate().map_err(CliError::config)?;
    let mut cfg: PipelineConfig = load_json_or_default(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(CliError::config)?;
    let stream = read_events(input, EventFormat::from_path(input))?;
    let (rows, summary) = process(&stream, markers, camera, cfg)?;
    let path = out_file(out, &format!("poses.{}", out.format.ext()))?;
    match out.format {
        ReportFormat::Json => write_json(&path, &rows)?,
        ReportFormat::Csv => {
            let header = ["t_us", "x", "y", "z", "qw", "qx", "qy", "qz", "rmse_px", "n_markers"];
            let body = rows.iter().map(|r| {
                let mut v = vec![r.t_us.to_string()];
                v.extend([r.x, r.y, r.z, r.qw, r.qx, r.qy, r.qz, r.rmse_px].map(fmt_f64));
                v.push(r.n_markers.to_string());
                v
            });
            write_atomic(&path, &table_csv(&header, body))?;
        }
    }
    write_json(&out_file(out, "summary.json")?, &summary)?;
    Ok(())
}
