use std::path::Path;

use evpipe_core::autotune::{BiasVector, TuningScene};
use evpipe_core::mocap::{CameraModel, MarkerConfig};
use evpipe_core::synth::{
    biased_behavior, simulate_led_events, simulate_smoke_events, simulate_trajectory, Behavior, FlowFieldSpec,
    LedScene, SimCamera, SmokeSceneSpec, SmokeTruth, SpotStyle, TimedPose,
};
use evpipe_core::EventStream;
use serde::{Deserialize, Serialize};

use crate::cli::{load_json, out_file, CliError, OutArgs, SCHEMA_VERSION};
use crate::io::{write_events, write_json, EventFormat};

/// Sensor behavior given directly or derived from a bias vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorSpec {
    Behavior(Behavior),
    Bias(BiasVector),
}

impl Default for SensorSpec {
    fn default() -> Self {
        SensorSpec::Behavior(Behavior::IDEAL)
    }
}

impl SensorSpec {
    pub fn behavior(&self) -> Behavior {
        match self {
            SensorSpec::Behavior(b) => *b,
            SensorSpec::Bias(b) => biased_behavior(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSpec {
    Led {
        scene: LedScene,
        #[serde(default)]
        sensor: SensorSpec,
    },
    Smoke {
        width: u32,
        height: u32,
        flow: FlowFieldSpec,
        #[serde(default)]
        scene: SmokeSceneSpec,
        #[serde(default)]
        sensor: SensorSpec,
    },
    Trajectory {
        markers: MarkerConfig,
        camera: CameraModel,
        poses: Vec<TimedPose>,
        #[serde(default)]
        style: SpotStyle,
        #[serde(default)]
        sensor: SensorSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    Led { tuning_scene: TuningScene, behavior: Behavior },
    Smoke { truth: SmokeTruth, behavior: Behavior },
    Trajectory { poses: Vec<TimedPose>, behavior: Behavior },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub seed: u64,
    pub events: usize,
    #[serde(flatten)]
    pub truth: Truth,
}

pub fn simulate(spec: &SceneSpec, seed: u64) -> Result<(EventStream, Truth), CliError> {
    let cfg = CliError::config;
    match spec {
        SceneSpec::Led { scene, sensor } => {
            let behavior = sensor.behavior();
            let cam = SimCamera::new(scene.width, scene.height, behavior);
            let s = simulate_led_events(scene, &cam, seed).map_err(cfg)?;
            Ok((
                s,
                Truth::Led {
                    tuning_scene: scene.tuning_scene(),
                    behavior,
                },
            ))
        }
        SceneSpec::Smoke {
            width,
            height,
            flow,
            scene,
            sensor,
        } => {
            let behavior = sensor.behavior();
            let cam = SimCamera::new(*width, *height, behavior);
            let (s, truth) = simulate_smoke_events(flow, scene, &cam, seed).map_err(cfg)?;
            Ok((s, Truth::Smoke { truth, behavior }))
        }
        SceneSpec::Trajectory {
            markers,
            camera,
            poses,
            style,
            sensor,
        } => {
            let behavior = sensor.behavior();
            let cam = SimCamera::new(camera.width, camera.height, behavior);
            let (s, poses) = simulate_trajectory(markers, camera, &cam, poses, style, seed).map_err(cfg)?;
            Ok((s, Truth::Trajectory { poses, behavior }))
        }
    }
}

pub fn run(config: &Path, seed: u64, events_format: EventFormat, out: &OutArgs) -> Result<(), CliError> {
    let spec: SceneSpec = load_json(config)?;
    let (stream, truth) = simulate(&spec, seed)?;
    let name = match events_format {
        EventFormat::Binary => "events.evs",
        EventFormat::Csv => "events.csv",
    };
    write_events(&stream, &out_file(out, name)?, events_format)?;
    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION,
        seed,
        events: stream.len(),
        truth,
    };
    write_json(&out_file(out, "truth.json")?, &sidecar)?;
    Ok(())
}
