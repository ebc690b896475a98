use std::path::Path;

use evpipe_core::autotune::{pso_optimize_batch, BiasBounds, BiasVector, PsoConfig};
use evpipe_core::synth::{biased_behavior, led_tuning_cost, LedScene};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::{load_json, load_json_or_default, out_file, CliError, OutArgs, SCHEMA_VERSION};
use crate::io::write_json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneSpec {
    pub scene: LedScene,
    #[serde(default)]
    pub pso: PsoConfig,
    /// Seed the first particle with the bound defaults.
    #[serde(default = "yes")]
    pub start_at_default: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuningReport {
    pub schema_version: u32,
    pub theta_star: BiasVector,
    pub j_star: f64,
    pub j_default: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<f64>,
    pub seed: u64,
}

/// Run the swarm; particles are scored in parallel, each with the same
/// simulation seed so the objective is deterministic.
pub fn tune(spec: &TuneSpec, bounds: &BiasBounds, seed: u64) -> Result<TuningReport, CliError> {
    bounds.validate().map_err(CliError::config)?;
    spec.scene.validate().map_err(CliError::config)?;
    let cfg = PsoConfig { seed, ..spec.pso.clone() };
    let cost = |x: &[f64]| {
        led_tuning_cost(&spec.scene, &biased_behavior(&BiasVector::from_slice(x)), seed).unwrap_or(f64::INFINITY)
    };
    let start = bounds.defaults().to_array();
    let r = pso_optimize_batch(
        &bounds.lower(),
        &bounds.upper(),
        spec.start_at_default.then_some(&start[..]),
        &cfg,
        |xs| xs.par_iter().map(|x| cost(x)).collect(),
    )
    .map_err(CliError::config)?;
    Ok(TuningReport {
        schema_version: SCHEMA_VERSION,
        theta_star: BiasVector::from_slice(&r.best),
        j_star: r.best_cost,
        j_default: cost(&start),
        iterations: r.iterations,
        evaluations: r.evaluations,
        trace: r.trace,
        seed,
    })
}

pub fn run(config: &Path, bounds: Option<&Path>, seed: u64, max_iters: Option<usize>, out: &OutArgs) -> Result<(), CliError> {
    let mut spec: TuneSpec = load_json(config)?;
    if let Some(n) = max_iters {
        spec.pso.max_iters = n;
    }
    let bounds: BiasBounds = load_json_or_default(bounds)?;
    let report = tune(&spec, &bounds, seed)?;
    write_json(&out_file(out, "report.json")?, &report)?;
    Ok(())
}
