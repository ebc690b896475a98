use std::path::Path;

use evpipe_core::disturbance::{
    ar_generate, eval_disturbance_map, fit_disturbance_map, welch_psd, yule_walker_fit, ArModel, Basis,
    DisturbanceSample, WelchConfig, DEFAULT_AR_ORDER,
};
use evpipe_core::synth::PIPE_RADIUS_M;
use serde::{Deserialize, Serialize};

use crate::cli::{load_json, load_json_or_default, out_file, CliError, DisturbanceAction, OutArgs, ReportFormat};
use crate::io::{fmt_f64, table_csv, write_atomic, write_json};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArFitConfig {
    pub order: usize,
    pub fs_hz: f64,
    pub welch: WelchConfig,
}

impl Default for ArFitConfig {
    fn default() -> Self {
        Self {
            order: DEFAULT_AR_ORDER,
            fs_hz: 1.0,
            welch: WelchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub basis: Basis,
    pub lambda: f64,
    /// Points per side of the evaluation grid written next to the map.
    pub grid: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            basis: Basis::default(),
            lambda: 1e-6,
            grid: 21,
        }
    }
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{}: {e}", path.display()))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

/// The `value` column, or the first column if none is named so.
pub fn read_signal(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = reader(path)?;
    let col = rdr
        .headers()
        .map_err(|e| parse_err(path, e))?
        .iter()
        .position(|h| h == "value")
        .unwrap_or(0);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let v: f64 = rec
            .get(col)
            .unwrap_or("")
            .parse()
            .map_err(|_| parse_err(path, format!("line {line}: not a number")))?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<DisturbanceSample>, CliError> {
    let mut rdr = reader(path)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| parse_err(path, e)))
        .collect()
}

fn table<T>(out: &OutArgs, stem: &str, header: &[&str], rows: &[T], cells: impl Fn(&T) -> Vec<f64>) -> Result<(), CliError>
where
    T: Serialize,
{
    let path = out_file(out, &format!("{stem}.{}", out.format.ext()))?;
    match out.format {
        ReportFormat::Json => write_json(&path, &rows)?,
        ReportFormat::Csv => write_atomic(&path, &table_csv(header, rows.iter().map(|r| cells(r).into_iter().map(fmt_f64).collect())))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct PsdRow {
    f_hz: f64,
    signal: f64,
    model: f64,
}

#[derive(Serialize)]
struct Value {
    value: f64,
}

pub fn run(action: DisturbanceAction) -> Result<(), CliError> {
    match action {
        DisturbanceAction::FitAr { input, config, out } => {
            let cfg: ArFitConfig = load_json_or_default(config.as_deref())?;
            let x = read_signal(&input)?;
            let model = yule_walker_fit(&x, cfg.order).map_err(CliError::config)?;
            let psd = welch_psd(&x, cfg.fs_hz, &cfg.welch).map_err(CliError::config)?;
            let rows: Vec<PsdRow> = psd
                .freqs
                .iter()
                .zip(&psd.power)
                .map(|(&f, &p)| PsdRow {
                    f_hz: f,
                    signal: p,
                    model: model.psd(f, cfg.fs_hz),
                })
                .collect();
            write_json(&out_file(&out, "ar_model.json")?, &model)?;
            table(&out, "psd", &["f_hz", "signal", "model"], &rows, |r| vec![r.f_hz, r.signal, r.model])
        }
        DisturbanceAction::Generate {
            input,
            samples,
            seed,
            burn_in,
            out,
        } => {
            let model: ArModel = load_json(&input)?;
            model.validate().map_err(CliError::config)?;
            let burn = burn_in.unwrap_or(10 * model.order);
            let x = ar_generate(&model, samples, seed, burn).map_err(CliError::config)?;
            let rows: Vec<Value> = x.into_iter().map(|value| Value { value }).collect();
            table(&out, "signal", &["value"], &rows, |r| vec![r.value])
        }
        DisturbanceAction::FitMap { input, config, out } => {
            let cfg: MapConfig = load_json_or_default(config.as_deref())?;
            if cfg.grid < 2 {
                return Err(CliError::Config("grid must be at least 2".into()));
            }
            let samples = read_samples(&input)?;
            let map = fit_disturbance_map(&samples, cfg.basis, cfg.lambda).map_err(CliError::config)?;
            let n = cfg.grid;
            let mut grid = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    let y = PIPE_RADIUS_M * (2.0 * b as f64 / (n - 1) as f64 - 1.0);
                    let z = PIPE_RADIUS_M * (1.0 - 2.0 * a as f64 / (n - 1) as f64);
                    if let Ok(w) = eval_disturbance_map(&map, y, z) {
                        grid.push(DisturbanceSample {
                            y,
                            z,
                            fy: w.fy,
                            fz: w.fz,
                            tau_x: w.tau_x,
                        });
                    }
                }
            }
            write_json(&out_file(&out, "map.json")?, &map)?;
            table(&out, "map_grid", &["y_m", "z_m", "fy_N", "fz_N", "taux_Nm"], &grid, |s| {
                vec![s.y, s.z, s.fy, s.fz, s.tau_x]
            })
        }
    }
}
