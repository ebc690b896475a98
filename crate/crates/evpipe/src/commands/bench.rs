use std::hint::black_box;
use std::time::Instant;

use evpipe_core::event::bin_and_frame;
use evpipe_core::linalg::{exp_so3, Vec3};
use evpipe_core::mocap::{solve_pnp, CameraModel, Pose, Sdtv, DEFAULT_DEPTH, REFERENCE_LAYOUT};
use evpipe_core::synth::{
    reference_led_scene, simulate_led_events, simulate_smoke_events, Behavior, FlowFieldSpec, SimCamera,
    SmokeSceneSpec,
};
use evpipe_core::velocimetry::{
    cost_surface, estimate_flow, match_patch, quadratic_refine, sum_and_blur, FlowGridConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::cli::{out_file, CliError, OutArgs, ReportFormat};
use crate::io::{fmt_f64, table_csv, write_atomic, write_json};

pub const MIN_REPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Velocimetry,
    Sdtv,
    Pnp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub suite: Suite,
    pub stage: &'static str,
    /// Patches, events or correspondences per repetition.
    pub size: usize,
    pub reps: usize,
    pub median_us: f64,
    pub p95_us: f64,
    pub events_per_s: Option<f64>,
}

/// Wall time of each of `reps` calls, µs, sorted.
pub fn time_reps(reps: usize, mut f: impl FnMut()) -> Vec<f64> {
    time_reps_with(reps, || (), |()| f())
}

/// Like [`time_reps`], with an untimed `setup` before each call. Whatever
/// `f` returns is dropped outside the timed region.
pub fn time_reps_with<S, R>(reps: usize, mut setup: impl FnMut() -> S, mut f: impl FnMut(S) -> R) -> Vec<f64> {
    let mut t: Vec<f64> = (0..reps)
        .map(|_| {
            let state = setup();
            let s = Instant::now();
            let out = black_box(f(state));
            let dt = s.elapsed().as_secs_f64() * 1e6;
            drop(out);
            dt
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t
}

fn row(suite: Suite, stage: &'static str, size: usize, times: &[f64]) -> BenchRow {
    let n = times.len();
    let median = if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) };
    let p95 = times[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
    BenchRow {
        suite,
        stage,
        size,
        reps: n,
        median_us: median,
        p95_us: p95,
        events_per_s: None,
    }
}

fn velocimetry(reps: usize) -> Vec<BenchRow> {
    let s = Suite::Velocimetry;
    let cfg = FlowGridConfig::default();
    let (w, h) = cfg.required_extent();
    let scene = SmokeSceneSpec {
        duration_us: (cfg.stack as u64 + 1) * cfg.dt_us,
        ..Default::default()
    };
    let cam = SimCamera::new(w as u32, h as u32, Behavior::IDEAL);
    let (events, _) =
        simulate_smoke_events(&FlowFieldSpec::uniform(1.0, 0.5), &scene, &cam, 1).expect("built-in scene is valid");
    let frames = bin_and_frame(&events, cfg.dt_us, 1);
    let taps = cfg.kernel();
    let prev = sum_and_blur(&frames[..cfg.stack], &taps);
    let curr = sum_and_blur(&frames[1..=cfg.stack], &taps);
    let p = cfg.patches;
    let specs: Vec<_> = (0..p).flat_map(|j| (0..p).map(move |i| (i, j))).map(|(i, j)| cfg.patch_spec(i, j)).collect();
    let surfaces: Vec<_> = specs.iter().filter_map(|sp| cost_surface(&curr, &prev, *sp).ok()).collect();

    let mut rows = vec![
        row(s, "stack_blur", p * p, &time_reps(reps, || {
            black_box(sum_and_blur(black_box(&frames[1..=cfg.stack]), &taps));
        })),
        row(s, "cost_grid", p * p, &time_reps(reps, || {
            for sp in &specs {
                let _ = black_box(cost_surface(&curr, &prev, *sp));
            }
        })),
        row(s, "refine", p * p, &time_reps(reps, || {
            for c in &surfaces {
                let _ = black_box(quadratic_refine(c, match_patch(c)));
            }
        })),
        row(s, "step", p * p, &time_reps(reps, || {
            let c = sum_and_blur(&frames[1..=cfg.stack], &taps);
            black_box(estimate_flow(&c, &prev, &cfg).expect("grid fits"));
        })),
    ];
    // Fewer patches on the same frames for the scaling check.
    let small = FlowGridConfig { patches: 6, ..cfg.clone() };
    for c in [&small, &cfg] {
        rows.push(row(s, "flow_grid", c.patches * c.patches, &time_reps(reps, || {
            black_box(estimate_flow(&curr, &prev, c).expect("grid fits"));
        })));
    }
    rows
}

fn sdtv(reps: usize) -> Vec<BenchRow> {
    let scene = reference_led_scene(0.4);
    let cam = SimCamera::new(scene.width, scene.height, Behavior::IDEAL);
    let events = simulate_led_events(&scene, &cam, 1).expect("built-in scene is valid").events;
    let n = events.len() / 2;
    let fresh = Sdtv::new(scene.width as usize, scene.height as usize, DEFAULT_DEPTH, 0);
    [n, 2 * n]
        .into_iter()
        .map(|size| {
            let t = time_reps_with(
                reps,
                || fresh.clone(),
                |mut sdtv| {
                    sdtv.update(black_box(&events[..size]));
                    sdtv
                },
            );
            let mut r = row(Suite::Sdtv, "update", size, &t);
            r.events_per_s = Some(size as f64 / (r.median_us * 1e-6));
            r
        })
        .collect()
}

fn pnp(reps: usize) -> Vec<BenchRow> {
    let camera = CameraModel::vga(3333.0);
    let truth = Pose::new(exp_so3([0.1, -0.2, 0.05]), [0.02, -0.01, 1.0]);
    let noise = Normal::new(0.0, 0.5).expect("positive sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // A pool of noisy problems cycled through the repetitions.
    let problems: Vec<Vec<[f64; 2]>> = (0..16)
        .map(|_| {
            REFERENCE_LAYOUT
                .iter()
                .map(|p: &Vec3| {
                    let q = camera.project(truth.transform(*p)).expect("in front of the camera");
                    [q[0] + noise.sample(&mut rng), q[1] + noise.sample(&mut rng)]
                })
                .collect()
        })
        .collect();
    let mut k = 0;
    let mut next = || {
        k = (k + 1) % problems.len();
        &problems[k]
    };
    let cold = time_reps(reps, || {
        let px = next();
        let _ = black_box(solve_pnp(&REFERENCE_LAYOUT, px, &camera, None));
    });
    let warm = time_reps(reps, || {
        let px = next();
        let _ = black_box(solve_pnp(&REFERENCE_LAYOUT, px, &camera, Some(&truth)));
    });
    let n = REFERENCE_LAYOUT.len();
    vec![row(Suite::Pnp, "solve", n, &cold), row(Suite::Pnp, "solve_with_prior", n, &warm)]
}

pub fn run_suite(suite: Suite, reps: usize) -> Result<Vec<BenchRow>, CliError> {
    if reps < MIN_REPS {
        return Err(CliError::Config(format!("reps must be at least {MIN_REPS}")));
    }
    Ok(match suite {
        Suite::Velocimetry => velocimetry(reps),
        Suite::Sdtv => sdtv(reps),
        Suite::Pnp => pnp(reps),
    })
}

pub fn run(suite: Suite, reps: usize, out: &OutArgs) -> Result<(), CliError> {
    let rows = run_suite(suite, reps)?;
    let path = out_file(out, &format!("bench.{}", out.format.ext()))?;
    match out.format {
        ReportFormat::Json => write_json(&path, &rows)?,
        ReportFormat::Csv => {
            let header = ["suite", "stage", "size", "reps", "median_us", "p95_us", "events_per_s"];
            let body = rows.iter().map(|r| {
                vec![
                    serde_json::to_value(r.suite).unwrap().as_str().unwrap().to_string(),
                    r.stage.to_string(),
                    r.size.to_string(),
                    r.reps.to_string(),
                    fmt_f64(r.median_us),
                    fmt_f64(r.p95_us),
                    r.events_per_s.map(fmt_f64).unwrap_or_default(),
                ]
            });
            write_atomic(&path, &table_csv(&header, body))?;
        }
    }
    Ok(())
}
