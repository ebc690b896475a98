use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::{Behavior, FlowFieldSpec, SimCamera, SynthError};
use crate::velocimetry::tracking_timescale;
use crate::{Event, EventStream};

/// Advected Gaussian smoke blobs in the lightsheet.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SmokeSceneSpec {
    pub blob_count: usize,
    /// Blob standard deviation is drawn uniformly from this range, px.
    pub radius_px: [f64; 2],
    /// Peak blob brightness relative to the background.
    pub intensity: f64,
    pub background: f64,
    pub duration_us: u64,
    /// Ground-truth frame period, µs.
    pub frame_dt_us: u64,
    /// Simulation tick, µs.
    pub tick_us: u64,
    pub px_per_mm: f64,
    /// Lightsheet thickness, m.
    pub sheet_thickness_m: f64,
    /// Out-of-plane speed that sets the mean blob lifetime, m/s.
    pub out_of_plane_mps: f64,
    /// Length of the fade-in and fade-out ramps, µs.
    pub fade_us: f64,
}

impl Default for SmokeSceneSpec {
    fn default() -> Self {
        Self {
            blob_count: 400,
            radius_px: [2.0, 4.5],
            intensity: 4.0,
            background: 1.0,
            duration_us: 20_000,
            frame_dt_us: 2000,
            tick_us: 100,
            px_per_mm: 0.8,
            sheet_thickness_m: 0.02,
            out_of_plane_mps: 1.0,
            fade_us: 2000.0,
        }
    }
}

impl SmokeSceneSpec {
    /// Mean blob lifetime, µs.
    pub fn lifetime_us(&self) -> f64 {
        tracking_timescale(self.sheet_thickness_m, self.out_of_plane_mps) * 1e6
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = self.blob_count > 0
            && self.radius_px[0] > 0.0
            && self.radius_px[1] >= self.radius_px[0]
            && self.radius_px[1].is_finite()
            && self.intensity > 0.0
            && self.intensity.is_finite()
            && self.background > 0.0
            && self.background.is_finite()
            && self.duration_us > 0
            && self.frame_dt_us > 0
            && self.tick_us > 0
            && self.px_per_mm > 0.0
            && self.sheet_thickness_m > 0.0
            && self.out_of_plane_mps > 0.0
            && self.fade_us >= 0.0
            && self.lifetime_us().is_finite();
        if ok {
            Ok(())
        } else {
            Err(SynthError::InvalidSmoke)
        }
    }
}

/// Maps pixels to pipe coordinates and evaluates the generating flow.
/// The image center sits on the pipe axis; `y` grows with the column and
/// `z` against the row.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmokeTruth {
    pub flow: FlowFieldSpec,
    pub width: u32,
    pub height: u32,
    pub px_per_mm: f64,
    pub frame_dt_us: u64,
}

impl SmokeTruth {
    pub fn px_per_m(&self) -> f64 {
        self.px_per_mm * 1000.0
    }

    fn center(&self) -> (f64, f64) {
        ((f64::from(self.width) - 1.0) / 2.0, (f64::from(self.height) - 1.0) / 2.0)
    }

    pub fn pixel_to_pipe(&self, x: f64, row: f64) -> (f64, f64) {
        let (cx, cy) = self.center();
        ((x - cx) / self.px_per_m(), (cy - row) / self.px_per_m())
    }

    /// Flow velocity in m/s.
    pub fn velocity(&self, y: f64, z: f64, t: f64) -> (f64, f64) {
        self.flow.velocity(y, z, t)
    }

    /// Image motion in px/µs at pixel `(x, row)`.
    pub fn px_per_us(&self, x: f64, row: f64, t_us: f64) -> (f64, f64) {
        let (y, z) = self.pixel_to_pipe(x, row);
        let (vy, vz) = self.flow.velocity(y, z, t_us * 1e-6);
        let s = self.px_per_m() * 1e-6;
        (vy * s, -vz * s)
    }

    /// Image motion in px per ground-truth frame.
    pub fn px_per_frame(&self, x: f64, row: f64, t_us: f64) -> (f64, f64) {
        let (u, v) = self.px_per_us(x, row, t_us);
        let dt = self.frame_dt_us as f64;
        (u * dt, v * dt)
    }
}

#[derive(Clone, Copy, Debug)]
struct Blob {
    x: f64,
    y: f64,
    sigma: f64,
    amp: f64,
    born: f64,
    dies: f64,
}

impl Blob {
    fn envelope(&self, t: f64, fade: f64) -> f64 {
        if t <= self.born || t >= self.dies {
            return 0.0;
        }
        if fade <= 0.0 {
            return 1.0;
        }
        let r = ((t - self.born) / fade).min((self.dies - t) / fade).min(1.0);
        r * r * (3.0 - 2.0 * r)
    }
}

struct Seeder<'a> {
    spec: &'a SmokeSceneSpec,
    life: Exp<f64>,
    w: f64,
    h: f64,
    margin: f64,
}

impl Seeder<'_> {
    fn blob(&self, rng: &mut ChaCha8Rng, born: f64) -> Blob {
        let [r0, r1] = self.spec.radius_px;
        Blob {
            x: rng.random_range(-self.margin..self.w + self.margin),
            y: rng.random_range(-self.margin..self.h + self.margin),
            sigma: if r1 > r0 { rng.random_range(r0..r1) } else { r0 },
            amp: self.spec.intensity * rng.random_range(0.5..1.5),
            born,
            dies: born + self.life.sample(rng),
        }
    }

    fn outside(&self, b: &Blob) -> bool {
        b.x < -self.margin || b.y < -self.margin || b.x > self.w + self.margin || b.y > self.h + self.margin
    }
}

/// Smoke scene events plus the ground-truth sampler.
///
/// Blobs live for an exponential lifetime with the tracking timescale as
/// mean, fade in and out, move with the flow (midpoint steps) and are
/// replaced when they die or drift out of view. Each pixel compares its
/// log intensity against a reference at every tick; threshold crossings
/// are timed by linear interpolation between ticks.
pub fn simulate_smoke_events(
    flow: &FlowFieldSpec,
    scene: &SmokeSceneSpec,
    camera: &SimCamera,
    seed: u64,
) -> Result<(EventStream, SmokeTruth), SynthError> {
    flow.validate()?;
    scene.validate()?;
    camera.validate()?;
    let truth = SmokeTruth {
        flow: *flow,
        width: camera.width,
        height: camera.height,
        px_per_mm: scene.px_per_mm,
        frame_dt_us: scene.frame_dt_us,
    };
    let (w, h) = (camera.width as usize, camera.height as usize);
    let b = &camera.behavior;

    let mut dyn_rng = ChaCha8Rng::seed_from_u64(seed);
    dyn_rng.set_stream(0);
    let mut ev_rng = ChaCha8Rng::seed_from_u64(seed);
    ev_rng.set_stream(1);

    let seeder = Seeder {
        spec: scene,
        life: Exp::new(1.0 / scene.lifetime_us()).map_err(|_| SynthError::InvalidSmoke)?,
        w: w as f64,
        h: h as f64,
        margin: 3.0 * scene.radius_px[1],
    };
    // Steady state at t = 0: ages and remaining lives are both exponential.
    let mut blobs: Vec<Blob> = (0..scene.blob_count)
        .map(|_| {
            let mut bl = seeder.blob(&mut dyn_rng, 0.0);
            let age = seeder.life.sample(&mut dyn_rng);
            bl.born = -age;
            bl
        })
        .collect();

    let mut img = vec![0.0; w * h];
    render(&blobs, 0.0, scene, w, h, &mut img);
    let mut prev: Vec<f64> = img.clone();
    let mut reference = prev.clone();
    let gains: Vec<(f64, f64)> = (0..w * h)
        .map(|_| (gain(b.threshold_mismatch, &mut ev_rng), gain(b.threshold_mismatch, &mut ev_rng)))
        .collect();
    let mut th: Vec<(f64, f64)> = gains
        .iter()
        .map(|g| {
            (
                jitter(b.theta_on * g.0, b.threshold_jitter, &mut ev_rng),
                jitter(b.theta_off * g.1, b.threshold_jitter, &mut ev_rng),
            )
        })
        .collect();
    let mut blind = vec![f64::NEG_INFINITY; w * h];
    let mut events = Vec::new();

    let dt = scene.tick_us as f64;
    let ticks = scene.duration_us.div_ceil(scene.tick_us);
    let end = scene.duration_us as f64;
    for k in 1..=ticks {
        let t0 = (k - 1) as f64 * dt;
        let t1 = k as f64 * dt;
        for bl in blobs.iter_mut() {
            let (u1, v1) = truth.px_per_us(bl.x, bl.y, t0);
            let (um, vm) = truth.px_per_us(bl.x + 0.5 * dt * u1, bl.y + 0.5 * dt * v1, t0 + 0.5 * dt);
            bl.x += dt * um;
            bl.y += dt * vm;
            if bl.dies <= t1 || seeder.outside(bl) {
                *bl = seeder.blob(&mut dyn_rng, t1.min(bl.dies).max(t0));
            }
        }
        render(&blobs, t1, scene, w, h, &mut img);
        for i in 0..w * h {
            let (l0, l1) = (prev[i], img[i]);
            if l1 == l0 {
                continue;
            }
            let (x, y) = ((i % w) as u16, (i / w) as u16);
            loop {
                let (p, level) = if l1 - reference[i] >= th[i].0 {
                    (1i8, reference[i] + th[i].0)
                } else if reference[i] - l1 >= th[i].1 {
                    (-1, reference[i] - th[i].1)
                } else {
                    break;
                };
                let t = t0 + ((level - l0) / (l1 - l0)).clamp(0.0, 1.0) * dt;
                reference[i] = level;
                if p > 0 {
                    th[i].0 = jitter(b.theta_on * gains[i].0, b.threshold_jitter, &mut ev_rng);
                } else {
                    th[i].1 = jitter(b.theta_off * gains[i].1, b.threshold_jitter, &mut ev_rng);
                }
                if t < blind[i] {
                    continue;
                }
                if t < end {
                    events.push(Event::new(x, y, t as u64, p));
                }
                if b.p_double > 0.0 && ev_rng.random::<f64>() < b.p_double {
                    let td = t + b.refractory_us.max(1.0);
                    if td < end {
                        events.push(Event::new(x, y, td as u64, p));
                    }
                }
                blind[i] = t + b.refractory_us;
            }
        }
        core::mem::swap(&mut prev, &mut img);
    }
    noise(b, w, h, scene.duration_us, &mut ev_rng, &mut events);
    events.sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    Ok((EventStream::new(camera.width, camera.height, events), truth))
}

fn render(blobs: &[Blob], t: f64, scene: &SmokeSceneSpec, w: usize, h: usize, img: &mut [f64]) {
    img.iter_mut().for_each(|v| *v = scene.background);
    for bl in blobs {
        let a = bl.amp * bl.envelope(t, scene.fade_us);
        if a <= 0.0 {
            continue;
        }
        let reach = 3.5 * bl.sigma;
        let x0 = (bl.x - reach).floor().max(0.0) as usize;
        let y0 = (bl.y - reach).floor().max(0.0) as usize;
        let x1 = ((bl.x + reach).ceil().max(0.0) as usize).min(w);
        let y1 = ((bl.y + reach).ceil().max(0.0) as usize).min(h);
        let inv = -0.5 / (bl.sigma * bl.sigma);
        for y in y0..y1 {
            let dy2 = (y as f64 - bl.y).powi(2);
            let row = &mut img[y * w..(y + 1) * w];
            for (x, v) in row.iter_mut().enumerate().take(x1).skip(x0) {
                *v += a * ((((x as f64 - bl.x).powi(2)) + dy2) * inv).exp();
            }
        }
    }
    img.iter_mut().for_each(|v| *v = v.ln());
}

fn gain(mismatch: f64, rng: &mut ChaCha8Rng) -> f64 {
    jitter(1.0, mismatch, rng)
}

fn jitter(theta: f64, rel: f64, rng: &mut ChaCha8Rng) -> f64 {
    if rel <= 0.0 {
        return theta;
    }
    let z: f64 = rng.sample(StandardNormal);
    theta * (1.0 + rel * z).max(0.05)
}

fn noise(b: &Behavior, w: usize, h: usize, duration_us: u64, rng: &mut ChaCha8Rng, out: &mut Vec<Event>) {
    let total = b.noise_rate_hz * duration_us as f64 * 1e-6 * (w * h) as f64;
    if total <= 0.0 {
        return;
    }
    let Ok(pois) = rand_distr::Poisson::new(total) else { return };
    let n = pois.sample(rng) as u64;
    for _ in 0..n {
        let x = rng.random_range(0..w) as u16;
        let y = rng.random_range(0..h) as u16;
        let t = rng.random_range(0..duration_us);
        let p = if rng.random::<bool>() { 1 } else { -1 };
        out.push(Event::new(x, y, t, p));
    }
}
