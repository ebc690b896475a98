use evpipe_core::linalg::solve_dense;
use evpipe_core::velocimetry::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth random texture: a sum of Gaussian blobs at fractional centers.
fn blob_frame(
    width: usize,
    height: usize,
    blobs: &[(f64, f64, f64, f64)],
    dx: f64,
    dy: f64,
) -> BlurredFrame {
    BlurredFrame::from_fn(width, height, |x, y| {
        blobs
            .iter()
            .map(|&(cx, cy, r, a)| {
                let ddx = x as f64 - (cx + dx);
                let ddy = y as f64 - (cy + dy);
                a * (-(ddx * ddx + ddy * ddy) / (2.0 * r * r)).exp()
            })
            .sum()
    })
}

fn random_blobs(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    n: usize,
) -> Vec<(f64, f64, f64, f64)> {
    (0..n)
        .map(|_| {
            (
                rng.random_range(-10.0..width as f64 + 10.0),
                rng.random_range(-10.0..height as f64 + 10.0),
                rng.random_range(2.0..4.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect()
}

/// Sparse signed impulses on an extended canvas, translated by an integer
/// shift, cropped and blurred like stacked event frames.
fn event_texture(seed: u64, width: usize, height: usize, du: i32, dv: i32) -> BlurredFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 16i32;
    let mut img = vec![0.0; width * height];
    for y in -margin..height as i32 + margin {
        for x in -margin..width as i32 + margin {
            if rng.random_bool(0.15) {
                let p = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let (tx, ty) = (x + du, y + dv);
                if tx >= 0 && ty >= 0 && tx < width as i32 && ty < height as i32 {
                    img[ty as usize * width + tx as usize] += p;
                }
            }
        }
    }
    let cfg = FlowGridConfig::default();
    BlurredFrame {
        width,
        height,
        k: 0,
        data: blur_separable(&img, width, height, &cfg.kernel()),
    }
}

/// Integer translation: `curr(x, y) = prev(x - du, y - dv)`, zero fill.
fn translate(prev: &BlurredFrame, du: i32, dv: i32) -> BlurredFrame {
    BlurredFrame::from_fn(prev.width, prev.height, |x, y| {
        let sx = x as i32 - du;
        let sy = y as i32 - dv;
        if sx < 0 || sy < 0 || sx >= prev.width as i32 || sy >= prev.height as i32 {
            0.0
        } else {
            prev.get(sx as usize, sy as usize)
        }
    })
}

/// Direct evaluation of the normalized SSD for one displacement.
fn brute_force_j(curr: &BlurredFrame, prev: &BlurredFrame, spec: PatchSpec, u: i32, v: i32) -> f64 {
    let mut d = 0.0;
    let mut ec = 0.0;
    let mut ep = 0.0;
    for j in 0..spec.window {
        for i in 0..spec.window {
            let c = curr.get(spec.x0 + i, spec.y0 + j);
            let p = prev.get(
                (spec.x0 as i32 + i as i32 - u) as usize,
                (spec.y0 as i32 + j as i32 - v) as usize,
            );
            d += (c - p) * (c - p);
            ec += c * c;
            ep += p * p;
        }
    }
    d / (ec * ep).sqrt()
}

fn spec() -> PatchSpec {
    PatchSpec {
        x0: 20,
        y0: 20,
        window: 32,
        u_max: 8,
        v_max: 8,
    }
}

#[test]
fn identical_frames_have_zero_cost_at_origin() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let blobs = random_blobs(&mut rng, 80, 80, 30);
    let f = blob_frame(80, 80, &blobs, 0.0, 0.0);
    let c = cost_surface(&f, &f, spec()).unwrap();
    assert_eq!(c.get(0, 0), 0.0);
    assert_eq!(c.min_value(), 0.0);
    assert_eq!(match_patch(&c), (0, 0));
    assert!(c.values.iter().all(|v| *v >= 0.0));
}

#[test]
fn shifted_copy_matches_brute_force_and_recovers_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let blobs = random_blobs(&mut rng, 80, 80, 30);
    let prev = blob_frame(80, 80, &blobs, 0.0, 0.0);
    let curr = translate(&prev, 3, -2);
    let c = cost_surface(&curr, &prev, spec()).unwrap();

    let mut best = (f64::INFINITY, 0, 0);
    for v in -8..=8 {
        for u in -8..=8 {
            let oracle = brute_force_j(&curr, &prev, spec(), u, v);
            assert!(
                (c.get(u, v) - oracle).abs() < 1e-9 * oracle.max(1.0),
                "({u},{v})"
            );
            if oracle < best.0 {
                best = (oracle, u, v);
            }
        }
    }
    assert_eq!((best.1, best.2), (3, -2));
    assert_eq!(match_patch(&c), (3, -2));
    assert!(c.get(3, -2).abs() < 1e-12);
}

#[test]
fn independent_noise_never_matches() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = PatchSpec {
        x0: 4,
        y0: 4,
        window: 12,
        u_max: 4,
        v_max: 4,
    };
    for _ in 0..100 {
        let a = BlurredFrame::from_fn(24, 24, |_, _| rng.random_range(-1.0..1.0));
        let b = BlurredFrame::from_fn(24, 24, |_, _| rng.random_range(-1.0..1.0));
        let c = cost_surface(&a, &b, s).unwrap();
        assert!(c.min_value() > 0.1, "{}", c.min_value());
    }
}

/// Generic least squares on the six monomials through 9 samples.
fn lstsq_quadratic(s: &[[f64; 3]; 3]) -> [f64; 6] {
    let mut ata = [0.0; 36];
    let mut atb = [0.0; 6];
    for jv in 0..3 {
        for ju in 0..3 {
            let (u, v) = (ju as f64 - 1.0, jv as f64 - 1.0);
            let row = [1.0, u, v, u * v, u * u, v * v];
            for a in 0..6 {
                atb[a] += row[a] * s[jv][ju];
                for b in 0..6 {
                    ata[a * 6 + b] += row[a] * row[b];
                }
            }
        }
    }
    solve_dense(&mut ata, &mut atb, 6, 1e-14).unwrap();
    atb
}

#[test]
fn closed_form_fit_matches_generic_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let mut s = [[0.0; 3]; 3];
        for row in &mut s {
            for c in row.iter_mut() {
                *c = rng.random_range(-5.0..5.0);
            }
        }
        let a = fit_quadratic(&s);
        let b = lstsq_quadratic(&s);
        for k in 0..6 {
            assert!((a[k] - b[k]).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn offset_outside_unit_box_after_shift() {
    // Minimum at u = 1.6 evaluated around the integer argmin 2.
    let c = CostSurface::from_fn(4, 4, |u, v| (u as f64 - 1.6).powi(2) + (v as f64).powi(2));
    assert_eq!(match_patch(&c), (2, 0));
    let samples = {
        let mut s = [[0.0; 3]; 3];
        for jv in 0..3 {
            for ju in 0..3 {
                s[jv][ju] = c.get(2 + ju as i32 - 1, jv as i32 - 1);
            }
        }
        s
    };
    let oracle = lstsq_quadratic(&samples);
    let du_oracle = -oracle[1] / (2.0 * oracle[4]);
    let r = quadratic_refine(&c, (2, 0)).unwrap();
    assert!((r.du - du_oracle).abs() < 1e-12);
    assert!((r.du + 0.4).abs() < 1e-12);
}

fn grid_cfg() -> FlowGridConfig {
    FlowGridConfig::default()
}

#[test]
fn zero_flow_when_frames_identical() {
    let f = event_texture(5, 288, 288, 0, 0);
    let field = estimate_flow(&f, &f, &grid_cfg()).unwrap();
    assert_eq!(field.vectors.len(), 121);
    for (_, _, v) in field.iter() {
        assert!(v.conf > 0.0);
        assert!(v.u.abs() < 0.1 && v.v.abs() < 0.1, "{v:?}");
    }
}

#[test]
fn global_integer_shift_recovered() {
    let prev = event_texture(6, 288, 288, 0, 0);
    let curr = event_texture(6, 288, 288, 3, -2);
    let field = estimate_flow(&curr, &prev, &grid_cfg()).unwrap();
    let mut accepted = 0;
    let mut worst = 0.0f64;
    for (_, _, v) in field.accepted() {
        accepted += 1;
        worst = worst.max((v.u - 3.0).abs()).max((v.v + 2.0).abs());
    }
    eprintln!("worst deviation {worst:.4} px over {accepted} patches");
    assert!(worst < 0.1);
    assert!(accepted > 100);
}

#[test]
fn fractional_shifts_within_half_pixel() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let blobs = random_blobs(&mut rng, 288, 288, 400);
    let prev = blob_frame(288, 288, &blobs, 0.0, 0.0);
    let mut sq = 0.0;
    let mut n = 0;
    for &(du, dv) in &[
        (0.4, 0.0),
        (1.3, -0.7),
        (-2.6, 1.5),
        (4.5, 0.25),
        (-0.5, -3.2),
    ] {
        let curr = blob_frame(288, 288, &blobs, du, dv);
        let field = estimate_flow(&curr, &prev, &grid_cfg()).unwrap();
        for (_, _, v) in field.accepted() {
            sq += (v.u - du).powi(2) + (v.v - dv).powi(2);
            n += 1;
        }
    }
    let rmse = (sq / n as f64).sqrt();
    assert!(n > 500);
    assert!(rmse <= 0.5, "rmse {rmse}");
}

#[test]
fn mirroring_negates_u() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let blobs = random_blobs(&mut rng, 288, 288, 400);
    let prev = blob_frame(288, 288, &blobs, 0.0, 0.0);
    let curr = blob_frame(288, 288, &blobs, 1.7, -0.6);
    let cfg = grid_cfg();
    let a = estimate_flow(&curr, &prev, &cfg).unwrap();
    let b = estimate_flow(&curr.mirrored(), &prev.mirrored(), &cfg).unwrap();
    let p = cfg.patches;
    for j in 0..p {
        for i in 0..p {
            let va = a.get(i, j);
            let vb = b.get(p - 1 - i, j);
            assert_eq!(va.is_discarded(), vb.is_discarded());
            if !va.is_discarded() {
                assert!((va.u + vb.u).abs() < 1e-9, "{va:?} {vb:?}");
                assert!((va.v - vb.v).abs() < 1e-9);
                assert!((va.conf - vb.conf).abs() < 1e-9 * va.conf.max(1.0));
            }
        }
    }
}

#[test]
fn patch_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let blobs = random_blobs(&mut rng, 288, 288, 300);
    let prev = blob_frame(288, 288, &blobs, 0.0, 0.0);
    let curr = blob_frame(288, 288, &blobs, -1.2, 2.3);
    let cfg = grid_cfg();
    let field = estimate_flow(&curr, &prev, &cfg).unwrap();
    let mut order: Vec<(usize, usize)> =
        (0..11).flat_map(|j| (0..11).map(move |i| (i, j))).collect();
    for k in (1..order.len()).rev() {
        let s = rng.random_range(0..=k);
        order.swap(k, s);
    }
    for (i, j) in order {
        let v = estimate_patch(&curr, &prev, &cfg, i, j).vector();
        assert_eq!(v, field.get(i, j));
    }
}

#[test]
fn reported_patches_are_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let blobs = random_blobs(&mut rng, 288, 288, 200);
    let prev = blob_frame(288, 288, &blobs, 0.0, 0.0);
    let noise = BlurredFrame::from_fn(288, 288, |_, _| rng.random_range(-0.2..0.2));
    let mut curr = blob_frame(288, 288, &blobs, 2.2, 0.9);
    for (c, n) in curr.data.iter_mut().zip(&noise.data) {
        *c += n;
    }
    let cfg = grid_cfg();
    for j in 0..cfg.patches {
        for i in 0..cfg.patches {
            match estimate_patch(&curr, &prev, &cfg, i, j) {
                PatchOutcome::Accepted(v) => {
                    assert!(v.conf > 0.0);
                    assert!(v.u.abs() <= cfg.u_max as f64 + 1.0);
                    assert!(v.v.abs() <= cfg.v_max as f64 + 1.0);
                }
                other => assert!(other.vector().is_discarded()),
            }
        }
    }
}

#[test]
fn invalid_grid_is_rejected_before_compute() {
    let f = BlurredFrame::zeros(200, 200);
    assert!(matches!(
        estimate_flow(&f, &f, &grid_cfg()),
        Err(ConfigError::GridExceedsFrame { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn paraboloid_minimum_reproduced(
        cu in -0.99f64..0.99, cv in -0.99f64..0.99,
        a in 0.1f64..10.0, c in 0.1f64..10.0, b_frac in -0.9f64..0.9, k in -5.0f64..5.0,
    ) {
        // Positive-definite quadratic with minimum at (cu, cv).
        let b = b_frac * 2.0 * (a * c).sqrt();
        let f = |u: f64, v: f64| {
            let (x, y) = (u - cu, v - cv);
            a * x * x + b * x * y + c * y * y + k
        };
        let mut s = [[0.0; 3]; 3];
        for jv in 0..3 {
            for ju in 0..3 {
                s[jv][ju] = f(ju as f64 - 1.0, jv as f64 - 1.0);
            }
        }
        let r = refine_neighborhood(&s).unwrap();
        prop_assert!((r.du - cu).abs() <= 1e-9);
        prop_assert!((r.dv - cv).abs() <= 1e-9);
        prop_assert!((r.det - (4.0 * a * c - b * b)).abs() <= 1e-9 * (4.0 * a * c));
    }

    #[test]
    fn integer_shift_is_exact(du in -6i32..=6, dv in -6i32..=6, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs = random_blobs(&mut rng, 80, 80, 30);
        let prev = blob_frame(80, 80, &blobs, 0.0, 0.0);
        let curr = translate(&prev, du, dv);
        let c = cost_surface(&curr, &prev, spec()).unwrap();
        prop_assert_eq!(match_patch(&c), (du, dv));
    }
}
