use evpipe_core::autotune::*;
use evpipe_core::synth::{biased_behavior, led_tuning_cost, reference_led_scene, simulate_led_events, Behavior, SimCamera};
use evpipe_core::{Event, EventStream};
use proptest::prelude::*;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rosenbrock(x: &[f64]) -> f64 {
    (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
}

#[test]
fn sphere_6d() {
    let cfg = PsoConfig {
        max_iters: 100,
        seed: 3,
        ..Default::default()
    };
    let r = pso_optimize(&[-5.0; 6], &[5.0; 6], None, &cfg, sphere).unwrap();
    assert!(r.best_cost < 1e-3, "{}", r.best_cost);
    assert_eq!(r.trace.len(), 100);
}

#[test]
fn rosenbrock_2d() {
    for seed in 0..5 {
        let cfg = PsoConfig {
            max_iters: 200,
            seed,
            ..Default::default()
        };
        let r = pso_optimize(&[-2.0; 2], &[2.0; 2], None, &cfg, rosenbrock).unwrap();
        assert!(r.best_cost < 0.1, "seed {seed}: {}", r.best_cost);
    }
}

#[test]
fn simulated_camera_reaches_zero() {
    let scene = reference_led_scene(0.1);
    let b = BiasBounds::default();
    let seed = 4;
    let cfg = PsoConfig {
        target: Some(0.0),
        seed,
        ..Default::default()
    };
    let j0 = led_tuning_cost(&scene, &biased_behavior(&FACTORY_BIAS), seed).unwrap();
    assert!(j0 > 0.0);
    let r = pso_optimize(&b.lower(), &b.upper(), Some(&FACTORY_BIAS.to_array()), &cfg, |x| {
        led_tuning_cost(&scene, &biased_behavior(&BiasVector::from_slice(x)), seed).unwrap()
    })
    .unwrap();
    assert_eq!(r.best_cost, 0.0);
    assert!(r.iterations <= 60);
    assert!(b.contains(&BiasVector::from_slice(&r.best)));
    // The winner also scores zero on the full simulated stream.
    let cam = SimCamera::from_bias(640, 480, &BiasVector::from_slice(&r.best));
    let s = simulate_led_events(&scene, &cam, seed).unwrap();
    assert_eq!(total_cost(&s, &scene.tuning_scene()), 0.0);
}

#[test]
fn one_iteration_trace() {
    let cfg = PsoConfig {
        max_iters: 1,
        ..Default::default()
    };
    let r = pso_optimize(&[-1.0; 3], &[1.0; 3], None, &cfg, sphere).unwrap();
    assert_eq!(r.trace.len(), 1);
    assert_eq!(r.evaluations, 100);
}

#[test]
fn cost_examples() {
    let scene = TuningScene {
        width: 20,
        height: 20,
        markers: vec![ScenePoint {
            center: [10.0, 10.0],
            freq_hz: 100.0,
        }],
        duration_s: 0.1,
    };
    let empty = EventStream::empty(20, 20);
    assert_eq!(total_cost(&empty, &scene), 72.0);
    // Ten of each polarity per patch pixel, except one pixel without OFF.
    let mut events = Vec::new();
    for k in 0..10u64 {
        for (x, y) in scene.patch_pixels(0) {
            events.push(Event::new(x, y, k * 10_000, 1));
            if (x, y) != (10, 10) {
                events.push(Event::new(x, y, k * 10_000 + 100, -1));
            }
        }
    }
    events.sort_by_key(|e| (e.t, e.y, e.x));
    assert_eq!(total_cost(&EventStream::new(20, 20, events), &scene), 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_monotone_bounded_deterministic(
        seed in any::<u64>(),
        particles in 1usize..30,
        iters in 1usize..30,
        lo in prop::collection::vec(-10.0f64..0.0, 1..5),
        width in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let hi: Vec<f64> = lo.iter().map(|l| l + width).collect();
        let cfg = PsoConfig { particles, max_iters: iters, seed, ..Default::default() };
        let mut seen = Vec::new();
        let f = |x: &[f64]| x.iter().map(|v| (v - shift).powi(2) + (3.0 * v).sin()).sum::<f64>();
        let a = pso_optimize(&lo, &hi, None, &cfg, |x| {
            seen.push(x.to_vec());
            f(x)
        }).unwrap();
        for w in a.trace.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for x in &seen {
            for d in 0..lo.len() {
                prop_assert!(x[d] >= lo[d] && x[d] <= hi[d]);
            }
        }
        prop_assert_eq!(seen.len(), a.evaluations);
        let b = pso_optimize(&lo, &hi, None, &cfg, f).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn zero_cost_means_clean_ratios(
        counts in prop::collection::vec((0u64..40, 0u64..40), 9),
        freq in 50.0f64..200.0,
    ) {
        let scene = TuningScene {
            width: 16,
            height: 16,
            markers: vec![ScenePoint { center: [8.0, 8.0], freq_hz: freq }],
            duration_s: 0.1,
        };
        let mut patch = [(0u64, 0u64); 9];
        patch.copy_from_slice(&counts);
        let j = cost_from_counts(&[patch], &scene, ALPHA0);
        let clean = counts.iter().all(|&(p, n)| {
            let (a, b) = ratio_from_counts(p, n, freq, 0.1);
            (0.0..=ALPHA0).contains(&a) && (0.0..=ALPHA0).contains(&b)
        });
        prop_assert_eq!(j == 0.0, clean);
    }
}

#[test]
fn ideal_camera_cost_is_zero_everywhere() {
    let scene = reference_led_scene(0.1);
    for seed in 0..3 {
        assert_eq!(led_tuning_cost(&scene, &Behavior::IDEAL, seed).unwrap(), 0.0);
    }
}
