use bandlab_core::{BlowupFunction, BlowupSpec};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn specs() -> Vec<BlowupSpec> {
    vec![
        BlowupSpec::new(0, 0.5, 1.0, 0.75),
        BlowupSpec::new(1, 1.5, 1.0, 0.75),
        BlowupSpec::new(2, 2.5, 1.0, 0.75),
        BlowupSpec::new(0, 0.5, 1.0, 0.75).with_msmooth(6),
        BlowupSpec::new(0, 0.9, 2.0, 0.6),
    ]
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn dominates_the_quadratic_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for spec in specs() {
        let g = BlowupFunction::build(spec).unwrap();
        for _ in 0..100_000 {
            let x = 0.5 + 0.5 * unit(&mut rng);
            if x >= 1.0 {
                continue;
            }
            assert!(g.eval(x).unwrap() - x * x >= 0.0, "{spec:?} at {x}");
        }
    }
}

#[test]
fn quadratic_outside_the_bridge() {
    for spec in specs() {
        let g = BlowupFunction::build(spec).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 100.0;
            assert_eq!(g.eval(x).unwrap(), x * x);
            assert_eq!(g.eval(-x).unwrap(), x * x);
            let y = 1.0 + i as f64 / 7.0 + 1e-9;
            assert_eq!(g.eval(y).unwrap(), y * y);
        }
    }
}

/// One-sided finite differences of `eval` from both sides of each junction
/// against the analytic derivative there.
#[test]
fn smooth_across_junctions() {
    for spec in specs() {
        let g = BlowupFunction::build(spec).unwrap();
        let f = |x: f64| g.eval(x).unwrap();
        for x0 in [0.5, spec.a] {
            for order in 1..=spec.m.min(2) as usize {
                let want = g.eval_derivative(x0, order).unwrap();
                for side in [-1.0, 1.0] {
                    let h = side * 1e-5;
                    let s = |i: f64| f(x0 + i * h);
                    let fd = match order {
                        1 => (-3.0 * s(0.0) + 4.0 * s(1.0) - s(2.0)) / (2.0 * h),
                        _ => (2.0 * s(0.0) - 5.0 * s(1.0) + 4.0 * s(2.0) - s(3.0)) / (h * h),
                    };
                    assert!(
                        (fd - want).abs() <= 1e-4 * want.abs().max(1.0),
                        "{spec:?} x0={x0} order={order} side={side}: {fd} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn weighted_values_blow_up() {
    for spec in specs() {
        let g = BlowupFunction::build(spec).unwrap();
        let seq: Vec<f64> = (5..=20)
            .map(|n| {
                let d = 2f64.powi(-n);
                d.powi(spec.m as i32) * g.eval(1.0 - d).unwrap()
            })
            .collect();
        assert!(seq.windows(2).all(|w| w[1] > w[0]), "{spec:?}: {seq:?}");
    }
}

#[test]
fn tail_formula_is_reproduced() {
    let g = BlowupFunction::build(BlowupSpec::new(1, 1.5, 1.0, 0.75)).unwrap();
    let want = 1.0 / (0.001f64).powf(1.5);
    assert!((g.eval(0.999).unwrap() - want).abs() < 1e-9 * want);
    assert!((want - 31622.8).abs() < 0.1);
}
