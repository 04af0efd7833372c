use bandlab_core::analysis::{self, presets, ErrorMeasure, ProbeLine, Reference, Verdict};
use bandlab_core::fiber::project_modified_identity_check;
use bandlab_core::observables::fermi_level;
use bandlab_core::spectra::compute_bands;
use bandlab_core::*;
use std::f64::consts::PI;

fn modified(m: u32, p: f64) -> Scheme {
    Scheme::Modified(BlowupFunction::build(BlowupSpec::new(m, p, 1.0, 0.75)).unwrap())
}

fn probe(k: f64) -> KPointSet {
    KPointSet::from_points(1, vec![[k, 0.0, 0.0]])
}

#[test]
fn cosine_errors_shrink_toward_a_large_cutoff_reference() {
    let v = presets::cosine_1d(1.0).unwrap();
    let ks = probe(0.9);
    let reference = compute_bands(&v, &ks, 72_000.0, &Scheme::Uniform, 1, &Serial).unwrap();
    let md = modified(1, 1.5);
    let errs: Vec<f64> = [250.0, 500.0, 750.0, 1500.0]
        .iter()
        .map(|&ec| {
            let b = compute_bands(&v, &ks, ec, &md, 1, &Serial).unwrap();
            (b.energy(0, 0) - reference.energy(0, 0)).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn modified_sits_above_kdependent_above_reference() {
    let v = presets::toy_power_law_1d().unwrap();
    let ks = KPointSet::from_points(1, (0..9).map(|i| [-3.0 + 0.7 * i as f64, 0.0, 0.0]).collect());
    let n = 4;
    let kd = compute_bands(&v, &ks, 100.0, &Scheme::KDependent, n, &Serial).unwrap();
    let reference = compute_bands(&v, &ks, 6400.0, &Scheme::KDependent, n, &Serial).unwrap();
    for scheme in [modified(0, 0.5), modified(2, 2.5)] {
        let md = compute_bands(&v, &ks, 100.0, &scheme, n, &Serial).unwrap();
        for i in 0..ks.len() {
            for b in 0..n {
                assert!(md.energy(i, b) >= kd.energy(i, b) - 1e-10);
                assert!(kd.energy(i, b) >= reference.energy(i, b) - 1e-8);
            }
        }
    }
}

#[test]
fn projection_identity_on_a_rough_potential() {
    let v = presets::toy_power_law_1d().unwrap();
    let g = BlowupFunction::build(BlowupSpec::new(2, 2.5, 1.0, 0.75)).unwrap();
    for (k, ec) in [(0.1, 30.0), (-2.9, 77.0), (3.1, 250.0)] {
        let d = project_modified_identity_check(&v, &[k, 0.0, 0.0], ec, &g).unwrap();
        assert_eq!(d, 0.0);
    }
}

#[test]
fn fermi_levels_settle_with_the_cutoff() {
    let v = presets::cosine_1d(1.0).unwrap();
    let grid = v.lattice().uniform_grid(24).unwrap();
    let mu_ref = fermi_level(&compute_bands(&v, &grid, 8000.0, &Scheme::Uniform, 2, &Serial).unwrap(), 1.0)
        .unwrap()
        .mu;
    for scheme in [Scheme::KDependent, modified(1, 1.5)] {
        let gaps: Vec<f64> = [20.0, 80.0, 320.0]
            .iter()
            .map(|&ec| {
                let b = compute_bands(&v, &grid, ec, &scheme, 2, &Serial).unwrap();
                (fermi_level(&b, 1.0).unwrap().mu - mu_ref).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{}: {gaps:?}", scheme.name());
    }
}

#[test]
fn fermi_adjusted_errors_decrease() {
    let v = presets::cosine_1d(1.0).unwrap();
    let study = analysis::convergence_study(
        &v,
        1,
        &ErrorMeasure::FermiAdjusted {
            grid: 16,
            n_electrons: 1.0,
        },
        &[100.0, 200.0, 400.0, 800.0],
        &modified(1, 1.5),
        &Reference::uniform(6400.0),
        f64::INFINITY,
        &Serial,
    )
    .unwrap();
    assert!(study.errors.windows(2).all(|w| w[1] <= w[0]), "{:?}", study.errors);
}

#[test]
fn periodicity_by_scheme() {
    let v = presets::cosine_1d(1.0).unwrap();
    let ks = KPointSet::from_points(1, (0..25).map(|i| [-PI + 0.25 * i as f64, 0.0, 0.0]).collect());
    let report = analysis::periodicity_report(
        &v,
        25.0,
        &[Scheme::Uniform, Scheme::KDependent, modified(1, 1.5)],
        &ks,
        &[GIndex([1, 0, 0]), GIndex([-1, 0, 0])],
        1,
        &Serial,
    )
    .unwrap();
    assert!(report[0].max_violation > 1e-3);
    assert!(report[1].max_violation <= 1e-9);
    assert!(report[2].max_violation <= 1e-9);
}

#[test]
fn regularity_verdicts_are_monotone_in_p() {
    let v = presets::toy_power_law_1d().unwrap();
    let line = ProbeLine::first_zone_axis(v.lattice());
    let deltas = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    for order in [1, 2] {
        let verdicts: Vec<Verdict> = [(0, 0.5), (1, 1.5), (2, 2.5)]
            .iter()
            .map(|&(m, p)| {
                let spec = BlowupSpec::new(m, p, 1.0, 0.75);
                analysis::regularity_probe(&v, 750.0, &spec, 1, order, &deltas, &line, &Serial)
                    .unwrap()
                    .verdict
            })
            .collect();
        let first_bounded = verdicts.iter().position(|v| *v == Verdict::BoundedDerivative);
        if let Some(i) = first_bounded {
            assert!(verdicts[i..].iter().all(|v| *v == Verdict::BoundedDerivative), "order {order}: {verdicts:?}");
        }
    }
}

#[test]
fn convergence_rates_agree_between_schemes() {
    let synth = PowerLawSynth::new(2.1, 256, 4);
    let v = synth.build(&Lattice::chain(1.0).unwrap()).unwrap();
    let measure = ErrorMeasure::Pointwise {
        kpoints: vec![[-1.9, 0.0, 0.0], [2.4, 0.0, 0.0]],
    };
    let ladder = [125.0, 250.0, 500.0, 1000.0, 2000.0];
    let reference = Reference::uniform(32_000.0);
    let r = synth.regularity(1);
    let kd = analysis::convergence_study(&v, 1, &measure, &ladder, &Scheme::KDependent, &reference, r, &Serial).unwrap();
    let md = analysis::convergence_study(&v, 1, &measure, &ladder, &modified(1, 1.5), &reference, r, &Serial).unwrap();
    assert!(kd.is_meaningful() && md.is_meaningful());
    assert!(kd.fitted_rate >= kd.predicted_rate - 0.3, "{kd:?}");
    assert!((kd.fitted_rate - md.fitted_rate).abs() <= 0.3, "{} vs {}", kd.fitted_rate, md.fitted_rate);
}
