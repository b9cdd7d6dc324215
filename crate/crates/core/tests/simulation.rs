use msm_core::fit::{fit_all, BundleOptions, FitConfig};
use msm_core::sim::{
    aalen_johansen, compare_transforms, recovery_report, sample_subjects, simulate_panel, simulation_design,
    transform_study_replicate, DgpSpec, QSource,
};
use msm_core::transitions::TransformMethod;
use ndarray::Axis;

fn quick_config(seed: u64) -> FitConfig {
    let mut cfg = FitConfig { seed, batch_size: 256, max_epochs: 8, patience: 3, ..FitConfig::default() };
    cfg.network.hidden = vec![16, 8];
    cfg
}

#[test]
fn true_probabilities_make_the_exact_transform_error_free() {
    let spec = DgpSpec::standard(3000, 5).unwrap();
    let sim = simulate_panel(&spec).unwrap();
    let subjects = sample_subjects(sim.panel.len(), 500, 5);
    let cmp = compare_transforms(&sim, QSource::Truth, &subjects, spec.horizon).unwrap();
    assert!(cmp.exact.mse.iter().all(|&e| e < 1e-24), "{:?}", cmp.exact.mse);
    assert!(cmp.continuous.mse.iter().zip(&cmp.exact.mse).all(|(c, e)| c > e));
}

#[test]
fn empirical_occupancy_tracks_the_true_distribution() {
    let spec = DgpSpec::standard(20_000, 9).unwrap();
    let sim = simulate_panel(&spec).unwrap();
    let aj = aalen_johansen(&sim.panel).unwrap();
    let all: Vec<usize> = (0..sim.panel.len()).collect();
    for t2 in [6, 18, spec.horizon] {
        let truth = sim.truth.true_cumulative(&all, t2).unwrap().mean_axis(Axis(0)).unwrap();
        let empirical = &aj.cumulative[t2 as usize];
        for j in 0..4 {
            assert!(
                (empirical[[0, j]] - truth[j]).abs() < 0.015,
                "t={t2} state {j}: {} vs {}",
                empirical[[0, j]],
                truth[j]
            );
        }
    }
}

#[test]
fn fitted_bundles_give_distributions_and_recovery_reports() {
    let spec = DgpSpec::standard(4000, 3).unwrap();
    let sim = simulate_panel(&spec).unwrap();
    let bundle = fit_all(&sim.panel, &simulation_design(), &quick_config(3), &BundleOptions::default()).unwrap();

    let eval = bundle.span_evaluation(&sim.panel, 6, 18, TransformMethod::Exact).unwrap();
    assert!(!eval.is_empty());
    for row in eval.probs().rows() {
        assert!((row.sum() - 1.0).abs() < 1e-10);
    }
    for (row, &start) in eval.probs().rows().into_iter().zip(eval.start()) {
        if start == 3 {
            assert_eq!(row.to_vec(), vec![0.0, 0.0, 0.0, 1.0]);
        }
    }

    let report = recovery_report(&bundle, &spec).unwrap();
    assert_eq!(report.edges.len(), 6);
    assert!(report.total_ise().is_finite());
    let edge = report.edge("0->1").unwrap();
    assert!(edge.linear_error.iter().all(|e| e.abs() < 1.0), "{:?}", edge.linear_error);
}

#[test]
fn replicates_are_reproducible() {
    let spec = DgpSpec::standard(1500, 21).unwrap();
    let design = simulation_design();
    let cfg = quick_config(21);
    let a = transform_study_replicate(&spec, Some((&design, &cfg)), 200, spec.horizon).unwrap();
    let b = transform_study_replicate(&spec, Some((&design, &cfg)), 200, spec.horizon).unwrap();
    assert_eq!(a, b);
    assert!(a.recovery.is_some());
}
