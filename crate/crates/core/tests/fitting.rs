mod common;

use common::newton_logit;
use msm_core::design::{design_rows, network_inputs, project_out, DesignSpec, SplineTerm};
use msm_core::fit::{fit_frame, FitConfig};
use msm_core::frame::{Frame, FrameColumn};
use msm_core::linalg::thin_qr;
use msm_core::panel::Edge;
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Fixture {
    frame: Frame,
    labels: Vec<f64>,
    names: Vec<String>,
}

/// Logistic data with `p` standard normal covariates and coefficients in [-1, 1].
fn fixture(seed: u64, n: usize, p: usize, nonlinear: bool) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..p).map(|j| format!("c{j}")).collect();
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.7..1.7)).collect()).collect();
    let coef: Vec<f64> = (0..=p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels = (0..n)
        .map(|i| {
            let mut eta = coef[0] + (0..p).map(|j| coef[j + 1] * cols[j][i]).sum::<f64>();
            if nonlinear {
                eta += 2.0 * (3.0 * cols[0][i]).sin();
            }
            f64::from(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())))
        })
        .collect();
    let mut frame = Frame::new(n);
    for (name, col) in names.iter().zip(cols) {
        frame = frame.with_column(name.clone(), FrameColumn::Numeric(col)).unwrap();
    }
    Fixture { frame, labels, names }
}

fn linear_spec(names: &[String]) -> DesignSpec {
    DesignSpec { linear_terms: names.to_vec(), standardise: false, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn structured_only_matches_plain_newton(seed in any::<u64>(), n in 100usize..=200, p in 0usize..=4) {
        let fx = fixture(seed, n, p, false);
        let positives = fx.labels.iter().filter(|&&y| y > 0.5).count();
        prop_assume!(positives > 5 && positives < n - 5);
        let spec = linear_spec(&fx.names);
        let groups: Vec<usize> = (0..n).collect();
        let model = fit_frame(Edge(0, 1), &fx.frame, &fx.labels, &groups, &spec, &FitConfig::structured_only(), None).unwrap();

        let mut x = Array2::ones((n, p + 1));
        for (j, name) in fx.names.iter().enumerate() {
            x.column_mut(j + 1).assign(&Array1::from(fx.frame.numeric(name).unwrap().to_vec()));
        }
        let oracle = newton_logit(&x, &fx.labels);
        prop_assert!((model.coefficient("(Intercept)").unwrap() - oracle[0]).abs() < 1e-4);
        for (j, name) in fx.names.iter().enumerate() {
            prop_assert!((model.coefficient(name).unwrap() - oracle[j + 1]).abs() < 1e-4);
        }
    }

    #[test]
    fn projector_is_idempotent_and_annihilates_the_design(seed in any::<u64>(), n in 5usize..60, m in 1usize..5, k in 1usize..4) {
        prop_assume!(n >= m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, m), |_| rng.random_range(-3.0..3.0));
        let u = Array2::from_shape_fn((n, k), |_| rng.random_range(-3.0..3.0));
        let q = thin_qr(&x).q;
        let once = project_out(&q, &u).unwrap();
        let twice = project_out(&q, &once).unwrap();
        prop_assert!(once.iter().zip(&twice).all(|(a, b)| (a - b).abs() < 1e-10));
        prop_assert!(x.t().dot(&once).iter().all(|v| v.abs() < 1e-10));
        prop_assert!(project_out(&q, &x).unwrap().iter().all(|v| v.abs() < 1e-10));
    }
}

fn small_semi_config(seed: u64) -> FitConfig {
    let mut cfg = FitConfig { seed, batch_size: 64, max_epochs: 15, patience: 5, ..FitConfig::default() };
    cfg.network.hidden = vec![16, 8];
    cfg
}

/// Largest `|x_jᵀ e| / (‖x_j‖ ‖e‖)` over design columns.
fn normalised_alignment(x: &Array2<f64>, e: &Array1<f64>) -> f64 {
    let e_norm = e.dot(e).sqrt();
    x.axis_iter(Axis(1)).map(|c| c.dot(e).abs() / (c.dot(&c).sqrt() * e_norm)).fold(0.0, f64::max)
}

#[test]
fn semi_structured_fits_leave_an_orthogonal_network_term() {
    for seed in 0..4 {
        let fx = fixture(seed, 600, 2, true);
        let spec = DesignSpec {
            linear_terms: vec!["c1".into()],
            spline_terms: vec![SplineTerm::new("c0", 6)],
            network_inputs: fx.names.clone(),
            standardise: false,
            ..Default::default()
        };
        // one group means no subject can be held out, so every row trains
        let groups = vec![0; 600];
        let model =
            fit_frame(Edge(0, 1), &fx.frame, &fx.labels, &groups, &spec, &small_semi_config(seed), None).unwrap();
        assert_eq!(model.metadata.n_validation, 0);
        let reported = model.metadata.orthogonality.unwrap();
        assert!(reported < 1e-6, "reported alignment {reported}");

        let x = design_rows(&model.design_spec, &fx.frame, &model.preprocess).unwrap();
        let e = model.unstructured_eta(&fx.frame).unwrap();
        assert!(e.dot(&e) > 0.0);
        assert!(normalised_alignment(&x, &e) < 1e-6);
        // the full predictor is unchanged by moving mass into the coefficients
        let total = model.predict_eta(&fx.frame).unwrap();
        let split = model.structured_eta(&fx.frame).unwrap() + &e;
        assert!(total.iter().zip(&split).all(|(a, b)| (a - b).abs() < 1e-10));
        assert_eq!(network_inputs(&model.design_spec, &fx.frame, &model.preprocess).unwrap().ncols(), 2);
    }
}

#[test]
fn fitting_is_deterministic_per_seed() {
    let fx = fixture(11, 400, 2, true);
    let spec = DesignSpec { linear_terms: fx.names.clone(), network_inputs: fx.names.clone(), ..Default::default() };
    let groups: Vec<usize> = (0..400).map(|i| i / 4).collect();
    let fit =
        |seed| fit_frame(Edge(0, 1), &fx.frame, &fx.labels, &groups, &spec, &small_semi_config(seed), None).unwrap();
    let (a, b, c) = (fit(3), fit(3), fit(4));
    assert_eq!(a.beta, b.beta);
    assert_eq!(a.network, b.network);
    assert_ne!(a.beta, c.beta);
}
