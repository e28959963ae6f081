use super::*;
use crate::fractional::{Atom, DeltaTrain};
use crate::mittag_leffler;
use crate::spectral::{eigendecompose, OperatorSpec};
use proptest::prelude::*;
use std::f64::consts::PI;

fn setup(n: usize) -> (OperatorSpec, EigenDecomposition) {
    let spec = OperatorSpec::uniform(1.0, n, 1.0, 0.0).unwrap();
    let e = eigendecompose(&spec, None).unwrap();
    (spec, e)
}

fn smooth_f(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&x| (PI * x).sin() * (1.0 + 0.5 * x)).collect()
}

#[test]
fn zero_spatial_factor_gives_zero_observations() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 21).unwrap();
    let g = GridFunction::from_fn(grid, |t| t);
    let obs = ObservationSpec::interval(&spec, 0.4, 0.6).unwrap();
    let fmap = build_forward_map_f(&e, &g, 0.5, &obs, &grid).unwrap();
    assert!(fmap.apply(&vec![0.0; 31]).iter().all(|&v| v == 0.0));
    assert_eq!(fmap.n_rows(), 20 * obs.indices().len());
    assert!(matches!(
        build_forward_map_f(&e, &GridFunction::zeros(grid), 0.5, &obs, &grid),
        Err(FracError::DegenerateSource)
    ));
    let point = ObservationSpec::Point { index: 3 };
    assert!(build_forward_map_f(&e, &g, 0.5, &point, &grid).is_err());
}

#[test]
fn forward_map_columns_match_the_solver() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 21).unwrap();
    let g = GridFunction::from_fn(grid, |t| 1.0 + t);
    let obs = ObservationSpec::interval(&spec, 0.3, 0.6).unwrap();
    let fmap = build_forward_map_f(&e, &g, 0.6, &obs, &grid).unwrap();
    let f = smooth_f(&spec.nodes());
    let v = crate::forward::solve_modal_convolution(&e, &f, &g, 0.6, &grid).unwrap();
    let want = fmap.observe(&v).unwrap();
    let got = fmap.apply(&f);
    assert!(relative_error(&got, &want) < 1e-12);
    let modal = build_forward_map_f_modal(&e, &g, 0.6, &obs, &grid, 31).unwrap();
    let c = e.project(&f).unwrap();
    assert!(relative_error(&modal.apply(&c), &want) < 1e-12);
    assert!(relative_error(&modal.to_field(&c), &f) < 1e-12);
}

#[test]
fn full_observation_is_injective() {
    let (spec, e) = setup(15);
    let grid = TemporalGrid::new(1.0, 21).unwrap();
    let g = GridFunction::from_fn(grid, |_| 1.0);
    let obs = ObservationSpec::interval(&spec, 0.0, 1.0).unwrap();
    let fmap = build_forward_map_f(&e, &g, 0.5, &obs, &grid).unwrap();
    let rep = injectivity_report(&fmap);
    assert!(rep.numerically_unique, "{:?}", rep.singular_values);
    assert_eq!(rep.numerical_rank, 15);
    let f = smooth_f(&spec.nodes());
    let d = fmap.apply(&f);
    let rec = recover_f(&d, &fmap, &RegularizationSpec::ridge(0.0)).unwrap();
    assert!(relative_error(&rec.f, &f) < 1e-8);
}

#[test]
fn rank_deficient_map_without_regularization_is_refused() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 3).unwrap();
    let g = GridFunction::from_fn(grid, |_| 1.0);
    let obs = ObservationSpec::interval(&spec, 0.4, 0.5).unwrap();
    let fmap = build_forward_map_f(&e, &g, 0.5, &obs, &grid).unwrap();
    let d = vec![1.0; fmap.n_rows()];
    assert!(matches!(
        recover_f(&d, &fmap, &RegularizationSpec::ridge(0.0)),
        Err(FracError::Singular(_))
    ));
}

#[test]
fn zero_data_gives_zero_reconstruction() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 21).unwrap();
    let g = GridFunction::from_fn(grid, |t| t);
    let obs = ObservationSpec::interval(&spec, 0.4, 0.6).unwrap();
    let fmap = build_forward_map_f(&e, &g, 0.5, &obs, &grid).unwrap();
    let zeros = vec![0.0; fmap.n_rows()];
    for kind in [RegularizationKind::Ridge, RegularizationKind::RidgeOnDerivative] {
        for selection in [WeightSelection::Fixed, WeightSelection::Discrepancy { noise_level: 1e-3 }] {
            let reg = RegularizationSpec { kind, weight: 1e-8, selection };
            let rec = recover_f(&zeros, &fmap, &reg).unwrap();
            assert!(rec.f.iter().all(|&v| v == 0.0));
        }
    }
    let k = build_point_kernel(&e, &smooth_f(&spec.nodes()), 0.5, 15, &grid).unwrap();
    let rec = recover_mu_l2(&GridFunction::zeros(grid), &k, &RegularizationSpec::ridge(1e-10)).unwrap();
    assert!(rec.mu.values.iter().all(|&v| v == 0.0));
}

#[test]
fn modal_round_trip_with_inverse_crime_data() {
    let (spec, e) = setup(49);
    let grid = TemporalGrid::new(1.0, 51).unwrap();
    let g = GridFunction::from_fn(grid, |t| t * t);
    let obs = ObservationSpec::interval(&spec, 0.375, 0.625).unwrap();
    let fmap = build_forward_map_f_modal(&e, &g, 0.5, &obs, &grid, 3).unwrap();
    let x = spec.nodes();
    let f: Vec<f64> = x
        .iter()
        .map(|&x| (PI * x).sin() + 0.5 * (2.0 * PI * x).sin() + 0.2 * (3.0 * PI * x).sin())
        .collect();
    let d = fmap.apply(&e.project(&f).unwrap()[..3]);
    let rec = recover_f(&d, &fmap, &RegularizationSpec::ridge(0.0)).unwrap();
    assert!(relative_error(&rec.f, &f) < 1e-8);
}

#[test]
fn noisy_reconstruction_follows_the_discrepancy_principle() {
    let (spec, e) = setup(49);
    let grid = TemporalGrid::new(1.0, 51).unwrap();
    let gfun = |t: f64| t * t;
    let g = GridFunction::from_fn(grid, gfun);
    let obs = ObservationSpec::interval(&spec, 0.375, 0.625).unwrap();
    let fmap = build_forward_map_f(&e, &g, 0.5, &obs, &grid).unwrap();
    let f = smooth_f(&spec.nodes());
    let mut d = fmap.observe(&oracle_data(&spec, &f, gfun, 0.5, &grid).unwrap()).unwrap();
    let sigma = 0.01 * rms(&d);
    add_noise(&mut d, sigma, 7).unwrap();
    let reg = RegularizationSpec {
        kind: RegularizationKind::RidgeOnDerivative,
        weight: 0.0,
        selection: WeightSelection::Discrepancy { noise_level: sigma },
    };
    let rec = recover_f(&d, &fmap, &reg).unwrap();
    let target = sigma * (d.len() as f64).sqrt();
    assert!(rec.fit.discrepancy_met);
    assert!((rec.fit.residual / target - 1.0).abs() <= tolerances::DISCREPANCY_BAND);
    let err = relative_error(&rec.f, &f);
    assert!(err <= 0.1, "{err}");
}

#[test]
fn noise_is_reproducible() {
    let mut a = vec![0.0; 50];
    let mut b = vec![0.0; 50];
    add_noise(&mut a, 0.1, 3).unwrap();
    add_noise(&mut b, 0.1, 3).unwrap();
    assert_eq!(a, b);
    let mut c = vec![0.0; 50];
    add_noise(&mut c, 0.1, 4).unwrap();
    assert_ne!(a, c);
}

#[test]
fn single_mode_point_kernel() {
    let (_, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 41).unwrap();
    let x0 = 10;
    let k = build_point_kernel(&e, &e.modes[0], 0.5, x0, &grid).unwrap();
    assert!(k.sign_condition);
    let lam = e.lambdas[0];
    let p = e.modes[0][x0];
    for (i, v) in k.values.iter().enumerate().skip(1) {
        let t = grid.node(i);
        let want = crate::ml_kernel(0.5, lam, t).unwrap() * p;
        assert!((v - want).abs() < 1e-12 * want.abs());
        assert!(*v >= 0.0);
    }
    let sign_changing = build_point_kernel(&e, &e.modes[1], 0.5, x0, &grid).unwrap();
    assert!(!sign_changing.sign_condition);
}

#[test]
fn point_kernel_integral_identity() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 41).unwrap();
    let f = smooth_f(&spec.nodes());
    let x0 = 12;
    let k = build_point_kernel(&e, &f, 0.6, x0, &grid).unwrap();
    let c = e.project(&f).unwrap();
    let want: f64 = (0..31)
        .map(|n| (1.0 - mittag_leffler::eval(0.6, 1.0, -e.lambdas[n])) / e.lambdas[n] * c[n] * e.modes[n][x0])
        .sum();
    assert!((k.integral() - want).abs() < 1e-10 * want.abs());
}

#[test]
fn point_kernel_convolution_matches_forward_solver() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 41).unwrap();
    let f = smooth_f(&spec.nodes());
    let mu = GridFunction::from_fn(grid, |t| (3.0 * t).cos());
    let k = build_point_kernel(&e, &f, 0.4, 9, &grid).unwrap();
    let v = crate::forward::solve_modal_convolution(&e, &f, &mu, 0.4, &grid).unwrap();
    let got = k.convolve(&mu).unwrap();
    let want = v.column(9);
    assert!(relative_error(&got.values, &want) < 1e-12);
}

#[test]
fn smooth_temporal_factor_from_point_data() {
    let (spec, e) = setup(99);
    let grid = TemporalGrid::new(1.0, 101).unwrap();
    let f: Vec<f64> = spec.nodes().iter().map(|&x| (PI * x).sin()).collect();
    let x0 = 49;
    let mu = |t: f64| 1.0 + (2.0 * PI * t).sin();
    let d = GridFunction {
        grid,
        values: oracle_data(&spec, &f, mu, 0.5, &grid).unwrap().column(x0),
    };
    let k = build_point_kernel(&e, &f, 0.5, x0, &grid).unwrap();
    let reg = RegularizationSpec {
        kind: RegularizationKind::RidgeOnDerivative,
        weight: 1e-12,
        selection: WeightSelection::Fixed,
    };
    let rec = recover_mu_l2(&d, &k, &reg).unwrap();
    let truth: Vec<f64> = grid.nodes().iter().map(|&t| mu(t)).collect();
    let err = relative_error(&rec.mu.values[2..], &truth[2..]);
    assert!(err < tolerances::INVERSE_MU, "{err}");
}

#[test]
fn deconvolution_conditioning_by_mode() {
    // Single-mode kernels differ only in lambda; the faster decaying phi_2
    // kernel is closer to the identity and better conditioned.
    let (_, e) = setup(99);
    let grid = TemporalGrid::new(1.0, 101).unwrap();
    let cond = |m: usize| {
        let k = build_point_kernel(&e, &e.modes[m], 0.5, 24, &grid).unwrap();
        let d = k.convolve(&GridFunction::from_fn(grid, |t| 1.0 + t)).unwrap();
        recover_mu_l2(&d, &k, &RegularizationSpec::ridge(1e-12)).unwrap().condition_number
    };
    let (c1, c2) = (cond(0), cond(1));
    assert!(c1.is_finite() && c2.is_finite() && c1 > 1.0 && c2 > 1.0);
    assert!(c2 < c1, "cond phi_1 {c1}, cond phi_2 {c2}");
}

#[test]
fn single_atom_recovery_off_grid() {
    let (spec, e) = setup(49);
    let grid = TemporalGrid::new(1.0, 101).unwrap();
    let f = smooth_f(&spec.nodes());
    let k = build_point_kernel_of_order(&e, &f, 0.5, 1.25, 24, &grid).unwrap();
    let truth = DeltaTrain::new(vec![Atom { a: 0.41373, r: 1.7 }], 1.0).unwrap();
    let d = k.atom_response(&truth);
    let fit = recover_delta_train(&d, &k, 3, 1e-6).unwrap();
    let atoms = fit.atoms();
    assert_eq!(atoms.len(), 1, "{atoms:?}");
    assert!((atoms[0].a - 0.41373).abs() <= grid.step() / 2.0);
    assert!((atoms[0].r - 1.7).abs() / 1.7 <= 1e-3);
    assert!(fit.residual < 1e-6);
}

#[test]
fn zero_data_gives_empty_train() {
    let (spec, e) = setup(31);
    let grid = TemporalGrid::new(1.0, 41).unwrap();
    let k = build_point_kernel(&e, &smooth_f(&spec.nodes()), 0.5, 15, &grid).unwrap();
    let fit = recover_delta_train(&GridFunction::zeros(grid), &k, 4, 1e-3).unwrap();
    assert!(fit.train.is_none());
    let zero = build_point_kernel(&e, &vec![0.0; 31], 0.5, 15, &grid).unwrap();
    assert!(matches!(
        recover_delta_train(&GridFunction::zeros(grid), &zero, 4, 1e-3),
        Err(FracError::ZeroKernel)
    ));
}

#[test]
fn two_atoms_with_refined_space_data() {
    let (alpha, beta) = (0.5, 0.75);
    let grid = TemporalGrid::new(1.0, 101).unwrap();
    let truth = DeltaTrain::new(vec![Atom { a: 0.25, r: 2.0 }, Atom { a: 0.75, r: 3.0 }], 1.0).unwrap();
    // data: same point x = 0.5 on a grid twice as fine in space
    let (fine_spec, fine_e) = setup(199);
    let fine_k = build_point_kernel_of_order(&fine_e, &smooth_f(&fine_spec.nodes()), alpha, alpha + beta, 99, &grid).unwrap();
    let d = fine_k.atom_response(&truth);
    let (spec, e) = setup(99);
    let k = build_point_kernel_of_order(&e, &smooth_f(&spec.nodes()), alpha, alpha + beta, 49, &grid).unwrap();
    let fit = recover_delta_train(&d, &k, 4, 1e-3).unwrap();
    let atoms = fit.atoms();
    assert_eq!(atoms.len(), 2, "{atoms:?}");
    for (got, want) in atoms.iter().zip(truth.atoms()) {
        assert!((got.a - want.a).abs() <= grid.step());
        assert!((got.r - want.r).abs() / want.r <= tolerances::ATOM_WEIGHT);
    }
}

#[test]
fn separated_trains_are_distinguishable() {
    let (spec, e) = setup(49);
    let grid = TemporalGrid::new(1.0, 101).unwrap();
    let h = grid.step();
    let k = build_point_kernel_of_order(&e, &smooth_f(&spec.nodes()), 0.5, 1.25, 24, &grid).unwrap();
    let train = |a1: f64, a2: f64| DeltaTrain::new(vec![Atom { a: a1, r: 2.0 }, Atom { a: a2, r: 3.0 }], 1.0).unwrap();
    let base = k.atom_response(&train(0.25, 0.75));
    let mut smallest = f64::INFINITY;
    for (a1, a2) in [(0.25 + 5.0 * h, 0.75), (0.25, 0.75 - 5.0 * h), (0.3, 0.6), (0.25 - 5.0 * h, 0.75 + 5.0 * h)] {
        let other = k.atom_response(&train(a1, a2));
        let diff: Vec<f64> = other.values.iter().zip(&base.values).map(|(a, b)| a - b).collect();
        smallest = smallest.min(GridFunction { grid, values: diff }.l2_norm());
    }
    assert!(smallest > 1e-3 * base.l2_norm(), "{smallest}");
}

#[test]
fn injectivity_of_simple_maps() {
    let rep = InjectivityReport::from_matrix(&DMatrix::identity(5, 5));
    assert!(rep.singular_values.iter().all(|&s| (s - 1.0).abs() < 1e-15));
    assert!(rep.numerically_unique);
    let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let v = DVector::from_vec(vec![1.0, -1.0, 0.5, 2.0]);
    let rep = InjectivityReport::from_matrix(&(u * v.transpose()));
    assert_eq!(rep.numerical_rank, 1);
    assert!(!rep.numerically_unique);
}

#[test]
fn asymptotic_coefficient_matches_inverse_operator() {
    let (spec, e) = setup(99);
    let x0 = 49;
    let diag = asymptotic_diagnostic(&e, &e.modes[0], 0.5, x0, None).unwrap();
    assert!((diag.s - e.modes[0][x0] / e.lambdas[0]).abs() < 1e-12 * diag.s.abs());
    let f = smooth_f(&spec.nodes());
    for alpha in [0.3, 0.5, 0.8] {
        let diag = asymptotic_diagnostic(&e, &f, alpha, x0, None).unwrap();
        assert!(diag.s > 0.0);
        assert!(diag.relative_gap <= tolerances::ASYMPTOTIC_FIT, "alpha {alpha}: {diag:?}");
    }
    assert_eq!(max_principle_violations(&spec).unwrap(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn reconstructions_are_linear_in_the_data(c in -5.0f64..5.0, seed in 0u64..1000) {
        let (spec, e) = setup(15);
        let grid = TemporalGrid::new(1.0, 11).unwrap();
        let g = GridFunction::from_fn(grid, |t| 1.0 + t);
        let obs = ObservationSpec::interval(&spec, 0.3, 0.7).unwrap();
        let fmap = build_forward_map_f(&e, &g, 0.5, &obs, &grid).unwrap();
        let mut d = vec![0.0; fmap.n_rows()];
        add_noise(&mut d, 1.0, seed).unwrap();
        let reg = RegularizationSpec::ridge(1e-6);
        let a = recover_f(&d, &fmap, &reg).unwrap().f;
        let scaled: Vec<f64> = d.iter().map(|v| c * v).collect();
        let b = recover_f(&scaled, &fmap, &reg).unwrap().f;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((c * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
        let k = build_point_kernel(&e, &smooth_f(&spec.nodes()), 0.5, 7, &grid).unwrap();
        let mut m = vec![0.0; 11];
        add_noise(&mut m, 1.0, seed + 1).unwrap();
        let dm = GridFunction { grid, values: m.clone() };
        let sm = GridFunction { grid, values: m.iter().map(|v| c * v).collect() };
        let ra = recover_mu_l2(&dm, &k, &reg).unwrap().mu.values;
        let rb = recover_mu_l2(&sm, &k, &reg).unwrap().mu.values;
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert!((c * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }
}
