use gram_spectra::forms::TernaryForm;
use gram_spectra::gram::{self, GramTensor, Subspace};
use gram_spectra::linalg::{self, C64};
use gram_spectra::report::{format_float, QuarticInput, Tolerances};
use gram_spectra::spectra::{self, SdpProblem};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<C64>> {
    proptest::collection::vec((finite(), finite()), rows * cols)
        .prop_map(move |v| DMatrix::from_iterator(rows, cols, v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn sym6() -> impl Strategy<Value = GramTensor> {
    proptest::collection::vec(finite(), 36)
        .prop_map(|v| GramTensor::from_real_matrix(&DMatrix::from_column_slice(6, 6, &v)))
}

fn quartic() -> impl Strategy<Value = TernaryForm> {
    proptest::collection::vec(finite(), 15).prop_map(|v| TernaryForm::from_real(4, &v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_reconstructs(m in complex_matrix(6, 4), rank in 1usize..4) {
        // force a rank deficiency
        let m = DMatrix::from_fn(6, 4, |i, j| if j < rank { m[(i, j)] } else { m[(i, 0)] * (j as f64) });
        let s = linalg::svd(&m);
        let sigma = DMatrix::from_fn(s.u.ncols(), s.v_adj.nrows(), |i, j| if i == j { C64::new(s.singular[i], 0.0) } else { C64::new(0.0, 0.0) });
        let back = &s.u * sigma * &s.v_adj;
        prop_assert!((back - &m).norm() <= 1e-10 * (1.0 + m.norm()));
        prop_assert!(s.singular.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(linalg::numerical_rank(&s.singular, 1e-10), rank);
    }

    #[test]
    fn gram_map_is_linear(a in sym6(), b in sym6(), s in finite(), t in finite()) {
        let lhs = gram::gram_map(&a.scale(s).add(&b.scale(t)));
        let rhs = gram::gram_map(&a).scale(C64::new(s, 0.0)).add(&gram::gram_map(&b).scale(C64::new(t, 0.0)));
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn pencil_stays_in_the_fiber(f in quartic(), lambda in proptest::array::uniform6(finite())) {
        let pencil = gram::gram_pencil(&f);
        let g = pencil.at(&lambda);
        prop_assert!(gram::gram_residual(&g, &f) <= 1e-12);
        let back = pencil.coordinates(&g);
        for k in 0..6 {
            prop_assert!((back[k] - lambda[k]).abs() <= 1e-9 * (1.0 + lambda[k].abs()));
        }
    }

    #[test]
    fn five_dimensional_spaces_have_even_codimension(v in proptest::collection::vec(finite(), 30)) {
        let b = DMatrix::from_iterator(6, 5, v.into_iter().map(|x| C64::new(x, 0.0)));
        let u = Subspace::span(&b, 1e-9);
        prop_assume!(u.dim() == 5);
        let codim = 15 - gram::square_space(&u).dim();
        prop_assert!(codim == 0 || codim == 2);
    }

    #[test]
    fn face_dimension_of_low_rank_tensors(v in proptest::collection::vec(finite(), 6 * 4), r in 1usize..5) {
        let a = DMatrix::from_iterator(6, 4, v).columns(0, r).into_owned();
        let theta = GramTensor::from_real_matrix(&(&a * a.transpose()));
        let face = gram::FaceDescriptor::of_image(gram::image(&theta, 1e-9));
        prop_assume!(face.rank == r);
        // Sym²U has dimension C(r+1, 2) and μ maps it onto a space of dimension ≤ 15
        let sym = r * (r + 1) / 2;
        prop_assert!(face.face_dim <= sym);
        prop_assert!(face.face_dim + 15 >= sym);
    }

    #[test]
    fn inputs_round_trip(v in proptest::array::uniform15(-1e6..1e6f64), seed in proptest::option::of(0u64..1000)) {
        let input = QuarticInput { coeffs: v, seed, tolerances: Tolerances::default() };
        let text = input.to_toml();
        let parsed = QuarticInput::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &input);
        prop_assert_eq!(parsed.to_toml(), text);
    }

    #[test]
    fn floats_print_with_full_precision(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solver_outputs_are_feasible_and_optimal(seed in 0u64..10_000, obj in 0usize..100) {
        let f = gram::random_sos_quartic(seed);
        let pencil = gram::gram_pencil(&f);
        let objective = spectra::sample_objective(seed, obj);
        let sample = spectra::sdp_minimize(&f, &SdpProblem { pencil: pencil.clone(), objective: objective.clone() }, 1e-9).unwrap();
        let g = &sample.tensor;
        prop_assert!(g.min_eigenvalue() >= -1e-9 * g.norm());
        prop_assert!(gram::gram_residual(g, &f) <= 1e-8);
        prop_assert!(sample.kkt <= 1e-9);
        prop_assert!((3..=5).contains(&sample.face.rank));
        let interior = pencil.at(&spectra::interior_point(&pencil).unwrap());
        let at_interior = objective.component_mul(&interior.real_matrix()).sum();
        prop_assert!(sample.objective <= at_interior + 1e-9);
    }
}
