use jbstar::algebra::{build_hermitian_matrix_algebra, build_spin_factor, AlgebraHandle, Element};
use jbstar::calculus::{exp_i, jordan_spectrum, spectral_decomposition};
use jbstar::linalg::{hermitian_eig, operator_norm, poly_eval, real_roots, ComplexMatrix, Tolerance};
use jbstar::preserver::{unwarp_coordinates, warp_coordinates};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coords(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn self_adjoint(alg: &AlgebraHandle, c: Vec<C64>) -> Element {
    alg.real_part(&alg.element(c).unwrap())
}

fn h3() -> AlgebraHandle {
    build_hermitian_matrix_algebra(3, Tolerance::default()).unwrap()
}

proptest! {
    #[test]
    fn eig_reconstructs(c in coords(16)) {
        let m = ComplexMatrix::from_vec(4, 4, c).unwrap();
        let h = &m + &m.adjoint();
        let eig = hermitian_eig(&h, &Tolerance::default()).unwrap();
        let err = operator_norm(&(&eig.reconstruct() - &h));
        prop_assert!(err <= 1e-10 * (1.0 + operator_norm(&h)));
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn operator_norm_is_submultiplicative(a in coords(9), b in coords(9)) {
        let a = ComplexMatrix::from_vec(3, 3, a).unwrap();
        let b = ComplexMatrix::from_vec(3, 3, b).unwrap();
        prop_assert!(operator_norm(&a.matmul(&b)) <= operator_norm(&a) * operator_norm(&b) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn roots_of_products_of_linear_factors(mut r in prop::collection::vec(-5.0f64..5.0, 1..5)) {
        r.sort_by(f64::total_cmp);
        prop_assume!(r.windows(2).all(|w| w[1] - w[0] > 1e-2));
        let mut coeffs = vec![1.0];
        for &x in &r {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= x * c;
            }
            coeffs = next;
        }
        let roots = real_roots(&coeffs, &Tolerance::default()).unwrap();
        prop_assert_eq!(roots.len(), r.len());
        for (x, y) in roots.iter().zip(&r) {
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
            prop_assert!(poly_eval(&coeffs, *x).abs() < 1e-6);
        }
    }

    #[test]
    fn jordan_identity_in_spin(a in coords(5), b in coords(5)) {
        let alg = build_spin_factor(5, Tolerance::default()).unwrap();
        let (a, b) = (alg.element(a).unwrap(), alg.element(b).unwrap());
        let a2 = alg.sq(&a);
        let lhs = alg.prod(&alg.prod(&a, &b), &a2);
        let rhs = alg.prod(&a, &alg.prod(&b, &a2));
        let scale = (1.0 + alg.norm(&a)).powi(3) * (1.0 + alg.norm(&b));
        prop_assert!(alg.norm(&(&lhs - &rhs)) <= 1e-10 * scale);
    }

    #[test]
    fn exp_is_a_one_parameter_group(c in coords(9), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let alg = h3();
        let h = self_adjoint(&alg, c);
        let lhs = exp_i(&alg, &h, s + t).unwrap();
        let rhs = alg.prod(&exp_i(&alg, &h, s).unwrap(), &exp_i(&alg, &h, t).unwrap());
        prop_assert!(alg.norm(&(&lhs - &rhs)) < 1e-8);
    }

    #[test]
    fn spectral_decomposition_reconstructs(c in coords(9)) {
        let alg = h3();
        let a = self_adjoint(&alg, c);
        let dec = spectral_decomposition(&alg, &a).unwrap();
        let recon = dec.pairs.iter().fold(alg.zero(), |acc, (l, e)| &acc + &e.scale_re(*l));
        prop_assert!(alg.norm(&(&recon - &a)) <= 1e-9 * (1.0 + alg.norm(&a)));
        let spec = jordan_spectrum(&alg, &a).unwrap();
        prop_assert!((spec.last().unwrap().abs().max(spec[0].abs()) - alg.norm(&a)).abs() < 1e-8 * (1.0 + alg.norm(&a)));
    }

    #[test]
    fn warp_inverts(t1 in -4.0f64..4.0, t2 in -4.0f64..4.0, rest in prop::collection::vec(-4.0f64..4.0, 0..3), eps in 0.0f64..0.45) {
        let mut t = vec![t1, t2];
        t.extend(rest);
        let back = unwarp_coordinates(&warp_coordinates(&t, eps), eps);
        for (x, y) in back.iter().zip(&t) {
            prop_assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
        }
        let w = warp_coordinates(&t, eps);
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm(&w) - norm(&t)).abs() < 1e-12 * (1.0 + norm(&t)));
    }
}
