//! Values computed independently with numpy and frozen here.

use jbstar::algebra::{build_hermitian_matrix_algebra, build_spin_factor};
use jbstar::calculus::{jordan_spectrum, spectral_decomposition};
use jbstar::linalg::{hermitian_eig, operator_norm, real_roots, ComplexMatrix, Tolerance};
use jbstar::preserver::{additivity_witness, build_spin_counterexample, spin_u_expansion, spin_u_expansion_printed};
use num_complex::Complex64 as C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn sample_hermitian() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.5)],
        vec![c(1.0, 1.0), c(-1.0, 0.0), c(0.25, 0.0)],
        vec![c(0.0, -0.5), c(0.25, 0.0), c(0.5, 0.0)],
    ])
    .unwrap()
}

const SAMPLE_EIGENVALUES: [f64; 3] = [-1.6325680072478095, 0.4931506145024373, 2.639417392745373];

fn close(x: f64, y: f64, eps: f64) {
    assert!((x - y).abs() <= eps * (1.0 + y.abs()), "{x} vs {y}");
}

#[test]
fn jacobi_eigenvalues_match_numpy() {
    let eig = hermitian_eig(&sample_hermitian(), &Tolerance::default()).unwrap();
    for (x, y) in eig.values.iter().zip(SAMPLE_EIGENVALUES) {
        close(*x, y, 1e-12);
    }
}

#[test]
fn jordan_spectrum_matches_numpy() {
    let alg = build_hermitian_matrix_algebra(3, Tolerance::default()).unwrap();
    let a = alg.from_matrix(&sample_hermitian()).unwrap();
    let spec = jordan_spectrum(&alg, &a).unwrap();
    assert_eq!(spec.len(), 3);
    for (x, y) in spec.iter().zip(SAMPLE_EIGENVALUES) {
        close(*x, y, 1e-10);
    }
    close(alg.norm(&a), 2.639417392745373, 1e-12);
    let dec = spectral_decomposition(&alg, &a).unwrap();
    assert!(dec.residual < 1e-12);
}

#[test]
fn operator_norm_of_jordan_block() {
    let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 2.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
    close(operator_norm(&m), 2.414213562373095, 1e-12);
}

#[test]
fn spin_norms() {
    let alg = build_spin_factor(3, Tolerance::default()).unwrap();
    let a = alg.element(vec![c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)]).unwrap();
    close(alg.norm(&a), 3.0, 1e-12);
    let b = alg.element(vec![c(0.5, 0.0), c(0.0, 3.0), c(0.0, 4.0)]).unwrap();
    close(alg.norm(&b), 5.5, 1e-12);
}

#[test]
fn cubic_roots() {
    let roots = real_roots(&[-6.0, 11.0, -6.0, 1.0], &Tolerance::default()).unwrap();
    assert_eq!(roots.len(), 3);
    for (x, y) in roots.iter().zip([1.0, 2.0, 3.0]) {
        close(*x, y, 1e-10);
    }
}

#[test]
fn counterexample_constants() {
    let cx = build_spin_counterexample(3, 0.3, Tolerance::default()).unwrap();
    let (_, _, gap) = additivity_witness(&cx).unwrap();
    close(gap, 0.4226748673597425, 1e-10);
    assert_eq!(spin_u_expansion(1.0, 0.0, 1.0, 1.0), (4.0, 4.0));
    assert_eq!(spin_u_expansion_printed(1.0, 0.0, 1.0, 1.0), (3.0, 3.0));
}
