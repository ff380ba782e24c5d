//! Finitely additive measures on projection lattices and the desk-scale
//! linearity theorem for homogeneous, operator-commuting additive maps.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraHandle, AlgebraKind, Element};
use crate::calculus::{is_factor, operator_commutes, spectral_decomposition};
use crate::error::{Error, Result};
use crate::linalg::{solve_least_squares, svd, ComplexMatrix};
use crate::preserver::MapUnderTest;
use crate::report::{CheckReport, Tracker, Witness};
use crate::sample::{
    child_rng, normal, orthogonal_projections, random_projection, random_self_adjoint, rng_from_seed, OcSampler,
    SampleRng,
};

/// A real function on the self-adjoint part with values in `R^m` (max-norm).
pub type SaFunction = Arc<dyn Fn(&Element) -> Result<Vec<f64>> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum I2Policy {
    /// Any type I2 summand aborts a theorem-grade run.
    #[default]
    Refuse,
    /// Mixed sums run with a note; a pure type I2 algebra is still refused.
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    TheoremGrade,
    Exploratory,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Orthonormal basis of the self-adjoint part for the real inner product
/// `Re <x, y>` on coordinates. Its length equals the complex dimension.
pub fn sa_basis(alg: &AlgebraHandle) -> Vec<Element> {
    let mut out: Vec<Element> = Vec::with_capacity(alg.dim());
    for e in alg.basis_elements() {
        for c in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
            let mut v = alg.real_part(&e.scale(c));
            for _ in 0..2 {
                for b in &out {
                    v = &v - &b.scale_re(b.coord_inner(&v).re);
                }
            }
            let n = v.coord_norm();
            if n > 1e-8 {
                out.push(v.scale_re(1.0 / n));
            }
        }
    }
    out
}

pub fn sa_coords(basis: &[Element], a: &Element) -> Vec<f64> {
    basis.iter().map(|b| b.coord_inner(a).re).collect()
}

pub fn from_sa_coords(alg: &AlgebraHandle, basis: &[Element], x: &[f64]) -> Element {
    basis.iter().zip(x).fold(alg.zero(), |acc, (b, &t)| &acc + &b.scale_re(t))
}

fn leaf_parts(alg: &AlgebraHandle, out: &mut Vec<AlgebraHandle>) {
    match alg.kind() {
        AlgebraKind::DirectSum { parts } => parts.iter().for_each(|p| leaf_parts(p, out)),
        _ => out.push(alg.clone()),
    }
}

/// Whether a factor satisfies the spin identity `a o a in span{a, 1}` on
/// sampled self-adjoint elements.
fn spin_identity_holds(part: &AlgebraHandle) -> bool {
    if part.dim() < 3 || !is_factor(part) {
        return false;
    }
    let mut rng = rng_from_seed(0x12_5eed);
    let one = part.unit();
    let one_n = one.scale_re(1.0 / one.coord_norm());
    for _ in 0..6 {
        let a = random_self_adjoint(part, &mut rng);
        let a0 = &a - &one_n.scale(one_n.coord_inner(&a));
        let n0 = a0.coord_norm();
        if n0 < 1e-12 {
            continue;
        }
        let a0 = a0.scale_re(1.0 / n0);
        let sq = part.sq(&a0);
        let r = &(&sq - &one_n.scale(one_n.coord_inner(&sq))) - &a0.scale(a0.coord_inner(&sq));
        if r.coord_norm() > 1e-8 * (1.0 + sq.coord_norm()) {
            return false;
        }
    }
    true
}

/// Labels of the type I2 summands (spin factors, including `H_2`).
pub fn detect_type_i2(alg: &AlgebraHandle) -> Vec<String> {
    let mut leaves = Vec::new();
    leaf_parts(alg, &mut leaves);
    leaves.iter().filter(|p| spin_identity_holds(p)).map(|p| p.label()).collect()
}

/// Reads a map on self-adjoint elements as a function into `R^m`, through
/// an orthonormal basis of the target's self-adjoint part.
pub fn sa_function_of_map(m: &MapUnderTest) -> SaFunction {
    let basis = sa_basis(&m.target);
    let m = m.clone();
    Arc::new(move |a: &Element| Ok(sa_coords(&basis, &m.apply(a)?)))
}

/// A random real-linear map `A_sa -> R^m` together with its matrix in the
/// basis of [`sa_basis`].
pub fn random_linear_map(alg: &AlgebraHandle, m: usize, seed: u64) -> (SaFunction, Vec<Vec<f64>>) {
    let basis = sa_basis(alg);
    let mut rng = rng_from_seed(seed);
    let mat: Vec<Vec<f64>> = (0..m).map(|_| (0..basis.len()).map(|_| normal(&mut rng)).collect()).collect();
    (linear_function(alg, mat.clone()), mat)
}

/// The linear map with the given matrix in the basis of [`sa_basis`].
pub fn linear_function(alg: &AlgebraHandle, mat: Vec<Vec<f64>>) -> SaFunction {
    let basis = sa_basis(alg);
    Arc::new(move |a: &Element| {
        let x = sa_coords(&basis, a);
        Ok(mat.iter().map(|row| row.iter().zip(&x).map(|(r, v)| r * v).sum()).collect())
    })
}

/// `a -> Re <1, a>`, the (unnormalized) trace.
pub fn trace_functional(alg: &AlgebraHandle) -> SaFunction {
    let one = alg.unit();
    Arc::new(move |a: &Element| Ok(vec![one.coord_inner(a).re]))
}

#[derive(Clone)]
pub struct ProjectionMeasure {
    pub algebra: AlgebraHandle,
    eval: SaFunction,
    pub bound: f64,
    /// Worst `||mu(p + q) - mu(p) - mu(q)||` relative to `1 + ||mu(p)|| + ||mu(q)||`.
    pub additivity_residual: f64,
    pub out_dim: usize,
}

impl std::fmt::Debug for ProjectionMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionMeasure")
            .field("algebra", &self.algebra)
            .field("bound", &self.bound)
            .field("additivity_residual", &self.additivity_residual)
            .field("out_dim", &self.out_dim)
            .finish()
    }
}

impl ProjectionMeasure {
    pub fn eval(&self, p: &Element) -> Result<Vec<f64>> {
        (self.eval)(p)
    }
}

/// Restriction of `f` to projections without rejecting non-additive input.
pub fn measure_unchecked(alg: &AlgebraHandle, f: SaFunction, bound_probe: usize, seed: u64) -> Result<ProjectionMeasure> {
    let mut rng = rng_from_seed(seed);
    let one = alg.unit();
    let out_dim = f(&one)?.len();
    let mut bound = max_norm(&f(&one)?);
    let mut worst: f64 = 0.0;
    for _ in 0..bound_probe.max(1) {
        let mut r = child_rng(&mut rng);
        let (p, q) = orthogonal_projections(alg, &mut r);
        let p2 = random_projection(alg, &mut r);
        let q2 = &one - &p2;
        for (p, q) in [(p, q), (p2, q2)] {
            let fp = f(&p)?;
            let fq = f(&q)?;
            let fpq = f(&(&p + &q))?;
            if fp.len() != out_dim || fq.len() != out_dim || fpq.len() != out_dim {
                return Err(Error::DimensionMismatch { expected: out_dim, found: fp.len() });
            }
            let sum: Vec<f64> = fp.iter().zip(&fq).map(|(x, y)| x + y).collect();
            let res = max_norm(&diff(&fpq, &sum)) / (1.0 + max_norm(&fp) + max_norm(&fq));
            worst = worst.max(if res.is_nan() { f64::INFINITY } else { res });
            bound = bound.max(max_norm(&fp)).max(max_norm(&fq));
        }
    }
    Ok(ProjectionMeasure { algebra: alg.clone(), eval: f, bound, additivity_residual: worst, out_dim })
}

/// `mu = f` restricted to projections, with finite additivity checked on
/// orthogonal pairs from common spectral decompositions.
pub fn measure_from_map(alg: &AlgebraHandle, f: SaFunction, bound_probe: usize, seed: u64) -> Result<ProjectionMeasure> {
    let mu = measure_unchecked(alg, f, bound_probe, seed)?;
    if mu.additivity_residual > 1e-8 {
        return Err(Error::AdditivityViolation { residual: mu.additivity_residual });
    }
    Ok(mu)
}

fn embed_part(alg: &AlgebraHandle, k: usize, x: &Element) -> Result<Element> {
    if !matches!(alg.kind(), AlgebraKind::DirectSum { .. }) {
        return alg.adopt(x);
    }
    let comps: Vec<Element> = alg
        .parts()
        .iter()
        .enumerate()
        .map(|(j, p)| if j == k { x.clone() } else { p.zero() })
        .collect();
    alg.from_components(&comps)
}

/// Matrix-unit projections of hermitian-matrix summands and `(1 +- s)/2`
/// for the coordinate symmetries of spin summands.
pub fn canonical_projections(alg: &AlgebraHandle) -> Result<Vec<Element>> {
    let mut out = Vec::new();
    let half = C64::new(0.5, 0.0);
    for (k, part) in alg.parts().iter().enumerate() {
        match part.kind() {
            AlgebraKind::HermitianMatrix { n } => {
                let n = *n;
                let unit = |i: usize, j: usize, z: C64| {
                    let mut m = ComplexMatrix::zeros(n, n);
                    m[(i, j)] = z;
                    m
                };
                for i in 0..n {
                    out.push(embed_part(alg, k, &part.from_matrix(&unit(i, i, C64::new(1.0, 0.0)))?)?);
                    for j in i + 1..n {
                        let diag = &unit(i, i, half) + &unit(j, j, half);
                        let re = &diag + &(&unit(i, j, half) + &unit(j, i, half));
                        let im = &diag + &(&unit(i, j, C64::new(0.0, -0.5)) + &unit(j, i, C64::new(0.0, 0.5)));
                        out.push(embed_part(alg, k, &part.from_matrix(&re)?)?);
                        out.push(embed_part(alg, k, &part.from_matrix(&im)?)?);
                    }
                }
            }
            AlgebraKind::Spin { .. } => {
                for j in 1..part.dim() {
                    let s = part.basis(j).scale(C64::new(0.0, 1.0));
                    for sign in [1.0, -1.0] {
                        let p = (&part.unit() + &s.scale_re(sign)).scale_re(0.5);
                        out.push(embed_part(alg, k, &p)?);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Linear map `T: A_sa -> R^m` fitted to a measure's values on projections.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    /// `m x d` matrix in the basis of [`sa_basis`].
    pub t: Vec<Vec<f64>>,
    /// Largest data misfit `|T p - mu(p)|` over the fitted projections.
    pub misfit: f64,
    pub samples: usize,
    /// Smallest singular value over largest for the design matrix.
    pub conditioning: f64,
}

impl Reconstruction {
    pub fn apply(&self, coords: &[f64]) -> Vec<f64> {
        self.t.iter().map(|row| row.iter().zip(coords).map(|(r, x)| r * x).sum()).collect()
    }
}

pub fn linear_reconstruction(mu: &ProjectionMeasure, probes: usize, seed: u64) -> Result<Reconstruction> {
    let alg = &mu.algebra;
    let basis = sa_basis(alg);
    let d = basis.len();
    let mut projections = canonical_projections(alg)?;
    projections.push(alg.unit());
    let mut rng = rng_from_seed(seed);
    for _ in 0..probes {
        projections.push(random_projection(alg, &mut rng));
    }
    let n = projections.len();
    let mut x = ComplexMatrix::zeros(n, d);
    let mut y = ComplexMatrix::zeros(n, mu.out_dim);
    for (i, p) in projections.iter().enumerate() {
        for (j, v) in sa_coords(&basis, p).into_iter().enumerate() {
            x[(i, j)] = C64::new(v, 0.0);
        }
        for (j, v) in mu.eval(p)?.into_iter().enumerate() {
            y[(i, j)] = C64::new(v, 0.0);
        }
    }
    let dec = svd(&x)?;
    let largest = dec.singular_values.first().copied().unwrap_or(0.0);
    let smallest = if dec.singular_values.len() < d { 0.0 } else { dec.singular_values[d - 1] };
    if largest == 0.0 || smallest <= 1e-9 * largest {
        return Err(Error::ProjectionsDoNotSpan);
    }
    let ls = solve_least_squares(&x, &y, alg.tol())?;
    let fit = x.matmul(&ls.solution);
    let misfit = (&fit - &y).max_abs();
    let t = (0..mu.out_dim).map(|r| (0..d).map(|c| ls.solution[(c, r)].re).collect()).collect();
    Ok(Reconstruction { t, misfit, samples: n, conditioning: smallest / largest })
}

fn type_i2_gate(alg: &AlgebraHandle, mode: Mode, policy: I2Policy) -> Result<Option<String>> {
    let flagged = detect_type_i2(alg);
    if flagged.is_empty() {
        return Ok(None);
    }
    let mut leaves = Vec::new();
    leaf_parts(alg, &mut leaves);
    let all = flagged.len() == leaves.len();
    if mode == Mode::TheoremGrade && (policy == I2Policy::Refuse || all) {
        return Err(Error::TypeI2Present);
    }
    Ok(Some(format!("type I2 summands present: {}", flagged.join(", "))))
}

fn unit_sa(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let a = random_self_adjoint(alg, rng);
    a.scale_re(1.0 / alg.norm(&a).max(f64::MIN_POSITIVE))
}

/// Hypotheses (homogeneity, operator-commuting additivity, boundedness),
/// then reconstruction of a linear `T` from the projection measure, the
/// spectral-sum identity, and agreement of `f` with `T` on random elements.
pub fn verify_linearity_theorem(
    alg: &AlgebraHandle,
    f: SaFunction,
    trials: usize,
    seed: u64,
    mode: Mode,
    policy: I2Policy,
) -> Result<CheckReport> {
    let note = type_i2_gate(alg, mode, policy)?;
    let basis = sa_basis(alg);
    let mut rng = rng_from_seed(seed);
    let sampler = OcSampler::default_for(alg);

    let mut homogeneity: f64 = 0.0;
    let mut oc_additivity: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for _ in 0..trials {
        let mut r = child_rng(&mut rng);
        let a = unit_sa(alg, &mut r);
        let fa = f(&a)?;
        bound = bound.max(max_norm(&fa));
        for t in [-2.0, -0.5, 3.0] {
            let fta = f(&a.scale_re(t))?;
            let scaled: Vec<f64> = fa.iter().map(|x| t * x).collect();
            homogeneity = homogeneity.max(max_norm(&diff(&fta, &scaled)) / (1.0 + max_norm(&fa) * t.abs()));
        }
        let (p, q) = sampler.sample(alg, &mut r)?;
        let oc = operator_commutes(alg, &p, &q)?;
        if !oc.commutes {
            return Err(Error::SamplerViolation { residual: oc.residual });
        }
        let (fp, fq, fpq) = (f(&p)?, f(&q)?, f(&(&p + &q))?);
        let sum: Vec<f64> = fp.iter().zip(&fq).map(|(x, y)| x + y).collect();
        oc_additivity = oc_additivity.max(max_norm(&diff(&fpq, &sum)) / (1.0 + max_norm(&fp) + max_norm(&fq)));
    }
    let hypotheses_hold = homogeneity <= 1e-8 && oc_additivity <= 1e-8;
    if mode == Mode::TheoremGrade && !hypotheses_hold {
        return Err(Error::HypothesisFailed(format!(
            "homogeneity defect {homogeneity:.3e}, operator-commuting additivity defect {oc_additivity:.3e}"
        )));
    }

    let mu = match mode {
        Mode::TheoremGrade => measure_from_map(alg, f.clone(), trials.clamp(4, 50), seed ^ 0xa5a5)?,
        Mode::Exploratory => measure_unchecked(alg, f.clone(), trials.clamp(4, 50), seed ^ 0xa5a5)?,
    };
    let rec = linear_reconstruction(&mu, (4 * basis.len()).max(20), seed ^ 0x5a5a)?;
    let scale = 1.0 + bound.max(mu.bound);
    let mut t = Tracker::new(format!("linearity theorem [{}]", alg.label()), 1e-7 * scale);
    t.record(rec.misfit, || Witness::new("reconstruction misfit on projections", rec.misfit));
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let a = unit_sa(alg, &mut r);
        let fa = f(&a)?;
        let dec = spectral_decomposition(alg, &a)?;
        let mut spectral = vec![0.0; fa.len()];
        for (alpha, p) in &dec.pairs {
            for (s, v) in spectral.iter_mut().zip(f(p)?) {
                *s += alpha * v;
            }
        }
        let sres = max_norm(&diff(&fa, &spectral));
        t.metric_max("spectral_identity", sres);
        let tres = max_norm(&diff(&fa, &rec.apply(&sa_coords(&basis, &a))));
        t.metric_max("agreement", tres);
        let res = sres.max(tres);
        t.record(res, || Witness::new("f differs from its linear reconstruction", res).with("a", &a));
    }
    t.metric("misfit", rec.misfit);
    t.metric("homogeneity", homogeneity);
    t.metric("oc_additivity", oc_additivity);
    t.metric("bound", bound);
    t.metric("measure_additivity", mu.additivity_residual);
    t.metric("conditioning", rec.conditioning);
    if let Some(n) = note {
        t.note(n);
    }
    if mode == Mode::Exploratory {
        t.note("exploratory mode: hypotheses recorded, not enforced");
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_direct_sum, build_hermitian_matrix_algebra, build_spin_factor};
    use crate::linalg::Tolerance;

    fn h(n: usize) -> AlgebraHandle {
        build_hermitian_matrix_algebra(n, Tolerance::default()).unwrap()
    }

    #[test]
    fn sa_basis_has_complex_dimension() {
        for alg in [h(3), build_spin_factor(4, Tolerance::default()).unwrap()] {
            let b = sa_basis(&alg);
            assert_eq!(b.len(), alg.dim());
            for x in &b {
                assert!(alg.self_adjoint_residual(x) < 1e-12);
            }
        }
    }

    #[test]
    fn detector_flags_h2_and_spin_only() {
        assert_eq!(detect_type_i2(&h(2)).len(), 1);
        assert!(detect_type_i2(&h(3)).is_empty());
        assert!(detect_type_i2(&h(1)).is_empty());
        assert_eq!(detect_type_i2(&build_spin_factor(5, Tolerance::default()).unwrap()).len(), 1);
        let mixed = build_direct_sum(vec![h(3), h(2)]).unwrap();
        assert_eq!(detect_type_i2(&mixed), vec!["H2".to_string()]);
    }

    #[test]
    fn trace_is_reconstructed_as_trace() {
        let alg = h(3);
        let mu = measure_from_map(&alg, trace_functional(&alg), 10, 1).unwrap();
        let rec = linear_reconstruction(&mu, 20, 2).unwrap();
        assert!(rec.misfit < 1e-10);
        let basis = sa_basis(&alg);
        let mut rng = rng_from_seed(3);
        let a = random_self_adjoint(&alg, &mut rng);
        let tr = alg.to_matrix(&a).unwrap().trace().re;
        assert!((rec.apply(&sa_coords(&basis, &a))[0] - tr).abs() < 1e-9);
    }

    #[test]
    fn norm_times_unit_is_not_additive() {
        let alg = h(3);
        let f: SaFunction = {
            let a2 = alg.clone();
            Arc::new(move |a: &Element| Ok(vec![a2.norm(a)]))
        };
        assert!(matches!(measure_from_map(&alg, f, 10, 4), Err(Error::AdditivityViolation { .. })));
    }

    #[test]
    fn reconstruction_is_idempotent() {
        let alg = h(3);
        let (f, _) = random_linear_map(&alg, 3, 9);
        let mu = measure_from_map(&alg, f, 5, 1).unwrap();
        let rec = linear_reconstruction(&mu, 20, 2).unwrap();
        let again = linear_reconstruction(
            &measure_from_map(&alg, linear_function(&alg, rec.t.clone()), 5, 1).unwrap(),
            20,
            3,
        )
        .unwrap();
        for (r1, r2) in rec.t.iter().zip(&again.t) {
            for (x, y) in r1.iter().zip(r2) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn linear_maps_pass_and_max_eigenvalue_is_rejected() {
        let alg = h(3);
        let (f, _) = random_linear_map(&alg, 3, 11);
        let rep = verify_linearity_theorem(&alg, f, 20, 5, Mode::TheoremGrade, I2Policy::Refuse).unwrap();
        assert!(rep.passed, "{}", rep.summary_line());
        assert!(rep.metric("misfit").unwrap() < 1e-7);

        let a2 = alg.clone();
        let lmax: SaFunction = Arc::new(move |a: &Element| {
            Ok(vec![crate::calculus::jordan_spectrum(&a2, a)?.last().copied().unwrap_or(0.0)])
        });
        let out = verify_linearity_theorem(&alg, lmax, 20, 5, Mode::TheoremGrade, I2Policy::Refuse);
        assert!(matches!(out, Err(Error::HypothesisFailed(_))));
    }

    #[test]
    fn theorem_grade_refuses_type_i2() {
        let alg = h(2);
        let (f, _) = random_linear_map(&alg, 2, 1);
        let out = verify_linearity_theorem(&alg, f.clone(), 5, 1, Mode::TheoremGrade, I2Policy::Refuse);
        assert!(matches!(out, Err(Error::TypeI2Present)));
        let mixed = build_direct_sum(vec![h(3), h(2)]).unwrap();
        let (g, _) = random_linear_map(&mixed, 2, 1);
        let rep = verify_linearity_theorem(&mixed, g, 10, 1, Mode::TheoremGrade, I2Policy::Warn).unwrap();
        assert!(rep.passed && !rep.notes.is_empty());
    }
}
