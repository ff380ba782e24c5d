//! Unitaries, symmetries, logarithms and the unitary-group checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{AlgebraHandle, Element};
use crate::calculus::{apply_decomposition, exp_i, mult_operator, operator_commutes, spectral_decomposition, u_op};
use crate::error::{Error, Result};
use crate::linalg::operator_norm;
use crate::report::{CheckReport, Tracker, Witness};
use crate::sample::{
    child_rng, commuting_projections, noncommuting_pair, random_log, random_unitary, rng_from_seed, OcSampler,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub residual: f64,
}

/// `max(||u o u* - 1||, ||u^2 o u* - u||)`.
pub fn unitary_residual(alg: &AlgebraHandle, u: &Element) -> f64 {
    let us = alg.star(u);
    let r1 = alg.norm(&(&alg.prod(u, &us) - &alg.unit()));
    let r2 = alg.norm(&(&alg.prod(&alg.sq(u), &us) - u));
    r1.max(r2)
}

pub fn is_unitary(alg: &AlgebraHandle, u: &Element) -> Result<Verdict> {
    alg.check(u)?;
    let residual = unitary_residual(alg, u);
    Ok(Verdict { holds: residual <= alg.tol().cluster_eps * alg.norm(u).max(1.0).powi(3), residual })
}

pub fn is_symmetry(alg: &AlgebraHandle, s: &Element) -> Result<Verdict> {
    alg.check(s)?;
    let residual = alg.self_adjoint_residual(s).max(alg.norm(&(&alg.sq(s) - &alg.unit())));
    Ok(Verdict { holds: residual <= alg.tol().cluster_eps * alg.norm(s).max(1.0).powi(2), residual })
}

pub fn is_projection(alg: &AlgebraHandle, p: &Element) -> Result<Verdict> {
    alg.check(p)?;
    let residual = alg.self_adjoint_residual(p).max(alg.norm(&(&alg.sq(p) - p)));
    Ok(Verdict { holds: residual <= alg.tol().cluster_eps * alg.norm(p).max(1.0).powi(2), residual })
}

#[derive(Debug, Clone)]
pub struct UnitaryLog {
    /// Self-adjoint with spectrum in `(-pi, pi]`.
    pub h: Element,
    /// Some spectral value of `u` lies within `cluster_eps` of `-1`.
    pub branch_ambiguous: bool,
    /// `||exp_i(h, 1) - u||`.
    pub residual: f64,
}

/// Principal logarithm. The joint spectral data of `(u + u*)/2` and
/// `(u - u*)/2i` is read off the idempotents of one generic real combination.
pub fn unitary_log(alg: &AlgebraHandle, u: &Element) -> Result<UnitaryLog> {
    let v = is_unitary(alg, u)?;
    if !v.holds {
        return Err(Error::NotUnitary { residual: v.residual });
    }
    let tol = alg.tol();
    let c = alg.real_part(u);
    let s = alg.imag_part(u);
    const KAPPA: f64 = 0.618_033_988_749_894_8;
    let x = &c + &s.scale_re(KAPPA);
    let dec = spectral_decomposition(alg, &x)?;
    let mut h = alg.zero();
    let mut ambiguous = false;
    let mut circle: f64 = 0.0;
    for (_, e) in &dec.pairs {
        let ee = e.coord_inner(e).re;
        let gamma = e.coord_inner(&alg.prod(&c, e)).re / ee;
        let sigma = e.coord_inner(&alg.prod(&s, e)).re / ee;
        circle = circle.max((gamma.hypot(sigma) - 1.0).abs());
        let mut theta = sigma.atan2(gamma);
        if PI - theta.abs() <= tol.cluster_eps {
            ambiguous = true;
            theta = PI;
        }
        h = &h + &e.scale_re(theta);
    }
    if circle > tol.cluster_eps {
        return Err(Error::IllConditioned(format!(
            "spectral values of a unitary lie {circle:.3e} off the unit circle"
        )));
    }
    let residual = alg.norm(&(&exp_i(alg, &h, 1.0)? - u));
    Ok(UnitaryLog { h, branch_ambiguous: ambiguous, residual })
}

/// `u^n` through the functional calculus of the logarithm.
pub fn unitary_power(alg: &AlgebraHandle, u: &Element, n: i64) -> Result<Element> {
    let log = unitary_log(alg, u)?;
    exp_i(alg, &log.h, n as f64)
}

pub fn symmetric_difference(alg: &AlgebraHandle, p: &Element, q: &Element) -> Result<Element> {
    for x in [p, q] {
        let v = is_projection(alg, x)?;
        if !v.holds {
            return Err(Error::NotProjection { residual: v.residual });
        }
    }
    Ok(&(p + q) - &alg.prod(p, q).scale_re(2.0))
}

fn commutator_norm(alg: &AlgebraHandle, a: &Element, b: &Element) -> f64 {
    let ma = mult_operator(alg, a).expect("member");
    let mb = mult_operator(alg, b).expect("member");
    operator_norm(&ma.commutator(&mb))
}

/// Operator-commuting self-adjoint pair rescaled to norms at most `max_norm`.
fn scaled_oc_pair(alg: &AlgebraHandle, rng: &mut crate::sample::SampleRng, max_norm: f64) -> (Element, Element) {
    let (a, b) = OcSampler::default_for(alg).sample(alg, rng).expect("sampler");
    let na = alg.norm(&a).max(1e-300);
    let nb = alg.norm(&b).max(1e-300);
    (a.scale_re(max_norm / na), b.scale_re(max_norm / nb))
}

pub fn oc_unitary_product_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> CheckReport {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("oc unitary product [{}]", alg.label()), 1e-7);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (h, k) = scaled_oc_pair(alg, &mut r, 3.0);
        let u = exp_i(alg, &h, 1.0).expect("exp");
        let v = exp_i(alg, &k, 1.0).expect("exp");
        let w = alg.prod(&u, &v);
        let res = unitary_residual(alg, &w);
        t.record(res, || Witness::new("u o v fails to be unitary", res).with("u", &u).with("v", &v));
    }
    t.finish()
}

/// Non-commuting unitaries whose Jordan product is far from unitary.
/// Passes (as a control) once a pair with residual above 0.1 is found.
pub fn oc_unitary_product_control(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("non-commuting unitary product (control) [{}]", alg.label()), 0.1);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (a, b) = noncommuting_pair(alg, &mut r)?;
        let u = exp_i(alg, &a.scale_re(2.0 / alg.norm(&a)), 1.0)?;
        let v = exp_i(alg, &b.scale_re(2.0 / alg.norm(&b)), 1.0)?;
        let res = unitary_residual(alg, &alg.prod(&u, &v));
        t.record(res, || Witness::new("u o v not unitary", res).with("u", &u).with("v", &v));
        if t.max() > 0.1 {
            break;
        }
    }
    let found = t.max() > 0.1;
    Ok(t.finish_with(!found).negative_control())
}

const GRID: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

#[derive(Debug, Clone, Copy, Default)]
struct Equivalences {
    exp_commute: f64,
    u_identity: f64,
    commute_with_adjoint: f64,
    associators: f64,
}

impl Equivalences {
    fn worst(&self) -> f64 {
        self.exp_commute.max(self.u_identity).max(self.commute_with_adjoint).max(self.associators)
    }
}

fn equivalences(alg: &AlgebraHandle, h: &Element, k: &Element) -> Result<Equivalences> {
    let dh = spectral_decomposition(alg, h)?;
    let dk = spectral_decomposition(alg, k)?;
    let e = |d, t: f64| apply_decomposition(alg, d, |l| C64::from_polar(1.0, t * l));
    let mut out = Equivalences::default();
    for &t in &GRID {
        out.exp_commute = out.exp_commute.max(commutator_norm(alg, &e(&dh, t), &e(&dk, t)));
        for &s in &GRID {
            let lhs = u_op(alg, &e(&dh, t), &e(&dk, 2.0 * s));
            let rhs = u_op(alg, &e(&dk, s), &e(&dh, 2.0 * t));
            out.u_identity = out.u_identity.max(alg.norm(&(&lhs - &rhs)));
        }
    }
    let u = e(&dh, 1.0);
    let v = e(&dk, 1.0);
    let us = alg.star(&u);
    let vs = alg.star(&v);
    out.commute_with_adjoint = commutator_norm(alg, &u, &v).max(commutator_norm(alg, &u, &vs));
    let basis = alg.basis_elements();
    for x in [&u, &us] {
        for y in [&v, &vs] {
            for c in &basis {
                let assoc = &alg.prod(&alg.prod(x, c), y) - &alg.prod(x, &alg.prod(c, y));
                out.associators = out.associators.max(assoc.coord_norm());
            }
        }
    }
    Ok(out)
}

/// Equivalent descriptions of operator commutativity for exponentials of an
/// operator-commuting self-adjoint pair.
pub fn oc_unitary_equivalences_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("oc unitary equivalences [{}]", alg.label()), 1e-7);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (h, k) = scaled_oc_pair(alg, &mut r, 2.0);
        let eq = equivalences(alg, &h, &k)?;
        t.metric_max("exp_commute", eq.exp_commute);
        t.metric_max("u_identity", eq.u_identity);
        t.metric_max("commute_with_adjoint", eq.commute_with_adjoint);
        t.metric_max("associators", eq.associators);
        let w = eq.worst();
        t.record(w, || Witness::new("equivalence residual on a commuting pair", w).with("h", &h).with("k", &k));
    }
    Ok(t.finish())
}

/// On non-commuting pairs every sample must break at least one identity by
/// `10 * 1e-7`. `passed` is false exactly when that happens for all samples.
pub fn oc_unitary_equivalences_control(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let floor = 1e-6;
    let mut t = Tracker::new(format!("oc unitary equivalences (non-commuting control) [{}]", alg.label()), floor);
    let mut weakest = f64::INFINITY;
    let mut weakest_pair = None;
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (a, b) = noncommuting_pair(alg, &mut r)?;
        let h = a.scale_re(1.5 / alg.norm(&a));
        let k = b.scale_re(1.5 / alg.norm(&b));
        let w = equivalences(alg, &h, &k)?.worst();
        if w < weakest {
            weakest = w;
            weakest_pair = Some((h, k));
        }
    }
    let all_violated = weakest >= floor;
    if let Some((h, k)) = weakest_pair {
        t.record(weakest, || Witness::new("weakest violation among non-commuting pairs", weakest).with("h", &h).with("k", &k));
    }
    t.metric("weakest_violation", weakest);
    Ok(t.finish_with(!all_violated).negative_control())
}

/// `n ||u - 1|| <= (pi/2) ||u^n - 1||` whenever `n ||u - 1|| < 2`.
pub fn circle_inequality_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    use rand::Rng;
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("circle inequality [{}]", alg.label()), 1e-9);
    let mut tightest: f64 = 0.0;
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let h = random_log(alg, &mut r, 3.0);
        let delta = 10f64.powf(r.random_range(-3.0..0.0));
        let u = exp_i(alg, &h.scale_re(delta), 1.0)?;
        let d = alg.norm(&(&u - &alg.unit()));
        if d == 0.0 {
            continue;
        }
        let n_max = (((2.0 / d) - 1e-9).floor() as i64).clamp(1, 60);
        let n = r.random_range(1..=n_max);
        if n as f64 * d >= 2.0 {
            continue;
        }
        let un = unitary_power(alg, &u, n)?;
        let lhs = n as f64 * d;
        let rhs = PI / 2.0 * alg.norm(&(&un - &alg.unit()));
        tightest = tightest.max(lhs / rhs.max(f64::MIN_POSITIVE));
        let excess = (lhs - rhs).max(0.0);
        t.record(excess, || Witness::new(format!("n = {n}, n||u-1|| = {lhs:.6}"), excess).with("u", &u));
    }
    t.metric("tightest_ratio", tightest);
    Ok(t.finish())
}

/// Projection and symmetry identities for operator-commuting projection pairs.
pub fn symmetric_difference_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("symmetric difference [{}]", alg.label()), 1e-8);
    let one = alg.unit();
    let ups = |x: &Element| &one - &x.scale_re(2.0);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (p, q) = commuting_projections(alg, &mut r);
        let d = symmetric_difference(alg, &p, &q)?;
        let proj = is_projection(alg, &d)?.residual;
        let sym = alg.norm(&(&ups(&d) - &alg.prod(&ups(&p), &ups(&q))));
        t.metric_max("projection_defect", proj);
        t.metric_max("symmetry_identity_defect", sym);
        let w = proj.max(sym);
        t.record(w, || Witness::new("symmetric difference identities", w).with("p", &p).with("q", &q));
    }
    Ok(t.finish())
}

/// Every sampled unitary is `e^{ih}` for some self-adjoint `h` of this algebra.
/// Samples include `U_u(v)` so that they are not all exponentials by construction.
pub fn exp_surjectivity_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("exp surjectivity [{}]", alg.label()), 1e-7);
    let mut ambiguous = 0usize;
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let u1 = random_unitary(alg, &mut r);
        let u2 = random_unitary(alg, &mut r);
        let w = u_op(alg, &u1, &u2);
        let log = unitary_log(alg, &w)?;
        ambiguous += log.branch_ambiguous as usize;
        let res = log.residual;
        t.record(res, || Witness::new("exp(i log w) != w", res).with("w", &w));
    }
    t.metric("branch_ambiguous_samples", ambiguous as f64);
    Ok(t.finish())
}

/// The projection `(1 - s)/2` of a symmetry `s`.
pub fn symmetry_projection(alg: &AlgebraHandle, s: &Element) -> Element {
    (&alg.unit() - s).scale_re(0.5)
}

pub fn commute_verdict(alg: &AlgebraHandle, a: &Element, b: &Element) -> Result<Verdict> {
    let v = operator_commutes(alg, a, b)?;
    Ok(Verdict { holds: v.commutes, residual: v.residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_hermitian_matrix_algebra, build_spin_factor, SpinVector};
    use crate::linalg::{ComplexMatrix, Tolerance};
    use crate::sample::{random_with, Flavor};

    fn h(n: usize) -> AlgebraHandle {
        build_hermitian_matrix_algebra(n, Tolerance::default()).unwrap()
    }

    fn diag(alg: &AlgebraHandle, d: &[f64]) -> Element {
        let vals: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
        alg.from_matrix(&ComplexMatrix::diagonal(&vals)).unwrap()
    }

    #[test]
    fn predicates() {
        let a = h(2);
        assert!(is_unitary(&a, &a.unit()).unwrap().holds);
        assert!(is_unitary(&a, &diag(&a, &[1.0, -1.0])).unwrap().holds);
        assert!(!is_unitary(&a, &diag(&a, &[1.0, 0.0])).unwrap().holds);
        assert!(is_symmetry(&a, &a.unit().scale_re(-1.0)).unwrap().holds);
        let s = build_spin_factor(3, Tolerance::default()).unwrap();
        let unit_h = s.from_spin_vector(&SpinVector::self_adjoint(0.0, &[0.6, 0.8])).unwrap();
        assert!(is_symmetry(&s, &unit_h).unwrap().holds);
    }

    #[test]
    fn logs() {
        let a = h(2);
        let log = unitary_log(&a, &a.unit()).unwrap();
        assert!(a.norm(&log.h) < 1e-14);
        let p = diag(&a, &[0.0, 1.0]);
        let s = &a.unit() - &p.scale_re(2.0);
        let log = unitary_log(&a, &s).unwrap();
        assert!(log.branch_ambiguous);
        assert!(a.norm(&(&log.h - &p.scale_re(PI))) < 1e-9);
        let mut rng = rng_from_seed(8);
        for _ in 0..10 {
            let u = random_with(&a, &mut rng, Flavor::Unitary);
            let log = unitary_log(&a, &u).unwrap();
            assert!(log.residual < 1e-7);
        }
    }

    #[test]
    fn symmetric_difference_examples() {
        let a = h(3);
        let p = diag(&a, &[1.0, 1.0, 0.0]);
        let q = diag(&a, &[0.0, 1.0, 1.0]);
        assert_eq!(symmetric_difference(&a, &p, &a.zero()).unwrap(), p);
        assert_eq!(symmetric_difference(&a, &p, &p).unwrap(), a.zero());
        assert_eq!(symmetric_difference(&a, &p, &q).unwrap(), diag(&a, &[1.0, 0.0, 1.0]));
        assert!(matches!(
            symmetric_difference(&a, &a.unit().scale_re(2.0), &p),
            Err(Error::NotProjection { .. })
        ));
    }

    #[test]
    fn scalar_circle_case() {
        let a = h(1);
        let theta: f64 = 0.1;
        let u = a.unit().scale(C64::from_polar(1.0, theta));
        let d = a.norm(&(&u - &a.unit()));
        assert!((d - 2.0 * (theta / 2.0).sin()).abs() < 1e-15);
        let un = unitary_power(&a, &u, 9).unwrap();
        assert!(9.0 * d <= PI / 2.0 * a.norm(&(&un - &a.unit())));
    }

    #[test]
    fn small_suites() {
        for alg in [h(2), build_spin_factor(3, Tolerance::default()).unwrap()] {
            assert!(oc_unitary_product_check(&alg, 10, 1).passed);
            assert!(oc_unitary_equivalences_check(&alg, 5, 1).unwrap().passed);
            assert!(oc_unitary_equivalences_control(&alg, 5, 1).unwrap().ok());
            assert!(circle_inequality_check(&alg, 20, 1).unwrap().passed);
            assert!(exp_surjectivity_check(&alg, 10, 1).unwrap().passed);
        }
        assert!(oc_unitary_product_control(&h(2), 20, 1).unwrap().ok());
        assert!(symmetric_difference_check(&h(3), 10, 1).unwrap().passed);
    }
}
