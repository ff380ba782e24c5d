//! Candidate preserver maps and the checks that test them against the
//! hypotheses and conclusions of the piecewise-homomorphism theorems.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraHandle, AlgebraKind, Element, SpinVector};
use crate::calculus::{center_basis, center_residual, exp_i, is_invertible, operator_commutes, u_op};
use crate::error::{Error, Result};
use crate::measure::{detect_type_i2, sa_basis};
use crate::peirce::{is_tripotent, peirce2_algebra};
use crate::report::{CheckReport, Tracker, Witness};
use crate::sample::{
    child_rng, commuting_projections, normal, random_central_self_adjoint, random_log, random_projection,
    random_self_adjoint, random_unitary, random_with, rng_from_seed, Flavor, OcSampler, SampleRng,
};
use crate::unitary::{is_symmetry, is_unitary, unitary_log, unitary_residual};

pub type EvalFn = Arc<dyn Fn(&Element) -> Result<Element> + Send + Sync>;

/// A map between two algebras, optionally with a claimed inverse.
#[derive(Clone)]
pub struct MapUnderTest {
    pub source: AlgebraHandle,
    pub target: AlgebraHandle,
    eval: EvalFn,
    inverse: Option<EvalFn>,
    pub label: String,
}

impl fmt::Debug for MapUnderTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MapUnderTest({}: {} -> {}{})",
            self.label,
            self.source.label(),
            self.target.label(),
            if self.inverse.is_some() { ", invertible" } else { "" }
        )
    }
}

impl MapUnderTest {
    pub fn new(
        source: &AlgebraHandle,
        target: &AlgebraHandle,
        label: impl Into<String>,
        eval: impl Fn(&Element) -> Result<Element> + Send + Sync + 'static,
    ) -> Self {
        MapUnderTest {
            source: source.clone(),
            target: target.clone(),
            eval: Arc::new(eval),
            inverse: None,
            label: label.into(),
        }
    }

    pub fn with_inverse(mut self, inv: impl Fn(&Element) -> Result<Element> + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn apply(&self, a: &Element) -> Result<Element> {
        self.source.check(a)?;
        let y = (self.eval)(a)?;
        self.target.check(&y)?;
        if !y.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(y)
    }

    pub fn apply_inverse(&self, y: &Element) -> Result<Element> {
        let inv = self.inverse.as_ref().ok_or_else(|| Error::PreconditionFailed(format!("{} has no inverse", self.label)))?;
        self.target.check(y)?;
        let x = inv(y)?;
        self.source.check(&x)?;
        Ok(x)
    }

    /// `outer o inner`; invertible when both factors are.
    pub fn compose(outer: &MapUnderTest, inner: &MapUnderTest) -> Result<MapUnderTest> {
        if outer.source != inner.target {
            return Err(Error::AlgebraMismatch { expected: outer.source.id(), found: inner.target.id() });
        }
        let (o, i) = (outer.clone(), inner.clone());
        let mut m = MapUnderTest::new(&inner.source, &outer.target, format!("{} o {}", outer.label, inner.label), move |a| {
            o.apply(&i.apply(a)?)
        });
        if outer.has_inverse() && inner.has_inverse() {
            let (o, i) = (outer.clone(), inner.clone());
            m = m.with_inverse(move |y| i.apply_inverse(&o.apply_inverse(y)?));
        }
        Ok(m)
    }
}

pub fn identity_map(alg: &AlgebraHandle) -> MapUnderTest {
    MapUnderTest::new(alg, alg, "identity", |a| Ok(a.clone())).with_inverse(|a| Ok(a.clone()))
}

pub fn star_map(alg: &AlgebraHandle) -> MapUnderTest {
    let (a1, a2) = (alg.clone(), alg.clone());
    MapUnderTest::new(alg, alg, "star", move |a| Ok(a1.star(a))).with_inverse(move |a| Ok(a2.star(a)))
}

pub fn negation_map(alg: &AlgebraHandle) -> MapUnderTest {
    MapUnderTest::new(alg, alg, "negation", |a| Ok(-a)).with_inverse(|a| Ok(-a))
}

/// Entrywise squaring of coordinates, a non-additive map.
pub fn coordinate_square_map(alg: &AlgebraHandle) -> MapUnderTest {
    let a1 = alg.clone();
    MapUnderTest::new(alg, alg, "coordinate square", move |a| a1.element(a.coords().iter().map(|z| z * z).collect()))
}

/// Matrix transpose on a hermitian-matrix algebra.
pub fn transpose_map(alg: &AlgebraHandle) -> Result<MapUnderTest> {
    alg.matrix_size().ok_or(Error::WrongKind("hermitian_matrix algebra"))?;
    let t = |alg: AlgebraHandle| move |a: &Element| alg.from_matrix(&alg.to_matrix(a)?.transpose());
    Ok(MapUnderTest::new(alg, alg, "transpose", t(alg.clone())).with_inverse(t(alg.clone())))
}

/// `x -> w x w*` for a unitary matrix `w` in `H_n`, or `U_w` for a symmetry
/// `w` in any other model.
pub fn conjugation_map(alg: &AlgebraHandle, w: &Element) -> Result<MapUnderTest> {
    alg.check(w)?;
    if alg.matrix_size().is_some() {
        let v = is_unitary(alg, w)?;
        if !v.holds {
            return Err(Error::NotUnitary { residual: v.residual });
        }
        let wm = alg.to_matrix(w)?;
        let wa = wm.adjoint();
        let (a1, a2) = (alg.clone(), alg.clone());
        let (w1, wa1, w2, wa2) = (wm.clone(), wa.clone(), wm, wa);
        return Ok(MapUnderTest::new(alg, alg, "unitary conjugation", move |x| {
            a1.from_matrix(&w1.matmul(&a1.to_matrix(x)?).matmul(&wa1))
        })
        .with_inverse(move |y| a2.from_matrix(&wa2.matmul(&a2.to_matrix(y)?).matmul(&w2))));
    }
    let v = is_symmetry(alg, w)?;
    if !v.holds {
        return Err(Error::PreconditionFailed(format!(
            "conjugation by U_w needs a symmetry w outside H_n (residual {:.3e})",
            v.residual
        )));
    }
    let (a1, a2, w1, w2) = (alg.clone(), alg.clone(), w.clone(), w.clone());
    Ok(MapUnderTest::new(alg, alg, "symmetry conjugation", move |x| Ok(u_op(&a1, &w1, x)))
        .with_inverse(move |y| Ok(u_op(&a2, &w2, y))))
}

/// A random inner automorphism: conjugation by a random unitary on `H_n`,
/// by a random symmetry `1 - 2p` elsewhere.
pub fn random_conjugation(alg: &AlgebraHandle, seed: u64) -> Result<MapUnderTest> {
    let mut rng = rng_from_seed(seed);
    let w = if alg.matrix_size().is_some() {
        random_unitary(alg, &mut rng)
    } else {
        let p = random_projection(alg, &mut rng);
        &alg.unit() - &p.scale_re(2.0)
    };
    conjugation_map(alg, &w)
}

/// `a -> theta(a) o s` for a central symmetry `s` of the target.
pub fn central_symmetry_map(theta: &MapUnderTest, s: &Element) -> Result<MapUnderTest> {
    let b = &theta.target;
    b.check(s)?;
    let v = is_symmetry(b, s)?;
    let c = center_residual(b, s);
    if !v.holds || c > 1e-8 * (1.0 + b.norm(s)) {
        return Err(Error::PreconditionFailed(format!(
            "s must be a central symmetry (symmetry residual {:.3e}, centre residual {c:.3e})",
            v.residual
        )));
    }
    let (t1, b1, s1) = (theta.clone(), b.clone(), s.clone());
    let mut m = MapUnderTest::new(&theta.source, b, format!("{} twisted by a central symmetry", theta.label), move |a| {
        Ok(b1.prod(&t1.apply(a)?, &s1))
    });
    if theta.has_inverse() {
        let (t2, b2, s2) = (theta.clone(), b.clone(), s.clone());
        m = m.with_inverse(move |y| t2.apply_inverse(&b2.prod(y, &s2)));
    }
    Ok(m)
}

/// `u -> e^{i phase} theta(u)`.
pub fn phase_twist_map(theta: &MapUnderTest, phase: f64) -> MapUnderTest {
    let z = C64::from_polar(1.0, phase);
    let (t1, t2) = (theta.clone(), theta.clone());
    let mut m = MapUnderTest::new(&theta.source, &theta.target, format!("phase-twisted {}", theta.label), move |u| {
        Ok(t1.apply(u)?.scale(z))
    });
    if theta.has_inverse() {
        m = m.with_inverse(move |y| t2.apply_inverse(&y.scale(z.conj())));
    }
    m
}

/// The default phase used by the dichotomy negative control.
pub fn eighth_turn_twist(theta: &MapUnderTest) -> MapUnderTest {
    phase_twist_map(theta, FRAC_PI_4)
}

/// `u -> exp_i(W(log u))` with `W(h) = h + kappa h^2 / ||h||`, positively
/// but not oddly homogeneous.
pub fn unitary_warp_map(alg: &AlgebraHandle, kappa: f64) -> MapUnderTest {
    let a1 = alg.clone();
    MapUnderTest::new(alg, alg, format!("unitary warp kappa={kappa}"), move |u| {
        let h = unitary_log(&a1, u)?.h;
        let n = a1.norm(&h);
        let w = if n > 0.0 { &h + &a1.sq(&h).scale_re(kappa / n) } else { h };
        exp_i(&a1, &w, 1.0)
    })
}

/// `u -> w u w` for a fixed unitary `w`; not unital unless `w^2 = 1`.
pub fn fixed_u_operator_map(alg: &AlgebraHandle, w: &Element) -> Result<MapUnderTest> {
    alg.check(w)?;
    let (a1, w1) = (alg.clone(), w.clone());
    Ok(MapUnderTest::new(alg, alg, "fixed U_w", move |u| Ok(u_op(&a1, &w1, u))))
}

/// Centre-valued real functional `beta` on the self-adjoint part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Beta {
    Zero,
    /// `kappa * tau(a) * 1` with the normalized trace `tau(a) = Re<1,a>/<1,1>`.
    ScaledTrace { kappa: f64 },
}

impl Beta {
    pub fn eval(&self, source: &AlgebraHandle, target: &AlgebraHandle, a: &Element) -> Element {
        match self {
            Beta::Zero => target.zero(),
            Beta::ScaledTrace { kappa } => {
                let one = source.unit();
                let tau = one.coord_inner(a).re / one.coord_inner(&one).re;
                target.unit().scale_re(kappa * tau)
            }
        }
    }
}

/// `u -> e^{i beta(a)} o e^{i c o theta(a)}` with `a = log u`.
pub fn exp_form_map(theta: &MapUnderTest, beta: Beta, c: &Element) -> Result<MapUnderTest> {
    let b = theta.target.clone();
    b.check(c)?;
    let (t1, c1, src) = (theta.clone(), c.clone(), theta.source.clone());
    Ok(MapUnderTest::new(&theta.source, &theta.target, format!("exp form over {}", theta.label), move |u| {
        let a = unitary_log(&src, u)?.h;
        let left = exp_i(&b, &beta.eval(&src, &b, &a), 1.0)?;
        let right = exp_i(&b, &b.prod(&c1, &t1.apply(&a)?), 1.0)?;
        Ok(b.prod(&left, &right))
    }))
}

/// On a direct sum whose first summand is non-commutative: `u -> exp_i(W(log u))`
/// where `W(h) = h + kappa * tau_last(h) * x` moves central elements off the
/// centre (`tau_last` is the normalized trace of the last summand and `x` a
/// fixed non-central self-adjoint element of the first).
pub fn off_centre_warp_map(alg: &AlgebraHandle, kappa: f64, seed: u64) -> Result<MapUnderTest> {
    let parts = alg.parts().to_vec();
    if parts.len() < 2 || !matches!(alg.kind(), AlgebraKind::DirectSum { .. }) {
        return Err(Error::WrongKind("direct sum with at least two summands"));
    }
    let mut rng = rng_from_seed(seed);
    let x0 = random_self_adjoint(&parts[0], &mut rng);
    let x0 = center_basis(&parts[0]).iter().fold(x0, |acc, z| &acc - &z.scale(z.coord_inner(&acc)));
    if x0.coord_norm() < 1e-6 {
        return Err(Error::PreconditionFailed("first summand is commutative".into()));
    }
    let comps: Vec<Element> = parts.iter().enumerate().map(|(k, p)| if k == 0 { x0.clone() } else { p.zero() }).collect();
    let x = alg.from_components(&comps)?;
    let last = parts.len() - 1;
    let w = move |alg: &AlgebraHandle, h: &Element, sign: f64| -> Result<Element> {
        let hl = alg.component(h, last)?;
        let one = alg.parts()[last].unit();
        let tau = one.coord_inner(&hl).re / one.coord_inner(&one).re;
        Ok(h + &x.scale_re(sign * kappa * tau))
    };
    let (a1, a2, w1, w2) = (alg.clone(), alg.clone(), w.clone(), w);
    Ok(MapUnderTest::new(alg, alg, "off-centre warp", move |u| {
        let h = unitary_log(&a1, u)?.h;
        exp_i(&a1, &w1(&a1, &h, 1.0)?, 1.0)
    })
    .with_inverse(move |v| {
        let h = unitary_log(&a2, v)?.h;
        exp_i(&a2, &w2(&a2, &h, -1.0)?, 1.0)
    }))
}

// ---------------------------------------------------------------------------
// Checks.

fn sample_oc(sampler: OcSampler, alg: &AlgebraHandle, rng: &mut SampleRng) -> Result<(Element, Element)> {
    let (a, b) = sampler.sample(alg, rng)?;
    let v = operator_commutes(alg, &a, &b)?;
    if !v.commutes {
        return Err(Error::SamplerViolation { residual: v.residual });
    }
    Ok((a, b))
}

/// Linearity, multiplicativity, `*`-preservation and unitality on samples.
/// Thresholds are relative to `(1 + ||x||)(1 + ||y||)`.
pub fn verify_jordan_star_isomorphism(m: &MapUnderTest, trials: usize, seed: u64) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("Jordan *-homomorphism [{}]", m.label), 1e-8);
    let unit = b.norm(&(&m.apply(&a.unit())? - &b.unit()));
    t.metric("unit", unit);
    t.record(unit, || Witness::new("theta(1) != 1", unit));
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let x = random_with(a, &mut r, Flavor::General);
        let y = random_with(a, &mut r, Flavor::General);
        let (al, be) = (C64::new(normal(&mut r), normal(&mut r)), C64::new(normal(&mut r), normal(&mut r)));
        let (tx, ty) = (m.apply(&x)?, m.apply(&y)?);
        let scale = (1.0 + a.norm(&x)) * (1.0 + a.norm(&y)) * (1.0 + al.norm() + be.norm());
        let lin = b.norm(&(&m.apply(&(&x.scale(al) + &y.scale(be)))? - &(&tx.scale(al) + &ty.scale(be)))) / scale;
        let mul = b.norm(&(&m.apply(&a.prod(&x, &y))? - &b.prod(&tx, &ty))) / scale;
        let star = b.norm(&(&m.apply(&a.star(&x))? - &b.star(&tx))) / scale;
        t.metric_max("linearity", lin);
        t.metric_max("multiplicativity", mul);
        t.metric_max("star", star);
        let res = lin.max(mul).max(star);
        t.record(res, || Witness::new("homomorphism defect", res).with("x", &x).with("y", &y));
    }
    Ok(t.finish())
}

/// `||Phi(a + b) - Phi(a) - Phi(b)||` on operator-commuting self-adjoint
/// pairs, relative to `1 + ||Phi(a)|| + ||Phi(b)||`; the raw maximum is the
/// `raw_max` metric.
pub fn check_oc_additive(m: &MapUnderTest, sampler: OcSampler, trials: usize, seed: u64) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("oc additivity [{}]", m.label), 10.0 * b.tol().abs_eps);
    t.metric("raw_max", 0.0);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (x, y) = sample_oc(sampler, a, &mut r)?;
        let (fx, fy, fxy) = (m.apply(&x)?, m.apply(&y)?, m.apply(&(&x + &y))?);
        let raw = b.norm(&(&(&fxy - &fx) - &fy));
        t.metric_max("raw_max", raw);
        let res = raw / (1.0 + b.norm(&fx) + b.norm(&fy));
        t.record(res, || Witness::new("Phi(a+b) != Phi(a) + Phi(b)", res).with("a", &x).with("b", &y));
    }
    Ok(t.finish())
}

/// `||Phi(U_a(b)) - U_{Phi(a)}(Phi(b))||` on operator-commuting self-adjoint
/// pairs, relative to `1 + ||Phi(a)||^2 ||Phi(b)|| + ||Phi(U_a(b))||`.
pub fn check_oc_quadratic(m: &MapUnderTest, sampler: OcSampler, trials: usize, seed: u64) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("oc quadratic [{}]", m.label), 10.0 * b.tol().abs_eps);
    t.metric("raw_max", 0.0);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (x, y) = sample_oc(sampler, a, &mut r)?;
        let (fx, fy) = (m.apply(&x)?, m.apply(&y)?);
        let lhs = m.apply(&u_op(a, &x, &y))?;
        let rhs = u_op(b, &fx, &fy);
        let raw = b.norm(&(&lhs - &rhs));
        t.metric_max("raw_max", raw);
        let res = raw / (1.0 + b.norm(&fx).powi(2) * b.norm(&fy) + b.norm(&lhs));
        t.record(res, || Witness::new("Phi(U_a b) != U_Phi(a) Phi(b)", res).with("a", &x).with("b", &y));
    }
    Ok(t.finish())
}

/// Operator-commuting self-adjoint pair with norms at most `max_norm`.
fn bounded_oc_pair(alg: &AlgebraHandle, rng: &mut SampleRng, max_norm: f64) -> Result<(Element, Element)> {
    let (a, b) = sample_oc(OcSampler::default_for(alg), alg, rng)?;
    let na = alg.norm(&a).max(f64::MIN_POSITIVE);
    let nb = alg.norm(&b).max(f64::MIN_POSITIVE);
    Ok((a.scale_re(max_norm / na), b.scale_re(max_norm / nb)))
}

fn image_unitary(m: &MapUnderTest, u: &Element) -> Result<Element> {
    let fu = m.apply(u)?;
    let v = is_unitary(&m.target, &fu)?;
    if !v.holds {
        return Err(Error::NonUnitaryImage { residual: v.residual });
    }
    Ok(fu)
}

/// Unitality, multiplicativity on operator-commuting unitaries, and
/// preservation of operator commutativity.
pub fn check_piecewise_hom_on_unitaries(m: &MapUnderTest, trials: usize, seed: u64) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("piecewise homomorphism on unitaries [{}]", m.label), 1e-7);
    let f1 = image_unitary(m, &a.unit())?;
    let unit = b.norm(&(&f1 - &b.unit()));
    t.metric("unit", unit);
    t.record(unit, || Witness::new("Phi(1) != 1", unit).with("Phi(1)", &f1));
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (h, k) = bounded_oc_pair(a, &mut r, 3.0)?;
        let u = exp_i(a, &h, 1.0)?;
        let v = exp_i(a, &k, 1.0)?;
        let (fu, fv) = (image_unitary(m, &u)?, image_unitary(m, &v)?);
        let fuv = m.apply(&a.prod(&u, &v))?;
        let mult = b.norm(&(&fuv - &b.prod(&fu, &fv)));
        let comm = operator_commutes(b, &fu, &fv)?.residual;
        t.metric_max("multiplicativity", mult);
        t.metric_max("commutativity", comm);
        let res = mult.max(comm);
        t.record(res, || Witness::new("piecewise multiplicativity fails", res).with("u", &u).with("v", &v));
    }
    Ok(t.finish())
}

/// `f(a) = log(Phi(e^{i t a})) / t`, cross-checked at `t/2`.
pub fn derive_generator_map(m: &MapUnderTest, a: &Element, t_small: f64) -> Result<Element> {
    let (src, dst) = (&m.source, &m.target);
    if !crate::calculus::is_self_adjoint(src, a) {
        return Err(Error::NotSelfAdjoint { residual: src.self_adjoint_residual(a) });
    }
    let gen = |t: f64| -> Result<Element> {
        let fu = m.apply(&exp_i(src, a, t)?)?;
        let log = unitary_log(dst, &fu)?;
        if log.branch_ambiguous {
            return Err(Error::BranchAmbiguity);
        }
        Ok(log.h.scale_re(1.0 / t))
    };
    let f1 = gen(t_small)?;
    let f2 = gen(t_small / 2.0)?;
    let gap = dst.norm(&(&f1 - &f2));
    if gap > 10.0 * dst.tol().cluster_eps * (1.0 + dst.norm(&f1)) {
        return Err(Error::Inconsistent(format!("generator differs by {gap:.3e} between t and t/2")));
    }
    Ok(f1)
}

/// Step used when deriving generators: small enough that `t f(a)` stays far
/// from the branch cut for maps of moderate norm.
fn generator_step(alg: &AlgebraHandle, a: &Element) -> f64 {
    0.1 / (1.0 + alg.norm(a))
}

pub fn generator_of(m: &MapUnderTest, a: &Element) -> Result<Element> {
    derive_generator_map(m, a, generator_step(&m.source, a))
}

/// Homogeneity, operator-commuting additivity and commutativity
/// preservation of the generator map; `bound` estimates `sup ||f(a)||/||a||`.
pub fn check_generator_properties(m: &MapUnderTest, trials: usize, seed: u64) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("generator map properties [{}]", m.label), 1e-6);
    t.metric("bound", 0.0);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (x, y) = bounded_oc_pair(a, &mut r, 1.0)?;
        let (fx, fy) = (generator_of(m, &x)?, generator_of(m, &y)?);
        let scale = 1.0 + b.norm(&fx) + b.norm(&fy);
        let mut hom: f64 = 0.0;
        for rr in [-1.0, 0.5, 2.0] {
            hom = hom.max(b.norm(&(&generator_of(m, &x.scale_re(rr))? - &fx.scale_re(rr))) / scale);
        }
        let add = b.norm(&(&(&generator_of(m, &(&x + &y))? - &fx) - &fy)) / scale;
        let comm = operator_commutes(b, &fx, &fy)?.residual / scale;
        t.metric_max("homogeneity", hom);
        t.metric_max("oc_additivity", add);
        t.metric_max("commutativity", comm);
        t.metric_max("bound", b.norm(&fx) / a.norm(&x).max(f64::MIN_POSITIVE));
        let res = hom.max(add).max(comm);
        t.record(res, || Witness::new("generator map defect", res).with("a", &x).with("b", &y));
    }
    Ok(t.finish())
}

fn require_theta(m: &MapUnderTest, theta: &MapUnderTest, seed: u64) -> Result<()> {
    if m.source != theta.source || m.target != theta.target {
        return Err(Error::PreconditionFailed("theta must share source and target with the map".into()));
    }
    let rep = verify_jordan_star_isomorphism(theta, 8, seed)?;
    if !rep.passed {
        return Err(Error::PreconditionFailed(format!(
            "theta is not a unital Jordan *-homomorphism (defect {:.3e})",
            rep.max_residual
        )));
    }
    Ok(())
}

/// Compares `Phi(e^{ia})` with `e^{i beta(a)} o e^{i c o theta(a)}` and with
/// `e^{i beta(a)} o theta(e^{i theta^{-1}(c) o a})`, evaluated independently.
pub fn verify_unitary_preserver_form(
    m: &MapUnderTest,
    theta: &MapUnderTest,
    beta: &Beta,
    c: &Element,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    require_theta(m, theta, seed)?;
    b.check(c)?;
    let cn = 1.0 + b.norm(c);
    if !crate::calculus::is_self_adjoint(b, c) || center_residual(b, c) > 1e-8 * cn {
        return Err(Error::PreconditionFailed("c must be central and self-adjoint".into()));
    }
    if is_invertible(b, c)?.is_none() {
        return Err(Error::PreconditionFailed("c must be invertible".into()));
    }
    let c_pull = theta.apply_inverse(c)?;
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("unitary preserver form [{}]", m.label), 1e-7);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let x = random_log(a, &mut r, 2.0);
        let bx = beta.eval(a, b, &x);
        if center_residual(b, &bx) > 1e-8 * (1.0 + b.norm(&bx)) || !crate::calculus::is_self_adjoint(b, &bx) {
            return Err(Error::PreconditionFailed("beta(a) must be central and self-adjoint".into()));
        }
        let phase = exp_i(b, &bx, 1.0)?;
        let lhs = m.apply(&exp_i(a, &x, 1.0)?)?;
        let form1 = b.prod(&phase, &exp_i(b, &b.prod(c, &theta.apply(&x)?), 1.0)?);
        let form2 = b.prod(&phase, &theta.apply(&exp_i(a, &a.real_part(&a.prod(&c_pull, &x)), 1.0)?)?);
        let r1 = b.norm(&(&lhs - &form1));
        let r2 = b.norm(&(&lhs - &form2));
        let r3 = b.norm(&(&form1 - &form2));
        let res = r1.max(r2).max(r3);
        t.record(res, || Witness::new("preserver form mismatch", res).with("a", &x));
    }
    Ok(t.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyCase {
    IdentityCase,
    InverseCase,
    Neither,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dichotomy {
    pub case: DichotomyCase,
    /// `max ||Phi(u) - theta(u)||`.
    pub identity_residual: f64,
    /// `max ||Phi(u) - theta(u*)||`.
    pub inverse_residual: f64,
    pub trials: usize,
    pub witness: Option<Witness>,
}

pub fn classify_factor_dichotomy(m: &MapUnderTest, theta: &MapUnderTest, trials: usize, seed: u64) -> Result<Dichotomy> {
    let (a, b) = (&m.source, &m.target);
    let center_dim = center_basis(a).len();
    if center_dim != 1 {
        return Err(Error::NotAFactor { center_dim });
    }
    if !detect_type_i2(a).is_empty() {
        return Err(Error::TypeI2Present);
    }
    require_theta(m, theta, seed)?;
    let mut rng = rng_from_seed(seed);
    let (mut id, mut inv) = (0.0f64, 0.0f64);
    let mut witness: Option<Witness> = None;
    for _ in 0..trials {
        let mut r = child_rng(&mut rng);
        let u = random_unitary(a, &mut r);
        let fu = m.apply(&u)?;
        let ri = b.norm(&(&fu - &theta.apply(&u)?));
        let rv = b.norm(&(&fu - &theta.apply(&a.star(&u))?));
        if ri.min(rv) > witness.as_ref().map_or(0.0, |w| w.residual) {
            witness = Some(Witness::new("Phi(u) matches neither theta(u) nor theta(u*)", ri.min(rv)).with("u", &u));
        }
        id = id.max(ri);
        inv = inv.max(rv);
    }
    let thr = 1e-7;
    let case = if id <= thr {
        DichotomyCase::IdentityCase
    } else if inv <= thr {
        DichotomyCase::InverseCase
    } else {
        DichotomyCase::Neither
    };
    Ok(Dichotomy { case, identity_residual: id, inverse_residual: inv, trials, witness })
}

/// Central unitaries and symmetries go to central unitaries and symmetries,
/// and the induced projection map preserves operator commutativity.
pub fn check_central_preservation(m: &MapUnderTest, trials: usize, seed: u64) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    if !m.has_inverse() {
        return Err(Error::PreconditionFailed(format!("{} has no inverse", m.label)));
    }
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("central preservation [{}]", m.label), 1e-7);
    let psi = |p: &Element| -> Result<Element> {
        let s = &a.unit() - &p.scale_re(2.0);
        Ok((&b.unit() - &m.apply(&s)?).scale_re(0.5))
    };
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let u = random_unitary(a, &mut r);
        let trip = a.norm(&(&m.apply_inverse(&m.apply(&u)?)? - &u));
        t.metric_max("round_trip", trip);

        let z = exp_i(a, &random_central_self_adjoint(a, &mut r, 1.0), 1.0)?;
        let fz = m.apply(&z)?;
        let central = center_residual(b, &fz).max(unitary_residual(b, &fz));
        let zb = exp_i(b, &random_central_self_adjoint(b, &mut r, 1.0), 1.0)?;
        let back = m.apply_inverse(&zb)?;
        let central_back = center_residual(a, &back).max(unitary_residual(a, &back));
        t.metric_max("centre", central.max(central_back));

        let p = random_projection(a, &mut r);
        let s = &a.unit() - &p.scale_re(2.0);
        let fs = m.apply(&s)?;
        let symm = is_symmetry(b, &fs)?.residual;
        t.metric_max("symmetry", symm);

        let (p, q) = commuting_projections(a, &mut r);
        let comm = operator_commutes(b, &psi(&p)?, &psi(&q)?)?.residual;
        t.metric_max("projection_commutativity", comm);

        let res = trip.max(central).max(central_back).max(symm).max(comm);
        t.record(res, || Witness::new("centre or symmetries not preserved", res).with("u", &u).with("z", &z).with("p", &p));
    }
    Ok(t.finish())
}

/// For a map on the whole algebra: `z = (Phi(1) - i Phi(i1))/2` must be a
/// central projection, so that `Phi(i1) = i(z - (Phi(1) - z))`.
pub fn check_imaginary_unit(m: &MapUnderTest) -> Result<CheckReport> {
    let (a, b) = (&m.source, &m.target);
    let w = m.apply(&a.unit())?;
    let fi = m.apply(&a.scalar(C64::new(0.0, 1.0)))?;
    let z = (&w - &fi.scale(C64::new(0.0, 1.0))).scale_re(0.5);
    let proj = b.self_adjoint_residual(&z).max(b.norm(&(&b.sq(&z) - &z)));
    let centre = center_residual(b, &z);
    let mut t = Tracker::new(format!("imaginary unit [{}]", m.label), 1e-8);
    t.trial();
    t.metric("projection", proj);
    t.metric("centre", centre);
    let res = proj.max(centre);
    t.record(res, || Witness::new("z is not a central projection", res).with("z", &z));
    Ok(t.finish())
}

// ---------------------------------------------------------------------------
// Structure recovery.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    /// Make the bijective verdict depend on sampled norm preservation.
    pub isometry_gate: bool,
    pub isometry_threshold: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { isometry_gate: false, isometry_threshold: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct StructureRecovery {
    /// `Phi(1)`.
    pub w: Element,
    pub peirce2: AlgebraHandle,
    /// Multiplicativity into the Peirce-2 algebra on operator-commuting pairs.
    pub oc_hom_residual: f64,
    /// Multiplicativity and additivity on arbitrary self-adjoint pairs.
    pub hom_residual: f64,
    /// `||Phi(r a + b) - r Phi(a) - Phi(b)|| / (|r| ||a|| + ||b||)`.
    pub linearity_residual: f64,
    /// Distance of images from the Peirce-2 space.
    pub range_residual: f64,
    pub round_trip: Option<f64>,
    pub bijective: bool,
    pub w_central_symmetry: bool,
    pub isometry_residual: f64,
}

impl StructureRecovery {
    pub fn report(&self, name: &str, threshold: f64) -> CheckReport {
        let worst = self.hom_residual.max(self.range_residual);
        let mut t = Tracker::new(format!("structure recovery [{name}]"), threshold);
        t.trial();
        t.record(worst, || Witness::new("Jordan homomorphism into the Peirce-2 algebra fails", worst).with("w", &self.w));
        t.metric("oc_hom_residual", self.oc_hom_residual);
        t.metric("hom_residual", self.hom_residual);
        t.metric("linearity_residual", self.linearity_residual);
        t.metric("range_residual", self.range_residual);
        t.metric("peirce2_dim", self.peirce2.dim() as f64);
        t.metric("isometry_residual", self.isometry_residual);
        t.metric("bijective", if self.bijective { 1.0 } else { 0.0 });
        t.metric("w_central_symmetry", if self.w_central_symmetry { 1.0 } else { 0.0 });
        if let Some(rt) = self.round_trip {
            t.metric("round_trip", rt);
        }
        t.finish()
    }
}

fn unit_scaled(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let a = random_self_adjoint(alg, rng);
    a.scale_re(1.0 / alg.norm(&a).max(f64::MIN_POSITIVE))
}

pub fn recover_structure(m: &MapUnderTest, trials: usize, seed: u64, opts: RecoveryOptions) -> Result<StructureRecovery> {
    let (a, b) = (&m.source, &m.target);
    let sampler = OcSampler::default_for(a);
    for rep in [check_oc_additive(m, sampler, trials, seed)?, check_oc_quadratic(m, sampler, trials, seed ^ 1)?] {
        if !rep.passed {
            return Err(Error::HypothesisFailed(format!("{} (residual {:.3e})", rep.name, rep.max_residual)));
        }
    }
    let w = m.apply(&a.unit())?;
    let tv = is_tripotent(b, &w)?;
    if !tv.is_tripotent {
        return Err(Error::HypothesisFailed(format!("Phi(1) is not a tripotent (residual {:.3e})", tv.residual)));
    }
    let p2 = peirce2_algebra(b, &w)?;
    let prod_w = |x: &Element, y: &Element| -> Result<Element> {
        p2.embed(&p2.prod(&p2.restrict(x)?, &p2.restrict(y)?))
    };
    let leak = |x: &Element| -> Result<f64> { Ok(b.norm(&(&p2.embed(&p2.restrict(x)?)? - x))) };

    let mut rng = rng_from_seed(seed ^ 0x2545_f491);
    let (mut oc_hom, mut hom, mut lin, mut range, mut iso) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let mut r = child_rng(&mut rng);
        let (x, y) = sample_oc(sampler, a, &mut r)?;
        let (fx, fy) = (m.apply(&x)?, m.apply(&y)?);
        let s = 1.0 + b.norm(&fx) * b.norm(&fy);
        oc_hom = oc_hom.max(b.norm(&(&m.apply(&a.prod(&x, &y))? - &prod_w(&fx, &fy)?)) / s);

        let (x, y) = (unit_scaled(a, &mut r), unit_scaled(a, &mut r));
        let (fx, fy) = (m.apply(&x)?, m.apply(&y)?);
        let s = 1.0 + b.norm(&fx) * b.norm(&fy);
        let mult = b.norm(&(&m.apply(&a.prod(&x, &y))? - &prod_w(&fx, &fy)?)) / s;
        let add = b.norm(&(&(&m.apply(&(&x + &y))? - &fx) - &fy)) / (1.0 + b.norm(&fx) + b.norm(&fy));
        hom = hom.max(mult).max(add);
        let rr = normal(&mut r);
        let l = b.norm(&(&(&m.apply(&(&x.scale_re(rr) + &y))? - &fx.scale_re(rr)) - &fy)) / (rr.abs() + 1.0);
        lin = lin.max(l);
        range = range.max(leak(&fx)? / (1.0 + b.norm(&fx)));
        iso = iso.max((b.norm(&fx) - a.norm(&x)).abs());
    }
    // Pairs of basis elements probe directions random pairs may miss.
    let basis = sa_basis(a);
    for (i, x) in basis.iter().enumerate() {
        for y in basis.iter().skip(i + 1) {
            let (x, y) = (x.scale_re(1.0 / a.norm(x)), y.scale_re(1.0 / a.norm(y)));
            let (fx, fy) = (m.apply(&x)?, m.apply(&y)?);
            let l = b.norm(&(&(&m.apply(&(&x + &y))? - &fx) - &fy)) / 2.0;
            lin = lin.max(l);
        }
    }

    let mut round_trip = None;
    let mut bijective = false;
    let mut central_symmetry = false;
    if m.has_inverse() {
        let mut worst: f64 = 0.0;
        for _ in 0..trials.min(50) {
            let mut r = child_rng(&mut rng);
            let x = random_self_adjoint(a, &mut r);
            let y = random_self_adjoint(b, &mut r);
            worst = worst
                .max(a.norm(&(&m.apply_inverse(&m.apply(&x)?)? - &x)) / (1.0 + a.norm(&x)))
                .max(b.norm(&(&m.apply(&m.apply_inverse(&y)?)? - &y)) / (1.0 + b.norm(&y)));
        }
        round_trip = Some(worst);
        bijective = worst <= 1e-8 && (!opts.isometry_gate || iso <= opts.isometry_threshold);
        if bijective {
            let sv = is_symmetry(b, &w)?;
            central_symmetry = sv.holds && center_residual(b, &w) <= 1e-8 * (1.0 + b.norm(&w));
        }
    }
    Ok(StructureRecovery {
        w,
        peirce2: p2,
        oc_hom_residual: oc_hom,
        hom_residual: hom,
        linearity_residual: lin,
        range_residual: range,
        round_trip,
        bijective,
        w_central_symmetry: central_symmetry,
        isometry_residual: iso,
    })
}

// ---------------------------------------------------------------------------
// The spin-factor counterexample.

/// `phi -> phi + eps sin 2 phi` on the first two coordinates of `t`.
pub fn warp_coordinates(t: &[f64], eps: f64) -> Vec<f64> {
    let mut out = t.to_vec();
    let r = t[0].hypot(t[1]);
    if r > 0.0 {
        let phi = t[1].atan2(t[0]);
        let psi = phi + eps * (2.0 * phi).sin();
        out[0] = r * psi.cos();
        out[1] = r * psi.sin();
    }
    out
}

/// Inverse of [`warp_coordinates`] by fixed-point iteration (a contraction
/// with constant `2 eps < 1`).
pub fn unwarp_coordinates(t: &[f64], eps: f64) -> Vec<f64> {
    let mut out = t.to_vec();
    let r = t[0].hypot(t[1]);
    if r > 0.0 {
        let psi = t[1].atan2(t[0]);
        let mut phi = psi;
        for _ in 0..500 {
            let next = psi - eps * (2.0 * phi).sin();
            let done = (next - phi).abs() <= 1e-16 * (1.0 + psi.abs());
            phi = next;
            if done {
                break;
            }
        }
        out[0] = r * phi.cos();
        out[1] = r * phi.sin();
    }
    out
}

fn spin_sa_parts(alg: &AlgebraHandle, a: &Element) -> Result<(f64, Vec<f64>)> {
    let res = alg.self_adjoint_residual(a);
    if res > 1e-9 * (1.0 + alg.norm(a)) {
        return Err(Error::NotSelfAdjoint { residual: res });
    }
    let v = alg.spin_vector(&alg.real_part(a))?;
    Ok((v.lambda.re, v.real_h()))
}

fn spin_sa(alg: &AlgebraHandle, lambda: f64, t: &[f64]) -> Result<Element> {
    alg.from_spin_vector(&SpinVector::self_adjoint(lambda, t))
}

#[derive(Debug, Clone)]
pub struct SpinCounterexample {
    pub algebra: AlgebraHandle,
    pub epsilon: f64,
    /// `lambda 1 + h -> lambda 1 + F(h)` on self-adjoint elements.
    pub map: MapUnderTest,
}

pub fn build_spin_counterexample(n: usize, epsilon: f64, tol: crate::linalg::Tolerance) -> Result<SpinCounterexample> {
    if n < 3 {
        return Err(Error::ParamOutOfRange(format!("spin dimension {n} must be at least 3")));
    }
    check_epsilon(epsilon)?;
    spin_counterexample_on(&crate::algebra::build_spin_factor(n, tol)?, epsilon)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::ParamOutOfRange(format!("epsilon {epsilon} must lie in (0, 0.5)")));
    }
    Ok(())
}

/// The counterexample on an existing spin factor.
pub fn spin_counterexample_on(alg: &AlgebraHandle, epsilon: f64) -> Result<SpinCounterexample> {
    if !matches!(alg.kind(), AlgebraKind::Spin { .. }) {
        return Err(Error::WrongKind("spin factor"));
    }
    check_epsilon(epsilon)?;
    let (a1, a2) = (alg.clone(), alg.clone());
    let map = MapUnderTest::new(alg, alg, format!("spin counterexample eps={epsilon}"), move |x| {
        let (l, t) = spin_sa_parts(&a1, x)?;
        spin_sa(&a1, l, &warp_coordinates(&t, epsilon))
    })
    .with_inverse(move |y| {
        let (l, t) = spin_sa_parts(&a2, y)?;
        spin_sa(&a2, l, &unwarp_coordinates(&t, epsilon))
    });
    Ok(SpinCounterexample { algebra: alg.clone(), epsilon, map })
}

/// Coefficients `(c1, c2)` with `U_a(b) = c1 1 + c2 h` for `a = alpha 1 + h`,
/// `b = (t + s alpha) 1 + s h` and `h^2 = ||h||^2 1`.
pub fn spin_u_expansion(alpha: f64, t: f64, s: f64, hn: f64) -> (f64, f64) {
    let h2 = hn * hn;
    (
        alpha * alpha * t + s * alpha.powi(3) + (3.0 * alpha * s + t) * h2,
        2.0 * alpha * t + 3.0 * s * alpha * alpha + s * h2,
    )
}

/// The same expansion with `(2 alpha s + t)` in the scalar part and no
/// `s ||h||^2` in the vector part, as it is sometimes printed.
pub fn spin_u_expansion_printed(alpha: f64, t: f64, s: f64, hn: f64) -> (f64, f64) {
    let h2 = hn * hn;
    (alpha * alpha * t + s * alpha.powi(3) + (2.0 * alpha * s + t) * h2, 2.0 * alpha * t + 3.0 * s * alpha * alpha)
}

fn closed_form_report(cx: &SpinCounterexample, trials: usize, seed: u64) -> Result<CheckReport> {
    let alg = &cx.algebra;
    let hd = alg.dim() - 1;
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new("closed-form U_a(b) expansion", 1e-10);
    let one_case = |alpha: f64, tt: f64, s: f64, dir: &[f64], t: &mut Tracker| -> Result<()> {
        t.trial();
        let hn = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = spin_sa(alg, alpha, dir)?;
        let bt: Vec<f64> = dir.iter().map(|x| s * x).collect();
        let b = spin_sa(alg, tt + s * alpha, &bt)?;
        let (c1, c2) = spin_u_expansion(alpha, tt, s, hn);
        let expect = spin_sa(alg, c1, &dir.iter().map(|x| c2 * x).collect::<Vec<_>>())?;
        let direct = alg.norm(&(&u_op(alg, &a, &b) - &expect)) / (1.0 + alg.norm(&expect));
        let fdir = warp_coordinates(dir, cx.epsilon);
        let image = spin_sa(alg, c1, &fdir.iter().map(|x| c2 * x).collect::<Vec<_>>())?;
        let mapped = alg.norm(&(&cx.map.apply(&u_op(alg, &a, &b))? - &image)) / (1.0 + alg.norm(&image));
        let res = direct.max(mapped);
        t.record(res, || Witness::new("closed form disagrees", res).with("a", &a).with("b", &b));
        Ok(())
    };
    let mut e1 = vec![0.0; hd];
    e1[0] = 1.0;
    one_case(1.0, 0.0, 1.0, &e1, &mut t)?;
    for _ in 0..trials {
        let mut r = child_rng(&mut rng);
        let dir: Vec<f64> = (0..hd).map(|_| normal(&mut r)).collect();
        let (alpha, tt, s) = (normal(&mut r), normal(&mut r), normal(&mut r));
        one_case(alpha, tt, s, &dir, &mut t)?;
    }
    let (c1, c2) = spin_u_expansion(1.0, 0.0, 1.0, 1.0);
    let (p1, p2) = spin_u_expansion_printed(1.0, 0.0, 1.0, 1.0);
    t.metric("spot_scalar", c1);
    t.metric("spot_vector", c2);
    t.metric("printed_expansion_gap", (c1 - p1).abs() + (c2 - p2).abs());
    t.note("spot value alpha=1, t=0, s=1, |h|=1 gives U_a(b) = 4*1 + 4h");
    Ok(t.finish())
}

/// Witness pair `(i e1, i e2)` for the failure of global additivity.
pub fn additivity_witness(cx: &SpinCounterexample) -> Result<(Element, Element, f64)> {
    let alg = &cx.algebra;
    let hd = alg.dim() - 1;
    let mut t1 = vec![0.0; hd];
    let mut t2 = vec![0.0; hd];
    t1[0] = 1.0;
    t2[1] = 1.0;
    let (x, y) = (spin_sa(alg, 0.0, &t1)?, spin_sa(alg, 0.0, &t2)?);
    let gap = alg.norm(&(&(&cx.map.apply(&(&x + &y))? - &cx.map.apply(&x)?) - &cx.map.apply(&y)?));
    Ok((x, y, gap))
}

/// The four verdicts on the counterexample plus the closed-form cross-check
/// and the structure-recovery linearity control.
pub fn verify_counterexample(cx: &SpinCounterexample, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let alg = &cx.algebra;
    let m = &cx.map;
    let mut out = vec![
        check_oc_additive(m, OcSampler::Spin, trials, seed)?,
        check_oc_quadratic(m, OcSampler::Spin, trials, seed ^ 1)?,
        closed_form_report(cx, trials.min(200), seed ^ 2)?,
    ];

    let (x, y, gap) = additivity_witness(cx)?;
    let mut t = Tracker::new(format!("global additivity (control) [{}]", m.label), 1e-8);
    t.trial();
    t.record(gap, || Witness::new("Phi(e1 + e2) != Phi(e1) + Phi(e2)", gap).with("a", &x).with("b", &y));
    let mut rng = rng_from_seed(seed ^ 3);
    for _ in 0..trials.min(100) {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (p, q) = (random_self_adjoint(alg, &mut r), random_self_adjoint(alg, &mut r));
        let res = alg.norm(&(&(&m.apply(&(&p + &q))? - &m.apply(&p)?) - &m.apply(&q)?));
        t.record(res, || Witness::new("non-additive pair", res).with("a", &p).with("b", &q));
    }
    t.metric("witness_gap", gap);
    out.push(t.finish().negative_control());

    let mut t = Tracker::new(format!("bijectivity and homogeneity [{}]", m.label), 1e-10);
    let zero = m.apply(&alg.zero())?;
    t.record(alg.norm(&zero), || Witness::new("F(0) != 0", alg.norm(&zero)));
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let a = random_self_adjoint(alg, &mut r);
        let fa = m.apply(&a)?;
        let s = 1.0 + alg.norm(&a);
        let trip = alg.norm(&(&m.apply_inverse(&fa)? - &a)).max(alg.norm(&(&m.apply(&m.apply_inverse(&a)?)? - &a))) / s;
        let mut hom: f64 = 0.0;
        for k in [-2.0, -1.0, 0.5, 3.0] {
            hom = hom.max(alg.norm(&(&m.apply(&a.scale_re(k))? - &fa.scale_re(k))) / (s * k.abs()));
        }
        let (_, t0) = spin_sa_parts(alg, &a)?;
        let (_, t1) = spin_sa_parts(alg, &fa)?;
        let n0 = t0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n1 = t1.iter().map(|x| x * x).sum::<f64>().sqrt();
        let normres = (n0 - n1).abs() / s;
        t.metric_max("round_trip", trip);
        t.metric_max("homogeneity", hom);
        t.metric_max("norm_preservation", normres);
        let res = trip.max(hom).max(normres);
        t.record(res, || Witness::new("bijectivity or homogeneity fails", res).with("a", &a));
    }
    out.push(t.finish());

    let rec = recover_structure(m, trials.min(100), seed ^ 4, RecoveryOptions::default())?;
    let mut t = Tracker::new(format!("structure recovery linearity (control) [{}]", m.label), 1e-6);
    t.trial();
    t.record(rec.linearity_residual, || Witness::new("structure recovery meets a non-linear map", rec.linearity_residual));
    t.metric("linearity_residual", rec.linearity_residual);
    t.metric("oc_hom_residual", rec.oc_hom_residual);
    out.push(t.finish().negative_control());
    Ok(out)
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
    fn warp_is_inverted_and_oddly_homogeneous() {
        let t = [0.3, -1.2, 0.7];
        let w = warp_coordinates(&t, 0.3);
        let back = unwarp_coordinates(&w, 0.3);
        for (x, y) in t.iter().zip(&back) {
            assert!((x - y).abs() < 1e-13);
        }
        let neg: Vec<f64> = t.iter().map(|x| -2.0 * x).collect();
        for (x, y) in warp_coordinates(&neg, 0.3).iter().zip(&w) {
            assert!((x + 2.0 * y).abs() < 1e-13);
        }
    }

    #[test]
    fn witness_gap_matches_closed_form() {
        let cx = build_spin_counterexample(3, 0.3, Tolerance::default()).unwrap();
        let (_, _, gap) = additivity_witness(&cx).unwrap();
        // 2 sqrt(2) sin(0.15)
        assert!((gap - 0.422_674_867_359_742_5).abs() < 1e-12, "{gap}");
    }

    #[test]
    fn expansion_spot_values() {
        assert_eq!(spin_u_expansion(1.0, 0.0, 1.0, 1.0), (4.0, 4.0));
        assert_eq!(spin_u_expansion_printed(1.0, 0.0, 1.0, 1.0), (3.0, 3.0));
    }

    #[test]
    fn counterexample_parameters_are_validated() {
        assert!(matches!(build_spin_counterexample(2, 0.3, Tolerance::default()), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(build_spin_counterexample(3, 0.5, Tolerance::default()), Err(Error::ParamOutOfRange(_))));
    }

    #[test]
    fn counterexample_verdicts() {
        let cx = build_spin_counterexample(3, 0.3, Tolerance::default()).unwrap();
        let reps = verify_counterexample(&cx, 60, 7).unwrap();
        for r in &reps {
            assert!(r.ok(), "{}", r.summary_line());
        }
        assert!(reps[0].metric("raw_max").unwrap() <= 1e-9);
        assert!(reps.last().unwrap().metric("linearity_residual").unwrap() >= 0.05);
    }

    #[test]
    fn squaring_fails_oc_additivity_and_negation_is_quadratic() {
        let alg = h(2);
        let rep = check_oc_additive(&coordinate_square_map(&alg), OcSampler::Diagonal, 20, 1).unwrap();
        assert!(!rep.passed && rep.witness.is_some());
        let rep = check_oc_quadratic(&negation_map(&alg), OcSampler::SameGenerator, 20, 1).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn piecewise_hom_on_unitaries() {
        let alg = h(3);
        assert!(check_piecewise_hom_on_unitaries(&star_map(&alg), 20, 2).unwrap().passed);
        let th = random_conjugation(&alg, 5).unwrap();
        assert!(check_piecewise_hom_on_unitaries(&th, 20, 2).unwrap().passed);
        let alg2 = h(2);
        let w = random_unitary(&alg2, &mut rng_from_seed(3));
        let rep = check_piecewise_hom_on_unitaries(&fixed_u_operator_map(&alg2, &w).unwrap(), 20, 2).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn generator_maps() {
        let alg = h(3);
        let a = random_self_adjoint(&alg, &mut rng_from_seed(1));
        let f = generator_of(&star_map(&alg), &a).unwrap();
        assert!(alg.norm(&(&f + &a)) < 1e-8);
        let th = random_conjugation(&alg, 2).unwrap();
        let f = generator_of(&th, &a).unwrap();
        assert!(alg.norm(&(&f - &th.apply(&a).unwrap())) < 1e-8);
        assert!(check_generator_properties(&th, 10, 3).unwrap().passed);
        let c = alg.unit().scale_re(0.5);
        let ef = exp_form_map(&th, Beta::ScaledTrace { kappa: 0.3 }, &c).unwrap();
        assert!(check_generator_properties(&ef, 10, 3).unwrap().passed);
        let warp = unitary_warp_map(&h(2), 0.4);
        assert!(!check_generator_properties(&warp, 10, 3).unwrap().passed);
    }

    #[test]
    fn preserver_form() {
        let alg = h(3);
        let id = identity_map(&alg);
        let ef = exp_form_map(&id, Beta::Zero, &alg.unit()).unwrap();
        assert!(verify_unitary_preserver_form(&ef, &id, &Beta::Zero, &alg.unit(), 10, 1).unwrap().passed);
        let th = random_conjugation(&alg, 4).unwrap();
        let beta = Beta::ScaledTrace { kappa: 0.7 };
        let ef = exp_form_map(&th, beta, &alg.unit()).unwrap();
        assert!(verify_unitary_preserver_form(&ef, &th, &beta, &alg.unit(), 10, 1).unwrap().passed);
        let bad = coordinate_square_map(&alg);
        let out = verify_unitary_preserver_form(&ef, &bad, &beta, &alg.unit(), 10, 1);
        assert!(matches!(out, Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn dichotomy_cases() {
        let alg = h(3);
        let th = transpose_map(&alg).unwrap();
        let inv = MapUnderTest::compose(&th, &star_map(&alg)).unwrap();
        assert_eq!(classify_factor_dichotomy(&th, &th, 10, 1).unwrap().case, DichotomyCase::IdentityCase);
        assert_eq!(classify_factor_dichotomy(&inv, &th, 10, 1).unwrap().case, DichotomyCase::InverseCase);
        let tw = eighth_turn_twist(&th);
        assert_eq!(classify_factor_dichotomy(&tw, &th, 10, 1).unwrap().case, DichotomyCase::Neither);
        let sum = build_direct_sum(vec![h(2), h(1)]).unwrap();
        let id = identity_map(&sum);
        assert!(matches!(classify_factor_dichotomy(&id, &id, 3, 1), Err(Error::NotAFactor { center_dim: 2 })));
        let spin = build_spin_factor(4, Tolerance::default()).unwrap();
        let id = identity_map(&spin);
        assert!(matches!(classify_factor_dichotomy(&id, &id, 3, 1), Err(Error::TypeI2Present)));
    }

    #[test]
    fn central_preservation() {
        let alg = h(3);
        let th = random_conjugation(&alg, 8).unwrap();
        assert!(check_central_preservation(&th, 10, 1).unwrap().passed);
        let inv = MapUnderTest::compose(&th, &star_map(&alg)).unwrap();
        assert!(check_central_preservation(&inv, 10, 1).unwrap().passed);
        let sum = build_direct_sum(vec![h(2), h(1)]).unwrap();
        let warp = off_centre_warp_map(&sum, 0.5, 3).unwrap();
        assert!(!check_central_preservation(&warp, 10, 1).unwrap().passed);
        assert!(check_imaginary_unit(&th).unwrap().passed);
    }

    #[test]
    fn structure_recovery_detects_central_symmetry() {
        let sum = build_direct_sum(vec![h(3), h(3)]).unwrap();
        let parts = sum.parts().to_vec();
        let s = sum.from_components(&[parts[0].unit(), -&parts[1].unit()]).unwrap();
        let th = identity_map(&sum);
        let phi = central_symmetry_map(&th, &s).unwrap();
        let rec = recover_structure(&phi, 20, 3, RecoveryOptions::default()).unwrap();
        assert!(rec.hom_residual < 1e-8 && rec.linearity_residual < 1e-8);
        assert!(rec.bijective && rec.w_central_symmetry);
        assert!(sum.norm(&(&rec.w - &s)) < 1e-12);
    }
}
