//! Tripotents, Peirce projections and Peirce-2 algebras.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{build_peirce2, AlgebraHandle, Element};
use crate::calculus::operator_of;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, operator_norm, svd, ComplexMatrix};
use crate::report::{CheckReport, Tracker, Witness};
use crate::sample::{child_rng, random_tripotent, random_with, rng_from_seed, Flavor, SampleRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripotentVerdict {
    pub is_tripotent: bool,
    pub residual: f64,
}

pub fn is_tripotent(alg: &AlgebraHandle, e: &Element) -> Result<TripotentVerdict> {
    alg.check(e)?;
    let residual = alg.norm(&(e - &alg.triple(e, e, e)));
    let n = alg.norm(e);
    Ok(TripotentVerdict {
        is_tripotent: residual <= alg.tol().cluster_eps * (1.0 + n * n * n),
        residual,
    })
}

/// `L(x, y) : z -> {x, y, z}`.
pub fn l_operator(alg: &AlgebraHandle, x: &Element, y: &Element) -> Result<ComplexMatrix> {
    alg.check(x)?;
    alg.check(y)?;
    Ok(operator_of(alg, |z| alg.triple(x, y, z)))
}

/// Matrix `Q~` with `Q(e) x = Q~ conj(x)`, since `Q(e) : x -> {e, x, e}` is conjugate-linear.
pub fn q_matrix(alg: &AlgebraHandle, e: &Element) -> Result<ComplexMatrix> {
    alg.check(e)?;
    Ok(operator_of(alg, |x| alg.triple(e, x, e)))
}

#[derive(Debug, Clone)]
pub struct PeirceSystem {
    pub e: Element,
    pub l: ComplexMatrix,
    pub p2: ComplexMatrix,
    pub p1: ComplexMatrix,
    pub p0: ComplexMatrix,
    /// `||P2 - Q(e)^2||`.
    pub q_residual: f64,
    /// Worst defect among the sum, idempotency, orthogonality and `P2 e = e` laws.
    pub residual: f64,
}

impl PeirceSystem {
    pub fn projections(&self) -> [&ComplexMatrix; 3] {
        [&self.p0, &self.p1, &self.p2]
    }

    /// Worst defect of the projection laws.
    pub fn law_defects(&self) -> (f64, f64, f64) {
        let d = self.p2.rows();
        let id = ComplexMatrix::identity(d);
        let sum = &(&self.p2 + &self.p1) + &self.p0;
        let sum_defect = operator_norm(&(&sum - &id));
        let ps = self.projections();
        let mut idem: f64 = 0.0;
        let mut orth: f64 = 0.0;
        for i in 0..3 {
            idem = idem.max(operator_norm(&(&ps[i].matmul(ps[i]) - ps[i])));
            for j in 0..3 {
                if i != j {
                    orth = orth.max(operator_norm(&ps[i].matmul(ps[j])));
                }
            }
        }
        (sum_defect, idem, orth)
    }
}

pub fn peirce_system(alg: &AlgebraHandle, e: &Element) -> Result<PeirceSystem> {
    let v = is_tripotent(alg, e)?;
    if !v.is_tripotent {
        return Err(Error::NotTripotent { residual: v.residual });
    }
    let d = alg.dim();
    let id = ComplexMatrix::identity(d);
    let l = l_operator(alg, e, e)?;
    let two_l = l.scale(C64::new(2.0, 0.0));
    let i_minus_l = &id - &l;
    let p2 = l.matmul(&(&two_l - &id));
    let p1 = l.matmul(&i_minus_l).scale(C64::new(4.0, 0.0));
    let p0 = i_minus_l.matmul(&(&id - &two_l));
    let q = q_matrix(alg, e)?;
    let q_residual = operator_norm(&(&p2 - &q.matmul(&q.conj())));

    let mut sys = PeirceSystem { e: e.clone(), l, p2, p1, p0, q_residual, residual: 0.0 };
    let (s, i, o) = sys.law_defects();
    let fixed = alg.element(sys.p2.mul_vec(e.coords()))?;
    let fix_defect = (&fixed - e).coord_norm();
    sys.residual = s.max(i).max(o).max(fix_defect).max(q_residual);
    let scale = 1.0 + operator_norm(&sys.l).powi(2);
    if sys.residual > 1e-8 * scale {
        return Err(Error::IllConditioned(format!(
            "Peirce projection laws hold only to {:.3e}",
            sys.residual
        )));
    }
    Ok(sys)
}

/// Eigenprojections of `L(e,e)` at `1`, `1/2`, `0`, as an independent path to the
/// Peirce projections. `L(e,e)` is hermitian in the coordinate inner product for
/// the models here, so the spectral projections are orthogonal.
pub fn eigen_peirce_projections(alg: &AlgebraHandle, e: &Element) -> Result<[ComplexMatrix; 3]> {
    let l = l_operator(alg, e, e)?;
    let herm = (&l + &l.adjoint()).scale(C64::new(0.5, 0.0));
    let eig = hermitian_eig(&herm, alg.tol())?;
    let d = alg.dim();
    let mut out = [ComplexMatrix::zeros(d, d), ComplexMatrix::zeros(d, d), ComplexMatrix::zeros(d, d)];
    for (j, &lam) in eig.values.iter().enumerate() {
        let idx = [0.0, 0.5, 1.0]
            .iter()
            .position(|&t| (lam - t).abs() < 1e-6)
            .ok_or_else(|| Error::IllConditioned(format!("L(e,e) eigenvalue {lam} outside {{0, 1/2, 1}}")))?;
        let v = eig.vectors.column(j);
        let vm = ComplexMatrix::from_columns(d, &[v])?;
        out[idx] = &out[idx] + &vm.matmul(&vm.adjoint());
    }
    Ok(out)
}

/// The Peirce-2 JB*-algebra of `e` with product `{a, e, b}`, involution
/// `{e, a, e}` and unit `e`.
pub fn peirce2_algebra(alg: &AlgebraHandle, e: &Element) -> Result<AlgebraHandle> {
    let sys = peirce_system(alg, e)?;
    let dec = svd(&sys.p2)?;
    let top = dec.singular_values.first().copied().unwrap_or(0.0);
    let cols = dec.range_basis(alg.tol().abs_eps * top.max(f64::MIN_POSITIVE));
    if cols.is_empty() || top == 0.0 {
        return Err(Error::PreconditionFailed("the zero tripotent has a trivial Peirce-2 space".into()));
    }
    let basis = ComplexMatrix::from_columns(alg.dim(), &cols)?;
    let p2alg = build_peirce2(alg, e, basis);

    // The derived structure must itself be a JB*-algebra.
    let mut rng = rng_from_seed(0x9e37_79b9);
    for _ in 0..4 {
        let a = random_with(&p2alg, &mut rng, Flavor::General);
        let b = random_with(&p2alg, &mut rng, Flavor::General);
        let b2 = p2alg.sq(&b);
        let jordan = p2alg.norm(&(&p2alg.prod(&p2alg.prod(&a, &b), &b2) - &p2alg.prod(&p2alg.prod(&a, &b2), &b)));
        let na = p2alg.norm(&a);
        let nb = p2alg.norm(&b);
        let axiom = (p2alg.norm(&crate::calculus::u_op(&p2alg, &a, &p2alg.star(&a))) - na.powi(3)).abs();
        let unit = p2alg.norm(&(&p2alg.prod(&p2alg.unit(), &a) - &a));
        if jordan > 1e-8 * (1.0 + na) * (1.0 + nb).powi(3) || axiom > 1e-6 * (1.0 + na.powi(3)) || unit > 1e-8 * (1.0 + na) {
            return Err(Error::VerificationFailed(format!(
                "Peirce-2 structure: Jordan {jordan:.3e}, axiom {axiom:.3e}, unit {unit:.3e}"
            )));
        }
    }
    Ok(p2alg)
}

/// Random element of the Peirce-2 algebra with JB*-norm one.
fn unit_sample(p2alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let a = random_with(p2alg, rng, Flavor::General);
    a.scale_re(1.0 / p2alg.norm(&a).max(f64::MIN_POSITIVE))
}

/// Ambient triple product against the Peirce-2 algebra's own triple product
/// on norm-one elements of the Peirce-2 space.
pub fn kaup_identity_check(alg: &AlgebraHandle, e: &Element, trials: usize, seed: u64) -> Result<CheckReport> {
    let p2alg = peirce2_algebra(alg, e)?;
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("kaup identity [{}]", alg.label()), 1e-7);
    let mut leak: f64 = 0.0;
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let (a, b, c) = (unit_sample(&p2alg, &mut r), unit_sample(&p2alg, &mut r), unit_sample(&p2alg, &mut r));
        let ambient = alg.triple(&p2alg.embed(&a)?, &p2alg.embed(&b)?, &p2alg.embed(&c)?);
        let back = p2alg.embed(&p2alg.restrict(&ambient)?)?;
        leak = leak.max(alg.norm(&(&ambient - &back)));
        let derived = p2alg.embed(&p2alg.triple(&a, &b, &c))?;
        let res = alg.norm(&(&ambient - &derived));
        t.record(res, || Witness::new("{a,b,c} vs Peirce-2 triple product", res).with("a", &a).with("b", &b).with("c", &c));
    }
    t.metric("peirce2_dim", p2alg.dim() as f64);
    t.metric("range_leak", leak);
    Ok(t.finish())
}

/// Peirce laws on random tripotents.
pub fn peirce_laws_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("peirce projections [{}]", alg.label()), 1e-8);
    for _ in 0..trials {
        t.trial();
        let mut r = child_rng(&mut rng);
        let e = random_tripotent(alg, &mut r);
        let sys = peirce_system(alg, &e)?;
        let (s, i, o) = sys.law_defects();
        t.metric_max("sum_defect", s);
        t.metric_max("idempotent_defect", i);
        t.metric_max("orthogonality_defect", o);
        t.metric_max("q_squared_defect", sys.q_residual);
        let worst = s.max(i).max(o);
        t.record(worst, || Witness::new("Peirce projection laws", worst).with("e", &e));
    }
    Ok(t.finish())
}
