//! Concrete finite-dimensional JB*-algebra models and element arithmetic.
//!
//! An [`AlgebraHandle`] is a cheap, shareable descriptor of one model. Elements
//! are plain coordinate vectors tagged with the id of the handle that made
//! them; combining elements of different algebras is a programming error and
//! panics in the operator overloads, or returns [`Error::AlgebraMismatch`]
//! through the checked free functions.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, ComplexMatrix, Tolerance};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    algebra_id: u64,
    coords: Vec<C64>,
}

impl Element {
    pub fn algebra_id(&self) -> u64 {
        self.algebra_id
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn scale(&self, c: C64) -> Element {
        self.map(|z| z * c)
    }

    pub fn scale_re(&self, r: f64) -> Element {
        self.map(|z| z * r)
    }

    /// Euclidean norm of the coordinate vector (not the JB*-norm).
    pub fn coord_norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `sum conj(self_j) * other_j`.
    pub fn coord_inner(&self, other: &Element) -> C64 {
        self.assert_same(other);
        self.coords.iter().zip(&other.coords).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Element {
        Element { algebra_id: self.algebra_id, coords: self.coords.iter().map(|&z| f(z)).collect() }
    }

    fn zip(&self, other: &Element, f: impl Fn(C64, C64) -> C64) -> Element {
        self.assert_same(other);
        Element {
            algebra_id: self.algebra_id,
            coords: self.coords.iter().zip(&other.coords).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn assert_same(&self, other: &Element) {
        assert_eq!(
            self.algebra_id, other.algebra_id,
            "elements belong to different algebras"
        );
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.map(|z| -z)
    }
}

impl Mul<f64> for &Element {
    type Output = Element;
    fn mul(self, r: f64) -> Element {
        self.scale_re(r)
    }
}

impl Mul<C64> for &Element {
    type Output = Element;
    fn mul(self, c: C64) -> Element {
        self.scale(c)
    }
}

/// The structural kind of a model.
#[derive(Clone, Debug)]
pub enum AlgebraKind {
    /// Full `M_n(C)` with `(ab + ba)/2`, conjugate transpose and operator norm.
    HermitianMatrix { n: usize },
    /// Spin factor on `C^n` with componentwise conjugation and unit `e_0`.
    Spin { n: usize },
    DirectSum { parts: Vec<AlgebraHandle> },
    /// Peirce-2 space of a tripotent, coordinatized by an orthonormal basis of
    /// the range of `P_2` (columns of `basis`, in ambient coordinates).
    Peirce2 { ambient: AlgebraHandle, e: Element, basis: ComplexMatrix },
}

struct Inner {
    id: u64,
    kind: AlgebraKind,
    dim: usize,
    tol: Tolerance,
    unit: Vec<C64>,
    offsets: Vec<usize>,
    center: OnceLock<Vec<Element>>,
}

#[derive(Clone)]
pub struct AlgebraHandle(Arc<Inner>);

impl fmt::Debug for AlgebraHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgebraHandle(#{} {} dim {})", self.0.id, self.label(), self.0.dim)
    }
}

impl PartialEq for AlgebraHandle {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

/// Self-adjoint-friendly view of a spin-factor element `lambda 1 + h`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinVector {
    pub lambda: C64,
    pub hpart: Vec<C64>,
}

impl SpinVector {
    /// `lambda 1 + i (0, t)` with real `lambda`, the generic self-adjoint element.
    pub fn self_adjoint(lambda: f64, t: &[f64]) -> SpinVector {
        SpinVector { lambda: C64::new(lambda, 0.0), hpart: t.iter().map(|&x| C64::new(0.0, x)).collect() }
    }

    pub fn is_self_adjoint(&self, eps: f64) -> bool {
        self.lambda.im.abs() <= eps && self.hpart.iter().all(|z| z.re.abs() <= eps)
    }

    /// Real coordinates `t` of the `H^-` part when self-adjoint.
    pub fn real_h(&self) -> Vec<f64> {
        self.hpart.iter().map(|z| z.im).collect()
    }
}

impl AlgebraHandle {
    fn new(kind: AlgebraKind, dim: usize, tol: Tolerance, unit: Vec<C64>, offsets: Vec<usize>) -> Self {
        AlgebraHandle(Arc::new(Inner {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            kind,
            dim,
            tol,
            unit,
            offsets,
            center: OnceLock::new(),
        }))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.0.kind
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn tol(&self) -> &Tolerance {
        &self.0.tol
    }

    pub fn label(&self) -> String {
        match &self.0.kind {
            AlgebraKind::HermitianMatrix { n } => format!("H{n}"),
            AlgebraKind::Spin { n } => format!("Spin({n})"),
            AlgebraKind::DirectSum { parts } => {
                parts.iter().map(|p| p.label()).collect::<Vec<_>>().join("+")
            }
            AlgebraKind::Peirce2 { ambient, .. } => format!("Peirce2[{}]", ambient.label()),
        }
    }

    pub fn contains(&self, a: &Element) -> bool {
        a.algebra_id == self.0.id && a.coords.len() == self.0.dim
    }

    pub fn check(&self, a: &Element) -> Result<()> {
        if a.algebra_id != self.0.id {
            return Err(Error::AlgebraMismatch { expected: self.0.id, found: a.algebra_id });
        }
        if a.coords.len() != self.0.dim {
            return Err(Error::DimensionMismatch { expected: self.0.dim, found: a.coords.len() });
        }
        Ok(())
    }

    fn assert_member(&self, a: &Element) {
        if let Err(e) = self.check(a) {
            panic!("{e} in {}", self.label());
        }
    }

    pub fn element(&self, coords: Vec<C64>) -> Result<Element> {
        if coords.len() != self.0.dim {
            return Err(Error::DimensionMismatch { expected: self.0.dim, found: coords.len() });
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Element { algebra_id: self.0.id, coords })
    }

    fn wrap(&self, coords: Vec<C64>) -> Element {
        debug_assert_eq!(coords.len(), self.0.dim);
        Element { algebra_id: self.0.id, coords }
    }

    /// Takes over the coordinates of an element of another handle of the same
    /// dimension (used when rebuilding an identical model).
    pub fn adopt(&self, a: &Element) -> Result<Element> {
        self.element(a.coords.clone())
    }

    pub fn zero(&self) -> Element {
        self.wrap(vec![ZERO; self.0.dim])
    }

    pub fn unit(&self) -> Element {
        self.wrap(self.0.unit.clone())
    }

    pub fn scalar(&self, c: C64) -> Element {
        self.unit().scale(c)
    }

    pub fn basis(&self, j: usize) -> Element {
        let mut v = vec![ZERO; self.0.dim];
        v[j] = ONE;
        self.wrap(v)
    }

    pub fn basis_elements(&self) -> Vec<Element> {
        (0..self.0.dim).map(|j| self.basis(j)).collect()
    }

    /// The Jordan product. Exactly commutative.
    pub fn prod(&self, a: &Element, b: &Element) -> Element {
        self.assert_member(a);
        self.assert_member(b);
        self.wrap(self.raw_prod(&a.coords, &b.coords))
    }

    pub fn sq(&self, a: &Element) -> Element {
        self.prod(a, a)
    }

    pub fn star(&self, a: &Element) -> Element {
        self.assert_member(a);
        self.wrap(self.raw_star(&a.coords))
    }

    /// The JB*-norm.
    pub fn norm(&self, a: &Element) -> f64 {
        self.assert_member(a);
        self.raw_norm(&a.coords)
    }

    /// `a*` and `||a - a*||`.
    pub fn self_adjoint_residual(&self, a: &Element) -> f64 {
        self.norm(&(a - &self.star(a)))
    }

    pub fn real_part(&self, a: &Element) -> Element {
        (a + &self.star(a)).scale_re(0.5)
    }

    pub fn imag_part(&self, a: &Element) -> Element {
        (a - &self.star(a)).scale(C64::new(0.0, -0.5))
    }

    fn raw_prod(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        match &self.0.kind {
            AlgebraKind::HermitianMatrix { n } => {
                let ma = ComplexMatrix::from_vec(*n, *n, a.to_vec()).expect("shape");
                let mb = ComplexMatrix::from_vec(*n, *n, b.to_vec()).expect("shape");
                let ab = ma.matmul(&mb);
                let ba = mb.matmul(&ma);
                ab.as_slice().iter().zip(ba.as_slice()).map(|(x, y)| (x + y) * 0.5).collect()
            }
            AlgebraKind::Spin { .. } => {
                let bil: C64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let mut out: Vec<C64> = a.iter().zip(b).map(|(x, y)| a[0] * y + b[0] * x).collect();
                out[0] -= bil;
                out
            }
            AlgebraKind::DirectSum { parts } => {
                let mut out = Vec::with_capacity(self.0.dim);
                for (k, part) in parts.iter().enumerate() {
                    let r = self.0.offsets[k]..self.0.offsets[k + 1];
                    out.extend(part.raw_prod(&a[r.clone()], &b[r]));
                }
                out
            }
            AlgebraKind::Peirce2 { ambient, e, basis } => {
                let x = ambient.wrap(basis.mul_vec(a));
                let z = ambient.wrap(basis.mul_vec(b));
                // {x,e,z} + {z,e,x}, halved, keeps the product exactly commutative.
                let t1 = ambient.triple(&x, e, &z);
                let t2 = ambient.triple(&z, e, &x);
                let t = (&t1 + &t2).scale_re(0.5);
                basis.adjoint().mul_vec(&t.coords)
            }
        }
    }

    fn raw_star(&self, a: &[C64]) -> Vec<C64> {
        match &self.0.kind {
            AlgebraKind::HermitianMatrix { n } => {
                let m = ComplexMatrix::from_vec(*n, *n, a.to_vec()).expect("shape");
                m.adjoint().into_vec()
            }
            AlgebraKind::Spin { .. } => {
                let mut out: Vec<C64> = a.iter().map(|z| -z.conj()).collect();
                out[0] += a[0].conj() * 2.0;
                out
            }
            AlgebraKind::DirectSum { parts } => {
                let mut out = Vec::with_capacity(self.0.dim);
                for (k, part) in parts.iter().enumerate() {
                    out.extend(part.raw_star(&a[self.0.offsets[k]..self.0.offsets[k + 1]]));
                }
                out
            }
            AlgebraKind::Peirce2 { ambient, e, basis } => {
                let x = ambient.wrap(basis.mul_vec(a));
                let t = ambient.triple(e, &x, e);
                basis.adjoint().mul_vec(&t.coords)
            }
        }
    }

    fn raw_norm(&self, a: &[C64]) -> f64 {
        match &self.0.kind {
            AlgebraKind::HermitianMatrix { n } => {
                operator_norm(&ComplexMatrix::from_vec(*n, *n, a.to_vec()).expect("shape"))
            }
            AlgebraKind::Spin { .. } => {
                let n2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                let bil: C64 = a.iter().map(|z| z * z).sum();
                (n2 + (n2 * n2 - bil.norm_sqr()).max(0.0).sqrt()).sqrt()
            }
            AlgebraKind::DirectSum { parts } => parts
                .iter()
                .enumerate()
                .map(|(k, p)| p.raw_norm(&a[self.0.offsets[k]..self.0.offsets[k + 1]]))
                .fold(0.0, f64::max),
            AlgebraKind::Peirce2 { ambient, basis, .. } => ambient.raw_norm(&basis.mul_vec(a)),
        }
    }

    /// `{x, y, z} = (x o y*) o z + (z o y*) o x - (x o z) o y*`.
    pub fn triple(&self, x: &Element, y: &Element, z: &Element) -> Element {
        let ys = self.star(y);
        let a = self.prod(&self.prod(x, &ys), z);
        let b = self.prod(&self.prod(z, &ys), x);
        let c = self.prod(&self.prod(x, z), &ys);
        &(&a + &b) - &c
    }

    // Hermitian-matrix helpers.

    pub fn matrix_size(&self) -> Option<usize> {
        match self.0.kind {
            AlgebraKind::HermitianMatrix { n } => Some(n),
            _ => None,
        }
    }

    pub fn to_matrix(&self, a: &Element) -> Result<ComplexMatrix> {
        self.check(a)?;
        let n = self.matrix_size().ok_or(Error::WrongKind("hermitian_matrix algebra"))?;
        Ok(ComplexMatrix::from_vec(n, n, a.coords.clone())?)
    }

    pub fn from_matrix(&self, m: &ComplexMatrix) -> Result<Element> {
        let n = self.matrix_size().ok_or(Error::WrongKind("hermitian_matrix algebra"))?;
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch { expected: n * n, found: m.rows() * m.cols() });
        }
        self.element(m.as_slice().to_vec())
    }

    // Spin helpers.

    pub fn spin_vector(&self, a: &Element) -> Result<SpinVector> {
        self.check(a)?;
        match self.0.kind {
            AlgebraKind::Spin { .. } => {
                Ok(SpinVector { lambda: a.coords[0], hpart: a.coords[1..].to_vec() })
            }
            _ => Err(Error::WrongKind("spin factor")),
        }
    }

    pub fn from_spin_vector(&self, v: &SpinVector) -> Result<Element> {
        match self.0.kind {
            AlgebraKind::Spin { .. } => {
                let mut coords = vec![v.lambda];
                coords.extend_from_slice(&v.hpart);
                self.element(coords)
            }
            _ => Err(Error::WrongKind("spin factor")),
        }
    }

    // Direct-sum helpers.

    pub fn parts(&self) -> &[AlgebraHandle] {
        match &self.0.kind {
            AlgebraKind::DirectSum { parts } => parts,
            _ => std::slice::from_ref(self),
        }
    }

    pub fn component(&self, a: &Element, k: usize) -> Result<Element> {
        self.check(a)?;
        match &self.0.kind {
            AlgebraKind::DirectSum { parts } => {
                let part = parts.get(k).ok_or(Error::WrongKind("valid summand index"))?;
                Ok(part.wrap(a.coords[self.0.offsets[k]..self.0.offsets[k + 1]].to_vec()))
            }
            _ if k == 0 => Ok(a.clone()),
            _ => Err(Error::WrongKind("valid summand index")),
        }
    }

    pub fn from_components(&self, comps: &[Element]) -> Result<Element> {
        let parts = self.parts();
        if comps.len() != parts.len() {
            return Err(Error::DimensionMismatch { expected: parts.len(), found: comps.len() });
        }
        let mut coords = Vec::with_capacity(self.0.dim);
        for (p, c) in parts.iter().zip(comps) {
            p.check(c)?;
            coords.extend_from_slice(&c.coords);
        }
        self.element(coords)
    }

    // Peirce-2 helpers.

    /// Ambient element for Peirce-2 coordinates.
    pub fn embed(&self, y: &Element) -> Result<Element> {
        self.check(y)?;
        match &self.0.kind {
            AlgebraKind::Peirce2 { ambient, basis, .. } => Ok(ambient.wrap(basis.mul_vec(&y.coords))),
            _ => Err(Error::WrongKind("Peirce-2 algebra")),
        }
    }

    /// Peirce-2 coordinates of an ambient element (orthogonal projection onto the carrier).
    pub fn restrict(&self, x: &Element) -> Result<Element> {
        match &self.0.kind {
            AlgebraKind::Peirce2 { ambient, basis, .. } => {
                ambient.check(x)?;
                Ok(self.wrap(basis.adjoint().mul_vec(&x.coords)))
            }
            _ => Err(Error::WrongKind("Peirce-2 algebra")),
        }
    }

    pub fn ambient(&self) -> Option<&AlgebraHandle> {
        match &self.0.kind {
            AlgebraKind::Peirce2 { ambient, .. } => Some(ambient),
            _ => None,
        }
    }

    pub(crate) fn center_cache(&self) -> &OnceLock<Vec<Element>> {
        &self.0.center
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.0.offsets
    }
}

pub fn build_hermitian_matrix_algebra(n: usize, tol: Tolerance) -> Result<AlgebraHandle> {
    if !(1..=12).contains(&n) {
        return Err(Error::SizeOutOfRange { kind: "hermitian_matrix", n });
    }
    tol.validate()?;
    let unit = ComplexMatrix::identity(n).into_vec();
    Ok(AlgebraHandle::new(AlgebraKind::HermitianMatrix { n }, n * n, tol, unit, vec![0, n * n]))
}

pub fn build_spin_factor(n: usize, tol: Tolerance) -> Result<AlgebraHandle> {
    if !(3..=64).contains(&n) {
        return Err(Error::SizeOutOfRange { kind: "spin", n });
    }
    tol.validate()?;
    let mut unit = vec![ZERO; n];
    unit[0] = ONE;
    Ok(AlgebraHandle::new(AlgebraKind::Spin { n }, n, tol, unit, vec![0, n]))
}

pub fn build_direct_sum(parts: Vec<AlgebraHandle>) -> Result<AlgebraHandle> {
    let tol = *parts.first().ok_or(Error::EmptyParts)?.tol();
    let mut offsets = vec![0];
    let mut unit = Vec::new();
    for p in &parts {
        offsets.push(offsets.last().unwrap() + p.dim());
        unit.extend(p.unit().coords);
    }
    let dim = *offsets.last().unwrap();
    Ok(AlgebraHandle::new(AlgebraKind::DirectSum { parts }, dim, tol, unit, offsets))
}

pub(crate) fn build_peirce2(ambient: &AlgebraHandle, e: &Element, basis: ComplexMatrix) -> AlgebraHandle {
    let unit = basis.adjoint().mul_vec(e.coords());
    let dim = basis.cols();
    AlgebraHandle::new(
        AlgebraKind::Peirce2 { ambient: ambient.clone(), e: e.clone(), basis },
        dim,
        *ambient.tol(),
        unit,
        vec![0, dim],
    )
}

pub fn jordan_product(alg: &AlgebraHandle, a: &Element, b: &Element) -> Result<Element> {
    alg.check(a)?;
    alg.check(b)?;
    Ok(alg.prod(a, b))
}

pub fn involution(alg: &AlgebraHandle, a: &Element) -> Result<Element> {
    alg.check(a)?;
    Ok(alg.star(a))
}

pub fn jbstar_norm(alg: &AlgebraHandle, a: &Element) -> Result<f64> {
    alg.check(a)?;
    Ok(alg.norm(a))
}
