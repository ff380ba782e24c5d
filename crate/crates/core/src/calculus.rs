//! Multiplication and U-operators, triple products, operator commutativity,
//! centre, invertibility, spectrum and functional calculus.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::algebra::{AlgebraHandle, AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, merge_clusters, operator_norm, real_roots, svd, ComplexMatrix};

/// Matrix (in the algebra basis) of the linear map `x -> f(x)`.
pub fn operator_of(alg: &AlgebraHandle, f: impl Fn(&Element) -> Element) -> ComplexMatrix {
    let cols: Vec<Vec<C64>> = alg.basis_elements().iter().map(|x| f(x).into_coords()).collect();
    ComplexMatrix::from_columns(alg.dim(), &cols).expect("operator columns")
}

pub fn mult_operator(alg: &AlgebraHandle, a: &Element) -> Result<ComplexMatrix> {
    alg.check(a)?;
    Ok(operator_of(alg, |x| alg.prod(a, x)))
}

/// `U_a(b) = 2 (a o b) o a - a^2 o b`.
pub fn u_operator(alg: &AlgebraHandle, a: &Element, b: &Element) -> Result<Element> {
    alg.check(a)?;
    alg.check(b)?;
    Ok(u_op(alg, a, b))
}

pub(crate) fn u_op(alg: &AlgebraHandle, a: &Element, b: &Element) -> Element {
    let ab = alg.prod(a, b);
    &alg.prod(&ab, a).scale_re(2.0) - &alg.prod(&alg.sq(a), b)
}

/// `U_{a,b}(c) = (a o c) o b + (b o c) o a - (a o b) o c`, so that `U_{a,a} = U_a`.
pub fn u_operator_bilinear(alg: &AlgebraHandle, a: &Element, b: &Element, c: &Element) -> Result<Element> {
    alg.check(a)?;
    alg.check(b)?;
    alg.check(c)?;
    let x = alg.prod(&alg.prod(a, c), b);
    let y = alg.prod(&alg.prod(b, c), a);
    let z = alg.prod(&alg.prod(a, b), c);
    Ok(&(&x + &y) - &z)
}

pub fn triple_product(alg: &AlgebraHandle, x: &Element, y: &Element, z: &Element) -> Result<Element> {
    alg.check(x)?;
    alg.check(y)?;
    alg.check(z)?;
    Ok(alg.triple(x, y, z))
}

/// `[a, c, b] = (a o c) o b - a o (c o b)`.
pub fn associator(alg: &AlgebraHandle, a: &Element, c: &Element, b: &Element) -> Result<Element> {
    alg.check(a)?;
    alg.check(c)?;
    alg.check(b)?;
    Ok(&alg.prod(&alg.prod(a, c), b) - &alg.prod(a, &alg.prod(c, b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OcVerdict {
    pub commutes: bool,
    /// `||M_a M_b - M_b M_a||` (operator norm on coordinates).
    pub residual: f64,
    pub threshold: f64,
    /// Residual within a factor ten of the threshold on either side.
    pub borderline: bool,
}

pub fn operator_commutes(alg: &AlgebraHandle, a: &Element, b: &Element) -> Result<OcVerdict> {
    let ma = mult_operator(alg, a)?;
    let mb = mult_operator(alg, b)?;
    let residual = crate::linalg::operator_norm(&ma.commutator(&mb));
    let threshold = alg.tol().abs_eps * (1.0 + alg.norm(a)) * (1.0 + alg.norm(b));
    Ok(OcVerdict {
        commutes: residual <= threshold,
        residual,
        threshold,
        borderline: residual > threshold / 10.0 && residual < threshold * 10.0,
    })
}

/// Orthonormal (coordinate inner product) basis of the centre.
pub fn center_basis(alg: &AlgebraHandle) -> Vec<Element> {
    alg.center_cache().get_or_init(|| compute_center(alg)).clone()
}

fn compute_center(alg: &AlgebraHandle) -> Vec<Element> {
    if let AlgebraKind::DirectSum { parts } = alg.kind() {
        let mut out = Vec::new();
        for (k, part) in parts.iter().enumerate() {
            for z in center_basis(part) {
                let mut coords = vec![C64::new(0.0, 0.0); alg.dim()];
                coords[alg.offsets()[k]..alg.offsets()[k + 1]].copy_from_slice(z.coords());
                out.push(alg.element(coords).expect("embedded centre element"));
            }
        }
        return out;
    }
    let d = alg.dim();
    let ms: Vec<ComplexMatrix> = alg
        .basis_elements()
        .iter()
        .map(|x| operator_of(alg, |y| alg.prod(x, y)))
        .collect();
    // Gram matrix of z -> ([M_z, M_x])_x over all basis x.
    let mut gram = ComplexMatrix::zeros(d, d);
    for mx in &ms {
        let comms: Vec<ComplexMatrix> = ms.iter().map(|mz| mz.commutator(mx)).collect();
        for p in 0..d {
            for q in p..d {
                let v: C64 = comms[p]
                    .as_slice()
                    .iter()
                    .zip(comms[q].as_slice())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                gram[(p, q)] += v;
                if p != q {
                    gram[(q, p)] += v.conj();
                }
            }
        }
    }
    let eig = hermitian_eig(&gram, alg.tol()).expect("Gram matrix is hermitian");
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = 1e-9 * top.max(f64::MIN_POSITIVE);
    (0..d)
        .filter(|&j| eig.values[j] <= cut)
        .map(|j| alg.element(eig.vectors.column(j)).expect("centre vector"))
        .collect()
}

pub fn is_factor(alg: &AlgebraHandle) -> bool {
    center_basis(alg).len() == 1
}

/// Distance from `z` to the centre, in coordinates.
pub fn center_residual(alg: &AlgebraHandle, z: &Element) -> f64 {
    let mut r = z.clone();
    for c in center_basis(alg) {
        r = &r - &c.scale(c.coord_inner(z));
    }
    r.coord_norm()
}

/// The U-operator `x -> U_a(x)` as a matrix.
pub fn u_matrix(alg: &AlgebraHandle, a: &Element) -> ComplexMatrix {
    operator_of(alg, |x| u_op(alg, a, x))
}

/// Jordan inverse, or `None` when `U_a` is singular.
pub fn is_invertible(alg: &AlgebraHandle, a: &Element) -> Result<Option<Element>> {
    alg.check(a)?;
    let tol = alg.tol();
    let ua = u_matrix(alg, a);
    let dec = svd(&ua)?;
    let largest = dec.singular_values.first().copied().unwrap_or(0.0);
    let smallest = dec.singular_values.last().copied().unwrap_or(0.0);
    if largest == 0.0 || smallest <= tol.abs_eps * largest {
        return Ok(None);
    }
    let rhs = ComplexMatrix::from_columns(alg.dim(), &[a.coords().to_vec()])?;
    let sol = crate::linalg::solve_least_squares(&ua, &rhs, tol)?;
    let b = alg.element(sol.solution.column(0))?;
    let r1 = alg.norm(&(&alg.prod(a, &b) - &alg.unit()));
    let r2 = alg.norm(&(&alg.prod(&alg.sq(a), &b) - a));
    let na = alg.norm(a);
    let scale = (1.0 + na) * (1.0 + na) * (1.0 + alg.norm(&b));
    if r1.max(r2) > tol.cluster_eps * scale {
        return Err(Error::VerificationFailed(format!(
            "inverse candidate leaves residuals {r1:.3e} and {r2:.3e}"
        )));
    }
    Ok(Some(b))
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending eigenvalues with their spectral idempotents.
    pub pairs: Vec<(f64, Element)>,
    /// `||a - sum lambda_i e_i||` plus the worst idempotent-law defect.
    pub residual: f64,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|(l, _)| *l).collect()
    }
}

fn require_self_adjoint(alg: &AlgebraHandle, a: &Element) -> Result<()> {
    alg.check(a)?;
    let residual = alg.self_adjoint_residual(a);
    if residual > alg.tol().abs_eps * (1.0 + alg.norm(a)) * 10.0 {
        return Err(Error::NotSelfAdjoint { residual });
    }
    Ok(())
}

/// Minimal polynomial of `b` (ascending coefficients, monic) from the first
/// linear dependence among its Jordan powers.
fn minimal_polynomial(alg: &AlgebraHandle, b: &Element) -> Vec<f64> {
    let eps = alg.tol().abs_eps;
    let mut qs: Vec<Vec<C64>> = Vec::new();
    let mut r = ComplexMatrix::zeros(alg.dim() + 1, alg.dim() + 1);
    let mut p = alg.unit();
    for k in 0..=alg.dim() {
        let mut v = p.coords().to_vec();
        let pn = p.coord_norm();
        let mut d = vec![C64::new(0.0, 0.0); k];
        for _ in 0..2 {
            for (i, q) in qs.iter().enumerate() {
                let c: C64 = q.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                d[i] += c;
                for (vj, qj) in v.iter_mut().zip(q) {
                    *vj -= c * qj;
                }
            }
        }
        let rn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if k > 0 && rn <= eps * pn.max(1.0) {
            // p_k = sum c_i p_i with R c = d.
            let mut c = vec![C64::new(0.0, 0.0); k];
            for i in (0..k).rev() {
                let mut s = d[i];
                for j in i + 1..k {
                    s -= r[(i, j)] * c[j];
                }
                c[i] = s / r[(i, i)];
            }
            let mut coeffs: Vec<f64> = c.iter().map(|z| -z.re).collect();
            coeffs.push(1.0);
            return coeffs;
        }
        for (i, di) in d.iter().enumerate() {
            r[(i, k)] = *di;
        }
        r[(k, k)] = C64::new(rn, 0.0);
        qs.push(v.iter().map(|z| z / rn).collect());
        p = alg.prod(b, &p);
    }
    unreachable!("Jordan powers span at most dim + 1 vectors")
}

fn normalized_roots(alg: &AlgebraHandle, b: &Element) -> Result<(Vec<f64>, usize)> {
    let coeffs = minimal_polynomial(alg, b);
    let degree = coeffs.len() - 1;
    Ok((real_roots(&coeffs, alg.tol())?, degree))
}

/// `(a - c 1)/s` with `c` the normalized trace and `s` the norm of the
/// difference; `None` when `a` is numerically scalar.
fn centered(alg: &AlgebraHandle, a: &Element) -> (f64, f64, Option<Element>) {
    let one = alg.unit();
    let c = one.coord_inner(a).re / one.coord_inner(&one).re;
    let d = alg.real_part(&(a - &one.scale_re(c)));
    let s = alg.norm(&d);
    if s <= 1e-14 * c.abs() || s == 0.0 {
        return (c, 0.0, None);
    }
    (c, s, Some(d.scale_re(1.0 / s)))
}

pub fn jordan_spectrum(alg: &AlgebraHandle, a: &Element) -> Result<Vec<f64>> {
    require_self_adjoint(alg, a)?;
    if let AlgebraKind::DirectSum { parts } = alg.kind() {
        let mut all = Vec::new();
        for (k, part) in parts.iter().enumerate() {
            all.extend(jordan_spectrum(part, &alg.component(a, k)?)?);
        }
        all.sort_by(f64::total_cmp);
        return Ok(merge_clusters(&all, alg.tol().cluster_eps));
    }
    let (c, s, b) = centered(alg, a);
    let Some(b) = b else {
        return Ok(vec![c]);
    };
    let (roots, _) = normalized_roots(alg, &b)?;
    Ok(roots.into_iter().map(|x| x * s + c).collect())
}

/// Summands are decomposed separately and idempotents for equal
/// eigenvalues are added.
pub fn spectral_decomposition(alg: &AlgebraHandle, a: &Element) -> Result<SpectralDecomposition> {
    require_self_adjoint(alg, a)?;
    let parts = match alg.kind() {
        AlgebraKind::DirectSum { parts } => parts,
        AlgebraKind::HermitianMatrix { .. } => return matrix_decomposition(alg, a),
        _ => return factor_decomposition(alg, a),
    };
    let zeros: Vec<Element> = parts.iter().map(|p| p.zero()).collect();
    let mut pairs: Vec<(f64, Element)> = Vec::new();
    let mut residual: f64 = 0.0;
    for (k, part) in parts.iter().enumerate() {
        let dec = spectral_decomposition(part, &alg.component(a, k)?)?;
        residual = residual.max(dec.residual);
        for (l, e) in dec.pairs {
            let mut comps = zeros.clone();
            comps[k] = e;
            pairs.push((l, alg.from_components(&comps)?));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let gap = alg.tol().cluster_eps * (1.0 + pairs.iter().fold(0.0f64, |m, (l, _)| m.max(l.abs())));
    let mut merged: Vec<(f64, Element, usize)> = Vec::new();
    for (l, e) in pairs {
        match merged.last_mut() {
            Some((m, f, n)) if l - *m / *n as f64 <= gap => {
                *m += l;
                *f = &*f + &e;
                *n += 1;
            }
            _ => merged.push((l, e, 1)),
        }
    }
    let pairs = merged.into_iter().map(|(m, e, n)| (m / n as f64, e)).collect();
    Ok(SpectralDecomposition { pairs, residual })
}

/// Eigenvectors of the matrix, grouped by clustered eigenvalue.
fn matrix_decomposition(alg: &AlgebraHandle, a: &Element) -> Result<SpectralDecomposition> {
    let m = alg.to_matrix(&alg.real_part(a))?;
    let eig = hermitian_eig(&m, alg.tol())?;
    let n = eig.values.len();
    let gap = alg.tol().cluster_eps * (1.0 + eig.values.iter().fold(0.0f64, |x, v| x.max(v.abs())));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match groups.last_mut() {
            Some(g) if eig.values[i] - eig.values[g[0]] <= gap => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let mut pairs = Vec::with_capacity(groups.len());
    let mut recon = ComplexMatrix::zeros(n, n);
    for g in &groups {
        let mut p = ComplexMatrix::zeros(n, n);
        for &k in g {
            let v = eig.vectors.column(k);
            for r in 0..n {
                for c in 0..n {
                    p[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        let l = g.iter().map(|&k| eig.values[k]).sum::<f64>() / g.len() as f64;
        recon = &recon + &p.scale(C64::new(l, 0.0));
        pairs.push((l, alg.from_matrix(&p)?));
    }
    let residual = operator_norm(&(&recon - &m));
    Ok(SpectralDecomposition { pairs, residual })
}

fn factor_decomposition(alg: &AlgebraHandle, a: &Element) -> Result<SpectralDecomposition> {
    let tol = alg.tol();
    let (c, s, b) = centered(alg, a);
    let Some(b) = b else {
        let residual = alg.norm(&(&alg.real_part(a) - &alg.unit().scale_re(c)));
        return Ok(SpectralDecomposition { pairs: vec![(c, alg.unit())], residual });
    };
    let (mu, degree) = normalized_roots(alg, &b)?;
    if mu.is_empty() {
        return Err(Error::IllConditioned("minimal polynomial has no real roots".into()));
    }
    let mut pairs = Vec::with_capacity(mu.len());
    for (j, &mj) in mu.iter().enumerate() {
        let mut x = alg.unit();
        for (i, &mi) in mu.iter().enumerate() {
            if i != j {
                x = (&alg.prod(&b, &x) - &x.scale_re(mi)).scale_re(1.0 / (mj - mi));
            }
        }
        pairs.push((mj * s + c, alg.real_part(&x)));
    }

    let mut sum = alg.zero();
    let mut recon = alg.zero();
    let mut defect: f64 = 0.0;
    for (i, (l, e)) in pairs.iter().enumerate() {
        sum = &sum + e;
        recon = &recon + &e.scale_re(*l);
        defect = defect.max(alg.norm(&(&alg.sq(e) - e)));
        for (_, f) in &pairs[i + 1..] {
            defect = defect.max(alg.norm(&alg.prod(e, f)));
        }
    }
    defect = defect.max(alg.norm(&(&sum - &alg.unit())));
    let residual = alg.norm(&(&recon - &alg.real_part(a))) / (s + c.abs()) + defect;
    if mu.len() != degree || residual > tol.cluster_eps {
        return Err(Error::IllConditioned(format!(
            "{} distinct roots for a degree {degree} minimal polynomial, residual {residual:.3e}",
            mu.len()
        )));
    }
    Ok(SpectralDecomposition { pairs, residual: residual * (s + c.abs()) })
}

pub fn functional_calculus(
    alg: &AlgebraHandle,
    a: &Element,
    f: impl Fn(f64) -> C64,
) -> Result<Element> {
    let dec = spectral_decomposition(alg, a)?;
    Ok(apply_decomposition(alg, &dec, f))
}

pub fn apply_decomposition(
    alg: &AlgebraHandle,
    dec: &SpectralDecomposition,
    f: impl Fn(f64) -> C64,
) -> Element {
    dec.pairs.iter().fold(alg.zero(), |acc, (l, e)| &acc + &e.scale(f(*l)))
}

/// `e^{i t h}` for self-adjoint `h`.
pub fn exp_i(alg: &AlgebraHandle, h: &Element, t: f64) -> Result<Element> {
    if t == 0.0 {
        require_self_adjoint(alg, h)?;
        return Ok(alg.unit());
    }
    functional_calculus(alg, h, |l| C64::from_polar(1.0, t * l))
}

pub fn is_self_adjoint(alg: &AlgebraHandle, a: &Element) -> bool {
    alg.contains(a) && alg.self_adjoint_residual(a) <= alg.tol().abs_eps * (1.0 + alg.norm(a)) * 10.0
}

pub fn is_positive(alg: &AlgebraHandle, a: &Element) -> bool {
    if !is_self_adjoint(alg, a) {
        return false;
    }
    let floor = -alg.tol().cluster_eps * (1.0 + alg.norm(a));
    match jordan_spectrum(alg, a) {
        Ok(spec) => spec.iter().all(|&l| l >= floor),
        Err(_) => false,
    }
}

/// Real polynomial (ascending coefficients) in `a`, evaluated with Jordan powers.
pub fn polynomial(alg: &AlgebraHandle, a: &Element, coeffs: &[f64]) -> Element {
    coeffs
        .iter()
        .rev()
        .fold(alg.zero(), |acc, &c| &alg.prod(a, &acc) + &alg.unit().scale_re(c))
}

/// Jordan identity `(a o b) o b^2 = (a o b^2) o b` relative to
/// `(1 + ||a||)(1 + ||b||)^3`, and the JB* axiom `||U_a(a*)|| = ||a||^3`
/// relative to `1 + ||a||^3`, on general random elements.
pub fn axioms_check(alg: &AlgebraHandle, trials: usize, seed: u64) -> Vec<crate::report::CheckReport> {
    use crate::report::{Tracker, Witness};
    use crate::sample::{child_rng, random_with, rng_from_seed, Flavor};
    let mut rng = rng_from_seed(seed);
    let mut jordan = Tracker::new(format!("Jordan identity [{}]", alg.label()), 1e-8);
    let mut axiom = Tracker::new(format!("JB* norm axiom [{}]", alg.label()), 1e-6);
    for _ in 0..trials {
        let mut r = child_rng(&mut rng);
        let a = random_with(alg, &mut r, Flavor::General);
        let b = random_with(alg, &mut r, Flavor::General);
        let (na, nb) = (alg.norm(&a), alg.norm(&b));
        let b2 = alg.sq(&b);
        let lhs = alg.prod(&alg.prod(&a, &b), &b2);
        let rhs = alg.prod(&alg.prod(&a, &b2), &b);
        let rj = alg.norm(&(&lhs - &rhs)) / ((1.0 + na) * (1.0 + nb).powi(3));
        jordan.trial();
        jordan.record(rj, || Witness::new("Jordan identity fails", rj).with("a", &a).with("b", &b));
        let ra = (alg.norm(&u_op(alg, &a, &alg.star(&a))) - na.powi(3)).abs() / (1.0 + na.powi(3));
        axiom.trial();
        axiom.record(ra, || Witness::new("||U_a(a*)|| != ||a||^3", ra).with("a", &a));
    }
    vec![jordan.finish(), axiom.finish()]
}
