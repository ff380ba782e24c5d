//! Seeded random elements, operator-commuting pair strategies and tripotents.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraHandle, AlgebraKind, Element};
use crate::calculus::{self, center_basis, exp_i, spectral_decomposition, u_op};
use crate::error::{Error, Result};

pub type SampleRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child stream, so that trials can be replayed one at a time.
pub fn child_rng(rng: &mut SampleRng) -> SampleRng {
    ChaCha8Rng::seed_from_u64(rng.random())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    General,
    SelfAdjoint,
    Positive,
    Projection,
    Unitary,
}

const RETRIES: usize = 16;

pub fn normal(rng: &mut SampleRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_element(alg: &AlgebraHandle, seed: u64, flavor: Flavor) -> Element {
    random_with(alg, &mut rng_from_seed(seed), flavor)
}

pub fn random_with(alg: &AlgebraHandle, rng: &mut SampleRng, flavor: Flavor) -> Element {
    match flavor {
        Flavor::General => random_general(alg, rng),
        Flavor::SelfAdjoint => random_self_adjoint(alg, rng),
        Flavor::Positive => {
            let b = random_self_adjoint(alg, rng);
            alg.sq(&b)
        }
        Flavor::Projection => random_projection(alg, rng),
        Flavor::Unitary => random_unitary(alg, rng),
    }
}

fn random_general(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let s = 1.0 / (alg.dim() as f64).sqrt();
    let coords = (0..alg.dim()).map(|_| C64::new(normal(rng) * s, normal(rng) * s)).collect();
    alg.element(coords).expect("finite sample")
}

pub fn random_self_adjoint(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let a = random_general(alg, rng);
    alg.real_part(&a)
}

/// Self-adjoint element whose spectral decomposition is well conditioned.
fn decomposable(alg: &AlgebraHandle, rng: &mut SampleRng) -> (Element, calculus::SpectralDecomposition) {
    for _ in 0..RETRIES {
        let g = random_self_adjoint(alg, rng);
        if let Ok(dec) = spectral_decomposition(alg, &g) {
            return (g, dec);
        }
    }
    panic!("no well-conditioned self-adjoint sample in {} after {RETRIES} draws", alg.label());
}

/// Sum of a random nonempty proper subset of the spectral idempotents of a
/// random self-adjoint element (or `1` when the spectrum is a single point).
pub fn random_projection(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let (_, dec) = decomposable(alg, rng);
    let k = dec.pairs.len();
    if k == 1 {
        return alg.unit();
    }
    let mask = rng.random_range(1..(1u64 << k.min(63)) - 1);
    subset_sum(alg, &dec, mask)
}

fn subset_sum(alg: &AlgebraHandle, dec: &calculus::SpectralDecomposition, mask: u64) -> Element {
    dec.pairs
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .fold(alg.zero(), |acc, (_, (_, e))| &acc + e)
}

/// A pair of mutually orthogonal projections (either may be zero).
pub fn orthogonal_projections(alg: &AlgebraHandle, rng: &mut SampleRng) -> (Element, Element) {
    let (_, dec) = decomposable(alg, rng);
    let mut p = alg.zero();
    let mut q = alg.zero();
    for (_, e) in &dec.pairs {
        match rng.random_range(0..3) {
            0 => p = &p + e,
            1 => q = &q + e,
            _ => {}
        }
    }
    (p, q)
}

/// Pair of operator-commuting projections from one spectral decomposition.
pub fn commuting_projections(alg: &AlgebraHandle, rng: &mut SampleRng) -> (Element, Element) {
    let (_, dec) = decomposable(alg, rng);
    let k = dec.pairs.len().min(63);
    let full = (1u64 << k) - 1;
    let m1 = rng.random_range(0..=full);
    let m2 = rng.random_range(0..=full);
    (subset_sum(alg, &dec, m1), subset_sum(alg, &dec, m2))
}

/// `e^{ih}` with `||h||` in `[0.5, 2.5]`, away from the branch cut of the log.
pub fn random_unitary(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let h = random_log(alg, rng, 2.5);
    exp_i(alg, &h, 1.0).expect("exp of a decomposable element")
}

/// Self-adjoint `h` with `||h|| <= max_norm` and a well-conditioned spectrum.
pub fn random_log(alg: &AlgebraHandle, rng: &mut SampleRng, max_norm: f64) -> Element {
    let (g, _) = decomposable(alg, rng);
    let target = max_norm * rng.random_range(0.2..1.0);
    g.scale_re(target / alg.norm(&g).max(f64::MIN_POSITIVE))
}

pub fn random_central_self_adjoint(alg: &AlgebraHandle, rng: &mut SampleRng, scale: f64) -> Element {
    let z = center_basis(alg)
        .iter()
        .fold(alg.zero(), |acc, c| &acc + &c.scale_re(normal(rng) * scale));
    alg.real_part(&z)
}

/// Strategies producing operator-commuting self-adjoint pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcSampler {
    /// `a` and `b` are both functions of one self-adjoint generator, plus a central part.
    SameGenerator,
    /// `b = t 1 + s a`.
    Spin,
    /// Commuting real diagonals; hermitian-matrix summands only.
    Diagonal,
}

impl OcSampler {
    pub fn default_for(alg: &AlgebraHandle) -> OcSampler {
        match alg.kind() {
            AlgebraKind::Spin { .. } => OcSampler::Spin,
            _ => OcSampler::SameGenerator,
        }
    }

    pub fn sample(&self, alg: &AlgebraHandle, rng: &mut SampleRng) -> Result<(Element, Element)> {
        match self {
            OcSampler::SameGenerator => {
                let (_, dec) = decomposable(alg, rng);
                let mut a = alg.zero();
                let mut b = alg.zero();
                for (_, e) in &dec.pairs {
                    a = &a + &e.scale_re(normal(rng));
                    b = &b + &e.scale_re(normal(rng));
                }
                let z = random_central_self_adjoint(alg, rng, 0.5);
                Ok((a, &b + &z))
            }
            OcSampler::Spin => {
                let a = random_self_adjoint(alg, rng);
                let b = &alg.unit().scale_re(normal(rng)) + &a.scale_re(normal(rng));
                Ok((a, b))
            }
            OcSampler::Diagonal => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for part in alg.parts() {
                    let n = part.matrix_size().ok_or(Error::WrongKind("hermitian_matrix summands"))?;
                    let mut da = vec![C64::new(0.0, 0.0); n * n];
                    let mut db = da.clone();
                    for i in 0..n {
                        da[i * n + i] = C64::new(normal(rng), 0.0);
                        db[i * n + i] = C64::new(normal(rng), 0.0);
                    }
                    a.push(part.element(da)?);
                    b.push(part.element(db)?);
                }
                if alg.parts().len() == 1 && !matches!(alg.kind(), AlgebraKind::DirectSum { .. }) {
                    Ok((alg.adopt(&a[0])?, alg.adopt(&b[0])?))
                } else {
                    Ok((alg.from_components(&a)?, alg.from_components(&b)?))
                }
            }
        }
    }
}

/// Self-adjoint pair that fails to operator commute.
pub fn noncommuting_pair(alg: &AlgebraHandle, rng: &mut SampleRng) -> Result<(Element, Element)> {
    for _ in 0..RETRIES {
        let a = random_self_adjoint(alg, rng);
        let b = random_self_adjoint(alg, rng);
        let v = calculus::operator_commutes(alg, &a, &b)?;
        if v.residual > 1e3 * v.threshold {
            return Ok((a, b));
        }
    }
    Err(Error::PreconditionFailed(format!("{} looks associative", alg.label())))
}

/// Random tripotent: a unitary, `p - q`, or `U_u(p)`, `U_u(p - q)` for a
/// unitary `u` and orthogonal projections `p`, `q`.
pub fn random_tripotent(alg: &AlgebraHandle, rng: &mut SampleRng) -> Element {
    let (p, q) = orthogonal_projections(alg, rng);
    match rng.random_range(0..4) {
        0 => random_unitary(alg, rng),
        1 => &p - &q,
        2 => {
            let u = random_unitary(alg, rng);
            u_op(alg, &u, &p)
        }
        _ => {
            let u = random_unitary(alg, rng);
            u_op(alg, &u, &(&p - &q))
        }
    }
}
