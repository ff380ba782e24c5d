//! JSON descriptors for algebras, elements and maps.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{build_direct_sum, build_hermitian_matrix_algebra, build_spin_factor, AlgebraHandle, Element};
use crate::error::{Error, Result};
use crate::linalg::Tolerance;
use crate::measure::{linear_function, sa_function_of_map, SaFunction};
use crate::preserver::{
    central_symmetry_map, conjugation_map, exp_form_map, identity_map, negation_map, phase_twist_map,
    random_conjugation, spin_counterexample_on, star_map, transpose_map, Beta, MapUnderTest,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    HermitianMatrix { n: usize },
    Spin { n: usize },
    DirectSum { parts: Vec<AlgebraSpec> },
}

impl AlgebraSpec {
    pub fn build(&self, tol: Tolerance) -> Result<AlgebraHandle> {
        match self {
            AlgebraSpec::HermitianMatrix { n } => build_hermitian_matrix_algebra(*n, tol),
            AlgebraSpec::Spin { n } => build_spin_factor(*n, tol),
            AlgebraSpec::DirectSum { parts } => {
                build_direct_sum(parts.iter().map(|p| p.build(tol)).collect::<Result<Vec<_>>>()?)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Descriptor(format!("algebra: {e}")))
    }
}

/// Coordinates as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub coords: Vec<[f64; 2]>,
}

impl ElementSpec {
    pub fn of(e: &Element) -> Self {
        ElementSpec { coords: e.coords().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn build(&self, alg: &AlgebraHandle) -> Result<Element> {
        alg.element(self.coords.iter().map(|[re, im]| C64::new(*re, *im)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Star,
    Negation,
    Transpose,
    /// `x -> w x w*` in `H_n`, `U_w` for a symmetry `w` elsewhere.
    ThetaConjugation { w: ElementSpec },
    RandomConjugation { seed: u64 },
    Composition { outer: Box<MapSpec>, inner: Box<MapSpec> },
    SpinCounterexample { epsilon: f64 },
    ExpForm { beta: Beta, c: ElementSpec, theta: Box<MapSpec> },
    CentralSymmetry { s: ElementSpec, theta: Box<MapSpec> },
    PhaseTwist { phase: f64, theta: Box<MapSpec> },
    /// Real-linear function into `R^m`, given by its matrix in the
    /// orthonormal self-adjoint basis. Only usable where a function is expected.
    Linear { matrix: Vec<Vec<f64>> },
}

impl MapSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Descriptor(format!("map: {e}")))
    }

    pub fn build(&self, alg: &AlgebraHandle) -> Result<MapUnderTest> {
        Ok(match self {
            MapSpec::Identity => identity_map(alg),
            MapSpec::Star => star_map(alg),
            MapSpec::Negation => negation_map(alg),
            MapSpec::Transpose => transpose_map(alg)?,
            MapSpec::ThetaConjugation { w } => conjugation_map(alg, &w.build(alg)?)?,
            MapSpec::RandomConjugation { seed } => random_conjugation(alg, *seed)?,
            MapSpec::Composition { outer, inner } => MapUnderTest::compose(&outer.build(alg)?, &inner.build(alg)?)?,
            MapSpec::SpinCounterexample { epsilon } => spin_counterexample_on(alg, *epsilon)?.map,
            MapSpec::ExpForm { beta, c, theta } => exp_form_map(&theta.build(alg)?, *beta, &c.build(alg)?)?,
            MapSpec::CentralSymmetry { s, theta } => central_symmetry_map(&theta.build(alg)?, &s.build(alg)?)?,
            MapSpec::PhaseTwist { phase, theta } => phase_twist_map(&theta.build(alg)?, *phase),
            MapSpec::Linear { .. } => {
                return Err(Error::Descriptor("a linear function is not an algebra map".into()));
            }
        })
    }

    /// The descriptor read as a function on self-adjoint elements.
    pub fn build_function(&self, alg: &AlgebraHandle) -> Result<SaFunction> {
        match self {
            MapSpec::Linear { matrix } => {
                if matrix.is_empty() || matrix.iter().any(|row| row.len() != alg.dim()) {
                    return Err(Error::Descriptor(format!(
                        "linear map rows must have {} entries (the real dimension of the self-adjoint part)",
                        alg.dim()
                    )));
                }
                Ok(linear_function(alg, matrix.clone()))
            }
            other => Ok(sa_function_of_map(&other.build(alg)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::u_op;

    #[test]
    fn algebra_round_trip() {
        let spec = AlgebraSpec::from_json(
            r#"{"kind":"direct_sum","parts":[{"kind":"hermitian_matrix","n":3},{"kind":"spin","n":4}]}"#,
        )
        .unwrap();
        let alg = spec.build(Tolerance::default()).unwrap();
        assert_eq!(alg.dim(), 13);
        assert_eq!(AlgebraSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap(), spec);
        assert!(matches!(AlgebraSpec::from_json(r#"{"kind":"octonion"}"#), Err(Error::Descriptor(_))));
    }

    #[test]
    fn maps_from_json() {
        let alg = AlgebraSpec::Spin { n: 3 }.build(Tolerance::default()).unwrap();
        let m = MapSpec::from_json(r#"{"kind":"spin_counterexample","epsilon":0.3}"#).unwrap().build(&alg).unwrap();
        assert!(m.has_inverse());
        let s = ElementSpec { coords: vec![[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]] };
        let w = s.build(&alg).unwrap();
        let spec = MapSpec::Composition {
            outer: Box::new(MapSpec::ThetaConjugation { w: s }),
            inner: Box::new(MapSpec::Star),
        };
        let text = serde_json::to_string(&spec).unwrap();
        let m = MapSpec::from_json(&text).unwrap().build(&alg).unwrap();
        let x = alg.basis(1);
        assert_eq!(m.apply(&x).unwrap(), u_op(&alg, &w, &alg.star(&x)));
    }

    #[test]
    fn linear_functions_need_matching_width() {
        let alg = AlgebraSpec::HermitianMatrix { n: 2 }.build(Tolerance::default()).unwrap();
        let bad = MapSpec::Linear { matrix: vec![vec![1.0; 3]] };
        assert!(bad.build_function(&alg).is_err());
        let good = MapSpec::Linear { matrix: vec![vec![1.0; 4]] };
        assert_eq!(good.build_function(&alg).unwrap()(&alg.zero()).unwrap(), vec![0.0]);
        assert!(good.build(&alg).is_err());
    }
}
