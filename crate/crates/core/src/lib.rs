//! Finite-dimensional JB*-algebras: models, Jordan calculus, Peirce
//! decompositions, unitary analysis and checks for Jordan *-homomorphism
//! preserver theorems.

pub mod algebra;
pub mod calculus;
pub mod descriptor;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod peirce;
pub mod preserver;
pub mod report;
pub mod sample;
pub mod unitary;

pub use algebra::{AlgebraHandle, AlgebraKind, Element, SpinVector};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Tolerance};
pub use preserver::MapUnderTest;
pub use report::CheckReport;
