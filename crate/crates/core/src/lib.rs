//! Carnot groups in exponential coordinates: graded algebras, the group law,
//! homogeneous norms, complemented subgroups, horizontal curves and Pansu
//! differentiable maps.

pub mod bch;
pub mod catalog;
pub mod curves;
pub mod empirical;
pub mod error;
pub mod free;
pub mod graded_algebra;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod pdiff;
pub mod poly;
pub mod scalar;
pub mod subgroups;

pub use error::{AlgebraError, ParseError, SolverError, SubgroupError};
pub use graded_algebra::{BracketPair, GradedAlgebra, StructureTable, ValidationReport, Violation};
pub use scalar::{q, qi, Rational, Scalar};
