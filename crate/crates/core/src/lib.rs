//! Quantum channels on small qudit spaces: construction, entropy
//! functionals, output-entropy minimization and numerical checks of
//! additivity for depolarizing-type channels.
//!
//! Matrices are dense and complex. Vectorization is row-major
//! (`vec(ρ)[i·d + j] = ρ[i, j]`) and tensor products use the Kronecker
//! convention `(A ⊗ B)[(i·m + k), (j·m + l)] = A[i, j] B[k, l]`.

pub mod analysis;
pub mod channels;
pub mod entropy;
pub mod error;
pub mod group_reps;
pub mod numerics;
pub mod report;
pub mod states;

pub use error::{QchanError, Result};
pub use numerics::{ComplexMatrix, C64};
pub use report::PropositionReport;
