//! Cumulants of multiple Wiener–Itô integrals over a finite-dimensional
//! Hilbert space `H = R^d`.
//!
//! Four independent routes compute the same numbers:
//!
//! - [`recursive`]: the closed contraction formula over admissible
//!   r-vectors with exact constants `c_q`;
//! - [`chaos`]: a chaos-expansion algebra with the `Γ_j` operators, where
//!   `κ_{s+1}(F) = s! E[Γ_s(F)]`, plus the moment route through repeated
//!   products;
//! - [`diagrams`]: connected q-regular multigraphs with leg-matching
//!   weights, and a full matching enumeration for raw moments;
//! - [`montecarlo`]: sampling through Hermite polynomial evaluation.

pub mod chaos;
pub mod combinatorics;
pub mod diagrams;
pub mod montecarlo;
pub mod recursive;
pub mod symtensor;

pub use chaos::{ChaosError, ChaosExpansion, CumulantSequence, MomentSequence};
pub use diagrams::Multigraph;
pub use recursive::RVector;
pub use symtensor::{BlockTensor, SymTensor, TensorError};
