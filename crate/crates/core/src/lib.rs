//! Muttalib-Borodin random matrix ensembles.
//!
//! Exact finite-N samplers built from upper-triangular random matrices,
//! correlation kernels from double contour integrals, the Fuss-Catalan
//! family of global densities, and the Wright-Bessel hard-edge kernels.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biortho;
pub mod ckernel;
pub mod cli;
pub mod densities;
pub mod eigensolve;
pub mod error;
pub mod hardedge;
pub mod harness;
pub mod params;
pub mod quad;
pub mod sampler;
pub mod special;

pub use error::{MbError, Result};
pub use params::{alpha_sequence, AlphaSequence, BetaSequence, EnsembleParams, Family, Spectrum};
