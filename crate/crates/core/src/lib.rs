//! Strong-converse lower bounds on the decoding error of classical-quantum
//! channels.
//!
//! The crate computes the Gallager-type function
//! `E₀(s, π) = −log Tr(Σᵢ πᵢ ρᵢ^{1/(1+s)})^{1+s}`, optimizes it over input
//! priors, evaluates the resulting error lower bounds for codes above capacity,
//! and ships randomized oracles for the operator inequalities those bounds
//! rest on.
//!
//! Modules, bottom-up:
//! - [`hermitian`]: dense Hermitian linear algebra (Jacobi eigensolver,
//!   fractional powers, Kronecker products).
//! - [`channel`]: channels, priors, codebooks, POVMs.
//! - [`info`]: entropy, mutual information, the trace functional and `E₀`.
//! - [`optimizer`]: prior optimization, optimality certificates, capacity.
//! - [`bounds`]: per-codebook and asymptotic error bounds, exponent curves.
//! - [`verify`]: random ensembles and inequality checks.
//! - [`io`]: JSON/CSV file formats.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod hermitian;
pub mod info;
pub mod io;
pub mod optimizer;
pub mod verify;

pub use error::{Error, Result};
