//! Exact KL divergence between a Gaussian pseudo-posterior and the
//! log-uniform prior `p(w) = C/|w|`, the special functions behind it,
//! numerical probes of the prior's improper-posterior pathologies, and a
//! desk-scale variational-dropout network trained with the exact KL term.
//!
//! Module map:
//!
//! * [`specfun`] — self-contained digamma, Dawson and exponential-integral
//!   evaluations with stated accuracy targets.
//! * [`kl`] — the exact KL value and gradient in the reduced parameter
//!   `u = mu^2 / (2 sigma^2)`, chain rules for all three layer
//!   parametrisations, and two independent oracles (naive series, Monte
//!   Carlo).
//! * [`probe`] — singularity-aware quadrature demonstrating origin- and
//!   tail-mass divergence of the posterior under the log-uniform prior.
//! * [`vdnet`] — feedforward network with variational Gaussian dropout
//!   layers, trained by first-order ascent on the pseudo-ELBO with the
//!   exact KL term, plus sparsity reporting.
//! * [`verify`] — the self-check suite behind the CLI `verify` subcommand.

pub mod error;
pub mod kl;
pub mod probe;
pub mod specfun;
pub(crate) mod util;
pub mod vdnet;
pub mod verify;

pub use error::{Error, Result};
