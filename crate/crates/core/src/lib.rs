//! Exact simulation and verification of nonsignaling box correlations.
//!
//! * [`boxcore`]: boxes as exact conditional distributions, no-signaling and
//!   locality checks, CHSH, relabelings.
//! * [`circuit`]: truth tables and NAND circuits.
//! * [`wiring`]: adaptive wiring protocols over banks of shared boxes, with an
//!   exact executor and a seeded sampler.
//! * [`construct`]: the NAND-block compiler from circuits to PR-box wirings,
//!   and the communication-complexity solver built on it.
//! * [`polytope`]: vertices of small bipartite no-signaling polytopes.
//! * [`sweep`]: budgeted exhaustive checks of the compiler over small functions.
//! * [`cluster`]: the five-party ring parity constraints and the exhaustive
//!   search for PR-box protocols satisfying them.

pub mod boxcore;
pub mod circuit;
pub mod cluster;
pub mod construct;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod radix;
pub mod rational;
pub mod sweep;
pub mod wiring;

pub use boxcore::{BlackBox, BoxError};
pub use rational::Rational;
