//! Numerical exterior calculus on singular subsets of Euclidean space.
//!
//! The crate models differential spaces (subsets of R^n carrying a generated
//! family of smooth functions), evaluates generator-tuple differential forms
//! against singular cubes by quadrature, and verifies the structural
//! identities of the calculus at desk scale: boundary and coboundary square
//! to zero, the exterior derivative is dual to the boundary operator, the
//! prism operator realizes the homotopy identity and produces antiderivatives
//! of closed forms on contractible models, nerve cohomology of declared good
//! covers is computed by exact rational rank, and derivations on singular
//! models are integrated with maximal-domain detection.
//!
//! Modules map onto the main concepts:
//! * [`smooth`] — expression-tree maps with exact forward-mode derivatives;
//! * [`parse`] — the text grammar for expressions in configuration files;
//! * [`space`] — space models, membership, samplers, structure elements;
//! * [`chains`] — singular cubes, integer chains, boundary and prism;
//! * [`quad`] / [`forms`] — tensor Gauss-Legendre pairing of forms and cubes;
//! * [`homotopy`] — the dual prism operator and antiderivatives;
//! * [`flow`] — derivations, integral curves, vector-field diagnostics;
//! * [`cech`] — nerve cohomology of declared good covers;
//! * [`orbit`] — finite group actions, invariants, orbit-space models;
//! * [`fixtures`] — the bundled desk-scale example models;
//! * [`suites`] — the named verification suites used by the CLI;
//! * [`config`] — file formats for spaces, covers, actions, and runs.

// Index-based loops are kept where they mirror matrix formulas, float guards
// stay out of match patterns, and the chain/form `add`/`sub` are fallible so
// they cannot implement the operator traits.
#![allow(
    clippy::needless_range_loop,
    clippy::redundant_guards,
    clippy::should_implement_trait,
    clippy::type_complexity
)]

pub mod cech;
pub mod chains;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod forms;
pub mod homotopy;
pub mod orbit;
pub mod parse;
pub mod quad;
pub mod smooth;
pub mod space;
pub mod spotcheck;
pub mod suites;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used by every sampler and suite; one seed fixes a run.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
