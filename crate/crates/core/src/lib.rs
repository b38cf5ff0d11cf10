//! Constrained Markov decision processes under the expected-total-reward
//! criterion.
//!
//! The crate builds a dominating reference measure for a finite model,
//! writes the constrained problem as a linear program over measures that may
//! carry infinite mass, solves it exactly or in floating point, and extracts
//! a stationary randomized policy. Verification tools evaluate policies
//! exactly, simulate them, and check the standing assumptions.

pub mod diagnostics;
pub mod error;
pub mod kp;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod random;
pub mod reference;
pub mod scalar;
pub mod structure;
pub mod verify;

pub use diagnostics::{DualMethod, DualOptions, PhantomVerdict};
pub use error::{LpError, ModelError, ReferenceError, SolveError};
pub use kp::{solve_constrained, SolveOptions, SolveReport, SolveStatus};
pub use model::{ExtReal, FiniteMdp, Pair, StationaryPolicy};
pub use scalar::{Mode, Rational, Scalar};
