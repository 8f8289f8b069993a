//! Exact decision calculus for branching-world games.
//!
//! * [`game`] values games with the p-Born and max-Born rules and checks
//!   the rationality axioms.
//! * [`fine_graining`] splits coefficients under a p-norm constraint and
//!   reduces any rational game to a symmetric one.
//! * [`world_tree`] computes world counts, measures and frequency laws for
//!   repeated branchings.
//! * [`sequential`] flattens multi-stage games and checks Substitution.
//! * [`norm_consistency`] tests which norms admit consistent fine-graining.

pub mod cli;
pub mod error;
pub mod fine_graining;
pub mod fraction;
pub mod game;
pub mod literal;
pub mod norm_consistency;
pub mod sampling;
pub mod sequential;
pub mod world_tree;

pub use error::{Error, Result};
pub use fraction::Rational;
