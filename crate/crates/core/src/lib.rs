//! Exact arithmetic, verification, and exhaustive search for
//! chain-constrained LYM inequalities.
//!
//! A family here is a set of r-tuples over a graded lattice, either
//! decompositions (tuples whose parts assemble the top element) or
//! multichains (weakly increasing tuples). When the k-th components of all
//! tuples avoid chains longer than a limit `t_k`, the weighted count of
//! tuples of each rank type, divided by the number of tuples of that type,
//! sums to at most an explicit product of the limits. This crate computes
//! those denominators and bounds exactly over four lattices (finite sets,
//! finite-field subspaces, real subspaces by dimension with volume
//! coefficients, and divisors of an integer), verifies the inequalities on
//! explicit families, and searches for maximum families at small scale.

pub mod chains;
pub mod coefficients;
pub mod continuous;
pub mod error;
pub mod exact;
pub mod extremal;
pub mod families;
pub mod lattices;
pub mod lym;

pub use error::{Error, Result};
