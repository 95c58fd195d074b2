//! Finite-scale operator system toolkit.
//!
//! The crate is organised around six concerns:
//!
//! - [`matcore`]: dense complex matrices, hermiticity, positivity, Kronecker
//!   products, operator norms;
//! - [`opsys`]: concrete operator systems given by hermitian spanning sets,
//!   their matrix cones, and completely positive maps between them;
//! - [`indlimit`]: towers of systems with connecting maps, and limit-level
//!   questions (norms, positivity, null vectors, state pullbacks);
//! - [`uhf_graph`]: integer-exact machinery for matrix-algebra towers indexed
//!   by multiplicity sequences, graph-shaped subsystems, and their invariants;
//! - [`tensorlab`]: smallest and largest tensor-product orderings and their
//!   interaction with towers;
//! - [`cli`]: a batch verification driver producing replayable reports.

pub mod cli;
pub mod indlimit;
pub mod matcore;
pub mod opsys;
pub mod tensorlab;
pub mod uhf_graph;
