//! Multi-agent epistemic logic over an open-ended, lazily revealed universe.
//!
//! Agents hold finite clause theories over the predicates they have seen,
//! decide sentences semantically, and revise their theories as Nature varies
//! values, adds constraints and reveals new predicates.

pub mod epistemics;
pub mod formula;
pub mod harness;
pub mod multiagent;
pub mod revision;
pub mod universe;
