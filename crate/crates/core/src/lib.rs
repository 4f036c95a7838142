//! Dynamic rank, reachability, distance and bipartite matching under batched
//! changes, with brute-force oracles for every answer.

pub mod dynmatch;
pub mod dynrank;
pub mod dynreach;
pub mod error;
pub mod field;
pub mod graph;
pub mod harness;
pub mod isoweights;
pub mod oracles;
pub mod poly;

pub use error::{Error, Result};
