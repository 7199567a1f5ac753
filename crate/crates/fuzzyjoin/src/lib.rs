//! Fuzzy set similarity join with pluggable matching backends.
//!
//! Finds all pairs of sets whose bipartite-matching similarity meets a
//! threshold. Verification can run an exact Hungarian solver, a
//! bound-driven early-terminating variant, or one of three approximate
//! matchers (greedy, locally dominant, semi-streaming). Candidate pairs
//! come from a token inverted index with size, positional and joint
//! utility filters.

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod filtering;
pub mod matching;
pub mod sim;
pub mod verify;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
