//! Function-level intent analysis for Solidity smart contracts.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`extract`] — normalize raw Solidity source (drop comments, `pragma`
//!    and `import` lines) and cut it into contract- and function-level
//!    snippets.
//! 2. [`embed`] — turn each function snippet into a fixed-dimension vector
//!    through a pluggable [`embed::Encoder`], assembling one matrix per
//!    contract. Cosine similarity/distance live here too.
//! 3. [`highlight`] — train a cosine-distance k-means model over function
//!    embeddings, read each function's within-cluster distance as intent
//!    strength, and scale strong-intent rows.
//! 4. [`nn`] — a masked-input multi-label classifier (BiLSTM, plus LSTM and
//!    CNN baselines) trained from scratch with exact analytic gradients.
//!
//! [`corpus`] holds the dataset schema and the ten intent labels; [`evalx`]
//! computes confusion-matrix metrics and the model comparison table.

pub mod artifact;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod evalx;
pub mod extract;
pub mod hash;
pub mod highlight;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
