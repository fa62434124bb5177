//! Synthesis and exhaustive verification of self-stabilizing population
//! protocols on complete interaction graphs.
//!
//! A function `f` from input multisets to outputs has a self-stabilizing
//! protocol exactly when it is subset-closed: `A ⊆ B` implies
//! `f(A) = f(B)`. [`funcspec::check_subset_closed`] decides this,
//! [`synthesizer::synthesize`] builds the protocol from the minimal root
//! set, and [`verifier::verify_self_stabilizing`] model-checks it.

pub mod cli;
pub mod engine;
pub mod error;
pub mod format;
pub mod funcspec;
pub mod multiset;
pub mod rootset;
pub mod synthesizer;
pub mod verifier;

pub use error::{Error, Result};
