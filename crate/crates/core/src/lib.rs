//! Evolving agent population model and its stability analysis.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation driven by caller-supplied random streams; file formats,
//! parallel ensembles and the command line live in the `evostab` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod evolution;
pub mod genome;
pub mod habitat;
pub mod macrostate;
pub mod markov;
pub mod rng;

pub use error::{Error, Result};
