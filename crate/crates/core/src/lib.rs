//! Benchmark toolkit for isolated short-sound classification.
//!
//! The pipeline goes from mono clips ([`dataset`]) to per-frame features
//! ([`dsp`], [`features`]), fixed-length or sequence representations
//! ([`postproc`]), five classifier families ([`classifiers`]) and a repeated
//! stratified cross-validation harness ([`bench`]).

pub mod bench;
pub mod classifiers;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod features;
pub mod matrix;
pub mod postproc;

pub use error::{Error, Result};
pub use matrix::Matrix;
