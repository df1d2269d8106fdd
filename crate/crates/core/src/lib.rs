//! Model-based FMCW radar simulator for human activity recognition.
//!
//! The crate is organised along the signal path:
//!
//! * [`kinematics`] — 13-scatterer body model and twelve activity programs.
//! * [`echo`] — bistatic FMCW beat-signal synthesis with optional wall.
//! * [`dsp`] — MTI, range FFT, slow-time aggregation, bulk-Doppler
//!   compensation, Savitzky–Golay denoising, STFT/FSST Doppler-time maps.
//! * [`nn`] — FFT global-filter block with its backward pass, and the
//!   label-smoothing loss.
//! * [`dataset`] — configuration, single runs, batch dataset generation and
//!   file export.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise.

pub mod dataset;
pub mod dsp;
pub mod echo;
pub mod error;
pub mod kinematics;
pub mod matrix;
pub mod nn;
pub mod par;
pub mod rng;

pub use error::{Error, ErrorKind, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
