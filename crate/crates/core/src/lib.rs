//! Per-particle de-focus estimation and quantitative phase retrieval for
//! de-focused electron micrographs, treating each particle region as an
//! in-line Fresnel hologram.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the worker pool
//! and the command line live in the `emholo` companion crate.
#![no_std]

extern crate alloc;

mod error;
pub mod fft;
mod field;
mod params;

pub mod autofocus;
pub mod optics;
pub mod retrieval;
pub mod roi;
pub mod synth;

pub use error::{Error, Result};
pub use field::{make_frequency_grid, ComplexField, FrequencyGrid, RealImage};
pub use params::{wavelength_from_voltage, OpticsParams};

pub use num_complex::Complex64;
