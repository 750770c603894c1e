//! Band spectra of periodic waveguides with a column of small holes per cell.

pub mod bands;
pub mod cell;
pub mod dispersion;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod quasimode;

pub use error::{Error, Result};
