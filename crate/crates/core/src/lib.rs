//! IMEX general linear time integrators of DIMSIM type.
//!
//! The crate couples a strong-stability-preserving explicit general linear
//! method with a diagonally implicit companion sharing the same abscissae and
//! external stages, and provides the analysis machinery that certifies such a
//! pair: order and stage-order verification, SSP-coefficient certification,
//! A-/L-stability checks of the implicit part, and absolute-stability regions
//! of the coupled scheme. A fixed-step integrator with modified-Newton stage
//! solves and a small catalog of split benchmark problems round out the
//! library.

pub mod error;
pub mod integrator;
pub mod poly;
pub mod problems;
pub mod region;
pub mod ssp;
pub mod stability;
pub mod tableau;

pub use error::{Error, Result};
pub use tableau::{catalog, Tableau};
