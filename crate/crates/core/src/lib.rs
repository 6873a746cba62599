//! Littlewood–Paley analysis and a Picard solver for the non-resistive MHD
//! system on the periodic torus.

pub mod error;
pub mod besov;
pub mod calibrate;
pub mod dyadic;
pub mod fields;
pub mod grid;
pub mod heat;
pub mod lifespan;
pub mod osgood;
pub mod quadrature;
pub mod snapshot;
pub mod solver;

pub use error::{MhdError, Result};
pub use fields::SpectralField;
pub use grid::Grid;
