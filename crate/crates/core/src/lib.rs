//! Multi-scale bubble data, the semiclassical defocusing NLS
//! `iε∂_t u + ε²/2 Δu = |u|^{2m} u` on a periodic box, and its hydrodynamic limit.
//!
//! [`spectral`] holds grids, fields and Fourier multipliers, [`initial_data`] the bubble
//! ladders, [`euler`] the pressureless-gas approximation, [`nls`] the split-step solver,
//! [`diagnostics`] the energy functionals and [`experiments`] the configured runs.

pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod experiments;
pub mod initial_data;
pub mod nls;
pub mod spectral;

pub use error::{Error, Result};
