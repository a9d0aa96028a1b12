//! Density and log-density gradient of the measure a parameterization
//! `x(ξ)` pushes forward from uniform `ξ`, for lines, curves and general
//! `m`-dimensional charts, plus its propagation through smooth maps.
//!
//! ```
//! use densgrad::chart::jet_analytic;
//! use densgrad::density::density_general;
//!
//! let jet = jet_analytic("circle", &[0.25]).unwrap();
//! let d = density_general(&jet).unwrap();
//! assert!((d.rho - 1.0 / std::f64::consts::TAU).abs() < 1e-14);
//! ```

pub mod chart;
pub mod density;
pub mod diagnostics;
pub mod dynsys;
mod error;
pub mod pushforward;
pub mod quad;
pub mod registry;
pub mod smallmat;

pub use error::{Error, Result};
