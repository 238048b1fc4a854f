//! Continuous-aperture reflecting-surface modelling for near-field
//! communication and sensing.

pub mod config;
pub mod design;
pub mod em;
pub mod error;
pub mod experiments;
pub mod propagation;
pub mod quadrature;
pub mod sensing;
pub mod special;

pub use error::{Error, Result};
