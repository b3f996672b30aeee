//! Time-varying copula (quantile) spectral analysis of locally stationary
//! time series.
//!
//! The crate estimates local copula spectral densities with a lag-window
//! estimator, calibrates white-noise significance bands by simulation,
//! simulates a family of locally stationary processes together with their
//! frozen stationary approximations, and renders time-frequency heatmaps.

pub mod analysis;
pub mod calibration;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod models;
pub mod pipeline;
pub mod rng;

pub use domain::{
    fourier_snap, neighborhood, EstimationPlan, FrequencyGrid, Neighborhood, Part, QuantileLevel,
    Series, Smoothing, SpectralField,
};
pub use error::{Error, Result};
pub use kernel::LagWindow;
pub use num_complex::Complex64;
