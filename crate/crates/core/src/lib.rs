//! Maximum-likelihood estimation for the Cauchy distribution (generalized
//! myriad filters) and nonlocal denoising of images corrupted by additive
//! Cauchy noise.

pub mod asymptotics;
pub mod cauchy;
pub mod denoise;
pub mod error;
pub mod estimators;
pub mod image;
pub mod likelihood;
pub mod metrics;
pub mod montecarlo;
pub mod noise_level;
pub mod sample;
pub mod similarity;

pub use cauchy::CauchyParams;
pub use denoise::{DenoiseConfig, DenoiseOutput};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, LocationInit, SolverConfig};
pub use image::ImageGrid;
pub use sample::WeightedSample;
