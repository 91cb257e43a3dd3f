//! Numerical model of image storage in a gradient echo memory.

pub mod cli;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod frames;
pub mod gem1d;
pub mod image;
pub mod imaging;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod plot;
pub mod pulse;
pub mod runner;
pub mod scenarios;
pub mod units;

pub use error::{Error, Result};
pub use image::{GridSpec, ImageField};
