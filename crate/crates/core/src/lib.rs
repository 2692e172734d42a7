//! Blind blur-kernel estimation and kernel-based sharpness scoring for
//! satellite imagery, with TV deblurring and constellation statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convolve;
pub mod deconv;
pub mod error;
pub mod estimate;
mod fft;
pub mod fleet;
pub mod io;
pub mod kernel;
pub mod kernel_update;
pub mod l0;
pub mod pyramid;
pub mod raster;
pub mod sharpness;
pub mod synth;

pub use error::{Error, Result};
