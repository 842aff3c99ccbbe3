//! Colour quantization, dithering and GIF89a encoding.
//!
//! Two pipelines share one set of image primitives:
//!
//! * the classical one: median-cut palette, Floyd-Steinberg error diffusion,
//!   LZW-compressed GIF89a output;
//! * an optimized one that treats palette choice and dithering as a per-image
//!   numerical optimization. Nearest-colour projection is relaxed into a
//!   temperature-controlled softmax so a dither (error) image and the palette
//!   can be fitted by Adam against a fidelity + banding objective.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! optimization path is meant to run in `f64`; the aliases at the crate root
//! ([`Image`], [`Pal`], ...) fix that choice for callers that do not care.

pub mod banding;
pub mod config;
pub mod diffquant;
pub mod dither;
mod error;
pub mod gifio;
pub mod imagecore;
pub mod palette;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use banding::BandingMap;
pub use config::{encode, EncodeConfig, Pipeline};
pub use diffquant::{GradBuffer, OptimizerState, TemperatureSchedule};
pub use dither::{DitherLossWeights, ErrorImage, StageSchedule};
pub use gifio::IndexedImage;
pub use imagecore::{FloatImage, Kernel2D, Raster};
pub use palette::Palette;

/// Double-precision image, the working representation of the optimizer.
pub type Image = FloatImage<f64>;
/// Single-precision image.
pub type ImageF32 = FloatImage<f32>;
/// Double-precision palette.
pub type Pal = Palette<f64>;
/// Single-precision palette.
pub type PalF32 = Palette<f32>;
/// Indexed image carrying a double-precision palette.
pub type Indexed = IndexedImage<f64>;

/// Double-precision error image.
pub type Dither = ErrorImage<f64>;
