//! Image containers and the linear operators everything else is built from.
//!
//! [`Raster`] is an unconstrained H×W×C buffer (gradients, error images,
//! edge maps). [`FloatImage`] wraps a raster whose samples are guaranteed to
//! lie in `[0, 1]`; operations producing one clamp on write.

mod color;
pub mod io;
mod kernel;
mod metrics;
mod resample;

use std::ops::Deref;

use crate::error::ensure;
use crate::{Error, Result, Scalar};

pub use color::{luma, luma_weights, rgb_to_yuv};
pub use kernel::{
    box_sum, box_sum_adjoint, correlate, correlate_adjoint, correlate_separable,
    correlate_separable_adjoint, gaussian_smooth, gaussian_smooth_adjoint, gaussian_smooth_raster,
    gaussian_taps, sobel_gradients, sobel_gradients_adjoint, Kernel2D,
};
pub use metrics::{mse, psnr, serialize_psnr, ssim, SSIM_WINDOW};
pub use resample::{
    resample_bilinear, resample_bilinear_adjoint, resample_bilinear_to, resampled_dims,
    ResampleAxis,
};

/// Row-major, channel-interleaved H×W×C buffer with no range constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> Raster<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        ensure!(
            data.len() == height * width * channels,
            Shape,
            "{}x{}x{} raster needs {} samples, got {}",
            height,
            width,
            channels,
            height * width * channels,
            data.len()
        );
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, T::zero())
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for k in 0..channels {
                    data.push(f(r, c, k));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> T {
        self.data[self.index(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: T) {
        let i = self.index(row, col, ch);
        self.data[i] = v;
    }

    /// Pixel `p` (flat index) as a channel slice.
    #[inline]
    pub fn pixel(&self, p: usize) -> &[T] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    pub fn same_shape(&self, other: &Raster<T>) -> bool {
        self.dims() == other.dims()
    }

    pub fn check_same_shape(&self, other: &Raster<T>, what: &str) -> Result<()> {
        ensure!(
            self.same_shape(other),
            Shape,
            "{}: {:?} vs {:?}",
            what,
            self.dims(),
            other.dims()
        );
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn zip_map(&self, other: &Raster<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_shape(other, "zip_map")?;
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.width, self.height, self.channels, |r, c, k| {
            self.get(c, r, k)
        })
    }

    /// Extracts one channel as a single-channel raster.
    pub fn channel(&self, ch: usize) -> Self {
        Self::from_fn(self.height, self.width, 1, |r, c, _| self.get(r, c, ch))
    }

    /// Adds `other` scaled by `s` into `self`.
    pub fn add_scaled(&mut self, other: &Raster<T>, s: T) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::from_usize_lossy(self.data.len().max(1))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// H×W×C image whose samples all lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage<T = f64>(Raster<T>);

impl<T: Scalar> FloatImage<T> {
    /// Validating constructor: rejects non-finite or out-of-range samples.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        ensure!(
            channels == 1 || channels == 3,
            Shape,
            "images have 1 or 3 channels, got {}",
            channels
        );
        Self::try_from_raster(Raster::new(height, width, channels, data)?)
    }

    pub fn try_from_raster(r: Raster<T>) -> Result<Self> {
        if let Some(bad) = r
            .data
            .iter()
            .find(|v| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::OutOfRange(format!(
                "image sample {} outside [0,1]",
                bad
            )));
        }
        Ok(Self(r))
    }

    /// Wraps a raster, clamping every sample into `[0, 1]`.
    pub fn from_raster_clamped(mut r: Raster<T>) -> Self {
        for v in &mut r.data {
            *v = if v.is_nan() { T::zero() } else { v.clamp01() };
        }
        Self(r)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Self {
        Self(Raster::filled(height, width, channels, value.clamp01()))
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        Self::from_raster_clamped(Raster::from_fn(height, width, channels, f))
    }

    pub fn raster(&self) -> &Raster<T> {
        &self.0
    }

    pub fn into_raster(self) -> Raster<T> {
        self.0
    }

    pub fn require_rgb(&self, what: &str) -> Result<()> {
        ensure!(
            self.channels() == 3,
            Shape,
            "{} needs a 3-channel image, got {}",
            what,
            self.channels()
        );
        Ok(())
    }

    pub fn require_gray(&self, what: &str) -> Result<()> {
        ensure!(
            self.channels() == 1,
            Shape,
            "{} needs a 1-channel image, got {}",
            what,
            self.channels()
        );
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> FloatImage<U> {
        FloatImage::from_raster_clamped(Raster {
            height: self.height(),
            width: self.width(),
            channels: self.channels(),
            data: self
                .data()
                .iter()
                .map(|v| U::lit(v.to_f64_lossy()))
                .collect(),
        })
    }
}

impl<T> Deref for FloatImage<T> {
    type Target = Raster<T>;

    fn deref(&self) -> &Raster<T> {
        &self.0
    }
}
