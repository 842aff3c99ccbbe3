//! Dithering: classical error diffusion and the optimized error image.
//!
//! The optimized path treats dithering as additive noise: an error image
//! `E′` is added to the source before projection onto the palette. `E′` is
//! fitted per image by Adam against [`dither_loss`]; there is no learned
//! predictor.

mod loss;
mod optimize;

use crate::diffquant::{soft_project, TemperatureSchedule};
use crate::error::ensure;
use crate::gifio::IndexedImage;
use crate::imagecore::{FloatImage, Raster};
use crate::palette::{hard_project, Palette};
use crate::{Result, Scalar};

pub use loss::{dither_loss, dither_loss_terms, perceptual_proxy, DitherTerms};
pub use optimize::{
    optimize_dither, optimize_dither_traced, three_stage_encode, EncodeReport, LossRecord,
    LLOYD_MAX_ITERS,
};

/// Additive dither image, three channels with values in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorImage<T = f64>(Raster<T>);

impl<T: Scalar> ErrorImage<T> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self(Raster::zeros(height, width, 3))
    }

    /// Wraps a 3-channel raster, clamping into `[−1, 1]` (NaN becomes 0).
    pub fn from_raster_clamped(r: Raster<T>) -> Result<Self> {
        ensure!(
            r.channels() == 3,
            Shape,
            "error image needs 3 channels, got {}",
            r.channels()
        );
        Ok(Self(r.map(|v| {
            if v.is_nan() {
                T::zero()
            } else {
                v.clamp_to(-T::one(), T::one())
            }
        })))
    }

    pub fn raster(&self) -> &Raster<T> {
        &self.0
    }

    pub fn into_raster(self) -> Raster<T> {
        self.0
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn data(&self) -> &[T] {
        self.0.data()
    }

    pub fn max_abs(&self) -> T {
        self.0.max_abs()
    }

    /// Mutable access for in-place optimizer updates; callers keep `[−1, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        self.0.data_mut()
    }
}

/// Loss weights. `beta_palette` only enters the joint fine-tuning stage.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DitherLossWeights {
    pub lambda_fidelity: f64,
    pub gamma_error: f64,
    pub delta_banding: f64,
    pub theta_perceptual: f64,
    pub beta_palette: f64,
}

impl Default for DitherLossWeights {
    fn default() -> Self {
        Self {
            lambda_fidelity: 1.0,
            gamma_error: 0.5,
            delta_banding: 0.1,
            theta_perceptual: 0.0,
            beta_palette: 1.0,
        }
    }
}

impl DitherLossWeights {
    pub const ZERO: Self = Self {
        lambda_fidelity: 0.0,
        gamma_error: 0.0,
        delta_banding: 0.0,
        theta_perceptual: 0.0,
        beta_palette: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_fidelity,
            self.gamma_error,
            self.delta_banding,
            self.theta_perceptual,
            self.beta_palette,
        ];
        ensure!(
            all.iter().all(|w| w.is_finite() && *w >= 0.0),
            InvalidArgument,
            "loss weights must be finite and non-negative, got {:?}",
            all
        );
        Ok(())
    }
}

/// Step counts, learning rates and temperatures of the two optimization
/// stages. Each stage anneals its temperature over its own step count; the
/// `steps` field of the temperature schedules is ignored.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageSchedule {
    pub stage2_steps: usize,
    pub stage3_steps: usize,
    pub stage2_lr: f64,
    pub stage3_lr: f64,
    pub stage2_temperature: TemperatureSchedule,
    pub stage3_temperature: TemperatureSchedule,
}

impl Default for StageSchedule {
    fn default() -> Self {
        Self {
            stage2_steps: 300,
            stage3_steps: 100,
            stage2_lr: 0.02,
            stage3_lr: 0.002,
            stage2_temperature: TemperatureSchedule::default(),
            stage3_temperature: TemperatureSchedule::default(),
        }
    }
}

impl StageSchedule {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.stage2_lr.is_finite() && self.stage3_lr > 0.0 && self.stage3_lr < self.stage2_lr,
            InvalidArgument,
            "need 0 < stage3_lr < stage2_lr, got {} and {}",
            self.stage3_lr,
            self.stage2_lr
        );
        self.stage2_temperature.validate()?;
        self.stage3_temperature.validate()
    }
}

/// Projection mode of [`apply_dither`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection<T> {
    /// Softmax projection at the given temperature.
    Soft(T),
    Hard,
}

fn check_rgb_shape<T: Scalar>(img: &FloatImage<T>, e: &ErrorImage<T>) -> Result<()> {
    img.require_rgb("dither")?;
    img.raster().check_same_shape(e.raster(), "error image")
}

/// Error diffusion with the 7/16, 3/16, 5/16, 1/16 stencil. Odd rows run
/// right to left when `serpentine` is set, with the stencil mirrored.
pub fn floyd_steinberg<T: Scalar>(
    img: &FloatImage<T>,
    p: &Palette<T>,
    serpentine: bool,
) -> Result<IndexedImage<T>> {
    Ok(floyd_steinberg_traced(img, p, serpentine)?.0)
}

/// [`floyd_steinberg`] also returning the working (pre-projection, unclamped)
/// value of every pixel in scan order.
pub fn floyd_steinberg_traced<T: Scalar>(
    img: &FloatImage<T>,
    p: &Palette<T>,
    serpentine: bool,
) -> Result<(IndexedImage<T>, Vec<[T; 3]>)> {
    img.require_rgb("floyd_steinberg")?;
    let (h, w) = (img.height(), img.width());
    let mut buf = img.data().to_vec();
    let mut indices = vec![0u8; h * w];
    let mut seen = Vec::with_capacity(h * w);
    let taps = [
        (0isize, 1isize, 7.0),
        (1, -1, 3.0),
        (1, 0, 5.0),
        (1, 1, 1.0),
    ]
    .map(|(dr, dc, wt)| (dr, dc, T::lit(wt / 16.0)));
    for r in 0..h {
        let reverse = serpentine && r % 2 == 1;
        let dir = if reverse { -1 } else { 1 };
        for step in 0..w {
            let c = if reverse { w - 1 - step } else { step };
            let at = (r * w + c) * 3;
            let v = [buf[at], buf[at + 1], buf[at + 2]];
            seen.push(v);
            let k = p.nearest(&v.map(Scalar::clamp01));
            indices[r * w + c] = k as u8;
            let chosen = p.color(k);
            let residual = [0, 1, 2].map(|ch| v[ch] - chosen[ch]);
            for &(dr, dc, wt) in &taps {
                let rr = r as isize + dr;
                let cc = c as isize + dc * dir;
                if rr >= h as isize || cc < 0 || cc >= w as isize {
                    continue;
                }
                let j = (rr as usize * w + cc as usize) * 3;
                for ch in 0..3 {
                    buf[j + ch] += wt * residual[ch];
                }
            }
        }
    }
    Ok((IndexedImage::new(h, w, indices, p.clone())?, seen))
}

/// `I − hard_project(I, P)`.
pub fn error_image<T: Scalar>(img: &FloatImage<T>, p: &Palette<T>) -> Result<ErrorImage<T>> {
    let (q, _) = hard_project(img, p)?;
    ErrorImage::from_raster_clamped(img.raster().zip_map(q.raster(), |a, b| a - b)?)
}

/// `clamp(I + E′)`, the projection input.
pub fn dithered_input<T: Scalar>(img: &FloatImage<T>, e: &ErrorImage<T>) -> Result<FloatImage<T>> {
    check_rgb_shape(img, e)?;
    Ok(FloatImage::from_raster_clamped(
        img.raster().zip_map(e.raster(), |a, b| a + b)?,
    ))
}

/// `proj(clamp(I + E′), P)`.
pub fn apply_dither<T: Scalar>(
    img: &FloatImage<T>,
    e: &ErrorImage<T>,
    p: &Palette<T>,
    mode: Projection<T>,
) -> Result<FloatImage<T>> {
    let x = dithered_input(img, e)?;
    match mode {
        Projection::Soft(t) => soft_project(&x, p, t),
        Projection::Hard => Ok(hard_project(&x, p)?.0),
    }
}

/// Hard-mode [`apply_dither`] as an indexed image.
pub fn apply_dither_indexed<T: Scalar>(
    img: &FloatImage<T>,
    e: &ErrorImage<T>,
    p: &Palette<T>,
) -> Result<IndexedImage<T>> {
    Ok(hard_project(&dithered_input(img, e)?, p)?.1)
}
