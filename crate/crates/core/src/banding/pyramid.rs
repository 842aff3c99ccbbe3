use super::{banding_score, banding_score_value};
use crate::diffquant::GradBuffer;
use crate::error::ensure;
use crate::imagecore::{
    gaussian_smooth, gaussian_smooth_adjoint, resample_bilinear_adjoint, resample_bilinear_to,
    resampled_dims, FloatImage, Raster,
};
use crate::{Result, Scalar};

/// Number of pyramid levels summed by [`multiscale_banding`].
pub const PYRAMID_LEVELS: i32 = 4;
/// Smallest side of a downscaled pyramid level.
pub const MIN_LEVEL_SIDE: usize = 8;

fn level_dims(h: usize, w: usize, eta: f64) -> Result<(usize, usize)> {
    ensure!(
        eta > 1.0 && eta.is_finite(),
        InvalidArgument,
        "pyramid factor must exceed 1, got {}",
        eta
    );
    let (dh, dw) = resampled_dims(h, w, eta)?;
    ensure!(
        dh >= MIN_LEVEL_SIDE && dw >= MIN_LEVEL_SIDE,
        DegenerateSize,
        "{}x{} downscaled by {:.4} is {}x{} (< {})",
        h,
        w,
        eta,
        dh,
        dw,
        MIN_LEVEL_SIDE
    );
    Ok((dh, dw))
}

/// One pyramid level: smooth, shrink by `eta`, stretch back to the input size.
pub fn pyramid_level<T: Scalar>(img: &FloatImage<T>, eta: f64) -> Result<FloatImage<T>> {
    let (dh, dw) = level_dims(img.height(), img.width(), eta)?;
    let small = resample_bilinear_to(&gaussian_smooth(img), dh, dw)?;
    resample_bilinear_to(&small, img.height(), img.width())
}

/// Adjoint of [`pyramid_level`] (clamping treated as identity).
pub fn pyramid_level_adjoint<T: Scalar>(grad_out: &Raster<T>, eta: f64) -> Result<Raster<T>> {
    let (h, w) = (grad_out.height(), grad_out.width());
    let (dh, dw) = level_dims(h, w, eta)?;
    let g_small = resample_bilinear_adjoint(grad_out, dh, dw);
    let g_smooth = resample_bilinear_adjoint(&g_small, h, w);
    Ok(gaussian_smooth_adjoint(&g_smooth))
}

fn check_levels<T: Scalar>(img: &FloatImage<T>, eta: f64) -> Result<()> {
    img.require_rgb("multiscale_banding")?;
    level_dims(img.height(), img.width(), eta.powi(PYRAMID_LEVELS))?;
    Ok(())
}

/// Per-level scores `Z(G(I, η^k))`, `k = 1..=4`.
pub fn multiscale_banding_value<T: Scalar>(img: &FloatImage<T>, eta: f64) -> Result<Vec<T>> {
    check_levels(img, eta)?;
    (1..=PYRAMID_LEVELS)
        .map(|k| banding_score_value(&pyramid_level(img, eta.powi(k))?))
        .collect()
}

/// `B_η(I) = Σ_{k=1..4} Z(G(I, η^k))` and its gradient with respect to `I`.
/// Levels are accumulated in order.
pub fn multiscale_banding<T: Scalar>(img: &FloatImage<T>, eta: f64) -> Result<(T, GradBuffer<T>)> {
    check_levels(img, eta)?;
    let mut total = T::zero();
    let mut grad = GradBuffer::zeros(img.data().len());
    for k in 1..=PYRAMID_LEVELS {
        let scale = eta.powi(k);
        let level = pyramid_level(img, scale)?;
        let (z, gz) = banding_score(&level)?;
        total += z;
        let g_level = Raster::new(img.height(), img.width(), 3, gz.into_vec())?;
        grad.add_scaled(pyramid_level_adjoint(&g_level, scale)?.data(), T::one())?;
    }
    Ok((total, grad))
}
