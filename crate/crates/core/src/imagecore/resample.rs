use super::{FloatImage, Raster};
use crate::error::ensure;
use crate::{Result, Scalar};

/// Two-tap linear interpolation weights along one axis, half-pixel aligned.
#[derive(Clone, Debug)]
pub struct ResampleAxis<T> {
    taps: Vec<(usize, usize, T, T)>,
}

impl<T: Scalar> ResampleAxis<T> {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        let ratio = n_in as f64 / n_out as f64;
        let taps = (0..n_out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_in - 1);
                let f = s - i0 as f64;
                (i0, i1, T::lit(1.0 - f), T::lit(f))
            })
            .collect();
        Self { taps }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Target dimensions for downscaling by `scale`: `round(n / scale)`.
pub fn resampled_dims(height: usize, width: usize, scale: f64) -> Result<(usize, usize)> {
    ensure!(
        scale > 0.0 && scale.is_finite(),
        InvalidArgument,
        "scale must be positive, got {}",
        scale
    );
    let h = (height as f64 / scale).round() as usize;
    let w = (width as f64 / scale).round() as usize;
    ensure!(
        h >= 1 && w >= 1,
        DegenerateSize,
        "{}x{} / {} gives an empty image",
        height,
        width,
        scale
    );
    Ok((h, w))
}

fn resample_raster<T: Scalar>(src: &Raster<T>, height: usize, width: usize) -> Raster<T> {
    let ch = src.channels();
    let ry = ResampleAxis::<T>::new(src.height(), height);
    let rx = ResampleAxis::<T>::new(src.width(), width);
    let mut out = Raster::zeros(height, width, ch);
    // Lerp form keeps constant regions bit-exact.
    for (r, &(y0, y1, _, wy1)) in ry.taps.iter().enumerate() {
        for (c, &(x0, x1, _, wx1)) in rx.taps.iter().enumerate() {
            for k in 0..ch {
                let a = src.get(y0, x0, k);
                let b = src.get(y1, x0, k);
                let top = a + wx1 * (src.get(y0, x1, k) - a);
                let bot = b + wx1 * (src.get(y1, x1, k) - b);
                out.set(r, c, k, top + wy1 * (bot - top));
            }
        }
    }
    out
}

/// Bilinear resize to an explicit size.
pub fn resample_bilinear_to<T: Scalar>(
    img: &FloatImage<T>,
    height: usize,
    width: usize,
) -> Result<FloatImage<T>> {
    ensure!(
        height >= 1 && width >= 1,
        DegenerateSize,
        "target {}x{}",
        height,
        width
    );
    if height == img.height() && width == img.width() {
        return Ok(img.clone());
    }
    Ok(FloatImage::from_raster_clamped(resample_raster(
        img.raster(),
        height,
        width,
    )))
}

/// Bilinear resize by a scale factor (`> 1` shrinks); see [`resampled_dims`].
pub fn resample_bilinear<T: Scalar>(img: &FloatImage<T>, scale: f64) -> Result<FloatImage<T>> {
    let (h, w) = resampled_dims(img.height(), img.width(), scale)?;
    resample_bilinear_to(img, h, w)
}

/// Adjoint of the bilinear resize from `in_h × in_w` to the shape of `grad_out`.
pub fn resample_bilinear_adjoint<T: Scalar>(
    grad_out: &Raster<T>,
    in_h: usize,
    in_w: usize,
) -> Raster<T> {
    let (h, w, ch) = grad_out.dims();
    if h == in_h && w == in_w {
        return grad_out.clone();
    }
    let ry = ResampleAxis::<T>::new(in_h, h);
    let rx = ResampleAxis::<T>::new(in_w, w);
    let mut g = Raster::zeros(in_h, in_w, ch);
    for (r, &(y0, y1, wy0, wy1)) in ry.taps.iter().enumerate() {
        for (c, &(x0, x1, wx0, wx1)) in rx.taps.iter().enumerate() {
            for k in 0..ch {
                let v = grad_out.get(r, c, k);
                for (yy, wy) in [(y0, wy0), (y1, wy1)] {
                    for (xx, wx) in [(x0, wx0), (x1, wx1)] {
                        let i = g.index(yy, xx, k);
                        g.data_mut()[i] += wy * wx * v;
                    }
                }
            }
        }
    }
    g
}
