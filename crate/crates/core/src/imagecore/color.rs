use super::{FloatImage, Raster};
use crate::{Result, Scalar};

/// BT.601 luma weights `(R, G, B)`.
pub fn luma_weights<T: Scalar>() -> [T; 3] {
    [T::lit(0.299), T::lit(0.587), T::lit(0.114)]
}

/// BT.601 full-range RGB → YUV with chroma centred on 0.5.
pub fn rgb_to_yuv<T: Scalar>(img: &FloatImage<T>) -> Result<FloatImage<T>> {
    img.require_rgb("rgb_to_yuv")?;
    let [wr, wg, wb] = luma_weights::<T>();
    let half = T::lit(0.5);
    let (ur, ug) = (T::lit(-0.168_736), T::lit(-0.331_264));
    let (vg, vb) = (T::lit(-0.418_688), T::lit(-0.081_312));
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        let (r, g, b) = (px[0], px[1], px[2]);
        data.push(wr * r + wg * g + wb * b);
        data.push(ur * r + ug * g + half * b + half);
        data.push(half * r + vg * g + vb * b + half);
    }
    Ok(FloatImage::from_raster_clamped(Raster::new(
        img.height(),
        img.width(),
        3,
        data,
    )?))
}

/// Luma plane of an RGB image; a gray image is returned unchanged.
pub fn luma<T: Scalar>(img: &FloatImage<T>) -> FloatImage<T> {
    if img.channels() == 1 {
        return img.clone();
    }
    let [wr, wg, wb] = luma_weights::<T>();
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| wr * p[0] + wg * p[1] + wb * p[2])
        .collect();
    FloatImage::from_raster_clamped(
        Raster::new(img.height(), img.width(), 1, data).expect("luma shape"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn px(r: f64, g: f64, b: f64) -> FloatImage<f64> {
        FloatImage::new(1, 1, 3, vec![r, g, b]).unwrap()
    }

    #[test]
    fn yuv_reference_points() {
        let white = rgb_to_yuv(&px(1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(white.get(0, 0, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(white.get(0, 0, 1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(white.get(0, 0, 2), 0.5, epsilon = 1e-12);

        let black = rgb_to_yuv(&px(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(black.data(), &[0.0, 0.5, 0.5]);

        let red = rgb_to_yuv(&px(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(red.get(0, 0, 0), 0.299, epsilon = 1e-15);
    }

    #[test]
    fn yuv_rejects_gray() {
        assert!(rgb_to_yuv(&FloatImage::<f64>::filled(2, 2, 1, 0.5)).is_err());
    }

    #[test]
    fn yuv_stays_in_unit_range() {
        for &(r, g, b) in &[
            (1.0, 0.0, 1.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, 1.0),
            (1.0, 1.0, 0.0),
        ] {
            let y = rgb_to_yuv(&px(r, g, b)).unwrap();
            assert!(y.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
