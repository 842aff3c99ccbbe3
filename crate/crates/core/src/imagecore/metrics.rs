use super::{luma, FloatImage, Kernel2D};
use crate::error::ensure;
use crate::{Result, Scalar};

/// Side length of the SSIM Gaussian window.
pub const SSIM_WINDOW: usize = 11;

/// Mean squared error over every sample.
pub fn mse<T: Scalar>(a: &FloatImage<T>, b: &FloatImage<T>) -> Result<T> {
    a.check_same_shape(b, "mse")?;
    let n = T::from_usize_lossy(a.data().len().max(1));
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        / n)
}

/// Peak signal-to-noise ratio in dB for unit dynamic range. Identical
/// images give `+inf`.
pub fn psnr<T: Scalar>(a: &FloatImage<T>, b: &FloatImage<T>) -> Result<f64> {
    let m = mse(a, b)?.to_f64_lossy();
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / m).log10())
}

/// Mean SSIM on luma, 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
/// K2 = 0.03, averaged over window positions fully inside the image.
pub fn ssim<T: Scalar>(a: &FloatImage<T>, b: &FloatImage<T>) -> Result<f64> {
    a.check_same_shape(b, "ssim")?;
    ensure!(
        a.height() >= SSIM_WINDOW && a.width() >= SSIM_WINDOW,
        DegenerateSize,
        "ssim needs at least {0}x{0}, got {1}x{2}",
        SSIM_WINDOW,
        a.height(),
        a.width()
    );
    let ya = luma(a);
    let yb = luma(b);
    let win = Kernel2D::<f64>::gaussian(SSIM_WINDOW, 1.5)?;
    let c1 = 0.01f64.powi(2);
    let c2 = 0.03f64.powi(2);
    let (h, w) = (a.height(), a.width());
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..=h - SSIM_WINDOW {
        for c in 0..=w - SSIM_WINDOW {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, &g) in win.weights().iter().enumerate() {
                let (dy, dx) = (i / SSIM_WINDOW, i % SSIM_WINDOW);
                let x = ya.get(r + dy, c + dx, 0).to_f64_lossy();
                let y = yb.get(r + dy, c + dx, 0).to_f64_lossy();
                ma += g * x;
                mb += g * y;
                saa += g * x * x;
                sbb += g * y * y;
                sab += g * x * y;
            }
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Serde helper: finite PSNR as a number, `+inf` as the string `"inf"`.
pub fn serialize_psnr<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}
