use super::{FloatImage, Raster};
use crate::error::ensure;
use crate::{Result, Scalar};

/// Square correlation kernel with odd side length.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D<T> {
    size: usize,
    weights: Vec<T>,
}

impl<T: Scalar> Kernel2D<T> {
    pub fn new(size: usize, weights: Vec<T>) -> Result<Self> {
        ensure!(
            size % 2 == 1,
            InvalidArgument,
            "kernel size must be odd, got {}",
            size
        );
        ensure!(
            weights.len() == size * size,
            Shape,
            "kernel {}x{} needs {} weights",
            size,
            size,
            size * size
        );
        ensure!(
            weights.iter().all(|w| w.is_finite()),
            Numeric,
            "kernel weights must be finite"
        );
        Ok(Self { size, weights })
    }

    /// Normalized Gaussian, `exp(-(dx²+dy²) / 2σ²)` scaled to sum 1.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        ensure!(sigma > 0.0, InvalidArgument, "sigma must be positive");
        let half = (size / 2) as f64;
        let raw: Vec<f64> = (0..size * size)
            .map(|i| {
                let dy = (i / size) as f64 - half;
                let dx = (i % size) as f64 - half;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Self::new(size, raw.into_iter().map(|w| T::lit(w / total)).collect())
    }

    /// All-ones kernel: an unnormalized window sum.
    pub fn ones(size: usize) -> Result<Self> {
        Self::new(size, vec![T::one(); size * size])
    }

    /// Horizontal Sobel derivative scaled by 1/8.
    pub fn sobel_x() -> Self {
        let w = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
        Self {
            size: 3,
            weights: w.iter().map(|&v| T::lit(v / 8.0)).collect(),
        }
    }

    /// Vertical Sobel derivative scaled by 1/8.
    pub fn sobel_y() -> Self {
        let w = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];
        Self {
            size: 3,
            weights: w.iter().map(|&v| T::lit(v / 8.0)).collect(),
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    fn radius(&self) -> isize {
        (self.size / 2) as isize
    }
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Per-channel correlation with replicate (edge-clamped) padding.
pub fn correlate<T: Scalar>(src: &Raster<T>, kernel: &Kernel2D<T>) -> Raster<T> {
    let (h, w, ch) = src.dims();
    let rad = kernel.radius();
    let mut out = Raster::zeros(h, w, ch);
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let mut acc = T::zero();
                for (ki, &kw) in kernel.weights.iter().enumerate() {
                    if kw == T::zero() {
                        continue;
                    }
                    let dy = (ki / kernel.size) as isize - rad;
                    let dx = (ki % kernel.size) as isize - rad;
                    let rr = clamp_index(r as isize + dy, h);
                    let cc = clamp_index(c as isize + dx, w);
                    acc += kw * src.get(rr, cc, k);
                }
                out.set(r, c, k, acc);
            }
        }
    }
    out
}

/// Adjoint (transpose) of [`correlate`]: scatters each output gradient back
/// onto the input samples it was read from.
pub fn correlate_adjoint<T: Scalar>(grad_out: &Raster<T>, kernel: &Kernel2D<T>) -> Raster<T> {
    let (h, w, ch) = grad_out.dims();
    let rad = kernel.radius();
    let mut grad_in = Raster::zeros(h, w, ch);
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let g = grad_out.get(r, c, k);
                if g == T::zero() {
                    continue;
                }
                for (ki, &kw) in kernel.weights.iter().enumerate() {
                    if kw == T::zero() {
                        continue;
                    }
                    let dy = (ki / kernel.size) as isize - rad;
                    let dx = (ki % kernel.size) as isize - rad;
                    let rr = clamp_index(r as isize + dy, h);
                    let cc = clamp_index(c as isize + dx, w);
                    let i = grad_in.index(rr, cc, k);
                    grad_in.data_mut()[i] += kw * g;
                }
            }
        }
    }
    grad_in
}

/// One-dimensional correlation along rows (`horizontal`) or columns with
/// replicate padding.
fn pass_1d<T: Scalar>(src: &Raster<T>, taps: &[T], horizontal: bool) -> Raster<T> {
    let (h, w, ch) = src.dims();
    let rad = (taps.len() / 2) as isize;
    let data = src.data();
    let mut out = vec![T::zero(); data.len()];
    for r in 0..h {
        for c in 0..w {
            let base = (r * w + c) * ch;
            for (i, &tw) in taps.iter().enumerate() {
                let off = i as isize - rad;
                let j = if horizontal {
                    (r * w + clamp_index(c as isize + off, w)) * ch
                } else {
                    (clamp_index(r as isize + off, h) * w + c) * ch
                };
                for k in 0..ch {
                    out[base + k] += tw * data[j + k];
                }
            }
        }
    }
    Raster::new(h, w, ch, out).expect("same shape")
}

/// Transpose of [`pass_1d`].
fn pass_1d_adjoint<T: Scalar>(grad_out: &Raster<T>, taps: &[T], horizontal: bool) -> Raster<T> {
    let (h, w, ch) = grad_out.dims();
    let rad = (taps.len() / 2) as isize;
    let g = grad_out.data();
    let mut out = vec![T::zero(); g.len()];
    for r in 0..h {
        for c in 0..w {
            let base = (r * w + c) * ch;
            for (i, &tw) in taps.iter().enumerate() {
                let off = i as isize - rad;
                let j = if horizontal {
                    (r * w + clamp_index(c as isize + off, w)) * ch
                } else {
                    (clamp_index(r as isize + off, h) * w + c) * ch
                };
                for k in 0..ch {
                    out[j + k] += tw * g[base + k];
                }
            }
        }
    }
    Raster::new(h, w, ch, out).expect("same shape")
}

/// Correlation with the outer-product kernel `taps_y ⊗ taps_x` (rows first).
pub fn correlate_separable<T: Scalar>(src: &Raster<T>, taps_y: &[T], taps_x: &[T]) -> Raster<T> {
    pass_1d(&pass_1d(src, taps_x, true), taps_y, false)
}

/// Adjoint of [`correlate_separable`].
pub fn correlate_separable_adjoint<T: Scalar>(
    grad_out: &Raster<T>,
    taps_y: &[T],
    taps_x: &[T],
) -> Raster<T> {
    pass_1d_adjoint(&pass_1d_adjoint(grad_out, taps_y, false), taps_x, true)
}

/// Normalized 1-D Gaussian taps; their outer product is [`Kernel2D::gaussian`].
pub fn gaussian_taps<T: Scalar>(size: usize, sigma: f64) -> Vec<T> {
    let half = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / total)).collect()
}

fn smoothing_taps<T: Scalar>() -> Vec<T> {
    gaussian_taps(5, 1.0)
}

/// 5×5 Gaussian blur (σ = 1, normalized, replicate padding).
pub fn gaussian_smooth<T: Scalar>(img: &FloatImage<T>) -> FloatImage<T> {
    FloatImage::from_raster_clamped(gaussian_smooth_raster(img.raster()))
}

/// [`gaussian_smooth`] on an unbounded raster.
pub fn gaussian_smooth_raster<T: Scalar>(r: &Raster<T>) -> Raster<T> {
    let taps = smoothing_taps();
    correlate_separable(r, &taps, &taps)
}

pub fn gaussian_smooth_adjoint<T: Scalar>(grad_out: &Raster<T>) -> Raster<T> {
    let taps = smoothing_taps();
    correlate_separable_adjoint(grad_out, &taps, &taps)
}

/// Unnormalized `size × size` window sum with replicate padding.
pub fn box_sum<T: Scalar>(r: &Raster<T>, size: usize) -> Raster<T> {
    let ones = vec![T::one(); size];
    correlate_separable(r, &ones, &ones)
}

pub fn box_sum_adjoint<T: Scalar>(grad_out: &Raster<T>, size: usize) -> Raster<T> {
    let ones = vec![T::one(); size];
    correlate_separable_adjoint(grad_out, &ones, &ones)
}

/// Sobel/8 derivatives `(gx, gy)` of a single-channel image; `|g| ≤ 1` for
/// inputs in `[0, 1]`. The outputs are signed rasters.
pub fn sobel_gradients<T: Scalar>(y: &FloatImage<T>) -> Result<(Raster<T>, Raster<T>)> {
    y.require_gray("sobel_gradients")?;
    let (h, w) = (y.height(), y.width());
    let at = |r: isize, c: isize| y.get(clamp_index(r, h), clamp_index(c, w), 0);
    let two = T::lit(2.0);
    let eighth = T::lit(0.125);
    let mut gx = Raster::zeros(h, w, 1);
    let mut gy = Raster::zeros(h, w, 1);
    // Difference form: equal neighbours cancel exactly.
    for r in 0..h as isize {
        for c in 0..w as isize {
            let dx = (at(r - 1, c + 1) - at(r - 1, c - 1))
                + two * (at(r, c + 1) - at(r, c - 1))
                + (at(r + 1, c + 1) - at(r + 1, c - 1));
            let dy = (at(r + 1, c - 1) - at(r - 1, c - 1))
                + two * (at(r + 1, c) - at(r - 1, c))
                + (at(r + 1, c + 1) - at(r - 1, c + 1));
            gx.set(r as usize, c as usize, 0, dx * eighth);
            gy.set(r as usize, c as usize, 0, dy * eighth);
        }
    }
    Ok((gx, gy))
}

pub fn sobel_gradients_adjoint<T: Scalar>(
    grad_gx: &Raster<T>,
    grad_gy: &Raster<T>,
) -> Result<Raster<T>> {
    let mut g = correlate_adjoint(grad_gx, &Kernel2D::sobel_x());
    g.add_scaled(&correlate_adjoint(grad_gy, &Kernel2D::sobel_y()), T::one())?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(h: usize, w: usize, ch: usize, seed: u64) -> Raster<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_fn(h, w, ch, |_, _, _| rng.gen::<f64>())
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel2D::<f64>::new(2, vec![0.0; 4]).is_err());
        assert!(Kernel2D::<f64>::new(3, vec![f64::NAN; 9]).is_err());
        let g = Kernel2D::<f64>::gaussian(5, 1.0).unwrap();
        assert_abs_diff_eq!(g.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sobel_constant_is_zero() {
        let img = FloatImage::<f64>::filled(6, 7, 1, 0.3);
        let (gx, gy) = sobel_gradients(&img).unwrap();
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn sobel_horizontal_ramp() {
        // Interior stencil: (1 + 2 + 1) * 2 * slope / 8 = slope.
        let w = 5;
        let img = FloatImage::<f64>::from_fn(5, w, 1, |_, c, _| c as f64 / (w - 1) as f64);
        let (gx, gy) = sobel_gradients(&img).unwrap();
        for r in 0..5 {
            for c in 1..w - 1 {
                assert_abs_diff_eq!(gx.get(r, c, 0), 0.25, epsilon = 1e-15);
                assert_abs_diff_eq!(gy.get(r, c, 0), 0.0, epsilon = 1e-15);
            }
        }
        // Replicated border halves the stencil span.
        assert_abs_diff_eq!(gx.get(2, 0, 0), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn sobel_rejects_rgb() {
        assert!(sobel_gradients(&FloatImage::<f64>::filled(4, 4, 3, 0.1)).is_err());
    }

    #[test]
    fn sobel_transpose_swaps() {
        let img = FloatImage::from_raster_clamped(noise(7, 9, 1, 3));
        let (gx, gy) = sobel_gradients(&img).unwrap();
        let (tx, ty) = sobel_gradients(&img.transpose()).unwrap();
        for (a, b) in tx
            .data()
            .iter()
            .zip(gy.transpose().data())
            .chain(ty.data().iter().zip(gx.transpose().data()))
        {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn separable_matches_full_kernel() {
        let img = noise(9, 11, 3, 5);
        let full = correlate(&img, &Kernel2D::gaussian(5, 1.0).unwrap());
        let sep = gaussian_smooth_raster(&img);
        let boxed = correlate(&img, &Kernel2D::ones(7).unwrap());
        for (a, b) in full
            .data()
            .iter()
            .zip(sep.data())
            .chain(boxed.data().iter().zip(box_sum(&img, 7).data()))
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn separable_adjoint_identity() {
        let x = noise(8, 6, 2, 6);
        let y = noise(8, 6, 2, 7);
        let taps = [0.2, -0.5, 1.0];
        let dot = |a: &Raster<f64>, b: &Raster<f64>| {
            a.data()
                .iter()
                .zip(b.data())
                .map(|(p, q)| p * q)
                .sum::<f64>()
        };
        let lhs = dot(
            &correlate_separable(&x, &taps, &[0.3, 0.7, 0.1, 0.4, 0.9]),
            &y,
        );
        let rhs = dot(
            &x,
            &correlate_separable_adjoint(&y, &taps, &[0.3, 0.7, 0.1, 0.4, 0.9]),
        );
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn sobel_constant_exact_zero() {
        let img = FloatImage::<f64>::filled(6, 5, 1, 0.1 + 0.2);
        let (gx, gy) = sobel_gradients(&img).unwrap();
        assert!(gx.data().iter().chain(gy.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_matches_stencil() {
        let img = FloatImage::from_raster_clamped(noise(6, 7, 1, 4));
        let (gx, gy) = sobel_gradients(&img).unwrap();
        let (cx, cy) = (
            correlate(img.raster(), &Kernel2D::sobel_x()),
            correlate(img.raster(), &Kernel2D::sobel_y()),
        );
        for (a, b) in gx
            .data()
            .iter()
            .zip(cx.data())
            .chain(gy.data().iter().zip(cy.data()))
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn sobel_magnitude_bounded() {
        let img = FloatImage::from_raster_clamped(noise(16, 16, 1, 9).map(|v| v.round()));
        let (gx, gy) = sobel_gradients(&img).unwrap();
        assert!(gx.max_abs() <= 1.0 && gy.max_abs() <= 1.0);
    }

    #[test]
    fn smooth_constant_and_impulse() {
        let c = FloatImage::<f64>::filled(8, 8, 3, 0.42);
        let s = gaussian_smooth(&c);
        assert!(s.data().iter().all(|&v| (v - 0.42).abs() < 1e-15));

        let mut imp = Raster::<f64>::zeros(9, 9, 1);
        imp.set(4, 4, 0, 1.0);
        let out = gaussian_smooth(&FloatImage::try_from_raster(imp).unwrap());
        let k = Kernel2D::<f64>::gaussian(5, 1.0).unwrap();
        for dy in 0..5 {
            for dx in 0..5 {
                assert_abs_diff_eq!(
                    out.get(2 + dy, 2 + dx, 0),
                    k.weights()[dy * 5 + dx],
                    epsilon = 1e-16
                );
            }
        }
        assert_eq!(out.get(0, 0, 0), 0.0);
    }

    #[test]
    fn smooth_preserves_mean_with_quiet_border() {
        // Noise confined to the interior so replicate padding only sees zeros.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = FloatImage::<f64>::from_fn(64, 64, 1, |r, c, _| {
            if (3..61).contains(&r) && (3..61).contains(&c) {
                rng.gen()
            } else {
                0.0
            }
        });
        let out = gaussian_smooth(&img);
        assert_abs_diff_eq!(out.mean(), img.mean(), epsilon = 1e-9);
    }

    #[test]
    fn correlate_adjoint_identity() {
        // <K x, y> = <x, K^T y>
        let k =
            Kernel2D::<f64>::new(3, vec![0.1, -0.4, 0.3, 0.9, 0.2, -0.7, 0.5, 0.05, -0.2]).unwrap();
        let x = noise(6, 8, 2, 1);
        let y = noise(6, 8, 2, 2);
        let lhs: f64 = correlate(&x, &k)
            .data()
            .iter()
            .zip(y.data())
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = x
            .data()
            .iter()
            .zip(correlate_adjoint(&y, &k).data())
            .map(|(a, b)| a * b)
            .sum();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn f32_path_works() {
        let img = FloatImage::<f32>::filled(5, 5, 1, 0.5);
        let (gx, _) = sobel_gradients(&img).unwrap();
        assert!(gx.max_abs() < 1e-6);
    }
}
