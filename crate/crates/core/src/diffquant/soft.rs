use super::GradBuffer;
use crate::error::ensure;
use crate::imagecore::{FloatImage, Raster};
use crate::palette::{sq_dist, Palette};
use crate::{Result, Scalar};

fn check_temperature<T: Scalar>(t: T) -> Result<()> {
    ensure!(
        t > T::zero() && t.is_finite(),
        InvalidArgument,
        "temperature must be positive, got {}",
        t
    );
    Ok(())
}

/// Softmax weights `w_j ∝ exp(−‖P_j − x‖² / t)` for one pixel, written into
/// `out` (length = palette size). Uses max-subtraction for stability.
pub fn soft_weights<T: Scalar>(px: &[T], p: &Palette<T>, t: T, out: &mut [T]) {
    let mut best = T::neg_infinity();
    for (w, c) in out.iter_mut().zip(p.colors()) {
        *w = -sq_dist(c, px) / t;
        best = best.max(*w);
    }
    let mut total = T::zero();
    for w in out.iter_mut() {
        *w = (*w - best).exp();
        total += *w;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// Soft projection: every pixel becomes the softmax-weighted mixture of
/// palette colours, weights decaying with squared distance to the input
/// pixel. Tends to the nearest-colour projection as `t → 0`.
pub fn soft_project<T: Scalar>(img: &FloatImage<T>, p: &Palette<T>, t: T) -> Result<FloatImage<T>> {
    img.require_rgb("soft_project")?;
    check_temperature(t)?;
    let mut w = vec![T::zero(); p.len()];
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        soft_weights(px, p, t, &mut w);
        let mut acc = [T::zero(); 3];
        for (wj, c) in w.iter().zip(p.colors()) {
            for k in 0..3 {
                acc[k] += *wj * c[k];
            }
        }
        data.extend_from_slice(&acc);
    }
    Ok(FloatImage::from_raster_clamped(Raster::new(
        img.height(),
        img.width(),
        3,
        data,
    )?))
}

/// Backward pass of [`soft_project`]: given `upstream = ∂L/∂out`, adds
/// `∂L/∂P` (flat, `np × 3`) into `grad_p` and `∂L/∂img` into `grad_img`.
pub fn soft_project_backward<T: Scalar>(
    img: &FloatImage<T>,
    p: &Palette<T>,
    t: T,
    upstream: &GradBuffer<T>,
    grad_p: &mut GradBuffer<T>,
    grad_img: &mut GradBuffer<T>,
) -> Result<()> {
    img.require_rgb("soft_project_backward")?;
    check_temperature(t)?;
    let n = img.data().len();
    ensure!(
        upstream.len() == n,
        Shape,
        "upstream gradient has {} values, image {}",
        upstream.len(),
        n
    );
    ensure!(
        grad_img.len() == n,
        Shape,
        "image gradient has {} values, image {}",
        grad_img.len(),
        n
    );
    ensure!(
        grad_p.len() == p.len() * 3,
        Shape,
        "palette gradient has {} values, palette {}",
        grad_p.len(),
        p.len() * 3
    );

    let two_over_t = T::lit(2.0) / t;
    let mut w = vec![T::zero(); p.len()];
    let mut b = vec![T::zero(); p.len()];
    let gp = grad_p.as_mut_slice();
    for (i, px) in img.data().chunks_exact(3).enumerate() {
        let g = &upstream.as_slice()[i * 3..i * 3 + 3];
        if g.iter().all(|v| *v == T::zero()) {
            continue;
        }
        soft_weights(px, p, t, &mut w);
        // a_j = <g, P_j>; b_j = w_j (a_j − Σ_l w_l a_l) is ∂L/∂(logit_j).
        let mut mean_a = T::zero();
        for (bj, (wj, c)) in b.iter_mut().zip(w.iter().zip(p.colors())) {
            *bj = g[0] * c[0] + g[1] * c[1] + g[2] * c[2];
            mean_a += *wj * *bj;
        }
        let mut gx = [T::zero(); 3];
        for (j, c) in p.colors().iter().enumerate() {
            let bj = w[j] * (b[j] - mean_a);
            for k in 0..3 {
                // logit_j = −‖P_j − x‖²/t
                let diff = c[k] - px[k];
                gp[j * 3 + k] += w[j] * g[k] - bj * two_over_t * diff;
                gx[k] += bj * two_over_t * diff;
            }
        }
        let gi = &mut grad_img.as_mut_slice()[i * 3..i * 3 + 3];
        for k in 0..3 {
            gi[k] += gx[k];
        }
    }
    Ok(())
}
