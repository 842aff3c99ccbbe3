//! Banding-edge maps and the differentiable banding score.
//!
//! The edge map follows a fixed recipe on the luma plane:
//!
//! ```text
//! (gx, gy) = sobel(Y)          G = sqrt(gx² + gy²)
//! C = min(G, 1)                W = (C ⋆ ones(7×7))²        E = W · G
//! ```
//!
//! Flat regions give `G = 0`; isolated weak steps between flat regions
//! (false contours) give a small `G` that is amplified by the squared window
//! count. The score `Z` is the mean of `E`. It stands in for a learned
//! banding predictor: it is deterministic, differentiable almost everywhere,
//! and exactly zero on constant images. `Z` is not a calibrated perceptual
//! measure; it is only used as an optimization objective.

mod pyramid;

use crate::diffquant::GradBuffer;
use crate::error::ensure;
use crate::imagecore::{
    box_sum, box_sum_adjoint, luma, luma_weights, sobel_gradients, sobel_gradients_adjoint,
    FloatImage, Raster,
};
use crate::{Result, Scalar};

pub use pyramid::{
    multiscale_banding, multiscale_banding_value, pyramid_level, pyramid_level_adjoint,
    PYRAMID_LEVELS,
};

/// Window side of the unnormalized box sum.
pub const WINDOW: usize = 7;
/// Smallest image side accepted by [`banding_score`].
pub const MIN_SIDE: usize = 16;
/// Default pyramid scale factor.
pub const DEFAULT_ETA: f64 = 1.5;

/// Luma plane and banding-edge map of an RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct BandingMap<T = f64> {
    pub y: FloatImage<T>,
    /// Non-negative, unbounded.
    pub e: Raster<T>,
}

/// Forward intermediates kept for the backward pass.
struct EdgeForward<T> {
    y: FloatImage<T>,
    gx: Raster<T>,
    gy: Raster<T>,
    g: Raster<T>,
    window: Raster<T>,
    e: Raster<T>,
}

fn edge_forward<T: Scalar>(rgb: &FloatImage<T>) -> Result<EdgeForward<T>> {
    rgb.require_rgb("banding_inputs")?;
    let y = luma(rgb);
    let (gx, gy) = sobel_gradients(&y)?;
    let g = gx.zip_map(&gy, |a, b| (a * a + b * b).sqrt())?;
    let c = g.map(|v| v.min(T::one()));
    let window = box_sum(&c, WINDOW);
    let e = window.zip_map(&g, |s, gv| s * s * gv)?;
    Ok(EdgeForward {
        y,
        gx,
        gy,
        g,
        window,
        e,
    })
}

/// Luma and banding-edge map.
pub fn banding_inputs<T: Scalar>(rgb: &FloatImage<T>) -> Result<BandingMap<T>> {
    let f = edge_forward(rgb)?;
    Ok(BandingMap { y: f.y, e: f.e })
}

fn check_score_size<T: Scalar>(img: &FloatImage<T>) -> Result<()> {
    img.require_rgb("banding_score")?;
    ensure!(
        img.height() >= MIN_SIDE && img.width() >= MIN_SIDE,
        DegenerateSize,
        "banding score needs at least {0}x{0}, got {1}x{2}",
        MIN_SIDE,
        img.height(),
        img.width()
    );
    Ok(())
}

/// `Z(I)`: mean of the edge map.
pub fn banding_score_value<T: Scalar>(img: &FloatImage<T>) -> Result<T> {
    check_score_size(img)?;
    Ok(edge_forward(img)?.e.mean())
}

/// `Z(I)` and `∂Z/∂I` (flat, H×W×3).
pub fn banding_score<T: Scalar>(img: &FloatImage<T>) -> Result<(T, GradBuffer<T>)> {
    check_score_size(img)?;
    let f = edge_forward(img)?;
    let n = T::from_usize_lossy(f.e.data().len());
    let score = f.e.mean();
    let upstream = Raster::filled(img.height(), img.width(), 1, T::one() / n);
    let grad_y = edge_backward(&f, &upstream)?;
    let [wr, wg, wb] = luma_weights::<T>();
    let grad = grad_y
        .data()
        .iter()
        .flat_map(|&g| [wr * g, wg * g, wb * g])
        .collect();
    Ok((score, GradBuffer::from_vec(grad)))
}

/// Pulls `∂L/∂E` back to `∂L/∂Y`.
fn edge_backward<T: Scalar>(f: &EdgeForward<T>, grad_e: &Raster<T>) -> Result<Raster<T>> {
    let two = T::lit(2.0);
    // E = S² G: ∂E/∂S = 2 S G, ∂E/∂G (direct) = S².
    let grad_s = Raster::new(
        f.g.height(),
        f.g.width(),
        1,
        grad_e
            .data()
            .iter()
            .zip(f.window.data().iter().zip(f.g.data()))
            .map(|(&ge, (&s, &g))| ge * two * s * g)
            .collect(),
    )?;
    let grad_c = box_sum_adjoint(&grad_s, WINDOW);
    let mut grad_gx = Vec::with_capacity(f.g.data().len());
    let mut grad_gy = Vec::with_capacity(f.g.data().len());
    for i in 0..f.g.data().len() {
        let g = f.g.data()[i];
        let s = f.window.data()[i];
        let mut gg = grad_e.data()[i] * s * s;
        // min(G, 1) passes gradient below the cap.
        if g < T::one() {
            gg += grad_c.data()[i];
        }
        // |∇| has no gradient at 0; use the zero subgradient.
        if g > T::zero() {
            grad_gx.push(gg * f.gx.data()[i] / g);
            grad_gy.push(gg * f.gy.data()[i] / g);
        } else {
            grad_gx.push(T::zero());
            grad_gy.push(T::zero());
        }
    }
    let (h, w) = (f.g.height(), f.g.width());
    sobel_gradients_adjoint(
        &Raster::new(h, w, 1, grad_gx)?,
        &Raster::new(h, w, 1, grad_gy)?,
    )
}
