use super::{check_rgb_shape, dithered_input, DitherLossWeights, ErrorImage};
use crate::banding::{multiscale_banding, multiscale_banding_value, DEFAULT_ETA};
use crate::diffquant::{l1_loss, soft_project, soft_project_backward, GradBuffer};
use crate::imagecore::{
    gaussian_smooth_adjoint, gaussian_smooth_raster, luma, luma_weights, sobel_gradients,
    sobel_gradients_adjoint, FloatImage, Raster,
};
use crate::palette::{assign, palette_loss, palette_loss_grad, Palette};
use crate::{Error, Result, Scalar};

/// Unweighted loss terms and their weighted sum. Terms whose weight is zero
/// are not evaluated and read 0. L1 terms are sums over all samples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DitherTerms<T> {
    pub total: T,
    pub fidelity: T,
    pub error_term: T,
    pub banding: T,
    pub perceptual: T,
    /// Palette term, only evaluated in joint fine-tuning.
    pub palette: T,
}

/// Evaluation context shared by the optimizer stages.
pub(crate) struct Objective<'a, T> {
    pub img: &'a FloatImage<T>,
    pub weights: DitherLossWeights,
    pub eta: f64,
    /// Adds `β · palette_loss` and its palette gradient.
    pub with_palette: bool,
}

pub(crate) struct Evaluation<T> {
    pub terms: DitherTerms<T>,
    pub grad_e: GradBuffer<T>,
    pub grad_p: GradBuffer<T>,
}

impl<T: Scalar> Objective<'_, T> {
    pub fn value(&self, e: &ErrorImage<T>, p: &Palette<T>, t: T) -> Result<DitherTerms<T>> {
        Ok(self.run(e, p, t, false)?.terms)
    }

    pub fn gradient(&self, e: &ErrorImage<T>, p: &Palette<T>, t: T) -> Result<Evaluation<T>> {
        self.run(e, p, t, true)
    }

    fn run(&self, e: &ErrorImage<T>, p: &Palette<T>, t: T, grad: bool) -> Result<Evaluation<T>> {
        let img = self.img;
        check_rgb_shape(img, e)?;
        let w = self.weights;
        w.validate()?;
        let n = img.data().len();
        let x = dithered_input(img, e)?;
        let hat = soft_project(&x, p, t)?;
        let mut terms = DitherTerms::default();
        let mut grad_hat = GradBuffer::zeros(n);
        let mut grad_e = GradBuffer::zeros(n);
        let mut grad_p = GradBuffer::zeros(p.len() * 3);

        if w.lambda_fidelity > 0.0 {
            let (v, g) = l1_loss(hat.raster(), img.raster())?;
            terms.fidelity = v;
            grad_hat.add_scaled(g.as_slice(), T::lit(w.lambda_fidelity))?;
        }
        if w.gamma_error > 0.0 {
            // r = E′ − (I − I′) with I′ the nearest palette colour of I.
            let idx = assign(img, p)?;
            let gamma = T::lit(w.gamma_error);
            let mut total = T::zero();
            for (i, &k) in idx.iter().enumerate() {
                let c = p.color(k);
                for (ch, &cv) in c.iter().enumerate() {
                    let j = i * 3 + ch;
                    let r = e.data()[j] - (img.data()[j] - cv);
                    total += r.abs();
                    grad_e.as_mut_slice()[j] += gamma * r.sign0();
                    if self.with_palette {
                        grad_p.as_mut_slice()[k * 3 + ch] += gamma * r.sign0();
                    }
                }
            }
            terms.error_term = total;
        }
        if w.delta_banding > 0.0 {
            if grad {
                let (v, g) = multiscale_banding(&hat, self.eta)?;
                terms.banding = v;
                grad_hat.add_scaled(g.as_slice(), T::lit(w.delta_banding))?;
            } else {
                terms.banding = multiscale_banding_value(&hat, self.eta)?.into_iter().sum();
            }
        }
        if w.theta_perceptual > 0.0 {
            let (v, g) = perceptual_proxy(img, &hat)?;
            terms.perceptual = v;
            grad_hat.add_scaled(g.as_slice(), T::lit(w.theta_perceptual))?;
        }
        if self.with_palette && w.beta_palette > 0.0 {
            terms.palette = palette_loss(img, p)?;
            if grad {
                grad_p.add_scaled(&palette_loss_grad(img, p)?, T::lit(w.beta_palette))?;
            }
        }
        terms.total = T::lit(w.lambda_fidelity) * terms.fidelity
            + T::lit(w.gamma_error) * terms.error_term
            + T::lit(w.delta_banding) * terms.banding
            + T::lit(w.theta_perceptual) * terms.perceptual
            + if self.with_palette {
                T::lit(w.beta_palette) * terms.palette
            } else {
                T::zero()
            };
        if !terms.total.is_finite() {
            return Err(Error::Numeric(format!(
                "dither loss is not finite: {terms:?}"
            )));
        }

        if grad && grad_hat.max_abs() > T::zero() {
            let mut grad_x = GradBuffer::zeros(n);
            soft_project_backward(&x, p, t, &grad_hat, &mut grad_p, &mut grad_x)?;
            // clamp(I + E′) passes the gradient inside [0, 1], boundaries included.
            for (j, (g, gx)) in grad_e
                .as_mut_slice()
                .iter_mut()
                .zip(grad_x.as_slice())
                .enumerate()
            {
                let v = img.data()[j] + e.data()[j];
                if v >= T::zero() && v <= T::one() {
                    *g += *gx;
                }
            }
        }
        if !self.with_palette {
            grad_p = GradBuffer::zeros(p.len() * 3);
        }
        Ok(Evaluation {
            terms,
            grad_e,
            grad_p,
        })
    }
}

/// `λ·L1(I, Î) + γ·L1(E′, I − I′) + δ·B_1.5(Î) + θ·R(I, Î)` with
/// `Î = soft_project(clamp(I + E′), P, t)` and `I′ = hard_project(I, P)`,
/// and its gradient with respect to `E′` (`I′` held constant).
pub fn dither_loss<T: Scalar>(
    img: &FloatImage<T>,
    e: &ErrorImage<T>,
    p: &Palette<T>,
    weights: &DitherLossWeights,
    t: T,
) -> Result<(T, GradBuffer<T>)> {
    let obj = Objective {
        img,
        weights: *weights,
        eta: DEFAULT_ETA,
        with_palette: false,
    };
    let ev = obj.gradient(e, p, t)?;
    Ok((ev.terms.total, ev.grad_e))
}

/// Value-only [`dither_loss`] with the individual terms.
pub fn dither_loss_terms<T: Scalar>(
    img: &FloatImage<T>,
    e: &ErrorImage<T>,
    p: &Palette<T>,
    weights: &DitherLossWeights,
    t: T,
) -> Result<DitherTerms<T>> {
    Objective {
        img,
        weights: *weights,
        eta: DEFAULT_ETA,
        with_palette: false,
    }
    .value(e, p, t)
}

struct Magnitude<T> {
    gx: Raster<T>,
    gy: Raster<T>,
    g: Raster<T>,
    smooth: Raster<T>,
}

fn magnitude<T: Scalar>(img: &FloatImage<T>) -> Result<Magnitude<T>> {
    let (gx, gy) = sobel_gradients(&luma(img))?;
    let g = gx.zip_map(&gy, |a, b| (a * a + b * b).sqrt())?;
    let smooth = gaussian_smooth_raster(&g);
    Ok(Magnitude { gx, gy, g, smooth })
}

/// Gradient-domain perceptual stand-in: L1 distance (sum) between the
/// smoothed Sobel magnitudes of the two lumas. Returns the value and the
/// gradient with respect to `img_hat`.
pub fn perceptual_proxy<T: Scalar>(
    img: &FloatImage<T>,
    img_hat: &FloatImage<T>,
) -> Result<(T, GradBuffer<T>)> {
    img.raster()
        .check_same_shape(img_hat.raster(), "perceptual_proxy")?;
    let a = magnitude(img)?;
    let b = magnitude(img_hat)?;
    let (sum, sign) = l1_loss(&b.smooth, &a.smooth)?;
    let (h, w) = (img.height(), img.width());
    let grad_smooth = Raster::new(h, w, 1, sign.into_vec())?;
    let grad_g = gaussian_smooth_adjoint(&grad_smooth);
    let mut ggx = Vec::with_capacity(h * w);
    let mut ggy = Vec::with_capacity(h * w);
    for i in 0..h * w {
        let g = b.g.data()[i];
        if g > T::zero() {
            ggx.push(grad_g.data()[i] * b.gx.data()[i] / g);
            ggy.push(grad_g.data()[i] * b.gy.data()[i] / g);
        } else {
            ggx.push(T::zero());
            ggy.push(T::zero());
        }
    }
    let grad_y = sobel_gradients_adjoint(&Raster::new(h, w, 1, ggx)?, &Raster::new(h, w, 1, ggy)?)?;
    let grad = if img_hat.channels() == 1 {
        grad_y.into_data()
    } else {
        let [wr, wg, wb] = luma_weights::<T>();
        grad_y
            .data()
            .iter()
            .flat_map(|&g| [wr * g, wg * g, wb * g])
            .collect()
    };
    Ok((sum, GradBuffer::from_vec(grad)))
}
