use crate::error::ensure;
use crate::{Error, Result, Scalar};

/// Adam state for one parameter block.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    /// Box constraint applied after every update.
    pub bounds: Option<(T, T)>,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(len: usize, lr: T) -> Self {
        Self {
            step: 0,
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            bounds: None,
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        }
    }

    pub fn with_bounds(mut self, lo: T, hi: T) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    state: &mut OptimizerState<T>,
) -> Result<()> {
    ensure!(
        params.len() == grads.len() && params.len() == state.len(),
        Shape,
        "adam: {} params, {} grads, state for {}",
        params.len(),
        grads.len(),
        state.len()
    );
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Optimizer(format!(
            "non-finite gradient at coordinate {i}"
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let one = T::one();
    let c1 = one - state.beta1.powi(t);
    let c2 = one - state.beta2.powi(t);
    for ((x, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = state.beta1 * *m + (one - state.beta1) * g;
        *v = state.beta2 * *v + (one - state.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *x -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        if let Some((lo, hi)) = state.bounds {
            *x = x.clamp_to(lo, hi);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_no_move() {
        let mut x = vec![0.3, -0.2];
        let mut s = OptimizerState::new(2, 0.1);
        adam_step(&mut x, &[0.0, 0.0], &mut s).unwrap();
        assert_eq!(x, vec![0.3, -0.2]);
    }

    #[test]
    fn first_step_is_lr_sign() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε).
        let mut x = vec![0.5, 0.5];
        let mut s = OptimizerState::new(2, 0.01);
        adam_step(&mut x, &[3.0, -0.2], &mut s).unwrap();
        assert_abs_diff_eq!(x[0], 0.49, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 0.51, epsilon = 1e-9);
    }

    #[test]
    fn rejects_nan_and_mismatch() {
        let mut x = vec![0.0];
        let mut s = OptimizerState::new(1, 0.1);
        assert!(matches!(
            adam_step(&mut x, &[f64::NAN], &mut s),
            Err(Error::Optimizer(_))
        ));
        assert!(adam_step(&mut x, &[1.0, 2.0], &mut s).is_err());
    }

    #[test]
    fn clamps_to_bounds() {
        let mut x = vec![0.995];
        let mut s = OptimizerState::new(1, 0.1).with_bounds(0.0, 1.0);
        adam_step(&mut x, &[-1.0], &mut s).unwrap();
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn quadratic_bowl() {
        let mut x = vec![0.5f64];
        let mut s = OptimizerState::new(1, 0.05);
        for _ in 0..200 {
            let g = [2.0 * x[0]];
            adam_step(&mut x, &g, &mut s).unwrap();
        }
        assert!(x[0].abs() < 1e-2);
    }
}
