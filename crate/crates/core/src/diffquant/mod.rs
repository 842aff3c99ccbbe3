//! Differentiable machinery: softmax palette projection with its analytic
//! backward pass, L1 loss, Adam, temperature schedules and a
//! finite-difference gradient checker.
//!
//! There is no autodiff tape. Every loss term ships a hand-written backward
//! and is verified against central differences.

mod adam;
mod fdcheck;
mod soft;

use crate::error::ensure;
use crate::imagecore::Raster;
use crate::{Result, Scalar};

pub use adam::{adam_step, OptimizerState};
pub use fdcheck::{finite_diff_check, FdCheck, FdReport, MIN_COORDS};
pub use soft::{soft_project, soft_project_backward, soft_weights};

/// Gradient accumulator paired with a flat parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct GradBuffer<T> {
    data: Vec<T>,
}

impl<T: Scalar> GradBuffer<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![T::zero(); len],
        }
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn add_scaled(&mut self, other: &[T], s: T) -> Result<()> {
        ensure!(
            other.len() == self.data.len(),
            Shape,
            "gradient lengths {} vs {}",
            self.data.len(),
            other.len()
        );
        for (a, &b) in self.data.iter_mut().zip(other) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Geometric annealing from `t_start` to `t_end` over `steps` evaluations.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TemperatureSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        Self {
            t_start: 1.0,
            t_end: 0.01,
            steps: 1,
        }
    }
}

impl TemperatureSchedule {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        let s = Self {
            t_start,
            t_end,
            steps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.t_end > 0.0 && self.t_start >= self.t_end && self.t_start.is_finite(),
            InvalidArgument,
            "temperature schedule needs t_start >= t_end > 0, got {} -> {}",
            self.t_start,
            self.t_end
        );
        Ok(())
    }

    /// Same endpoints over a different number of steps.
    pub fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }

    /// Temperature at step `k` (`t_start` at 0, `t_end` at `steps - 1`).
    pub fn at<T: Scalar>(&self, k: usize) -> T {
        if self.steps <= 1 {
            return T::lit(self.t_end);
        }
        let frac = (k.min(self.steps - 1)) as f64 / (self.steps - 1) as f64;
        T::lit(self.t_start * (self.t_end / self.t_start).powf(frac))
    }
}

/// `Σ|a − b|` and its subgradient `sign(a − b)` with `sign(0) = 0`.
pub fn l1_loss<T: Scalar>(a: &Raster<T>, b: &Raster<T>) -> Result<(T, GradBuffer<T>)> {
    a.check_same_shape(b, "l1_loss")?;
    let mut total = T::zero();
    let grad = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            total += (x - y).abs();
            (x - y).sign0()
        })
        .collect();
    Ok((total, GradBuffer::from_vec(grad)))
}
