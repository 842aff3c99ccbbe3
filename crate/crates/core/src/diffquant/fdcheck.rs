use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ensure;
use crate::{Result, Scalar};

/// Minimum number of coordinates a sampled check must visit.
pub const MIN_COORDS: usize = 32;

/// Central-difference gradient check.
///
/// The relative error of coordinate `i` is `|a_i − n_i| / max(|n_i|, floor)`
/// where `a` is the analytic and `n` the numerical gradient, and `floor` is
/// `1e-7 · max_i |n_i|` so coordinates with negligible gradient cannot
/// dominate. Coordinates whose `kink_distance` is below `kink_guard` are
/// skipped.
#[derive(Clone, Debug)]
pub struct FdCheck {
    pub h: f64,
    pub kink_guard: f64,
    /// Number of randomly sampled coordinates; `None` checks all of them.
    pub coords: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub checked: usize,
    pub skipped: usize,
}

impl FdCheck {
    pub fn new(h: f64, kink_guard: f64) -> Self {
        Self {
            h,
            kink_guard,
            coords: Some(64),
            seed: 0x5EED,
        }
    }

    pub fn all_coords(mut self) -> Self {
        self.coords = None;
        self
    }

    pub fn sample(mut self, coords: usize, seed: u64) -> Self {
        self.coords = Some(coords.max(MIN_COORDS));
        self.seed = seed;
        self
    }

    /// `f` returns `(loss, gradient)`; the gradient is taken at `params` only.
    pub fn run<T: Scalar>(
        &self,
        mut f: impl FnMut(&[T]) -> (T, Vec<T>),
        params: &[T],
        kink_distance: impl Fn(usize) -> T,
    ) -> Result<FdReport> {
        ensure!(
            self.h > 0.0,
            InvalidArgument,
            "finite-difference step must be positive"
        );
        let (_, analytic) = f(params);
        ensure!(
            analytic.len() == params.len(),
            Shape,
            "gradient has {} entries for {} params",
            analytic.len(),
            params.len()
        );

        let n = params.len();
        let mut coords: Vec<usize> = match self.coords {
            Some(k) if k < n => sample(&mut ChaCha8Rng::seed_from_u64(self.seed), n, k).into_vec(),
            _ => (0..n).collect(),
        };
        coords.sort_unstable();

        let h = T::lit(self.h);
        let guard = T::lit(self.kink_guard);
        let mut x = params.to_vec();
        let mut rows = Vec::with_capacity(coords.len());
        let mut skipped = 0;
        for &i in &coords {
            if kink_distance(i) < guard {
                skipped += 1;
                continue;
            }
            let orig = x[i];
            x[i] = orig + h;
            let (fp, _) = f(&x);
            x[i] = orig - h;
            let (fm, _) = f(&x);
            x[i] = orig;
            let numeric = ((fp - fm) / (h + h)).to_f64_lossy();
            rows.push((i, analytic[i].to_f64_lossy(), numeric));
        }

        let scale = rows.iter().fold(0.0f64, |m, r| m.max(r.2.abs()));
        let floor = (1e-7 * scale).max(f64::MIN_POSITIVE);
        let mut report = FdReport {
            max_rel_error: 0.0,
            worst_index: None,
            checked: rows.len(),
            skipped,
        };
        for (i, a, num) in rows {
            let rel = (a - num).abs() / num.abs().max(floor);
            // NaN counts as worse than anything seen so far.
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = rel;
                report.worst_index = Some(i);
            }
        }
        Ok(report)
    }
}

/// Convenience wrapper: samples 64 coordinates, returns the worst relative error.
pub fn finite_diff_check<T: Scalar>(
    f: impl FnMut(&[T]) -> (T, Vec<T>),
    params: &[T],
    h: f64,
    kink_guard: f64,
    kink_distance: impl Fn(usize) -> T,
) -> Result<f64> {
    Ok(FdCheck::new(h, kink_guard)
        .run(f, params, kink_distance)?
        .max_rel_error)
}
