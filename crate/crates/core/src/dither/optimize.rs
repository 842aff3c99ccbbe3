use super::loss::{DitherTerms, Objective};
use super::{apply_dither_indexed, DitherLossWeights, ErrorImage, StageSchedule};
use crate::banding::{banding_score_value, DEFAULT_ETA, MIN_SIDE};
use crate::config::EncodeConfig;
use crate::diffquant::{adam_step, OptimizerState};
use crate::gifio::IndexedImage;
use crate::imagecore::{psnr, ssim, FloatImage, SSIM_WINDOW};
use crate::palette::{lloyd_refine_traced, median_cut, Palette};
use crate::{Error, Result, Scalar};

/// Lloyd iteration cap of the palette stage.
pub const LLOYD_MAX_ITERS: usize = 50;

/// One optimizer step. Loss fields are evaluated at the stage's final
/// temperature (the selection objective); `temperature` is the one used for
/// the gradient step taken from this iterate. `best` is the lowest `total`
/// seen so far in the stage.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LossRecord {
    pub stage: u8,
    pub step: usize,
    pub total: f64,
    pub fidelity: f64,
    pub error_term: f64,
    pub banding: f64,
    pub perceptual: f64,
    pub palette: f64,
    pub temperature: f64,
    pub best: f64,
}

impl LossRecord {
    fn new<T: Scalar>(
        stage: u8,
        step: usize,
        terms: &DitherTerms<T>,
        temperature: f64,
        best: f64,
    ) -> Self {
        Self {
            stage,
            step,
            total: terms.total.to_f64_lossy(),
            fidelity: terms.fidelity.to_f64_lossy(),
            error_term: terms.error_term.to_f64_lossy(),
            banding: terms.banding.to_f64_lossy(),
            perceptual: terms.perceptual.to_f64_lossy(),
            palette: terms.palette.to_f64_lossy(),
            temperature,
            best,
        }
    }
}

/// Metrics and traces of one encode.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EncodeReport {
    /// `+inf` for a lossless result, serialized as `"inf"`.
    #[serde(serialize_with = "crate::imagecore::serialize_psnr")]
    pub psnr_db: f64,
    /// `None` below the SSIM window size.
    pub ssim: Option<f64>,
    /// Banding score of the output; `None` below 16×16.
    pub banding_score: Option<f64>,
    /// Palette loss before and after every accepted Lloyd iteration.
    pub palette_trace: Vec<f64>,
    pub stage2: Vec<LossRecord>,
    pub stage3: Vec<LossRecord>,
}

impl EncodeReport {
    /// Fidelity and banding metrics of `out` against `img`, no traces.
    pub fn measure<T: Scalar>(img: &FloatImage<T>, out: &IndexedImage<T>) -> Result<Self> {
        let decoded = out.to_image();
        let small = img.height().min(img.width());
        Ok(Self {
            psnr_db: psnr(img, &decoded)?,
            ssim: if small >= SSIM_WINDOW {
                Some(ssim(img, &decoded)?)
            } else {
                None
            },
            banding_score: if small >= MIN_SIDE {
                Some(banding_score_value(&decoded)?.to_f64_lossy())
            } else {
                None
            },
            palette_trace: Vec::new(),
            stage2: Vec::new(),
            stage3: Vec::new(),
        })
    }

    /// All stages as one record stream. Lloyd iterations become stage-1
    /// records carrying only the palette term.
    pub fn records(&self) -> Vec<LossRecord> {
        let mut best = f64::INFINITY;
        let mut out: Vec<LossRecord> = self
            .palette_trace
            .iter()
            .enumerate()
            .map(|(step, &v)| {
                best = best.min(v);
                let terms = DitherTerms {
                    total: v,
                    palette: v,
                    ..Default::default()
                };
                LossRecord::new(1, step, &terms, 0.0, best)
            })
            .collect();
        out.extend_from_slice(&self.stage2);
        out.extend_from_slice(&self.stage3);
        out
    }

    /// Stage-2 banding term at entry and at the selected iterate.
    pub fn stage2_banding(&self) -> Option<(f64, f64)> {
        let first = self.stage2.first()?;
        let best = self.stage2.last()?.best;
        let chosen = self.stage2.iter().find(|r| r.total == best)?;
        Some((first.banding, chosen.banding))
    }
}

fn diverged(stage: u8, step: usize, err: Error, trace: &[LossRecord]) -> Error {
    let last = trace
        .last()
        .map(|r| format!("{r:?}"))
        .unwrap_or_else(|| "none".into());
    Error::Optimizer(format!(
        "stage {stage} step {step}: {err}; last record: {last}"
    ))
}

fn stage2<T: Scalar>(
    obj: &Objective<'_, T>,
    p: &Palette<T>,
    schedule: &StageSchedule,
) -> Result<(ErrorImage<T>, Vec<LossRecord>)> {
    let img = obj.img;
    let steps = schedule.stage2_steps;
    let temps = schedule.stage2_temperature.with_steps(steps);
    let t_sel = T::lit(temps.t_end);
    let mut e = ErrorImage::zeros(img.height(), img.width());
    let mut state = OptimizerState::new(img.data().len(), T::lit(schedule.stage2_lr))
        .with_bounds(-T::one(), T::one());
    let mut best = (f64::INFINITY, e.clone());
    let mut trace = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let terms = obj
            .value(&e, p, t_sel)
            .map_err(|err| diverged(2, k, err, &trace))?;
        let total = terms.total.to_f64_lossy();
        if total < best.0 {
            best = (total, e.clone());
        }
        let t_k = if k < steps { temps.at::<T>(k) } else { t_sel };
        trace.push(LossRecord::new(2, k, &terms, t_k.to_f64_lossy(), best.0));
        if k == steps {
            break;
        }
        let ev = obj
            .gradient(&e, p, t_k)
            .map_err(|err| diverged(2, k, err, &trace))?;
        adam_step(e.data_mut(), ev.grad_e.as_slice(), &mut state)
            .map_err(|err| diverged(2, k, err, &trace))?;
    }
    Ok((best.1, trace))
}

fn stage3<T: Scalar>(
    obj: &Objective<'_, T>,
    p0: &Palette<T>,
    e0: ErrorImage<T>,
    schedule: &StageSchedule,
) -> Result<(ErrorImage<T>, Palette<T>, Vec<LossRecord>)> {
    let steps = schedule.stage3_steps;
    let temps = schedule.stage3_temperature.with_steps(steps);
    let t_sel = T::lit(temps.t_end);
    let lr = T::lit(schedule.stage3_lr);
    let mut e = e0;
    let mut flat = p0.to_flat();
    let mut p = p0.clone();
    let mut state_e = OptimizerState::new(e.data().len(), lr).with_bounds(-T::one(), T::one());
    let mut state_p = OptimizerState::new(flat.len(), lr).with_bounds(T::zero(), T::one());
    let mut best = (f64::INFINITY, e.clone(), p.clone());
    let mut trace = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let terms = obj
            .value(&e, &p, t_sel)
            .map_err(|err| diverged(3, k, err, &trace))?;
        let total = terms.total.to_f64_lossy();
        if total < best.0 {
            best = (total, e.clone(), p.clone());
        }
        let t_k = if k < steps { temps.at::<T>(k) } else { t_sel };
        trace.push(LossRecord::new(3, k, &terms, t_k.to_f64_lossy(), best.0));
        if k == steps {
            break;
        }
        let ev = obj
            .gradient(&e, &p, t_k)
            .map_err(|err| diverged(3, k, err, &trace))?;
        adam_step(e.data_mut(), ev.grad_e.as_slice(), &mut state_e)
            .map_err(|err| diverged(3, k, err, &trace))?;
        adam_step(&mut flat, ev.grad_p.as_slice(), &mut state_p)
            .map_err(|err| diverged(3, k, err, &trace))?;
        p = Palette::from_flat_clamped(&flat)?;
    }
    Ok((best.1, best.2, trace))
}

/// Fits an error image for a fixed palette by Adam on [`super::dither_loss`],
/// starting from zero and annealing the softmax temperature. Returns the
/// iterate with the lowest loss at the final temperature (zero included).
pub fn optimize_dither<T: Scalar>(
    img: &FloatImage<T>,
    p: &Palette<T>,
    weights: &DitherLossWeights,
    schedule: &StageSchedule,
) -> Result<ErrorImage<T>> {
    Ok(optimize_dither_traced(img, p, weights, schedule)?.0)
}

/// [`optimize_dither`] with its loss trace (`stage2_steps + 1` records).
pub fn optimize_dither_traced<T: Scalar>(
    img: &FloatImage<T>,
    p: &Palette<T>,
    weights: &DitherLossWeights,
    schedule: &StageSchedule,
) -> Result<(ErrorImage<T>, Vec<LossRecord>)> {
    img.require_rgb("optimize_dither")?;
    weights.validate()?;
    schedule.validate()?;
    stage2(
        &Objective {
            img,
            weights: *weights,
            eta: DEFAULT_ETA,
            with_palette: false,
        },
        p,
        schedule,
    )
}

/// Palette extraction (median cut, then Lloyd), error-image optimization
/// with the palette fixed, then joint low-rate fine-tuning of palette and
/// error image. The output is the hard projection of `clamp(I + E′)`.
pub fn three_stage_encode<T: Scalar>(
    img: &FloatImage<T>,
    config: &EncodeConfig,
) -> Result<(IndexedImage<T>, EncodeReport)> {
    config.validate()?;
    img.require_rgb("three_stage_encode")?;
    let p0 = median_cut(img, config.np)?;
    let (p1, palette_trace) = lloyd_refine_traced(img, &p0, LLOYD_MAX_ITERS, T::zero())?;

    let mut obj = Objective {
        img,
        weights: config.weights,
        eta: config.eta,
        with_palette: false,
    };
    let (e1, trace2) = stage2(&obj, &p1, &config.schedule)?;
    obj.with_palette = true;
    let (e2, p2, trace3) = stage3(&obj, &p1, e1, &config.schedule)?;

    let out = apply_dither_indexed(img, &e2, &p2)?;
    let mut report = EncodeReport::measure(img, &out)?;
    report.palette_trace = palette_trace.iter().map(|v| v.to_f64_lossy()).collect();
    report.stage2 = trace2;
    report.stage3 = trace3;
    Ok((out, report))
}
