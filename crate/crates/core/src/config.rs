//! Encoder configuration and the pipeline dispatcher.

use crate::dither::{
    floyd_steinberg, three_stage_encode, DitherLossWeights, EncodeReport, StageSchedule,
};
use crate::error::ensure;
use crate::gifio::IndexedImage;
use crate::imagecore::FloatImage;
use crate::palette::{median_cut, MAX_COLORS, MIN_COLORS};
use crate::{Result, Scalar};

#[derive(
    Clone,
    Copy,
    Debug,
    Default,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    serde::Serialize,
    serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Median cut and Floyd-Steinberg.
    Classical,
    /// Palette, error-image and joint optimization.
    #[default]
    Optimized,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Classical => "classical",
            Pipeline::Optimized => "optimized",
        }
    }
}

impl std::str::FromStr for Pipeline {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Pipeline::Classical),
            "optimized" => Ok(Pipeline::Optimized),
            _ => Err(crate::Error::InvalidArgument(format!(
                "unknown pipeline {s:?} (classical|optimized)"
            ))),
        }
    }
}

/// Everything an encode depends on. Deserializes from JSON with every field
/// optional.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    pub np: usize,
    pub pipeline: Pipeline,
    pub weights: DitherLossWeights,
    pub schedule: StageSchedule,
    pub eta: f64,
    /// Seeds coordinate sampling of the self-test gradient checks.
    pub seed: u64,
    pub fs_serpentine: bool,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            np: 16,
            pipeline: Pipeline::default(),
            weights: DitherLossWeights::default(),
            schedule: StageSchedule::default(),
            eta: crate::banding::DEFAULT_ETA,
            seed: 0,
            fs_serpentine: true,
        }
    }
}

impl EncodeConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            (MIN_COLORS..=MAX_COLORS).contains(&self.np),
            InvalidArgument,
            "np must be in {}..={}, got {}",
            MIN_COLORS,
            MAX_COLORS,
            self.np
        );
        ensure!(
            self.eta > 1.0 && self.eta.is_finite(),
            InvalidArgument,
            "eta must exceed 1, got {}",
            self.eta
        );
        self.weights.validate()?;
        self.schedule.validate()
    }
}

/// Median cut followed by error diffusion.
pub fn classical_encode<T: Scalar>(
    img: &FloatImage<T>,
    config: &EncodeConfig,
) -> Result<(IndexedImage<T>, EncodeReport)> {
    config.validate()?;
    let p = median_cut(img, config.np)?;
    let out = floyd_steinberg(img, &p, config.fs_serpentine)?;
    let report = EncodeReport::measure(img, &out)?;
    Ok((out, report))
}

/// Runs the configured pipeline.
pub fn encode<T: Scalar>(
    img: &FloatImage<T>,
    config: &EncodeConfig,
) -> Result<(IndexedImage<T>, EncodeReport)> {
    match config.pipeline {
        Pipeline::Classical => classical_encode(img, config),
        Pipeline::Optimized => three_stage_encode(img, config),
    }
}
