use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use giffel::{EncodeConfig, Pipeline};

use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "giffel",
    version,
    about = "Palette quantization, dithering and GIF encoding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode one PNG/PPM image as a GIF.
    Encode(EncodeArgs),
    /// Run every pipeline over a corpus directory and write a metrics report.
    Compare(CompareArgs),
    /// Print the banding scores of an image and optionally dump its edge map.
    Banding(BandingArgs),
    /// Run the embedded invariant suite.
    Selftest(SelftestArgs),
}

/// Encoder settings shared by `encode` and `compare`. Values given here
/// override the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with an encoder configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// classical | optimized
    #[arg(long)]
    pub pipeline: Option<Pipeline>,
    /// Loss weights λ,γ,δ,θ,β.
    #[arg(long, value_name = "L,G,D,T,B")]
    pub weights: Option<String>,
    /// Pyramid factor of the banding loss.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Optimizer steps of stages 2 and 3.
    #[arg(long, value_name = "S2,S3")]
    pub steps: Option<String>,
    /// Learning rates of stages 2 and 3.
    #[arg(long, value_name = "LR2,LR3")]
    pub lr: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Serpentine Floyd-Steinberg scan (default on).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub serpentine: Option<bool>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Palette size, 2..=256.
    #[arg(long)]
    pub np: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write the metrics report (with loss traces) as JSON.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Write the loss trace as JSON lines, one record per step.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub corpus: PathBuf,
    /// Palette sizes.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    pub np: Vec<usize>,
    /// Subset of median-cut,lloyd,classical,optimized-nobanding,optimized.
    #[arg(long, value_delimiter = ',')]
    pub pipelines: Option<Vec<String>>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output JSON report.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    /// Also write every encoded GIF into this directory.
    #[arg(long, value_name = "DIR")]
    pub gif_dir: Option<PathBuf>,
    /// Report wall_ms as 0 so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct BandingArgs {
    pub input: PathBuf,
    /// Write the edge map, normalized by its maximum, as a PPM.
    #[arg(long, value_name = "FILE")]
    pub heatmap: Option<PathBuf>,
    #[arg(long, default_value_t = giffel::banding::DEFAULT_ETA)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Seed of the gradient-check coordinate sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read golden files from this directory instead of the embedded copies.
    #[arg(long, value_name = "DIR")]
    pub golden_dir: Option<PathBuf>,
}

fn parse_list<const N: usize, T: std::str::FromStr>(flag: &str, s: &str) -> CliResult<[T; N]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(CliError::Usage(format!(
            "--{flag} expects {N} comma-separated values, got {s:?}"
        )));
    }
    let mut out = Vec::with_capacity(N);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| CliError::Usage(format!("--{flag}: cannot parse {p:?}")))?,
        );
    }
    out.try_into()
        .map_err(|_| CliError::Usage(format!("--{flag}: bad list")))
}

impl ConfigArgs {
    /// Defaults, then the JSON file, then flags.
    pub fn resolve(&self, np: Option<usize>) -> CliResult<EncodeConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => EncodeConfig::default(),
        };
        if let Some(np) = np {
            cfg.np = np;
        }
        if let Some(p) = self.pipeline {
            cfg.pipeline = p;
        }
        if let Some(w) = &self.weights {
            let [l, g, d, t, b] = parse_list::<5, f64>("weights", w)?;
            cfg.weights.lambda_fidelity = l;
            cfg.weights.gamma_error = g;
            cfg.weights.delta_banding = d;
            cfg.weights.theta_perceptual = t;
            cfg.weights.beta_palette = b;
        }
        if let Some(eta) = self.eta {
            cfg.eta = eta;
        }
        if let Some(s) = &self.steps {
            let [s2, s3] = parse_list::<2, usize>("steps", s)?;
            cfg.schedule.stage2_steps = s2;
            cfg.schedule.stage3_steps = s3;
        }
        if let Some(s) = &self.lr {
            let [a, b] = parse_list::<2, f64>("lr", s)?;
            cfg.schedule.stage2_lr = a;
            cfg.schedule.stage3_lr = b;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(s) = self.serpentine {
            cfg.fs_serpentine = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
