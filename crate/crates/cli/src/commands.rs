//! Subcommand implementations.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use giffel::banding::{banding_inputs, multiscale_banding_value};
use giffel::config::classical_encode;
use giffel::dither::{three_stage_encode, EncodeReport, LLOYD_MAX_ITERS};
use giffel::gifio::write_gif;
use giffel::imagecore::io::{encode_ppm, read_image};
use giffel::palette::{hard_project, lloyd_refine, median_cut};
use giffel::{EncodeConfig, FloatImage, Image, Indexed};

use crate::args::{BandingArgs, Cli, Command, CompareArgs, EncodeArgs};
use crate::report::{fmt_psnr, MetricsReport, Row};
use crate::{selftest, CliError, CliResult};

/// Environment variable capping worker threads of `compare`.
pub const THREADS_ENV: &str = "GIFFEL_THREADS";

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Encode(a) => cmd_encode(&a),
        Command::Compare(a) => cmd_compare(&a).map(|_| ()),
        Command::Banding(a) => cmd_banding(&a).map(|_| ()),
        Command::Selftest(a) => selftest::cmd_selftest(&a),
    }
}

fn load(path: &Path) -> CliResult<Image> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("{}: no such file", path.display())));
    }
    read_image(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "n/a".into())
}

#[derive(Serialize)]
struct EncodeOutput<'a> {
    input: String,
    output: String,
    config: &'a EncodeConfig,
    wall_ms: u64,
    #[serde(flatten)]
    report: &'a EncodeReport,
}

pub fn cmd_encode(a: &EncodeArgs) -> CliResult<()> {
    let cfg = a.config.resolve(a.np)?;
    let img = load(&a.input)?;
    let start = Instant::now();
    let (out, report) = giffel::encode(&img, &cfg)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    write_file(&a.output, &write_gif(&out)?)?;
    println!(
        "{} -> {}: np={} pipeline={} colors={} psnr={} ssim={} banding={} ({} ms)",
        a.input.display(),
        a.output.display(),
        cfg.np,
        cfg.pipeline.name(),
        out.distinct_colors(),
        fmt_psnr(report.psnr_db),
        opt(report.ssim, 4),
        opt(report.banding_score, 5),
        wall_ms
    );
    if let Some(path) = &a.report {
        let doc = EncodeOutput {
            input: a.input.display().to_string(),
            output: a.output.display().to_string(),
            config: &cfg,
            wall_ms,
            report: &report,
        };
        let mut s =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::Failure(e.to_string()))?;
        s.push('\n');
        write_file(path, s.as_bytes())?;
    }
    if let Some(path) = &a.trace {
        let mut s = String::new();
        for r in report.records() {
            s.push_str(&serde_json::to_string(&r).map_err(|e| CliError::Failure(e.to_string()))?);
            s.push('\n');
        }
        write_file(path, s.as_bytes())?;
    }
    Ok(())
}

/// Pipelines run by `compare`, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ComparePipeline {
    /// Median cut, nearest-colour projection.
    MedianCut,
    /// Median cut refined by Lloyd, nearest-colour projection.
    Lloyd,
    /// Median cut and Floyd-Steinberg.
    Classical,
    /// Three-stage optimization without the banding term.
    OptimizedNoBanding,
    /// Three-stage optimization with the configured banding weight.
    Optimized,
}

impl ComparePipeline {
    pub const ALL: [ComparePipeline; 5] = [
        ComparePipeline::MedianCut,
        ComparePipeline::Lloyd,
        ComparePipeline::Classical,
        ComparePipeline::OptimizedNoBanding,
        ComparePipeline::Optimized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComparePipeline::MedianCut => "median-cut",
            ComparePipeline::Lloyd => "lloyd",
            ComparePipeline::Classical => "classical",
            ComparePipeline::OptimizedNoBanding => "optimized-nobanding",
            ComparePipeline::Optimized => "optimized",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown pipeline {s:?}")))
    }

    /// Encodes `img`; returns the output and its report.
    pub fn run(self, img: &Image, cfg: &EncodeConfig) -> giffel::Result<(Indexed, EncodeReport)> {
        let hard = |refine: bool| -> giffel::Result<(Indexed, EncodeReport)> {
            let mut p = median_cut(img, cfg.np)?;
            if refine {
                p = lloyd_refine(img, &p, LLOYD_MAX_ITERS, 0.0)?;
            }
            let out = hard_project(img, &p)?.1;
            let report = EncodeReport::measure(img, &out)?;
            Ok((out, report))
        };
        match self {
            ComparePipeline::MedianCut => hard(false),
            ComparePipeline::Lloyd => hard(true),
            ComparePipeline::Classical => classical_encode(img, cfg),
            ComparePipeline::OptimizedNoBanding => {
                let mut c = cfg.clone();
                c.weights.delta_banding = 0.0;
                three_stage_encode(img, &c)
            }
            ComparePipeline::Optimized => three_stage_encode(img, cfg),
        }
    }
}

/// Image files of a corpus directory (`.ppm`, `.png`), sorted by name.
pub fn corpus_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x.eq_ignore_ascii_case("ppm") || x.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no .ppm or .png images",
            dir.display()
        )));
    }
    Ok(files)
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|n| *n >= 1).ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Failure(e.to_string()))
}

struct Job<'a> {
    file: &'a str,
    img: &'a Image,
    np: usize,
    pipeline: ComparePipeline,
}

pub fn cmd_compare(a: &CompareArgs) -> CliResult<MetricsReport> {
    let cfg = a.config.resolve(None)?;
    let pipelines: Vec<ComparePipeline> = match &a.pipelines {
        Some(list) => {
            let mut v = list
                .iter()
                .map(|s| ComparePipeline::parse(s.trim()))
                .collect::<CliResult<Vec<_>>>()?;
            v.sort();
            v.dedup();
            v
        }
        None => ComparePipeline::ALL.to_vec(),
    };
    let mut nps = a.np.clone();
    nps.sort_unstable();
    nps.dedup();
    for &np in &nps {
        EncodeConfig { np, ..cfg.clone() }.validate()?;
    }
    let files = corpus_files(&a.corpus)?;
    let mut images = Vec::with_capacity(files.len());
    for f in &files {
        let img = load(f)?;
        if img.height() < giffel::banding::MIN_SIDE || img.width() < giffel::banding::MIN_SIDE {
            return Err(CliError::Usage(format!(
                "{}: compare needs images of at least 16x16",
                f.display()
            )));
        }
        let name = f
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        images.push((name, img));
    }
    if let Some(dir) = &a.gif_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Failure(format!("{}: {e}", dir.display())))?;
    }

    let mut jobs = Vec::new();
    for (name, img) in &images {
        for &np in &nps {
            for &pipeline in &pipelines {
                jobs.push(Job {
                    file: name,
                    img,
                    np,
                    pipeline,
                });
            }
        }
    }
    let pool = thread_pool()?;
    let results: Vec<CliResult<(Row, Vec<u8>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let cfg = EncodeConfig {
                    np: job.np,
                    ..cfg.clone()
                };
                let start = Instant::now();
                let (out, rep) = job.pipeline.run(job.img, &cfg).map_err(|e| {
                    CliError::Failure(format!(
                        "{} np={} {}: {e}",
                        job.file,
                        job.np,
                        job.pipeline.name()
                    ))
                })?;
                let wall_ms = if a.no_timing {
                    0
                } else {
                    start.elapsed().as_millis() as u64
                };
                let banding = match job.pipeline {
                    ComparePipeline::Optimized if cfg.weights.delta_banding > 0.0 => {
                        rep.stage2_banding()
                    }
                    _ => None,
                };
                let row = Row {
                    file: job.file.to_string(),
                    np: job.np,
                    pipeline: job.pipeline.name().to_string(),
                    psnr_db: rep.psnr_db,
                    ssim: rep.ssim.unwrap_or(f64::NAN),
                    banding_score: rep.banding_score.unwrap_or(f64::NAN),
                    wall_ms,
                    banding_term_entry: banding.map(|b| b.0),
                    banding_term_exit: banding.map(|b| b.1),
                };
                Ok((row, write_gif(&out)?))
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    for (job, res) in jobs.iter().zip(results) {
        let (row, gif) = res?;
        if let Some(dir) = &a.gif_dir {
            let stem = Path::new(job.file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            write_file(
                &dir.join(format!("{stem}_np{}_{}.gif", job.np, job.pipeline.name())),
                &gif,
            )?;
        }
        rows.push(row);
    }
    let report = MetricsReport::new(cfg, rows);
    write_file(&a.report, report.to_json().as_bytes())?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(report.table().as_bytes());
    Ok(report)
}

/// Scores printed by `banding`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandingScores {
    /// Mean of the edge map.
    pub z: f64,
    pub multiscale: f64,
}

pub fn cmd_banding(a: &BandingArgs) -> CliResult<BandingScores> {
    let img = load(&a.input)?;
    let img = if img.channels() == 1 {
        FloatImage::from_fn(img.height(), img.width(), 3, |r, c, _| img.get(r, c, 0))
    } else {
        img
    };
    let map = banding_inputs(&img)?;
    let z = map.e.mean();
    println!("Z {z}");
    if let Some(path) = &a.heatmap {
        let peak = map.e.max_abs();
        let norm = map.e.map(|v| if peak > 0.0 { v / peak } else { 0.0 });
        let heat = FloatImage::from_raster_clamped(norm);
        write_file(path, &encode_ppm(&heat))?;
    }
    let b: f64 = multiscale_banding_value(&img, a.eta)?.into_iter().sum();
    println!("B_{} {b}", a.eta);
    Ok(BandingScores { z, multiscale: b })
}
