//! Corpus metrics report: rows, per-(np, pipeline) means and a text table.

use std::fmt::Write as _;

use serde::Serialize;

use giffel::EncodeConfig;

/// JSON schema the serialized report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

/// Lossless rows (infinite PSNR) enter corpus means at this value.
pub const PSNR_CAP_DB: f64 = 100.0;

pub fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.2}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub file: String,
    pub np: usize,
    pub pipeline: String,
    #[serde(serialize_with = "giffel::imagecore::serialize_psnr")]
    pub psnr_db: f64,
    pub ssim: f64,
    pub banding_score: f64,
    pub wall_ms: u64,
    /// Banding term of the dither loss at stage-2 entry and at the selected
    /// iterate; only for optimized runs with a banding weight.
    pub banding_term_entry: Option<f64>,
    pub banding_term_exit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanRow {
    pub np: usize,
    pub pipeline: String,
    pub images: usize,
    pub lossless: usize,
    /// Mean PSNR with lossless rows counted as [`PSNR_CAP_DB`].
    pub psnr_db: f64,
    pub ssim: f64,
    pub banding_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub version: u32,
    pub config: EncodeConfig,
    pub psnr_cap_db: f64,
    pub rows: Vec<Row>,
    pub means: Vec<MeanRow>,
}

impl MetricsReport {
    /// `rows` must already be ordered; means follow first appearance of each
    /// `(np, pipeline)` after sorting by np.
    pub fn new(config: EncodeConfig, rows: Vec<Row>) -> Self {
        let mut keys: Vec<(usize, usize, String)> = Vec::new();
        for r in &rows {
            if !keys
                .iter()
                .any(|(np, _, p)| *np == r.np && *p == r.pipeline)
            {
                let order = keys.iter().filter(|(np, _, _)| *np == r.np).count();
                keys.push((r.np, order, r.pipeline.clone()));
            }
        }
        keys.sort();
        let means = keys
            .into_iter()
            .map(|(np, _, pipeline)| {
                let sel: Vec<&Row> = rows
                    .iter()
                    .filter(|r| r.np == np && r.pipeline == pipeline)
                    .collect();
                let n = sel.len() as f64;
                let mean = |f: &dyn Fn(&Row) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
                MeanRow {
                    np,
                    images: sel.len(),
                    lossless: sel.iter().filter(|r| r.psnr_db.is_infinite()).count(),
                    psnr_db: mean(&|r| r.psnr_db.min(PSNR_CAP_DB)),
                    ssim: mean(&|r| r.ssim),
                    banding_score: mean(&|r| r.banding_score),
                    pipeline,
                }
            })
            .collect();
        Self {
            version: 1,
            config,
            psnr_cap_db: PSNR_CAP_DB,
            rows,
            means,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn mean(&self, np: usize, pipeline: &str) -> Option<&MeanRow> {
        self.means
            .iter()
            .find(|m| m.np == np && m.pipeline == pipeline)
    }

    /// Aligned text rendering of rows and means.
    pub fn table(&self) -> String {
        let mut cells = vec![[
            "file", "np", "pipeline", "psnr_db", "ssim", "banding", "wall_ms",
        ]
        .map(String::from)];
        for r in &self.rows {
            cells.push([
                r.file.clone(),
                r.np.to_string(),
                r.pipeline.clone(),
                fmt_psnr(r.psnr_db),
                format!("{:.4}", r.ssim),
                format!("{:.5}", r.banding_score),
                r.wall_ms.to_string(),
            ]);
        }
        let mut out = render(&cells, &[0, 2]);
        let mut means = vec![[
            "np", "pipeline", "images", "lossless", "psnr_db", "ssim", "banding",
        ]
        .map(String::from)];
        for m in &self.means {
            means.push([
                m.np.to_string(),
                m.pipeline.clone(),
                m.images.to_string(),
                m.lossless.to_string(),
                format!("{:.2}", m.psnr_db),
                format!("{:.4}", m.ssim),
                format!("{:.5}", m.banding_score),
            ]);
        }
        out.push('\n');
        out.push_str(&render(&means, &[1]));
        out
    }
}

/// Columns listed in `left` are left-aligned, the rest right-aligned.
fn render<const N: usize>(cells: &[[String; N]], left: &[usize]) -> String {
    let widths: Vec<usize> = (0..N)
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (v, w))| {
                if left.contains(&i) {
                    format!("{v:<w$}")
                } else {
                    format!("{v:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}
