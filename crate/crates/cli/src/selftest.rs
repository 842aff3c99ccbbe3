//! Embedded invariant suite: codec round trips, frozen oracle values,
//! gradient checks and descent checks. Also hosts the gradient-check and
//! codec fixtures reused by the acceptance tests.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use giffel::banding::{
    banding_inputs, banding_score, multiscale_banding, multiscale_banding_value,
};
use giffel::diffquant::{
    soft_project, soft_project_backward, FdCheck, FdReport, GradBuffer, MIN_COORDS,
};
use giffel::dither::{
    dither_loss, dither_loss_terms, floyd_steinberg, floyd_steinberg_traced,
    optimize_dither_traced, perceptual_proxy, ErrorImage,
};
use giffel::gifio::{lzw_decode, lzw_encode, read_gif, write_gif};
use giffel::imagecore::{luma, sobel_gradients, ssim, Raster};
use giffel::palette::{
    assignment_margins, hard_project, lloyd_refine_traced, median_cut, palette_loss,
    palette_loss_grad,
};
use giffel::{DitherLossWeights, FloatImage, Image, Indexed, Pal, Palette, StageSchedule};

use crate::args::SelftestArgs;
use crate::{CliError, CliResult};

const EMBEDDED_ORACLES: &str = include_str!("../../../fixtures/golden/oracles.json");
const EMBEDDED_PILLOW_GIF: &[u8] = include_bytes!("../../../fixtures/golden/pillow_4x4.gif");

/// Frozen reference values computed by an independent implementation.
#[derive(Clone, Debug, Deserialize)]
pub struct Oracles {
    pub step16_height: f64,
    pub step16_edge_map: Vec<Vec<f64>>,
    pub ramp8_z: f64,
    pub ramp8_levels_eta1_5: Vec<f64>,
    pub ramp8_b1_5: f64,
    pub ssim_checker16_inverse: f64,
    pub adam_bowl_x200: f64,
    pub adam_bowl_x200_clamped01: f64,
    pub fs_row_gray: f64,
    pub fs_row_working: Vec<f64>,
    pub fs_row_indices: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct Goldens {
    pub oracles: Oracles,
    pub pillow_gif: Vec<u8>,
}

impl Goldens {
    pub fn embedded() -> Self {
        Self {
            oracles: serde_json::from_str(EMBEDDED_ORACLES).expect("embedded oracles parse"),
            pillow_gif: EMBEDDED_PILLOW_GIF.to_vec(),
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self, String> {
        let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"));
        let oracles = serde_json::from_slice(&read("oracles.json")?)
            .map_err(|e| format!("oracles.json: {e}"))?;
        Ok(Self {
            oracles,
            pillow_gif: read("pillow_4x4.gif")?,
        })
    }
}

/// Expected decode of the external-encoder fixture: indices `(r + c) % 4`,
/// palette black, red, green, blue.
pub fn pillow_expected() -> (Vec<u8>, Vec<[u8; 3]>) {
    let idx = (0..16).map(|i| ((i / 4 + i % 4) % 4) as u8).collect();
    (idx, vec![[0, 0, 0], [255, 0, 0], [0, 255, 0], [0, 0, 255]])
}

/// The 8-level staircase ramp, 64 × 256.
pub fn ramp8() -> Image {
    Image::from_fn(64, 256, 3, |_, c, _| (c * 8 / 256) as f64 / 7.0)
}

/// Random indexed image: sides in 1..=64, palette size drawn from {2, 4, 16, 256}.
pub fn random_indexed(rng: &mut impl Rng) -> Indexed {
    let np = [2usize, 4, 16, 256][rng.gen_range(0..4)];
    let h = rng.gen_range(1..=64);
    let w = rng.gen_range(1..=64);
    let colors: Vec<[u8; 3]> = (0..np).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let indices = (0..h * w).map(|_| rng.gen_range(0..np) as u8).collect();
    Indexed::new(
        h,
        w,
        indices,
        Pal::from_rgb8(&colors).expect("valid palette"),
    )
    .expect("valid image")
}

/// Exact GIF round trip (indices and the leading `np` palette entries).
pub fn gif_roundtrip(img: &Indexed) -> Result<(), String> {
    let bytes = write_gif(img).map_err(|e| e.to_string())?;
    let back: Indexed = read_gif(&bytes).map_err(|e| e.to_string())?;
    if back.indices() != img.indices()
        || (back.height(), back.width()) != (img.height(), img.width())
    {
        return Err(format!(
            "indices differ for {}x{}",
            img.height(),
            img.width()
        ));
    }
    let got = back.palette().to_rgb8();
    if got[..img.palette().len()] != img.palette().to_rgb8()[..] {
        return Err("palette differs".into());
    }
    Ok(())
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn rand_image(r: &mut ChaCha8Rng, h: usize, w: usize, lo: f64, hi: f64) -> Image {
    FloatImage::from_fn(h, w, 3, |_, _, _| r.gen_range(lo..hi))
}

fn rand_palette(r: &mut ChaCha8Rng, np: usize) -> Pal {
    Palette::new((0..np).map(|_| [r.gen(), r.gen(), r.gen()]).collect()).expect("valid palette")
}

fn bound_distance(x: &[f64]) -> impl Fn(usize) -> f64 + '_ {
    move |i| x[i].min(1.0 - x[i])
}

/// Distance of every RGB coordinate to the `G = 0` and `min(G, 1)` kinks of
/// the edge map, over the 3×3 Sobel footprint.
fn edge_kinks(img: &Image) -> Vec<f64> {
    let (gx, gy) = sobel_gradients(&luma(img)).expect("gray");
    let (h, w) = (img.height(), img.width());
    let g: Vec<f64> = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();
    let mut out = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            let mut d = f64::INFINITY;
            for rr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    let v = g[rr * w + cc];
                    d = d.min(v).min((v - 1.0).abs());
                }
            }
            let b = img.data()[(r * w + c) * 3..(r * w + c) * 3 + 3]
                .iter()
                .fold(f64::INFINITY, |m, v| m.min(*v).min(1.0 - v));
            out.extend([d.min(b); 3]);
        }
    }
    out
}

/// One gradient check: name, pass threshold and its report.
pub struct GradCheck {
    pub name: &'static str,
    pub threshold: f64,
    pub report: giffel::Result<FdReport>,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        matches!(&self.report, Ok(r) if r.max_rel_error < self.threshold && r.checked >= MIN_COORDS)
    }

    pub fn describe(&self) -> String {
        match &self.report {
            Ok(r) => format!(
                "max rel err {:.2e} (< {:.0e}) over {} coords, {} kink-skipped",
                r.max_rel_error, self.threshold, r.checked, r.skipped
            ),
            Err(e) => format!("error: {e}"),
        }
    }
}

const FD_H: f64 = 1e-6;
const FD_GUARD: f64 = 1e-4;

pub fn check_soft_project(seed: u64) -> GradCheck {
    let mut r = rng(seed, 1);
    let img = rand_image(&mut r, 6, 6, 0.0, 1.0);
    let pal = rand_palette(&mut r, 8);
    let up: Vec<f64> = (0..img.data().len())
        .map(|_| r.gen_range(-0.5..0.5))
        .collect();
    let t = 0.1;
    let np = pal.len() * 3;
    let mut params = pal.to_flat();
    params.extend_from_slice(img.data());
    let f = |x: &[f64]| {
        let p = Palette::from_flat_clamped(&x[..np]).expect("palette");
        let i = FloatImage::new(6, 6, 3, x[np..].to_vec()).expect("image");
        let out = soft_project(&i, &p, t).expect("forward");
        let v: f64 = out.data().iter().zip(&up).map(|(a, b)| a * b).sum();
        let mut gp = GradBuffer::zeros(np);
        let mut gi = GradBuffer::zeros(up.len());
        soft_project_backward(
            &i,
            &p,
            t,
            &GradBuffer::from_vec(up.clone()),
            &mut gp,
            &mut gi,
        )
        .expect("backward");
        let mut g = gp.into_vec();
        g.extend(gi.into_vec());
        (v, g)
    };
    let report =
        FdCheck::new(FD_H, FD_GUARD)
            .sample(64, seed)
            .run(f, &params, bound_distance(&params));
    GradCheck {
        name: "soft_project",
        threshold: 1e-4,
        report,
    }
}

pub fn check_palette_loss(seed: u64) -> GradCheck {
    let mut r = rng(seed, 2);
    let img = rand_image(&mut r, 16, 16, 0.0, 1.0);
    let pal = rand_palette(&mut r, 16);
    let flat = pal.to_flat();
    let report = assignment_margins(&img, &pal).and_then(|margins| {
        let f = |x: &[f64]| {
            let q = Palette::from_flat_clamped(x).expect("palette");
            (
                palette_loss(&img, &q).expect("loss"),
                palette_loss_grad(&img, &q).expect("grad"),
            )
        };
        let kink = |i: usize| margins[i].min(flat[i]).min(1.0 - flat[i]);
        FdCheck::new(FD_H, FD_GUARD)
            .all_coords()
            .run(f, &flat, kink)
    });
    GradCheck {
        name: "palette_loss",
        threshold: 1e-4,
        report,
    }
}

pub fn check_banding_score(seed: u64) -> GradCheck {
    let mut r = rng(seed, 3);
    let img = rand_image(&mut r, 16, 16, 0.0, 1.0);
    let kinks = edge_kinks(&img);
    let f = |x: &[f64]| {
        let i = FloatImage::new(16, 16, 3, x.to_vec()).expect("image");
        let (v, g) = banding_score(&i).expect("score");
        (v, g.into_vec())
    };
    let report = FdCheck::new(FD_H, FD_GUARD)
        .sample(64, seed)
        .run(f, img.data(), |i| kinks[i]);
    GradCheck {
        name: "banding_score",
        threshold: 1e-3,
        report,
    }
}

pub fn check_multiscale_banding(seed: u64) -> GradCheck {
    let mut r = rng(seed, 4);
    let img = rand_image(&mut r, 48, 48, 0.0, 1.0);
    let f = |x: &[f64]| {
        let i = FloatImage::new(48, 48, 3, x.to_vec()).expect("image");
        let (v, g) = multiscale_banding(&i, 1.5).expect("score");
        (v, g.into_vec())
    };
    let report = FdCheck::new(FD_H, FD_GUARD).sample(40, seed).run(
        f,
        img.data(),
        bound_distance(img.data()),
    );
    GradCheck {
        name: "multiscale_banding",
        threshold: 1e-3,
        report,
    }
}

pub fn check_dither_loss(seed: u64) -> GradCheck {
    let mut r = rng(seed, 5);
    let img = rand_image(&mut r, 48, 48, 0.1, 0.9);
    let pal = rand_palette(&mut r, 6);
    let e0: Vec<f64> = (0..img.data().len())
        .map(|_| r.gen_range(-0.05..0.05))
        .collect();
    let w = DitherLossWeights {
        theta_perceptual: 0.5,
        ..Default::default()
    };
    let t = 0.05;
    let report = hard_project(&img, &pal).and_then(|(q, _)| {
        let target: Vec<f64> = img
            .data()
            .iter()
            .zip(q.data())
            .map(|(a, b)| a - b)
            .collect();
        let e_img = ErrorImage::from_raster_clamped(Raster::new(48, 48, 3, e0.clone())?)?;
        let hat =
            giffel::dither::apply_dither(&img, &e_img, &pal, giffel::dither::Projection::Soft(t))?;
        let f = |x: &[f64]| {
            let e =
                ErrorImage::from_raster_clamped(Raster::new(48, 48, 3, x.to_vec()).expect("shape"))
                    .expect("3ch");
            let (v, g) = dither_loss(&img, &e, &pal, &w, t).expect("loss");
            (v, g.into_vec())
        };
        // L1 kinks: E′ = I − I′ for the error term, Î = I for fidelity.
        let kink = |i: usize| {
            (e0[i] - target[i])
                .abs()
                .min((hat.data()[i] - img.data()[i]).abs() * 10.0)
        };
        FdCheck::new(1e-7, FD_GUARD)
            .sample(48, seed)
            .run(f, &e0, kink)
    });
    GradCheck {
        name: "dither_loss",
        threshold: 1e-3,
        report,
    }
}

pub fn check_perceptual(seed: u64) -> GradCheck {
    let mut r = rng(seed, 6);
    let a = rand_image(&mut r, 20, 20, 0.0, 1.0);
    let b = rand_image(&mut r, 20, 20, 0.05, 0.95);
    let kinks = edge_kinks(&b);
    let f = |x: &[f64]| {
        let hat = FloatImage::new(20, 20, 3, x.to_vec()).expect("image");
        let (v, g) = perceptual_proxy(&a, &hat).expect("proxy");
        (v, g.into_vec())
    };
    let report = FdCheck::new(1e-7, 1e-5)
        .sample(64, seed)
        .run(f, b.data(), |i| kinks[i]);
    GradCheck {
        name: "perceptual_proxy",
        threshold: 1e-3,
        report,
    }
}

/// All gradient checks, each taking the seed.
pub const GRADIENT_CHECKS: &[fn(u64) -> GradCheck] = &[
    check_soft_project,
    check_palette_loss,
    check_banding_score,
    check_multiscale_banding,
    check_dither_loss,
    check_perceptual,
];

type CheckFn = fn(&Goldens, u64) -> Result<String, String>;

fn close(name: &str, got: f64, want: f64, rel: f64) -> Result<(), String> {
    if (got - want).abs() <= rel * want.abs().max(1e-300) {
        Ok(())
    } else {
        Err(format!("{name}: got {got:e}, golden {want:e}"))
    }
}

fn c_gif_roundtrip(_: &Goldens, seed: u64) -> Result<String, String> {
    let mut r = rng(seed, 10);
    for _ in 0..100 {
        gif_roundtrip(&random_indexed(&mut r))?;
    }
    Ok("100 random images".into())
}

fn c_lzw_large(_: &Goldens, seed: u64) -> Result<String, String> {
    let mut r = rng(seed, 11);
    let data: Vec<u8> = (0..100_000).map(|_| r.gen()).collect();
    let back = lzw_decode(&lzw_encode(&data, 8).map_err(|e| e.to_string())?, 8)
        .map_err(|e| e.to_string())?;
    if back != data {
        return Err("decoded stream differs".into());
    }
    Ok("100000 bytes".into())
}

fn c_pillow(g: &Goldens, _: u64) -> Result<String, String> {
    let img: Indexed = read_gif(&g.pillow_gif).map_err(|e| e.to_string())?;
    let (idx, pal) = pillow_expected();
    if img.indices() != idx.as_slice() {
        return Err(format!("indices {:?}", img.indices()));
    }
    if img.palette().to_rgb8()[..4] != pal[..] {
        return Err("palette differs".into());
    }
    Ok("4x4 external-encoder GIF".into())
}

fn c_fs_row(g: &Goldens, _: u64) -> Result<String, String> {
    let o = &g.oracles;
    let n = o.fs_row_working.len();
    let img = Image::filled(1, n, 3, o.fs_row_gray);
    let pal = Pal::new(vec![[0.0; 3], [1.0; 3]]).map_err(|e| e.to_string())?;
    let (out, seen) = floyd_steinberg_traced(&img, &pal, false).map_err(|e| e.to_string())?;
    if out.indices() != o.fs_row_indices.as_slice() {
        return Err(format!(
            "indices {:?}, golden {:?}",
            out.indices(),
            o.fs_row_indices
        ));
    }
    for (i, (s, w)) in seen.iter().zip(&o.fs_row_working).enumerate() {
        if s[0] != *w {
            return Err(format!("working value {i}: {} vs golden {w}", s[0]));
        }
    }
    Ok(format!("{n} pixels bit-exact"))
}

fn c_fs_gray(_: &Goldens, _: u64) -> Result<String, String> {
    let pal = Pal::new(vec![[0.0; 3], [1.0; 3]]).map_err(|e| e.to_string())?;
    let out =
        floyd_steinberg(&Image::filled(64, 64, 3, 0.5), &pal, true).map_err(|e| e.to_string())?;
    let white = out.indices().iter().filter(|&&i| i == 1).count() as f64 / 4096.0;
    if !(0.45..=0.55).contains(&white) {
        return Err(format!("white fraction {white}"));
    }
    Ok(format!("white fraction {white:.4}"))
}

fn c_banding_goldens(g: &Goldens, _: u64) -> Result<String, String> {
    let o = &g.oracles;
    let step = Image::from_fn(
        16,
        16,
        3,
        |_, c, _| if c < 8 { 0.0 } else { o.step16_height },
    );
    let e = banding_inputs(&step).map_err(|e| e.to_string())?.e;
    for (r, row) in o.step16_edge_map.iter().enumerate() {
        for (c, want) in row.iter().enumerate() {
            let got = e.get(r, c, 0);
            if (got - want).abs() > 1e-9 * want.abs().max(1e-3) {
                return Err(format!("step edge map ({r},{c}): {got} vs golden {want}"));
            }
        }
    }
    let ramp = ramp8();
    let z = banding_inputs(&ramp).map_err(|e| e.to_string())?.e.mean();
    close("ramp Z", z, o.ramp8_z, 1e-9)?;
    let levels = multiscale_banding_value(&ramp, 1.5).map_err(|e| e.to_string())?;
    for (k, (a, b)) in levels.iter().zip(&o.ramp8_levels_eta1_5).enumerate() {
        close(&format!("ramp level {}", k + 1), *a, *b, 1e-9)?;
    }
    close("ramp B_1.5", levels.iter().sum(), o.ramp8_b1_5, 1e-9)?;
    Ok("step map, ramp Z, four levels, B_1.5".into())
}

fn c_banding_null(_: &Goldens, _: u64) -> Result<String, String> {
    for v in [0.0, 0.3, 1.0 / 3.0, 1.0] {
        let img = Image::filled(48, 48, 3, v);
        let (z, gz) = banding_score(&img).map_err(|e| e.to_string())?;
        let (b, gb) = multiscale_banding(&img, 1.5).map_err(|e| e.to_string())?;
        if z != 0.0 || b != 0.0 || gz.max_abs() != 0.0 || gb.max_abs() != 0.0 {
            return Err(format!("constant {v}: Z={z:e} B={b:e}"));
        }
    }
    Ok("Z and B_1.5 exactly 0 on constants".into())
}

fn c_ssim_golden(g: &Goldens, _: u64) -> Result<String, String> {
    let a = Image::from_fn(16, 16, 1, |r, c, _| ((r + c) % 2) as f64);
    let b = Image::from_fn(16, 16, 1, |r, c, _| ((r + c + 1) % 2) as f64);
    close(
        "checker SSIM",
        ssim(&a, &b).map_err(|e| e.to_string())?,
        g.oracles.ssim_checker16_inverse,
        1e-9,
    )?;
    Ok("checkerboard vs inverse".into())
}

fn c_adam_golden(g: &Goldens, _: u64) -> Result<String, String> {
    use giffel::diffquant::{adam_step, OptimizerState};
    let bowl = |bounds: Option<(f64, f64)>| -> Result<f64, String> {
        let mut x = [0.5f64];
        let mut st = OptimizerState::new(1, 0.05);
        if let Some((lo, hi)) = bounds {
            st = st.with_bounds(lo, hi);
        }
        for _ in 0..200 {
            let grad = [2.0 * x[0]];
            adam_step(&mut x, &grad, &mut st).map_err(|e| e.to_string())?;
        }
        Ok(x[0])
    };
    let free = bowl(None)?;
    if (free - g.oracles.adam_bowl_x200).abs() > 1e-12 {
        return Err(format!(
            "free bowl {free:e} vs golden {:e}",
            g.oracles.adam_bowl_x200
        ));
    }
    let clamped = bowl(Some((0.0, 1.0)))?;
    if clamped != g.oracles.adam_bowl_x200_clamped01 {
        return Err(format!("clamped bowl {clamped:e}"));
    }
    Ok("200 steps on x²".into())
}

fn c_hard_soft(_: &Goldens, seed: u64) -> Result<String, String> {
    let mut r = rng(seed, 12);
    let img = rand_image(&mut r, 8, 8, 0.0, 1.0);
    let pal = rand_palette(&mut r, 8);
    let hard = hard_project(&img, &pal).map_err(|e| e.to_string())?.0;
    let soft = soft_project(&img, &pal, 1e-4).map_err(|e| e.to_string())?;
    let dev = hard
        .data()
        .iter()
        .zip(soft.data())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let margin = assignment_margins(&img, &pal)
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if margin > 1e-2 && dev >= 1e-3 {
        return Err(format!("max deviation {dev:e}"));
    }
    Ok(format!("max deviation {dev:.1e}"))
}

fn c_lloyd(_: &Goldens, seed: u64) -> Result<String, String> {
    let mut r = rng(seed, 13);
    let img = rand_image(&mut r, 32, 32, 0.0, 1.0);
    let p0 = median_cut(&img, 16).map_err(|e| e.to_string())?;
    let (_, trace) = lloyd_refine_traced(&img, &p0, 30, 0.0).map_err(|e| e.to_string())?;
    if trace.windows(2).any(|w| w[1] > w[0]) {
        return Err("palette loss increased".into());
    }
    Ok(format!("{} iterations", trace.len() - 1))
}

fn c_dither_descent(_: &Goldens, _: u64) -> Result<String, String> {
    let img = Image::from_fn(48, 48, 3, |r, c, k| {
        0.1 + 0.8 * (c as f64 + 0.3 * r as f64 * k as f64) / 62.0
    });
    let pal = median_cut(&img, 4).map_err(|e| e.to_string())?;
    let w = DitherLossWeights::default();
    let sched = StageSchedule {
        stage2_steps: 20,
        ..Default::default()
    };
    let (e, _) = optimize_dither_traced(&img, &pal, &w, &sched).map_err(|e| e.to_string())?;
    let t = sched.stage2_temperature.t_end;
    let end = dither_loss_terms(&img, &e, &pal, &w, t)
        .map_err(|e| e.to_string())?
        .total;
    let start = dither_loss_terms(&img, &ErrorImage::zeros(48, 48), &pal, &w, t)
        .map_err(|e| e.to_string())?
        .total;
    if end > start {
        return Err(format!("loss rose {start} -> {end}"));
    }
    Ok(format!("{start:.4} -> {end:.4}"))
}

const CHECKS: &[(&str, CheckFn)] = &[
    ("gif-roundtrip", c_gif_roundtrip),
    ("lzw-large-stream", c_lzw_large),
    ("gif-external-fixture", c_pillow),
    ("fs-row-golden", c_fs_row),
    ("fs-uniform-gray", c_fs_gray),
    ("banding-goldens", c_banding_goldens),
    ("banding-constant-null", c_banding_null),
    ("ssim-golden", c_ssim_golden),
    ("adam-golden", c_adam_golden),
    ("hard-soft-consistency", c_hard_soft),
    ("lloyd-descent", c_lloyd),
    ("dither-descent", c_dither_descent),
];

/// Outcome of one self-test check.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub ms: u128,
}

/// Runs every check with the given goldens; never panics on a failed check.
pub fn run_checks(goldens: &Goldens, seed: u64) -> Vec<Outcome> {
    let mut out = Vec::new();
    for (name, f) in CHECKS {
        let start = Instant::now();
        let res = std::panic::catch_unwind(|| f(goldens, seed))
            .unwrap_or_else(|_| Err("panicked".into()));
        out.push(Outcome {
            name: (*name).to_string(),
            passed: res.is_ok(),
            detail: res.unwrap_or_else(|e| e),
            ms: start.elapsed().as_millis(),
        });
    }
    for check in GRADIENT_CHECKS {
        let start = Instant::now();
        let g = check(seed);
        out.push(Outcome {
            name: format!("grad-{}", g.name.replace('_', "-")),
            passed: g.passed(),
            detail: g.describe(),
            ms: start.elapsed().as_millis(),
        });
    }
    out
}

pub fn cmd_selftest(a: &SelftestArgs) -> CliResult<()> {
    let goldens = match &a.golden_dir {
        Some(dir) => Goldens::from_dir(dir).map_err(CliError::Usage)?,
        None => Goldens::embedded(),
    };
    let outcomes = run_checks(&goldens, a.seed);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        let tag = if o.passed { "ok  " } else { "FAIL" };
        println!("[{tag}] {:<width$}  {} ({} ms)", o.name, o.detail, o.ms);
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name.as_str())
        .collect();
    println!(
        "{} passed, {} failed",
        outcomes.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "self-test failed: {}",
            failed.join(", ")
        )))
    }
}
