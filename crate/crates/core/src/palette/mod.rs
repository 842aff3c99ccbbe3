//! Palettes, nearest-colour projection and palette extraction.

mod lloyd;
mod median_cut;

use std::fmt::Write as _;

use crate::error::ensure;
use crate::gifio::IndexedImage;
use crate::imagecore::io::{from_byte, to_byte};
use crate::imagecore::{FloatImage, Raster};
use crate::{Error, Result, Scalar};

pub use lloyd::{lloyd_refine, lloyd_refine_traced};
pub use median_cut::median_cut;

pub const MIN_COLORS: usize = 2;
pub const MAX_COLORS: usize = 256;

/// Ordered list of 2..=256 RGB colours with components in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Palette<T = f64> {
    colors: Vec<[T; 3]>,
}

impl<T: Scalar> Palette<T> {
    pub fn new(colors: Vec<[T; 3]>) -> Result<Self> {
        ensure!(
            (MIN_COLORS..=MAX_COLORS).contains(&colors.len()),
            InvalidArgument,
            "palette needs {}..={} colours, got {}",
            MIN_COLORS,
            MAX_COLORS,
            colors.len()
        );
        ensure!(
            colors
                .iter()
                .flatten()
                .all(|v| *v >= T::zero() && *v <= T::one()),
            OutOfRange,
            "palette components must lie in [0,1]"
        );
        Ok(Self { colors })
    }

    /// Rebuilds from a flat `[r0, g0, b0, r1, ...]` slice, clamping into range.
    pub fn from_flat_clamped(flat: &[T]) -> Result<Self> {
        ensure!(
            flat.len().is_multiple_of(3),
            Shape,
            "flat palette length {} not a multiple of 3",
            flat.len()
        );
        Self::new(
            flat.chunks_exact(3)
                .map(|c| [c[0].clamp01(), c[1].clamp01(), c[2].clamp01()])
                .collect(),
        )
    }

    pub fn from_rgb8(colors: &[[u8; 3]]) -> Result<Self> {
        Self::new(
            colors
                .iter()
                .map(|c| [from_byte(c[0]), from_byte(c[1]), from_byte(c[2])])
                .collect(),
        )
    }

    pub fn to_rgb8(&self) -> Vec<[u8; 3]> {
        self.colors
            .iter()
            .map(|c| [to_byte(c[0]), to_byte(c[1]), to_byte(c[2])])
            .collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    #[inline]
    pub fn colors(&self) -> &[[T; 3]] {
        &self.colors
    }

    #[inline]
    pub fn color(&self, j: usize) -> [T; 3] {
        self.colors[j]
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.colors.iter().flatten().copied().collect()
    }

    /// Index of the nearest colour in squared RGB distance; ties go to the
    /// smallest index.
    #[inline]
    pub fn nearest(&self, px: &[T]) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (j, c) in self.colors.iter().enumerate() {
            let d = sq_dist(c, px);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }

    pub fn cast<U: Scalar>(&self) -> Palette<U> {
        Palette {
            colors: self
                .colors
                .iter()
                .map(|c| c.map(|v| U::lit(v.to_f64_lossy())))
                .collect(),
        }
    }

    /// Text form: one `R G B` byte triple per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for [r, g, b] in self.to_rgb8() {
            let _ = writeln!(s, "{r} {g} {b}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut colors = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<u8> = line
                .split_whitespace()
                .map(|t| t.parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("palette line {}: {}", n + 1, e)))?;
            ensure!(
                parts.len() == 3,
                Parse,
                "palette line {} needs 3 values",
                n + 1
            );
            colors.push([parts[0], parts[1], parts[2]]);
        }
        Self::from_rgb8(&colors)
    }
}

#[inline]
pub(crate) fn sq_dist<T: Scalar>(c: &[T; 3], px: &[T]) -> T {
    let dr = c[0] - px[0];
    let dg = c[1] - px[1];
    let db = c[2] - px[2];
    dr * dr + dg * dg + db * db
}

/// Mean colour, accumulated as offsets from the first pixel so a set of
/// identical colours averages to exactly that colour.
pub(crate) fn centroid<'a, T: Scalar>(pixels: impl Iterator<Item = &'a [T]>) -> [T; 3] {
    let mut pixels = pixels.peekable();
    let Some(first) = pixels.peek().map(|p| [p[0], p[1], p[2]]) else {
        return [T::zero(); 3];
    };
    let mut acc = [T::zero(); 3];
    let mut n = 0usize;
    for p in pixels {
        for c in 0..3 {
            acc[c] += p[c] - first[c];
        }
        n += 1;
    }
    let n = T::from_usize_lossy(n);
    [0, 1, 2].map(|c| (first[c] + acc[c] / n).clamp01())
}

/// Nearest-colour index per pixel.
pub fn assign<T: Scalar>(img: &FloatImage<T>, p: &Palette<T>) -> Result<Vec<usize>> {
    img.require_rgb("palette assignment")?;
    Ok(img.data().chunks_exact(3).map(|px| p.nearest(px)).collect())
}

/// Replaces every pixel with its nearest palette colour.
pub fn hard_project<T: Scalar>(
    img: &FloatImage<T>,
    p: &Palette<T>,
) -> Result<(FloatImage<T>, IndexedImage<T>)> {
    let idx = assign(img, p)?;
    let data = idx.iter().flat_map(|&k| p.color(k)).collect();
    let quantized =
        FloatImage::from_raster_clamped(Raster::new(img.height(), img.width(), 3, data)?);
    let indices = idx.iter().map(|&k| k as u8).collect();
    let indexed = IndexedImage::new(img.height(), img.width(), indices, p.clone())?;
    Ok((quantized, indexed))
}

/// Mean over pixels of the squared RGB distance to the nearest palette colour.
pub fn palette_loss<T: Scalar>(img: &FloatImage<T>, p: &Palette<T>) -> Result<T> {
    img.require_rgb("palette_loss")?;
    let total: T = img
        .data()
        .chunks_exact(3)
        .map(|px| {
            let k = p.nearest(px);
            sq_dist(&p.colors[k], px)
        })
        .sum();
    Ok(total / T::from_usize_lossy(img.pixel_count().max(1)))
}

/// Gradient of [`palette_loss`] with respect to the flat palette, holding the
/// nearest-colour assignment fixed (exact away from assignment boundaries).
pub fn palette_loss_grad<T: Scalar>(img: &FloatImage<T>, p: &Palette<T>) -> Result<Vec<T>> {
    let idx = assign(img, p)?;
    let mut grad = vec![T::zero(); p.len() * 3];
    let scale = T::lit(2.0) / T::from_usize_lossy(img.pixel_count().max(1));
    for (px, &k) in img.data().chunks_exact(3).zip(&idx) {
        for c in 0..3 {
            grad[k * 3 + c] += scale * (p.colors[k][c] - px[c]);
        }
    }
    Ok(grad)
}

/// Distance of every flat palette coordinate to an assignment change: for
/// colour `j`, the smallest gap between nearest and second-nearest squared
/// distance over pixels where `j` is one of the two. Coordinates of colours
/// that are never among the two nearest get `+inf`.
pub fn assignment_margins<T: Scalar>(img: &FloatImage<T>, p: &Palette<T>) -> Result<Vec<T>> {
    img.require_rgb("assignment_margins")?;
    let mut margin = vec![T::infinity(); p.len()];
    for px in img.data().chunks_exact(3) {
        let (mut b1, mut b2) = ((T::infinity(), 0), (T::infinity(), 0));
        for (j, c) in p.colors.iter().enumerate() {
            let d = sq_dist(c, px);
            if d < b1.0 {
                b2 = b1;
                b1 = (d, j);
            } else if d < b2.0 {
                b2 = (d, j);
            }
        }
        let gap = b2.0 - b1.0;
        for j in [b1.1, b2.1] {
            margin[j] = margin[j].min(gap);
        }
    }
    Ok(margin.iter().flat_map(|&m| [m; 3]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gray_palette(levels: &[f64]) -> Palette<f64> {
        Palette::new(levels.iter().map(|&v| [v, v, v]).collect()).unwrap()
    }

    #[test]
    fn palette_bounds() {
        assert!(Palette::<f64>::new(vec![[0.0; 3]]).is_err());
        assert!(Palette::<f64>::new(vec![[0.0; 3]; 257]).is_err());
        assert!(Palette::<f64>::new(vec![[0.0; 3], [1.2, 0.0, 0.0]]).is_err());
        assert!(Palette::<f64>::new(vec![[0.0; 3]; 256]).is_ok());
    }

    #[test]
    fn nearest_examples() {
        let p = Palette::new(vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(p.nearest(&[0.9, 0.0, 0.0]), 0);
        assert_eq!(p.nearest(&[0.0, 0.0, 1.0]), 1);
        // Equidistant from entries 1 and 3.
        let q = gray_palette(&[0.0, 0.4, 0.9, 0.6]);
        assert_eq!(q.nearest(&[0.5, 0.5, 0.5]), 1);
    }

    #[test]
    fn hard_project_consistent_and_idempotent() {
        let img =
            FloatImage::<f64>::from_fn(4, 5, 3, |r, c, k| ((r * 7 + c * 3 + k) % 10) as f64 / 9.0);
        let p = gray_palette(&[0.1, 0.5, 0.8]);
        let (q, ix) = hard_project(&img, &p).unwrap();
        for (pix, &k) in q.data().chunks_exact(3).zip(ix.indices()) {
            assert_eq!(pix, &p.color(k as usize));
        }
        let (q2, ix2) = hard_project(&q, &p).unwrap();
        assert_eq!(q2, q);
        assert_eq!(ix2, ix);
    }

    #[test]
    fn loss_examples() {
        let img = FloatImage::<f64>::filled(3, 3, 3, 0.5);
        let p = gray_palette(&[0.0, 1.0]);
        assert_abs_diff_eq!(palette_loss(&img, &p).unwrap(), 0.75, epsilon = 1e-15);
        let exact = gray_palette(&[0.5, 1.0]);
        assert_eq!(palette_loss(&img, &exact).unwrap(), 0.0);
    }

    #[test]
    fn loss_matches_psnr() {
        let img = FloatImage::<f64>::from_fn(6, 6, 3, |r, c, k| {
            ((r * 5 + c * 11 + k * 3) % 13) as f64 / 12.0
        });
        let p = gray_palette(&[0.2, 0.7]);
        let loss = palette_loss(&img, &p).unwrap();
        let (q, _) = hard_project(&img, &p).unwrap();
        let db = crate::imagecore::psnr(&img, &q).unwrap();
        assert_abs_diff_eq!(db, 10.0 * (3.0 / loss).log10(), epsilon = 1e-9);
    }

    #[test]
    fn permutation_changes_indices_only() {
        let img = FloatImage::<f64>::from_fn(4, 4, 3, |r, c, _| (r * 4 + c) as f64 / 15.0);
        let p = gray_palette(&[0.1, 0.45, 0.9]);
        let rev = gray_palette(&[0.9, 0.45, 0.1]);
        let (q1, i1) = hard_project(&img, &p).unwrap();
        let (q2, i2) = hard_project(&img, &rev).unwrap();
        assert_eq!(q1, q2);
        assert!(i1
            .indices()
            .iter()
            .zip(i2.indices())
            .all(|(a, b)| *a as usize == 2 - *b as usize));
    }

    #[test]
    fn text_format_roundtrip() {
        let p = Palette::<f64>::from_rgb8(&[[0, 0, 0], [255, 128, 7], [1, 2, 3]]).unwrap();
        let text = p.to_text();
        assert_eq!(text.lines().next(), Some("0 0 0"));
        assert_eq!(Palette::<f64>::from_text(&text).unwrap(), p);
        assert!(Palette::<f64>::from_text("1 2\n3 4 5\n").is_err());
        assert!(Palette::<f64>::from_text("1 2 300\n3 4 5\n").is_err());
    }

    #[test]
    fn palette_loss_gradient_fd() {
        use crate::diffquant::FdCheck;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let img = FloatImage::<f64>::from_fn(12, 12, 3, |_, _, _| rng.gen());
        let p = Palette::new((0..6).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect()).unwrap();
        let margins = assignment_margins(&img, &p).unwrap();
        let flat = p.to_flat();
        let f = |x: &[f64]| {
            let q = Palette::from_flat_clamped(x).unwrap();
            (
                palette_loss(&img, &q).unwrap(),
                palette_loss_grad(&img, &q).unwrap(),
            )
        };
        let kink = |i: usize| margins[i].min(flat[i]).min(1.0 - flat[i]);
        let rep = FdCheck::new(1e-6, 1e-4)
            .all_coords()
            .run(f, &flat, kink)
            .unwrap();
        assert!(rep.max_rel_error < 1e-4, "{rep:?}");
        assert!(rep.checked >= 12);
    }
}
