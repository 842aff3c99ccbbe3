use super::{centroid, Palette};
use crate::error::ensure;
use crate::imagecore::FloatImage;
use crate::{Result, Scalar};

struct ColorBox<T> {
    pixels: Vec<[T; 3]>,
}

impl<T: Scalar> ColorBox<T> {
    /// `(channel, range)` of the widest channel.
    fn widest(&self) -> (usize, T) {
        (0..3)
            .map(|c| {
                let (lo, hi) = self
                    .pixels
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                        (lo.min(p[c]), hi.max(p[c]))
                    });
                (c, hi - lo)
            })
            .fold((0, T::neg_infinity()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
    }

    fn mean(&self) -> [T; 3] {
        centroid(self.pixels.iter().map(|p| &p[..]))
    }
}

/// Split index near the median that never separates equal channel values.
fn median_split<T: Scalar>(sorted: &[[T; 3]], channel: usize) -> usize {
    let v = sorted[sorted.len() / 2][channel];
    let lower = sorted.partition_point(|p| p[channel] < v);
    if lower > 0 {
        lower
    } else {
        sorted.partition_point(|p| p[channel] <= v)
    }
}

/// Median-cut palette.
///
/// Repeatedly takes the box with the largest single-channel range (earliest
/// box on ties), sorts it along that channel and splits it at the median
/// pixel (moved to the nearest boundary between distinct values of that
/// channel). The lower half keeps the parent's slot and the upper half is
/// appended, so entries come out in box-creation order. Boxes holding a
/// single distinct colour are never split; if fewer than `np` boxes result,
/// the last centroid is repeated.
pub fn median_cut<T: Scalar>(img: &FloatImage<T>, np: usize) -> Result<Palette<T>> {
    img.require_rgb("median_cut")?;
    ensure!(
        img.pixel_count() > 0,
        DegenerateSize,
        "median_cut on an empty image"
    );
    ensure!(
        (2..=256).contains(&np),
        InvalidArgument,
        "palette size {} outside 2..=256",
        np
    );
    ensure!(
        np <= img.pixel_count(),
        InvalidArgument,
        "palette size {} exceeds pixel count {}",
        np,
        img.pixel_count()
    );

    let pixels = img
        .data()
        .chunks_exact(3)
        .map(|p| [p[0], p[1], p[2]])
        .collect();
    let mut boxes = vec![ColorBox { pixels }];
    while boxes.len() < np {
        let pick = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| (i, b.widest()))
            .filter(|(_, (_, range))| *range > T::zero())
            .fold(None::<(usize, (usize, T))>, |best, cur| match best {
                Some(b) if b.1 .1 >= cur.1 .1 => Some(b),
                _ => Some(cur),
            });
        let Some((i, (channel, _))) = pick else { break };
        let target = &mut boxes[i];
        target
            .pixels
            .sort_by(|a, b| a[channel].partial_cmp(&b[channel]).expect("finite samples"));
        let split = median_split(&target.pixels, channel);
        let upper = target.pixels.split_off(split);
        boxes.push(ColorBox { pixels: upper });
    }

    let mut colors: Vec<[T; 3]> = boxes.iter().map(ColorBox::mean).collect();
    let last = *colors.last().expect("at least one box");
    colors.resize(np, last);
    Palette::new(colors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palette::palette_loss;

    #[test]
    fn two_colors_recovered() {
        let a = [0.9, 0.1, 0.2];
        let b = [0.1, 0.6, 0.8];
        let img = FloatImage::<f64>::from_fn(
            6,
            6,
            3,
            |r, c, k| if (r + c) % 3 == 0 { a[k] } else { b[k] },
        );
        let p = median_cut(&img, 2).unwrap();
        let mut got = p.colors().to_vec();
        got.sort_by(|x, y| x[0].partial_cmp(&y[0]).unwrap());
        assert_eq!(got, vec![b, a]);
        assert_eq!(palette_loss(&img, &p).unwrap(), 0.0);
    }

    #[test]
    fn constant_image_pads() {
        let img = FloatImage::<f64>::filled(4, 4, 3, 0.3);
        let p = median_cut(&img, 16).unwrap();
        assert!(p
            .colors()
            .iter()
            .all(|c| c.iter().all(|&v| (v - 0.3).abs() < 1e-15)));
        assert_eq!(p.len(), 16);
    }

    #[test]
    fn errors() {
        let img = FloatImage::<f64>::filled(2, 2, 3, 0.3);
        assert!(median_cut(&img, 5).is_err());
        assert!(median_cut(&img, 1).is_err());
        assert!(median_cut(&FloatImage::<f64>::filled(2, 2, 1, 0.3), 2).is_err());
        let empty = FloatImage::<f64>::new(0, 0, 3, vec![]).unwrap();
        assert!(median_cut(&empty, 2).is_err());
    }

    #[test]
    fn deterministic_creation_order() {
        // Gray ramp: first split is at the median gray, lower half keeps slot 0.
        let img = FloatImage::<f64>::from_fn(1, 8, 3, |_, c, _| c as f64 / 7.0);
        let p = median_cut(&img, 2).unwrap();
        assert!(p.color(0)[0] < p.color(1)[0]);
        assert!((p.color(0)[0] - 1.5 / 7.0).abs() < 1e-15);
    }
}
