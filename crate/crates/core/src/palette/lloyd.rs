use super::{centroid, palette_loss, Palette};
use crate::imagecore::FloatImage;
use crate::{Result, Scalar};

/// Lloyd (k-means) refinement of a palette. See [`lloyd_refine_traced`].
pub fn lloyd_refine<T: Scalar>(
    img: &FloatImage<T>,
    p0: &Palette<T>,
    max_iters: usize,
    tol: T,
) -> Result<Palette<T>> {
    Ok(lloyd_refine_traced(img, p0, max_iters, tol)?.0)
}

/// Lloyd refinement returning the palette and the loss after every accepted
/// iteration (the first entry is the loss of `p0`).
///
/// Each iteration assigns pixels to their nearest colour and moves every
/// colour to the mean of its cluster; empty clusters keep their colour.
/// Iteration stops after `max_iters`, or as soon as the loss decreases by
/// less than `tol`. An iterate that does not lower the loss is discarded, so
/// the trace is non-increasing.
pub fn lloyd_refine_traced<T: Scalar>(
    img: &FloatImage<T>,
    p0: &Palette<T>,
    max_iters: usize,
    tol: T,
) -> Result<(Palette<T>, Vec<T>)> {
    img.require_rgb("lloyd_refine")?;
    let mut palette = p0.clone();
    let mut loss = palette_loss(img, &palette)?;
    let mut trace = vec![loss];
    let np = palette.len();
    for _ in 0..max_iters {
        let mut members: Vec<Vec<&[T]>> = vec![Vec::new(); np];
        for px in img.data().chunks_exact(3) {
            members[palette.nearest(px)].push(px);
        }
        let colors = palette
            .colors()
            .iter()
            .zip(&members)
            .map(|(old, m)| {
                if m.is_empty() {
                    *old
                } else {
                    centroid(m.iter().copied())
                }
            })
            .collect();
        let next = Palette::new(colors)?;
        let next_loss = palette_loss(img, &next)?;
        if next_loss > loss {
            break;
        }
        let decrease = loss - next_loss;
        palette = next;
        loss = next_loss;
        trace.push(loss);
        if decrease < tol {
            break;
        }
    }
    Ok((palette, trace))
}
