//! Grid-graph edge weights from boundary probabilities, and a Sobel fallback
//! boundary map for when no learned boundary detector output is available.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{EdgeWeightGrid, ImageRgb, ProbMap, WEIGHT_FLOOR};

/// `exp(-beta * (p_i + p_j)^2 / sigma)`, before flooring.
#[inline]
pub fn edge_weight(p_i: f64, p_j: f64, beta: f64, sigma: f64) -> f64 {
    let s = p_i + p_j;
    (-beta * s * s / sigma).exp()
}

/// Population standard deviation of all values.
pub fn population_std(values: &[f32]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = f64::from(v) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    var.sqrt()
}

/// Edge weights of the 4-adjacency grid from a single-channel boundary map.
///
/// `sigma` is the population standard deviation of the whole map. A constant
/// map (`sigma == 0`) yields uniform unit weights. All weights are floored at
/// [`WEIGHT_FLOOR`].
pub fn edge_weights(bound_prob: &ProbMap, beta: f64) -> Result<EdgeWeightGrid> {
    if bound_prob.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "boundary map must have 1 channel, got {}",
            bound_prob.channels()
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::OutOfRange {
            field: "beta",
            detail: format!("{beta} must be positive"),
        });
    }
    let p = bound_prob.data();
    for (index, &v) in p.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                field: "bound_prob",
                index,
            });
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                field: "bound_prob",
                detail: format!("{v} at index {index} not in [0,1]"),
            });
        }
    }
    let (w, h) = (bound_prob.width(), bound_prob.height());
    let sigma = population_std(p);
    let weight = |a: f32, b: f32| {
        if sigma == 0.0 {
            1.0
        } else {
            edge_weight(f64::from(a), f64::from(b), beta, sigma).max(WEIGHT_FLOOR)
        }
    };

    let mut horizontal = vec![0f64; h * (w - 1)];
    if w > 1 {
        horizontal
            .par_chunks_mut(w - 1)
            .enumerate()
            .for_each(|(r, row)| {
                let src = &p[r * w..(r + 1) * w];
                for (c, e) in row.iter_mut().enumerate() {
                    *e = weight(src[c], src[c + 1]);
                }
            });
    }
    let mut vertical = vec![0f64; (h - 1) * w];
    vertical.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, e) in row.iter_mut().enumerate() {
            *e = weight(p[r * w + c], p[(r + 1) * w + c]);
        }
    });
    Ok(EdgeWeightGrid::from_parts_unchecked(
        w, h, horizontal, vertical,
    ))
}

/// Sobel gradient magnitude of the image luminance, scaled so the 99th
/// percentile maps to 1 and clamped to `[0, 1]`.
///
/// Borders replicate the nearest pixel. When fewer than 1% of pixels carry
/// any gradient the maximum is used as the scale instead.
pub fn fallback_boundary_prob(img: &ImageRgb) -> ProbMap {
    let (w, h) = (img.width(), img.height());
    let lum = img.luminance();
    let at = |r: isize, c: isize| {
        let rr = r.clamp(0, h as isize - 1) as usize;
        let cc = c.clamp(0, w as isize - 1) as usize;
        lum[rr * w + cc]
    };
    let mut mag = vec![0f64; w * h];
    mag.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        let r = r as isize;
        for (c, m) in row.iter_mut().enumerate() {
            let c = c as isize;
            let gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            let gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            *m = (gx * gx + gy * gy).sqrt();
        }
    });

    let scale = {
        let mut sorted = mag.clone();
        let rank = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
        let (_, p99, _) = sorted.select_nth_unstable_by(rank, |a, b| a.total_cmp(b));
        let p99 = *p99;
        if p99 > 0.0 {
            p99
        } else {
            mag.iter().copied().fold(0.0, f64::max)
        }
    };
    let data = mag
        .iter()
        .map(|&m| {
            if scale > 0.0 {
                (m / scale).clamp(0.0, 1.0) as f32
            } else {
                0.0
            }
        })
        .collect();
    ProbMap::from_parts_unchecked(w, h, 1, data)
}
