//! Label upsampling, probability upsampling and image downsampling.
//!
//! All three use half-pixel-aligned coordinates: output pixel `i` of an
//! axis resized from `n` to `m` samples the source at `(i + 0.5) * n / m - 0.5`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{ImageRgb, LabelMap, ProbMap};

fn check_out(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroSize { width, height });
    }
    Ok(())
}

fn check_upscale(src_w: usize, src_h: usize, out_w: usize, out_h: usize) -> Result<()> {
    check_out(out_w, out_h)?;
    if out_w < src_w || out_h < src_h {
        return Err(Error::InvalidArgument(format!(
            "upsampling target {out_w}x{out_h} is smaller than source {src_w}x{src_h}"
        )));
    }
    Ok(())
}

/// Source index for nearest-neighbor sampling: `floor((i + 0.5) * src / out)`.
#[inline]
fn nn_index(i: usize, src: usize, out: usize) -> usize {
    ((2 * i + 1) * src) / (2 * out)
}

/// Nearest-neighbor label upsampling. [`crate::UNLABELED`] propagates unchanged.
pub fn nn_upsample_labels(src: &LabelMap, out_w: usize, out_h: usize) -> Result<LabelMap> {
    check_upscale(src.width(), src.height(), out_w, out_h)?;
    let cols: Vec<usize> = (0..out_w)
        .map(|c| nn_index(c, src.width(), out_w))
        .collect();
    let mut data = vec![0u8; out_w * out_h];
    data.par_chunks_mut(out_w).enumerate().for_each(|(r, row)| {
        let sr = nn_index(r, src.height(), out_h);
        for (c, v) in row.iter_mut().enumerate() {
            *v = src.get(sr, cols[c]);
        }
    });
    Ok(LabelMap::from_parts_unchecked(
        out_w,
        out_h,
        src.num_labels(),
        data,
    ))
}

/// Catmull-Rom cubic convolution kernel (`a = -0.5`).
#[inline]
pub fn catmull_rom(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Four clamped source taps and normalized weights for each output position.
fn cubic_taps(src: usize, out: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src as f64 / out as f64;
    (0..out)
        .map(|i| {
            let x = (i as f64 + 0.5) * scale - 0.5;
            let base = x.floor();
            let frac = x - base;
            let mut idx = [0usize; 4];
            let mut w = [0f64; 4];
            for k in 0..4 {
                let offset = k as f64 - 1.0;
                let j = base as i64 + k as i64 - 1;
                idx[k] = j.clamp(0, src as i64 - 1) as usize;
                w[k] = catmull_rom(frac - offset);
            }
            let sum: f64 = w.iter().sum();
            for v in &mut w {
                *v /= sum;
            }
            (idx, w)
        })
        .collect()
}

/// Separable Catmull-Rom upsampling of every channel; negative results are floored at 0.
pub fn bicubic_upsample_prob(src: &ProbMap, out_w: usize, out_h: usize) -> Result<ProbMap> {
    let (sw, sh) = (src.width(), src.height());
    check_upscale(sw, sh, out_w, out_h)?;
    let xt = cubic_taps(sw, out_w);
    let yt = cubic_taps(sh, out_h);
    let out_n = out_w * out_h;
    let mut data = vec![0f32; out_n * src.channels()];

    data.par_chunks_mut(out_n)
        .enumerate()
        .for_each(|(k, plane_out)| {
            let plane = src.plane(k);
            // horizontal pass: sh x out_w
            let mut tmp = vec![0f64; sh * out_w];
            for r in 0..sh {
                let row = &plane[r * sw..(r + 1) * sw];
                for (c, (idx, w)) in xt.iter().enumerate() {
                    tmp[r * out_w + c] = (0..4).map(|t| w[t] * f64::from(row[idx[t]])).sum();
                }
            }
            plane_out
                .par_chunks_mut(out_w)
                .enumerate()
                .for_each(|(r, row)| {
                    let (idx, w) = &yt[r];
                    for (c, v) in row.iter_mut().enumerate() {
                        let s: f64 = (0..4).map(|t| w[t] * tmp[idx[t] * out_w + c]).sum();
                        *v = s.max(0.0) as f32;
                    }
                });
        });
    Ok(ProbMap::from_parts_unchecked(
        out_w,
        out_h,
        src.channels(),
        data,
    ))
}

/// Overlap weights of each output cell with the source cells along one axis.
fn box_footprints(src: usize, out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / out as f64;
    (0..out)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|j| {
                    let overlap = hi.min((j + 1) as f64) - lo.max(j as f64);
                    (overlap > 0.0).then_some((j, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Box (area) averaging of each output pixel's source footprint.
pub fn area_downsample_image(src: &ImageRgb, out_w: usize, out_h: usize) -> Result<ImageRgb> {
    check_out(out_w, out_h)?;
    let (sw, sh, ch) = (src.width(), src.height(), src.channels());
    if out_w > sw || out_h > sh {
        return Err(Error::InvalidArgument(format!(
            "downsampling target {out_w}x{out_h} is larger than source {sw}x{sh}"
        )));
    }
    let xf = box_footprints(sw, out_w);
    let yf = box_footprints(sh, out_h);
    let mut data = vec![0f32; out_w * out_h * ch];
    data.par_chunks_mut(out_w * ch)
        .enumerate()
        .for_each(|(r, row)| {
            for c in 0..out_w {
                for k in 0..ch {
                    let mut acc = 0f64;
                    for &(sy, wy) in &yf[r] {
                        for &(sx, wx) in &xf[c] {
                            acc += wy * wx * f64::from(src.get(sy, sx, k));
                        }
                    }
                    row[c * ch + k] = acc.clamp(0.0, 1.0) as f32;
                }
            }
        });
    ImageRgb::new(out_w, out_h, ch, data)
}

/// Output size whose longer axis is `long_axis`, preserving aspect ratio.
pub fn dims_for_long_axis(width: usize, height: usize, long_axis: usize) -> (usize, usize) {
    let scale_short = |short: usize, long: usize| {
        (((short as f64) * long_axis as f64 / long as f64).round() as usize).max(1)
    };
    if width >= height {
        (long_axis, scale_short(height, width))
    } else {
        (scale_short(width, height), long_axis)
    }
}
