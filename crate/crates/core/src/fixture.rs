//! Synthetic scenes with known ground truth, so the pipeline can be exercised
//! without external data.
//!
//! A scene is a two-class image (label 1 = object, label 0 = background), its
//! ground truth, an exact boundary-probability map (1 on ground-truth boundary
//! pixels, 0 elsewhere) and a low-resolution class-probability estimate made
//! by area-averaging the ground truth, with a fraction of the mixed
//! (boundary-band) low-resolution pixels given swapped class probabilities.

use crate::error::{Error, Result};
use crate::metrics::boundary_mask;
use crate::resample::{area_downsample_image, dims_for_long_axis};
use crate::rng::CounterRng;
use crate::types::{ImageRgb, LabelMap, ProbMap};

const OBJECT_RGB: [f32; 3] = [0.85, 0.35, 0.2];
const BACKGROUND_RGB: [f32; 3] = [0.2, 0.45, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Centered disk of radius `0.3 * min(width, height)`.
    Disk,
    /// Vertical bar `max(2, width / 64)` pixels wide over the middle 80% of the height.
    ThinBar,
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Shape::Disk),
            "thin-bar" | "bar" => Ok(Shape::ThinBar),
            other => Err(Error::InvalidArgument(format!("unknown shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub shape: Shape,
    /// Long-axis length of the low-resolution estimate.
    pub lowres_long_axis: usize,
    /// Fraction of mixed low-resolution pixels whose class probabilities are swapped.
    pub corrupt_fraction: f64,
    pub rng_seed: u64,
}

impl SceneSpec {
    /// 512x512 disk, 64x64 estimate, 15% of the boundary band corrupted.
    pub fn disk_512() -> Self {
        SceneSpec {
            width: 512,
            height: 512,
            shape: Shape::Disk,
            lowres_long_axis: 64,
            corrupt_fraction: 0.15,
            rng_seed: 2021,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub image: ImageRgb,
    pub gt: LabelMap,
    pub boundary: ProbMap,
    pub lowres: ProbMap,
}

fn object_mask(spec: &SceneSpec) -> Vec<bool> {
    let (w, h) = (spec.width, spec.height);
    match spec.shape {
        Shape::Disk => {
            let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
            let radius = 0.3 * w.min(h) as f64;
            (0..w * h)
                .map(|p| {
                    let x = (p % w) as f64 + 0.5 - cx;
                    let y = (p / w) as f64 + 0.5 - cy;
                    x * x + y * y <= radius * radius
                })
                .collect()
        }
        Shape::ThinBar => {
            let bar = (w / 64).max(2);
            let left = (w - bar) / 2;
            let (top, bottom) = (h / 10, h - h / 10);
            (0..w * h)
                .map(|p| {
                    let (r, c) = (p / w, p % w);
                    (left..left + bar).contains(&c) && (top..bottom).contains(&r)
                })
                .collect()
        }
    }
}

/// Builds the scene described by `spec`.
pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    let (w, h) = (spec.width, spec.height);
    if w < 4 || h < 4 {
        return Err(Error::InvalidArgument(format!(
            "scene must be at least 4x4, got {w}x{h}"
        )));
    }
    if !(0.0..=1.0).contains(&spec.corrupt_fraction) {
        return Err(Error::OutOfRange {
            field: "corrupt_fraction",
            detail: format!("{} not in [0,1]", spec.corrupt_fraction),
        });
    }
    let inside = object_mask(spec);
    let gt = LabelMap::new(w, h, 2, inside.iter().map(|&b| u8::from(b)).collect())?;
    let image = ImageRgb::new(
        w,
        h,
        3,
        inside
            .iter()
            .flat_map(|&b| if b { OBJECT_RGB } else { BACKGROUND_RGB })
            .collect(),
    )?;
    let boundary = ProbMap::new(
        w,
        h,
        1,
        boundary_mask(&gt)
            .data()
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect(),
    )?;
    let lowres = lowres_estimate(
        &gt,
        spec.lowres_long_axis,
        spec.corrupt_fraction,
        spec.rng_seed,
    )?;
    Ok(Scene {
        spec: *spec,
        image,
        gt,
        boundary,
        lowres,
    })
}

/// Two-class low-resolution estimate of a binary ground truth at the given
/// long-axis length, with `corrupt_fraction` of the mixed pixels swapped.
pub fn lowres_estimate(
    gt: &LabelMap,
    long_axis: usize,
    corrupt_fraction: f64,
    rng_seed: u64,
) -> Result<ProbMap> {
    let indicator = ImageRgb::new(
        gt.width(),
        gt.height(),
        1,
        gt.data()
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { 0.0 })
            .collect(),
    )?;
    let (lw, lh) = dims_for_long_axis(gt.width(), gt.height(), long_axis);
    let q = area_downsample_image(&indicator, lw, lh)?;
    let mut object: Vec<f32> = q.data().to_vec();

    let band: Vec<usize> = (0..object.len())
        .filter(|&i| object[i] > 0.0 && object[i] < 1.0)
        .collect();
    let n_corrupt = (corrupt_fraction * band.len() as f64).round() as usize;
    // partial Fisher-Yates over the band with a fixed stream
    let rng = CounterRng::new(rng_seed, 0xF1C7);
    let mut order = band;
    for i in 0..n_corrupt {
        let j = i + (rng.u64_at(i as u64) % (order.len() - i) as u64) as usize;
        order.swap(i, j);
        object[order[i]] = 1.0 - object[order[i]];
    }

    let mut data: Vec<f32> = object.iter().map(|&v| 1.0 - v).collect();
    data.extend_from_slice(&object);
    ProbMap::new(lw, lh, 2, data)
}
