//! Robustness and limitation studies: boundary-map noise, seed quality over
//! trimming depth, and refinement quality versus low-resolution scale.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{confusion, confusion_masked, overall_iou, seed_quality, ConfusionCounts};
use crate::pipeline::{refine_with_seeds, select_seeds_from_lowres};
use crate::raster_io::load_prb;
use crate::resample::bicubic_upsample_prob;
use crate::rng::CounterRng;
use crate::seeding::{potential_seeds, select_seeds};
use crate::types::{LabelMap, PipelineConfig, ProbMap, SeedSet};

/// One evaluation image: boundary map, optional low-resolution estimate, ground truth.
#[derive(Debug, Clone)]
pub struct Sample {
    pub name: String,
    pub boundary: ProbMap,
    pub lowres: Option<ProbMap>,
    pub gt: LabelMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedsMode {
    /// Seeds from the low-resolution estimate (interpolation, margin filter, trimming).
    Estimated,
    /// Seeds from thinning and pruning the ground truth directly.
    GroundTruth,
}

impl std::str::FromStr for SeedsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(SeedsMode::Estimated),
            "ground-truth" | "gt" => Ok(SeedsMode::GroundTruth),
            other => Err(Error::InvalidArgument(format!(
                "unknown seeds mode {other:?}"
            ))),
        }
    }
}

fn sample_seeds(
    sample: &Sample,
    mode: SeedsMode,
    cfg: &PipelineConfig,
) -> Result<(SeedSet, usize)> {
    let (w, h) = (sample.gt.width(), sample.gt.height());
    match mode {
        SeedsMode::GroundTruth => {
            let seeds =
                crate::seeding::seeds_from_ground_truth(&sample.gt, cfg.n_thin, cfg.n_prun)?;
            Ok((seeds, sample.gt.num_labels()))
        }
        SeedsMode::Estimated => {
            let lowres = sample.lowres.as_ref().ok_or_else(|| {
                Error::MissingInput(format!("{}: low-resolution estimate", sample.name))
            })?;
            let (_, seeds) = select_seeds_from_lowres(lowres, w, h, cfg)?;
            Ok((seeds, lowres.channels()))
        }
    }
}

/// `clamp(p + N(0, sigma2), 0, 1)` per pixel, drawing normal `i` of `rng` for pixel `i`.
pub fn perturb_with(p: &ProbMap, sigma2: f64, rng: &CounterRng) -> Result<ProbMap> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::OutOfRange {
            field: "sigma2",
            detail: format!("{sigma2} must be non-negative"),
        });
    }
    if p.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "boundary map must have 1 channel, got {}",
            p.channels()
        )));
    }
    if sigma2 == 0.0 {
        return Ok(p.clone());
    }
    let sd = sigma2.sqrt();
    let data: Vec<f32> = p
        .data()
        .par_iter()
        .enumerate()
        .map(|(i, &v)| (f64::from(v) + sd * rng.normal_at(i as u64)).clamp(0.0, 1.0) as f32)
        .collect();
    ProbMap::new(p.width(), p.height(), 1, data)
}

/// Gaussian perturbation of a boundary map with a generator seeded by `rng_seed`.
pub fn perturb_boundary_prob(p: &ProbMap, sigma2: f64, rng_seed: u64) -> Result<ProbMap> {
    perturb_with(p, sigma2, &CounterRng::new(rng_seed, 0))
}

/// Averages over trials for one noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTrialReport {
    pub sigma2: f64,
    /// Overall %IoU over all pixels.
    pub iou_all: f64,
    /// Overall %IoU over unseeded pixels only.
    pub iou_nonseed: f64,
    /// `||x_perturbed - x|| / ||x||` over all pixels and channels.
    pub rel_shift: f64,
    pub trials: usize,
}

/// Generator stream for a (trial, image) pair.
fn trial_stream(trial: usize, image: usize) -> u64 {
    ((trial as u64) << 32) | image as u64
}

/// Re-solves every sample with perturbed boundary maps at each noise level.
///
/// Trial `t` of image `i` uses the same normal draws at every noise level,
/// scaled by `sqrt(sigma2)`.
pub fn noise_sweep(
    samples: &[Sample],
    mode: SeedsMode,
    sigma2s: &[f64],
    trials: usize,
    cfg: &PipelineConfig,
    rng_seed: u64,
) -> Result<Vec<NoiseTrialReport>> {
    if samples.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    struct Base {
        seeds: SeedSet,
        k: usize,
        x: ProbMap,
        not_seed: Vec<bool>,
    }
    let bases: Vec<Base> = samples
        .iter()
        .map(|s| {
            let (seeds, k) = sample_seeds(s, mode, cfg)?;
            let base = refine_with_seeds(&s.boundary, seeds, k, cfg)?;
            let mut not_seed = vec![true; s.gt.width() * s.gt.height()];
            for &(p, _) in base.seeds.entries() {
                not_seed[p] = false;
            }
            Ok(Base {
                seeds: base.seeds,
                k,
                x: base.solution.probs,
                not_seed,
            })
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(sigma2s.len());
    for &sigma2 in sigma2s {
        let per_trial: Vec<(f64, f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut all = ConfusionCounts::default();
                let mut nonseed = ConfusionCounts::default();
                let (mut diff2, mut norm2) = (0f64, 0f64);
                for (i, (s, b)) in samples.iter().zip(&bases).enumerate() {
                    let rng = CounterRng::new(rng_seed, trial_stream(trial, i));
                    let noisy = perturb_with(&s.boundary, sigma2, &rng)?;
                    let out = refine_with_seeds(&noisy, b.seeds.clone(), b.k, cfg)?;
                    all += &confusion(&out.labels, &s.gt)?;
                    nonseed += &confusion_masked(&out.labels, &s.gt, Some(&b.not_seed))?;
                    for (&xp, &x0) in out.solution.probs.data().iter().zip(b.x.data()) {
                        let d = f64::from(xp) - f64::from(x0);
                        diff2 += d * d;
                        norm2 += f64::from(x0) * f64::from(x0);
                    }
                }
                let iou_nonseed = match overall_iou(&nonseed) {
                    Ok(v) => v,
                    Err(Error::EmptyEvaluation) => 1.0,
                    Err(e) => return Err(e),
                };
                Ok((overall_iou(&all)?, iou_nonseed, (diff2 / norm2).sqrt()))
            })
            .collect::<Result<_>>()?;
        let n = trials as f64;
        reports.push(NoiseTrialReport {
            sigma2,
            iou_all: per_trial.iter().map(|t| t.0).sum::<f64>() / n * 100.0,
            iou_nonseed: per_trial.iter().map(|t| t.1).sum::<f64>() / n * 100.0,
            rel_shift: per_trial.iter().map(|t| t.2).sum::<f64>() / n,
            trials,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedQualityRow {
    pub n_thin: usize,
    pub n_prun: usize,
    /// Mean over images of the seed coverage, percent.
    pub coverage_pct: f64,
    /// Mean over images of the false-positive seed rate, percent.
    pub false_positive_pct: f64,
}

/// Seed coverage and false-positive rate at every `(n_thin, n_prun)` pair.
pub fn seed_quality_sweep(
    samples: &[Sample],
    mode: SeedsMode,
    n_thins: &[usize],
    n_pruns: &[usize],
    t: f64,
) -> Result<Vec<SeedQualityRow>> {
    if samples.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let potentials: Vec<LabelMap> = samples
        .iter()
        .map(|s| match mode {
            SeedsMode::GroundTruth => {
                if s.gt.has_unlabeled() {
                    return Err(Error::InvalidArgument(format!(
                        "{}: ground truth has unlabeled pixels",
                        s.name
                    )));
                }
                Ok(s.gt.clone())
            }
            SeedsMode::Estimated => {
                let lowres = s.lowres.as_ref().ok_or_else(|| {
                    Error::MissingInput(format!("{}: low-resolution estimate", s.name))
                })?;
                let up = bicubic_upsample_prob(lowres, s.gt.width(), s.gt.height())?;
                potential_seeds(&up, t)
            }
        })
        .collect::<Result<_>>()?;

    let grid: Vec<(usize, usize)> = n_thins
        .iter()
        .flat_map(|&a| n_pruns.iter().map(move |&b| (a, b)))
        .collect();
    grid.par_iter()
        .map(|&(n_thin, n_prun)| {
            let mut cov = 0.0;
            let mut fp = 0.0;
            for (s, pot) in samples.iter().zip(&potentials) {
                let seeds = select_seeds(pot, n_thin, n_prun);
                let q = seed_quality(&seeds, &s.gt)?;
                cov += q.coverage_pct;
                fp += q.false_positive_pct;
            }
            let n = samples.len() as f64;
            Ok(SeedQualityRow {
                n_thin,
                n_prun,
                coverage_pct: cov / n,
                false_positive_pct: fp / n,
            })
        })
        .collect()
}

/// High-resolution inputs plus one low-resolution estimate per scale.
#[derive(Debug, Clone)]
pub struct ScaleSample {
    pub name: String,
    pub boundary: ProbMap,
    pub gt: LabelMap,
    /// `(long-axis length, estimate)` pairs.
    pub estimates: Vec<(usize, ProbMap)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRow {
    pub scale: usize,
    /// Overall %IoU pooled over all images.
    pub iou: f64,
}

/// Path of the estimate for `image` at `scale`: `<root>/<image>/<scale>.prb`.
pub fn estimate_path(root: &Path, image: &str, scale: usize) -> std::path::PathBuf {
    root.join(image).join(format!("{scale}.prb"))
}

/// Loads every `<root>/<image>/<scale>.prb`, failing on the first missing file.
pub fn load_scale_estimates(
    root: &Path,
    image: &str,
    scales: &[usize],
) -> Result<Vec<(usize, ProbMap)>> {
    scales
        .iter()
        .map(|&s| {
            let path = estimate_path(root, image, s);
            if !path.is_file() {
                return Err(Error::MissingInput(format!(
                    "estimate {} not found",
                    path.display()
                )));
            }
            Ok((s, load_prb(&path)?))
        })
        .collect()
}

/// Full pipeline at each scale; %IoU pooled over images.
pub fn scale_sweep(
    samples: &[ScaleSample],
    scales: &[usize],
    cfg: &PipelineConfig,
) -> Result<Vec<ScaleRow>> {
    if samples.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    scales
        .iter()
        .map(|&scale| {
            let mut counts = ConfusionCounts::default();
            for s in samples {
                let est = s
                    .estimates
                    .iter()
                    .find(|(sc, _)| *sc == scale)
                    .map(|(_, p)| p)
                    .ok_or_else(|| {
                        Error::MissingInput(format!("{}: no estimate at scale {scale}", s.name))
                    })?;
                let out = crate::pipeline::refine(est, &s.boundary, cfg)?;
                counts += &confusion(&out.labels, &s.gt)?;
            }
            Ok(ScaleRow {
                scale,
                iou: overall_iou(&counts)? * 100.0,
            })
        })
        .collect()
}
