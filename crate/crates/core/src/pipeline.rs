//! End-to-end refinement: upsample, select seeds, weight edges, propagate.

use crate::error::{Error, Result};
use crate::resample::bicubic_upsample_prob;
use crate::rw_solver::{argmax_labels, rw_solve, RwSolution};
use crate::seeding::{potential_seeds, select_seeds};
use crate::types::{EdgeWeightGrid, LabelMap, PipelineConfig, ProbMap, SeedSet, Validate};
use crate::weights::edge_weights;

/// Every intermediate product of one refinement run.
#[derive(Debug, Clone)]
pub struct Refinement {
    /// Margin-filtered argmax labels at full resolution (absent when seeds were given).
    pub potential: Option<LabelMap>,
    pub seeds: SeedSet,
    pub weights: EdgeWeightGrid,
    pub solution: RwSolution,
    pub labels: LabelMap,
}

/// Seed selection only: bicubic upsampling to `width x height`, margin filter,
/// per-label thinning and pruning.
pub fn select_seeds_from_lowres(
    lowres: &ProbMap,
    width: usize,
    height: usize,
    cfg: &PipelineConfig,
) -> Result<(LabelMap, SeedSet)> {
    let up = bicubic_upsample_prob(lowres, width, height)?;
    let potential = potential_seeds(&up, cfg.t)?;
    let seeds = select_seeds(&potential, cfg.n_thin, cfg.n_prun);
    Ok((potential, seeds))
}

/// Full pipeline. The output resolution is that of `boundary`; a `lowres`
/// map already at that size passes through interpolation unchanged.
pub fn refine(lowres: &ProbMap, boundary: &ProbMap, cfg: &PipelineConfig) -> Result<Refinement> {
    cfg.validate()?;
    let (potential, seeds) =
        select_seeds_from_lowres(lowres, boundary.width(), boundary.height(), cfg)?;
    let mut out = refine_with_seeds(boundary, seeds, lowres.channels(), cfg)?;
    out.potential = Some(potential);
    Ok(out)
}

/// Edge weighting and random-walker propagation from a given seed set.
pub fn refine_with_seeds(
    boundary: &ProbMap,
    seeds: SeedSet,
    num_labels: usize,
    cfg: &PipelineConfig,
) -> Result<Refinement> {
    cfg.validate()?;
    if (boundary.width(), boundary.height()) != (seeds.width(), seeds.height()) {
        return Err(Error::DimensionMismatch {
            field: "boundary",
            expected: seeds.width() * seeds.height(),
            actual: boundary.pixels(),
        });
    }
    let weights = edge_weights(boundary, cfg.beta)?;
    let solution = rw_solve(
        &weights,
        &seeds,
        num_labels,
        cfg.solver_tol,
        cfg.solver_max_iter,
    )?;
    let labels = argmax_labels(&solution, &seeds);
    Ok(Refinement {
        potential: None,
        seeds,
        weights,
        solution,
        labels,
    })
}
