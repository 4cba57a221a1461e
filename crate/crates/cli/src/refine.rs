use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use rwrefine_core::raster_io::{load_image, load_prb, save_labels, save_prb};
use rwrefine_core::refine;
use rwrefine_core::weights::fallback_boundary_prob;

use crate::{display, usage, ConfigArgs};

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Full-resolution PNG image (8/16-bit gray or RGB).
    #[arg(long)]
    image: PathBuf,
    /// Low-resolution class probabilities (PRB1, one channel per class).
    #[arg(long)]
    lowres_prob: PathBuf,
    /// Full-resolution boundary probability (PRB1, one channel).
    #[arg(
        long,
        conflicts_with = "fallback_gradient",
        required_unless_present = "fallback_gradient"
    )]
    boundary_prob: Option<PathBuf>,
    /// Derive the boundary map from the normalized Sobel magnitude of the image.
    #[arg(long)]
    fallback_gradient: bool,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output label PNG (8-bit gray).
    #[arg(long)]
    out_labels: PathBuf,
    /// Per-class potentials (PRB1).
    #[arg(long)]
    out_probs: Option<PathBuf>,
    /// Seed labels as an 8-bit PNG, 255 where unseeded.
    #[arg(long)]
    out_seeds: Option<PathBuf>,
}

pub fn run(a: &RefineArgs) -> anyhow::Result<()> {
    let cfg = a.config.to_config()?;
    let image = load_image(&a.image)?;
    let lowres = load_prb(&a.lowres_prob)?;
    if lowres.channels() < 2 {
        return Err(usage(format!(
            "{}: a class estimate needs at least 2 channels, found {}",
            display(&a.lowres_prob),
            lowres.channels()
        )));
    }
    let boundary = match &a.boundary_prob {
        Some(path) => {
            let b = load_prb(path)?;
            if b.channels() != 1 {
                return Err(usage(format!(
                    "{}: boundary map must have 1 channel, found {}",
                    display(path),
                    b.channels()
                )));
            }
            if (b.width(), b.height()) != (image.width(), image.height()) {
                return Err(usage(format!(
                    "{}: boundary map is {}x{} but the image is {}x{}",
                    display(path),
                    b.width(),
                    b.height(),
                    image.width(),
                    image.height()
                )));
            }
            b
        }
        None => fallback_boundary_prob(&image),
    };

    let out = refine(&lowres, &boundary, &cfg).context("refinement failed")?;
    let sol = &out.solution;
    for (k, conv) in sol.converged.iter().enumerate() {
        if !conv {
            log::warn!(
                "class {k}: solver stopped after {} iterations at residual {:.3e}",
                sol.iterations[k],
                sol.residuals[k]
            );
        }
    }
    log::info!(
        "{} seeds, solver iterations {:?}",
        out.seeds.len(),
        sol.iterations
    );

    save_labels(&out.labels, &a.out_labels)?;
    if let Some(path) = &a.out_probs {
        save_prb(&sol.probs, path)?;
    }
    if let Some(path) = &a.out_seeds {
        save_labels(&out.seeds.to_label_map(), path)?;
    }
    Ok(())
}
