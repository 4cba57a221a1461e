use std::path::PathBuf;

use clap::Args;
use rwrefine_core::fixture::{generate, lowres_estimate, SceneSpec, Shape};
use rwrefine_core::raster_io::{save_image, save_labels, save_prb};

use crate::data::{sample_path, BOUNDARY, ESTIMATES, GT, IMAGES, LOWRES};
use crate::usage;

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Dataset root to write into.
    #[arg(long)]
    out: PathBuf,
    /// `disk` or `thin-bar`.
    #[arg(long, default_value = "disk")]
    shape: Shape,
    /// File stem; defaults to the shape name.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    /// Long-axis length of the low-resolution estimate.
    #[arg(long, default_value_t = 64)]
    lowres_long_axis: usize,
    /// Fraction of mixed low-resolution pixels whose class probabilities are swapped.
    #[arg(long, default_value_t = 0.15)]
    corrupt_fraction: f64,
    #[arg(long, default_value_t = 2021)]
    rng_seed: u64,
    /// Also write estimates at these long-axis lengths (comma-separated).
    #[arg(long, value_delimiter = ',')]
    scales: Vec<usize>,
}

pub fn run(a: &FixtureArgs) -> anyhow::Result<()> {
    if a.width < 4 || a.height < 4 {
        return Err(usage("fixture must be at least 4x4"));
    }
    if !(0.0..=1.0).contains(&a.corrupt_fraction) {
        return Err(usage("--corrupt-fraction must be in [0,1]"));
    }
    let long = a.width.max(a.height);
    if let Some(s) = std::iter::once(&a.lowres_long_axis)
        .chain(&a.scales)
        .find(|&&s| s == 0 || s > long)
    {
        return Err(usage(format!("scale {s} not in 1..={long}")));
    }
    let spec = SceneSpec {
        width: a.width,
        height: a.height,
        shape: a.shape,
        lowres_long_axis: a.lowres_long_axis,
        corrupt_fraction: a.corrupt_fraction,
        rng_seed: a.rng_seed,
    };
    let scene = generate(&spec)?;
    let name = a.name.clone().unwrap_or_else(|| match a.shape {
        Shape::Disk => "disk".into(),
        Shape::ThinBar => "thin-bar".into(),
    });

    for dir in [IMAGES, GT, BOUNDARY, LOWRES] {
        std::fs::create_dir_all(a.out.join(dir))?;
    }
    save_image(&scene.image, sample_path(&a.out, IMAGES, &name, "png"))?;
    save_labels(&scene.gt, sample_path(&a.out, GT, &name, "png"))?;
    save_prb(&scene.boundary, sample_path(&a.out, BOUNDARY, &name, "prb"))?;
    save_prb(&scene.lowres, sample_path(&a.out, LOWRES, &name, "prb"))?;
    if !a.scales.is_empty() {
        let dir = a.out.join(ESTIMATES).join(&name);
        std::fs::create_dir_all(&dir)?;
        for &s in &a.scales {
            let est = lowres_estimate(&scene.gt, s, a.corrupt_fraction, a.rng_seed)?;
            save_prb(&est, dir.join(format!("{s}.prb")))?;
        }
    }
    Ok(())
}
