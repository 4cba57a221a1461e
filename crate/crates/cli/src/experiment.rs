use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use rwrefine_core::experiments::{
    load_scale_estimates, noise_sweep, scale_sweep, seed_quality_sweep, ScaleSample, SeedsMode,
};

use crate::data::{load_samples, ESTIMATES};
use crate::{usage, ConfigArgs};

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(subcommand)]
    study: Study,
}

#[derive(Debug, Args)]
struct Common {
    /// Dataset root (see README for the layout).
    #[arg(long)]
    data: PathBuf,
    /// CSV report path.
    #[arg(long)]
    out: PathBuf,
    /// Class count; taken from the low-resolution estimates when absent.
    #[arg(long)]
    num_labels: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Estimated,
    GroundTruth,
}

impl From<Mode> for SeedsMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Estimated => SeedsMode::Estimated,
            Mode::GroundTruth => SeedsMode::GroundTruth,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Study {
    /// Seed coverage and false-positive rate over trimming depths.
    SeedQuality {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "ground-truth")]
        mode: Mode,
        /// Comma-separated thinning depths.
        #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60, 80, 100])]
        n_thin: Vec<usize>,
        /// Comma-separated pruning depths.
        #[arg(long, value_delimiter = ',', default_values_t = [20])]
        n_prun: Vec<usize>,
        /// Margin threshold for estimated seeds.
        #[arg(long, default_value_t = 0.03)]
        t: f64,
    },
    /// Refinement under Gaussian noise added to the boundary maps.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "estimated")]
        mode: Mode,
        /// Comma-separated noise variances.
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.1, 0.5, 1.0])]
        sigma2: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
    /// Refinement quality against the resolution of the estimate.
    ScaleSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated long-axis lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<usize>,
        /// Estimate root; defaults to `<data>/estimates`.
        #[arg(long)]
        estimates: Option<PathBuf>,
    },
}

fn write_csv<const N: usize>(
    path: &PathBuf,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(a: &ExperimentArgs) -> anyhow::Result<()> {
    match &a.study {
        Study::SeedQuality {
            common,
            mode,
            n_thin,
            n_prun,
            t,
        } => {
            if !(0.0..=1.0).contains(t) {
                return Err(usage(format!("--t {t} not in [0,1]")));
            }
            let samples = load_samples(&common.data, common.num_labels)?;
            let rows = seed_quality_sweep(&samples, (*mode).into(), n_thin, n_prun, *t)?;
            write_csv(
                &common.out,
                ["n_thin", "n_prun", "coverage_pct", "false_positive_pct"],
                rows.iter().map(|r| {
                    [
                        r.n_thin.to_string(),
                        r.n_prun.to_string(),
                        r.coverage_pct.to_string(),
                        r.false_positive_pct.to_string(),
                    ]
                }),
            )
        }
        Study::NoiseSweep {
            common,
            config,
            mode,
            sigma2,
            trials,
            rng_seed,
        } => {
            let cfg = config.to_config()?;
            if let Some(s) = sigma2.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return Err(usage(format!(
                    "--sigma2 {s} must be finite and non-negative"
                )));
            }
            if *trials == 0 {
                return Err(usage("--trials must be positive"));
            }
            let samples = load_samples(&common.data, common.num_labels)?;
            let rows = noise_sweep(&samples, (*mode).into(), sigma2, *trials, &cfg, *rng_seed)?;
            write_csv(
                &common.out,
                ["sigma2", "iou_all", "iou_nonseed", "rel_shift", "trials"],
                rows.iter().map(|r| {
                    [
                        r.sigma2.to_string(),
                        r.iou_all.to_string(),
                        r.iou_nonseed.to_string(),
                        r.rel_shift.to_string(),
                        r.trials.to_string(),
                    ]
                }),
            )
        }
        Study::ScaleSweep {
            common,
            config,
            scales,
            estimates,
        } => {
            let cfg = config.to_config()?;
            let root = estimates
                .clone()
                .unwrap_or_else(|| common.data.join(ESTIMATES));
            let samples = load_samples(&common.data, common.num_labels)?
                .into_iter()
                .map(|s| {
                    Ok(ScaleSample {
                        estimates: load_scale_estimates(&root, &s.name, scales)?,
                        name: s.name,
                        boundary: s.boundary,
                        gt: s.gt,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let rows = scale_sweep(&samples, scales, &cfg)?;
            write_csv(
                &common.out,
                ["scale", "iou"],
                rows.iter()
                    .map(|r| [r.scale.to_string(), r.iou.to_string()]),
            )
        }
    }
}
