use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use rwrefine_core::metrics::{
    boundary_error_counts, confusion, overall_iou, BoundaryErrorCounts, ConfusionCounts,
};

use crate::data::{load_label_map, stems};
use crate::{display, usage};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted label PNG, or a directory of them.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth label PNG, or a directory matched to --pred by filename.
    #[arg(long)]
    gt: PathBuf,
    /// Also print a per-class table (label,tp,fp,fn,iou).
    #[arg(long)]
    per_class: bool,
    /// Write the boundary-distance error histogram (distance,frequency) here.
    #[arg(long)]
    boundary_hist: Option<PathBuf>,
    /// Class count; inferred from the largest label present when absent.
    #[arg(long)]
    num_labels: Option<usize>,
}

struct PairResult {
    counts: ConfusionCounts,
    boundary: Option<BoundaryErrorCounts>,
}

fn pairs(a: &EvalArgs) -> anyhow::Result<Vec<(String, PathBuf, PathBuf)>> {
    match (a.pred.is_dir(), a.gt.is_dir()) {
        (true, true) => {
            let pred: BTreeSet<String> = stems(&a.pred, "png")?.into_iter().collect();
            let gt: BTreeSet<String> = stems(&a.gt, "png")?.into_iter().collect();
            for name in pred.symmetric_difference(&gt) {
                log::warn!("{name}.png has no counterpart, skipped");
            }
            let both: Vec<_> = pred
                .intersection(&gt)
                .map(|n| {
                    let file = format!("{n}.png");
                    (n.clone(), a.pred.join(&file), a.gt.join(&file))
                })
                .collect();
            if both.is_empty() {
                return Err(usage(format!(
                    "no file names shared by {} and {}",
                    display(&a.pred),
                    display(&a.gt)
                )));
            }
            Ok(both)
        }
        (false, false) => Ok(vec![(display(&a.pred), a.pred.clone(), a.gt.clone())]),
        _ => Err(usage(
            "--pred and --gt must both be files or both be directories",
        )),
    }
}

fn evaluate(pred: &Path, gt: &Path, k: Option<usize>, hist: bool) -> anyhow::Result<PairResult> {
    let pred = load_label_map(pred, k)?;
    let gt = load_label_map(gt, k)?;
    let counts = confusion(&pred, &gt)?;
    let boundary = if hist {
        Some(boundary_error_counts(&pred, &gt)?)
    } else {
        None
    };
    Ok(PairResult { counts, boundary })
}

pub fn run(a: &EvalArgs) -> anyhow::Result<()> {
    if a.num_labels.is_some_and(|k| k == 0 || k > 255) {
        return Err(usage("--num-labels must be in 1..=255"));
    }
    let pairs = pairs(a)?;
    let results: Vec<(String, anyhow::Result<PairResult>)> = pairs
        .par_iter()
        .map(|(name, p, g)| {
            (
                name.clone(),
                evaluate(p, g, a.num_labels, a.boundary_hist.is_some()),
            )
        })
        .collect();

    let mut counts = ConfusionCounts::default();
    let mut hist = BoundaryErrorCounts::default();
    let mut last_err = None;
    let mut ok = 0;
    for (name, r) in results {
        match r {
            Ok(r) => {
                counts += &r.counts;
                if let Some(b) = &r.boundary {
                    hist += b;
                }
                ok += 1;
            }
            Err(e) if pairs.len() > 1 => {
                log::warn!("{name}: {e:#}, skipped");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if ok == 0 {
        return Err(last_err.expect("at least one pair was evaluated"));
    }

    let iou = overall_iou(&counts)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "overall IoU: {:.2}", iou * 100.0)?;
    if a.per_class {
        writeln!(out, "label,tp,fp,fn,iou")?;
        for (l, iou) in counts.per_label_iou().iter().enumerate() {
            let iou = iou.map_or_else(String::new, |v| format!("{:.2}", v * 100.0));
            writeln!(
                out,
                "{l},{},{},{},{iou}",
                counts.tp[l], counts.fp[l], counts.fn_[l]
            )?;
        }
    }
    if let Some(path) = &a.boundary_hist {
        let freq = hist.frequencies();
        if freq.is_empty() {
            log::warn!("no labeling errors; boundary histogram is empty");
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["distance", "frequency"])?;
        for (d, f) in freq {
            w.write_record([d.to_string(), f.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}
