//! Dataset directory layout shared by `experiment` and `fixture`:
//!
//! ```text
//! <root>/images/<name>.png          full-resolution image
//! <root>/gt/<name>.png              ground-truth labels (8-bit gray, 255 = unlabeled)
//! <root>/boundary/<name>.prb        boundary probability, 1 channel
//! <root>/lowres/<name>.prb          low-resolution class estimate
//! <root>/estimates/<name>/<s>.prb   estimate at long-axis length <s>
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use rwrefine_core::experiments::Sample;
use rwrefine_core::raster_io::{load_labels, load_prb};
use rwrefine_core::{LabelMap, UNLABELED};

use crate::{display, usage};

pub const IMAGES: &str = "images";
pub const GT: &str = "gt";
pub const BOUNDARY: &str = "boundary";
pub const LOWRES: &str = "lowres";
pub const ESTIMATES: &str = "estimates";

const LABEL_CAP: usize = 255;

/// Sorted file stems of `dir/*.<ext>`.
pub fn stems(dir: &Path, ext: &str) -> anyhow::Result<Vec<String>> {
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("cannot list {}", display(dir)))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push(stem.to_owned());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Loads a label PNG and sets the class count to `num_labels`, or to one
/// past the largest label present when `None`.
pub fn load_label_map(path: &Path, num_labels: Option<usize>) -> anyhow::Result<LabelMap> {
    let map = load_labels(path, num_labels.unwrap_or(LABEL_CAP))?;
    match num_labels {
        Some(_) => Ok(map),
        None => {
            let k = inferred_labels(&map);
            Ok(map.with_num_labels(k)?)
        }
    }
}

/// One past the largest label in use, at least 1.
pub fn inferred_labels(map: &LabelMap) -> usize {
    map.data()
        .iter()
        .filter(|&&l| l != UNLABELED)
        .map(|&l| usize::from(l) + 1)
        .max()
        .unwrap_or(1)
}

/// Loads every image listed under `<root>/gt`, with its boundary map and,
/// when present, its low-resolution estimate.
pub fn load_samples(root: &Path, num_labels: Option<usize>) -> anyhow::Result<Vec<Sample>> {
    let names = stems(&root.join(GT), "png")?;
    if names.is_empty() {
        return Err(usage(format!(
            "no ground truth under {}",
            display(&root.join(GT))
        )));
    }
    names
        .into_iter()
        .map(|name| {
            let lowres_path = root.join(LOWRES).join(format!("{name}.prb"));
            let lowres = if lowres_path.is_file() {
                Some(load_prb(&lowres_path)?)
            } else {
                None
            };
            let k = num_labels.or_else(|| lowres.as_ref().map(|l| l.channels()));
            let mut gt = load_label_map(&root.join(GT).join(format!("{name}.png")), k)?;
            if k.is_none() && gt.num_labels() < 2 {
                gt = gt.with_num_labels(2)?;
            }
            let boundary = load_prb(sample_path(root, BOUNDARY, &name, "prb"))?;
            Ok(Sample {
                name,
                boundary,
                lowres,
                gt,
            })
        })
        .collect()
}

pub fn sample_path(root: &Path, kind: &str, name: &str, ext: &str) -> PathBuf {
    root.join(kind).join(format!("{name}.{ext}"))
}
