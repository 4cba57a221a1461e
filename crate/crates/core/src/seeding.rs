//! Seed selection: top-2 margin filtering followed by per-label thinning and pruning.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::morphology::{prune, thin};
use crate::types::{LabelMap, ProbMap, SeedSet, UNLABELED};

/// Labels each pixel with its argmax class when the gap between the two
/// largest channel values is at least `t`; otherwise [`UNLABELED`].
///
/// Argmax ties go to the smaller label index.
pub fn potential_seeds(probs_hi: &ProbMap, t: f64) -> Result<LabelMap> {
    let k = probs_hi.channels();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "potential seeds need at least 2 classes, got {k}"
        )));
    }
    if k > crate::types::MAX_LABELS {
        return Err(Error::OutOfRange {
            field: "channels",
            detail: format!("{k} classes exceed the label capacity"),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            field: "t",
            detail: format!("{t} not in [0,1]"),
        });
    }
    let n = probs_hi.pixels();
    let data = probs_hi.data();
    let labels: Vec<u8> = (0..n)
        .into_par_iter()
        .map(|p| {
            let (mut best, mut first, mut second) = (0usize, f32::NEG_INFINITY, f32::NEG_INFINITY);
            for c in 0..k {
                let v = data[c * n + p];
                if v > first {
                    second = first;
                    first = v;
                    best = c;
                } else if v > second {
                    second = v;
                }
            }
            if f64::from(first) - f64::from(second) >= t {
                best as u8
            } else {
                UNLABELED
            }
        })
        .collect();
    Ok(LabelMap::from_parts_unchecked(
        probs_hi.width(),
        probs_hi.height(),
        k,
        labels,
    ))
}

/// Splits `potential` into one mask per present label, thins then prunes each,
/// and unions the survivors. A label whose mask is emptied by trimming keeps
/// its untrimmed mask instead, so no class present in `potential` is dropped.
pub fn select_seeds(potential: &LabelMap, n_thin: usize, n_prun: usize) -> SeedSet {
    let labels = potential.labels_present();
    let per_label: Vec<(u8, Vec<usize>)> = labels
        .par_iter()
        .map(|&label| {
            let mask = potential.mask_of(label);
            let trimmed = prune(&thin(&mask, n_thin), n_prun);
            let source = if trimmed.is_empty() {
                log::debug!("label {label} vanished after trimming; keeping untrimmed mask");
                &mask
            } else {
                &trimmed
            };
            let pixels = source
                .data()
                .iter()
                .enumerate()
                .filter_map(|(p, &on)| on.then_some(p))
                .collect();
            (label, pixels)
        })
        .collect();

    let mut entries: Vec<(usize, u8)> = per_label
        .into_iter()
        .flat_map(|(label, pixels)| pixels.into_iter().map(move |p| (p, label)))
        .collect();
    entries.sort_unstable_by_key(|&(p, _)| p);
    SeedSet::new(
        potential.width(),
        potential.height(),
        potential.num_labels(),
        entries,
    )
    .expect("per-label masks are disjoint and in range")
}

/// Seeds from a fully labeled ground truth, skipping interpolation and margin filtering.
pub fn seeds_from_ground_truth(gt: &LabelMap, n_thin: usize, n_prun: usize) -> Result<SeedSet> {
    if let Some(p) = gt.data().iter().position(|&l| l == UNLABELED) {
        return Err(Error::InvalidArgument(format!(
            "ground truth has an unlabeled pixel at index {p}"
        )));
    }
    Ok(select_seeds(gt, n_thin, n_prun))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::thin;

    fn probs_2class(first: &[f32]) -> ProbMap {
        let n = first.len();
        let mut data = first.to_vec();
        data.extend(first.iter().map(|v| 1.0 - v));
        ProbMap::new(n, 1, 2, data).unwrap()
    }

    #[test]
    fn margin_rule() {
        let p = probs_2class(&[0.9, 0.5, 0.1, 0.52]);
        let out = potential_seeds(&p, 0.4).unwrap();
        assert_eq!(out.data(), &[0, UNLABELED, 1, UNLABELED]);
        let out = potential_seeds(&p, 0.0).unwrap();
        // zero margin passes t = 0; the tie goes to label 0
        assert_eq!(out.data(), &[0, 0, 1, 0]);
    }

    #[test]
    fn zero_margin_rejected_for_positive_t() {
        let p = probs_2class(&[0.5]);
        assert_eq!(potential_seeds(&p, 1e-6).unwrap().data(), &[UNLABELED]);
    }

    #[test]
    fn single_channel_rejected() {
        let p = ProbMap::new(2, 1, 1, vec![0.3, 0.4]).unwrap();
        assert!(potential_seeds(&p, 0.1).is_err());
    }

    #[test]
    fn no_trimming_keeps_all_labeled() {
        let pot = LabelMap::new(3, 2, 3, vec![0, UNLABELED, 2, 1, 1, UNLABELED]).unwrap();
        let seeds = select_seeds(&pot, 0, 0);
        assert_eq!(seeds.entries(), &[(0, 0), (2, 2), (3, 1), (4, 1)]);
    }

    #[test]
    fn square_thinned_once() {
        let (w, h) = (13, 13);
        let mut data = vec![UNLABELED; w * h];
        for r in 2..11 {
            for c in 2..11 {
                data[r * w + c] = 1;
            }
        }
        let pot = LabelMap::new(w, h, 2, data).unwrap();
        let seeds = select_seeds(&pot, 1, 0);
        let expected = thin(&pot.mask_of(1), 1);
        let got = seeds.to_label_map().mask_of(1);
        assert_eq!(got, expected);
        assert_eq!(seeds.labels_present(), vec![1]);
    }

    #[test]
    fn lone_pixel_survives() {
        let mut data = vec![0u8; 25];
        data[12] = 1;
        let pot = LabelMap::new(5, 5, 2, data).unwrap();
        let seeds = select_seeds(&pot, 35, 20);
        assert!(seeds.entries().contains(&(12, 1)));
    }

    #[test]
    fn fallback_restores_vanished_label() {
        // two adjacent pixels are both endpoints; pruning deletes them together
        let mut data = vec![0u8; 25];
        data[12] = 1;
        data[13] = 1;
        let pot = LabelMap::new(5, 5, 2, data).unwrap();
        let seeds = select_seeds(&pot, 0, 1);
        let ones: Vec<usize> = seeds
            .entries()
            .iter()
            .filter(|e| e.1 == 1)
            .map(|e| e.0)
            .collect();
        assert_eq!(ones, vec![12, 13]);
    }

    #[test]
    fn gt_constant() {
        let gt = LabelMap::filled(6, 4, 2, 0).unwrap();
        let seeds = seeds_from_ground_truth(&gt, 0, 0).unwrap();
        assert_eq!(seeds.len(), 24);
    }

    #[test]
    fn gt_with_unlabeled_rejected() {
        let gt = LabelMap::new(2, 1, 2, vec![0, UNLABELED]).unwrap();
        assert!(seeds_from_ground_truth(&gt, 1, 1).is_err());
    }
}
