//! Segmentation evaluation: confusion counts, IoU, boundary distances and seed quality.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::types::{BinaryMask, LabelMap, SeedSet, UNLABELED};

/// Per-label true positive, false positive and false negative pixel counts.
///
/// Counts from several images add up to dataset-level counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
}

impl ConfusionCounts {
    pub fn new(num_labels: usize) -> Self {
        ConfusionCounts {
            tp: vec![0; num_labels],
            fp: vec![0; num_labels],
            fn_: vec![0; num_labels],
        }
    }

    pub fn num_labels(&self) -> usize {
        self.tp.len()
    }

    fn grow(&mut self, num_labels: usize) {
        if self.tp.len() < num_labels {
            self.tp.resize(num_labels, 0);
            self.fp.resize(num_labels, 0);
            self.fn_.resize(num_labels, 0);
        }
    }

    /// `TP_l / (TP_l + FP_l + FN_l)`, or `None` when the label never occurs.
    pub fn iou(&self, label: usize) -> Option<f64> {
        let denom = self.tp[label] + self.fp[label] + self.fn_[label];
        (denom > 0).then(|| self.tp[label] as f64 / denom as f64)
    }

    pub fn per_label_iou(&self) -> Vec<Option<f64>> {
        (0..self.num_labels()).map(|l| self.iou(l)).collect()
    }
}

impl AddAssign<&ConfusionCounts> for ConfusionCounts {
    fn add_assign(&mut self, rhs: &ConfusionCounts) {
        self.grow(rhs.num_labels());
        for l in 0..rhs.num_labels() {
            self.tp[l] += rhs.tp[l];
            self.fp[l] += rhs.fp[l];
            self.fn_[l] += rhs.fn_[l];
        }
    }
}

fn check_same_dims(a: &LabelMap, b: &LabelMap) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch {
            field: "pred",
            expected: b.width() * b.height(),
            actual: a.width() * a.height(),
        });
    }
    Ok(())
}

/// Confusion counts over pixels where `gt` is labeled, optionally restricted
/// to pixels where `include` is true.
pub fn confusion_masked(
    pred: &LabelMap,
    gt: &LabelMap,
    include: Option<&[bool]>,
) -> Result<ConfusionCounts> {
    check_same_dims(pred, gt)?;
    let k = gt.num_labels().max(pred.num_labels());
    let mut counts = ConfusionCounts::new(k);
    for (p, (&pl, &gl)) in pred.data().iter().zip(gt.data()).enumerate() {
        if gl == UNLABELED || include.is_some_and(|m| !m[p]) {
            continue;
        }
        if pl == gl {
            counts.tp[usize::from(gl)] += 1;
        } else {
            counts.fn_[usize::from(gl)] += 1;
            if pl != UNLABELED {
                counts.fp[usize::from(pl)] += 1;
            }
        }
    }
    Ok(counts)
}

/// Confusion counts; unlabeled ground-truth pixels are skipped.
pub fn confusion(pred: &LabelMap, gt: &LabelMap) -> Result<ConfusionCounts> {
    confusion_masked(pred, gt, None)
}

/// `sum TP / sum (TP + FP + FN)` pooled over labels.
pub fn overall_iou(counts: &ConfusionCounts) -> Result<f64> {
    let tp: u64 = counts.tp.iter().sum();
    let denom: u64 = tp + counts.fp.iter().sum::<u64>() + counts.fn_.iter().sum::<u64>();
    if denom == 0 {
        return Err(Error::EmptyEvaluation);
    }
    Ok(tp as f64 / denom as f64)
}

/// Pixels with at least one 4-neighbor carrying a different label.
pub fn boundary_mask(gt: &LabelMap) -> BinaryMask {
    let (w, h) = (gt.width(), gt.height());
    let d = gt.data();
    let mut out = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            if c + 1 < w && d[p] != d[p + 1] {
                out[p] = true;
                out[p + 1] = true;
            }
            if r + 1 < h && d[p] != d[p + w] {
                out[p] = true;
                out[p + w] = true;
            }
        }
    }
    BinaryMask::from_parts_unchecked(w, h, out)
}

/// Exact L1 distance from every pixel to the nearest set pixel (two-pass chamfer).
pub fn l1_distance_transform(mask: &BinaryMask) -> Result<Vec<u32>> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument(
            "distance transform needs at least one source pixel".into(),
        ));
    }
    let (w, h) = (mask.width(), mask.height());
    let inf = u32::MAX / 2;
    let mut d: Vec<u32> = mask
        .data()
        .iter()
        .map(|&b| if b { 0 } else { inf })
        .collect();
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            if r > 0 {
                d[p] = d[p].min(d[p - w] + 1);
            }
            if c > 0 {
                d[p] = d[p].min(d[p - 1] + 1);
            }
        }
    }
    for r in (0..h).rev() {
        for c in (0..w).rev() {
            let p = r * w + c;
            if r + 1 < h {
                d[p] = d[p].min(d[p + w] + 1);
            }
            if c + 1 < w {
                d[p] = d[p].min(d[p + 1] + 1);
            }
        }
    }
    Ok(d)
}

/// Error counts binned by exact L1 distance to the nearest ground-truth boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryErrorCounts {
    pub by_distance: BTreeMap<u32, u64>,
}

impl BoundaryErrorCounts {
    pub fn total(&self) -> u64 {
        self.by_distance.values().sum()
    }

    /// Relative frequency per distance; empty when there are no errors.
    pub fn frequencies(&self) -> BTreeMap<u32, f64> {
        let total = self.total();
        if total == 0 {
            return BTreeMap::new();
        }
        self.by_distance
            .iter()
            .map(|(&d, &n)| (d, n as f64 / total as f64))
            .collect()
    }
}

impl AddAssign<&BoundaryErrorCounts> for BoundaryErrorCounts {
    fn add_assign(&mut self, rhs: &BoundaryErrorCounts) {
        for (&d, &n) in &rhs.by_distance {
            *self.by_distance.entry(d).or_default() += n;
        }
    }
}

/// Raw error counts per boundary distance for one prediction.
pub fn boundary_error_counts(pred: &LabelMap, gt: &LabelMap) -> Result<BoundaryErrorCounts> {
    check_same_dims(pred, gt)?;
    let boundary = boundary_mask(gt);
    if boundary.is_empty() {
        return Err(Error::InvalidArgument(
            "ground truth has no boundary pixels".into(),
        ));
    }
    let dist = l1_distance_transform(&boundary)?;
    let mut counts = BoundaryErrorCounts::default();
    for (p, (&pl, &gl)) in pred.data().iter().zip(gt.data()).enumerate() {
        if gl != UNLABELED && pl != gl {
            *counts.by_distance.entry(dist[p]).or_default() += 1;
        }
    }
    Ok(counts)
}

/// Relative frequency of wrong labels as a function of L1 distance to the
/// nearest boundary. Bins sum to 1; the map is empty when there are no errors.
pub fn boundary_error_histogram(pred: &LabelMap, gt: &LabelMap) -> Result<BTreeMap<u32, f64>> {
    let counts = boundary_error_counts(pred, gt)?;
    if counts.total() == 0 {
        log::info!("prediction has no errors; boundary histogram is empty");
    }
    Ok(counts.frequencies())
}

/// Seed coverage and false-positive rate, both in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedQuality {
    pub coverage_pct: f64,
    pub false_positive_pct: f64,
}

pub fn seed_quality(seeds: &SeedSet, gt: &LabelMap) -> Result<SeedQuality> {
    if (seeds.width(), seeds.height()) != (gt.width(), gt.height()) {
        return Err(Error::DimensionMismatch {
            field: "seeds",
            expected: gt.width() * gt.height(),
            actual: seeds.width() * seeds.height(),
        });
    }
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let wrong = seeds
        .entries()
        .iter()
        .filter(|&&(p, l)| gt.data()[p] != l)
        .count();
    let n = seeds.len() as f64;
    Ok(SeedQuality {
        coverage_pct: n / (gt.width() * gt.height()) as f64 * 100.0,
        false_positive_pct: wrong as f64 / n * 100.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_by_four_gt() -> LabelMap {
        #[rustfmt::skip]
        let data = vec![
            0, 0, 1, 1,
            0, 0, 1, 1,
            0, 0, 1, 1,
            0, 0, 0, 0,
        ];
        LabelMap::new(4, 4, 2, data).unwrap()
    }

    #[test]
    fn identity_prediction() {
        let gt = four_by_four_gt();
        let c = confusion(&gt, &gt).unwrap();
        assert_eq!(c.tp, vec![10, 6]);
        assert_eq!(c.fp, vec![0, 0]);
        assert_eq!(c.fn_, vec![0, 0]);
        assert_eq!(overall_iou(&c).unwrap(), 1.0);
    }

    #[test]
    fn all_zero_prediction() {
        let gt = four_by_four_gt();
        let pred = LabelMap::filled(4, 4, 2, 0).unwrap();
        let c = confusion(&pred, &gt).unwrap();
        assert_eq!((c.tp[0], c.fp[0], c.fn_[1], c.tp[1]), (10, 6, 6, 0));
        let iou = overall_iou(&c).unwrap();
        assert!((iou - 10.0 / 22.0).abs() < 1e-15);
        assert_eq!(format!("{:.2}", iou * 100.0), "45.45");
        assert_eq!(c.iou(1), Some(0.0));
    }

    #[test]
    fn unlabeled_gt_excluded() {
        let gt = LabelMap::filled(3, 3, 2, UNLABELED).unwrap();
        let pred = LabelMap::filled(3, 3, 2, 1).unwrap();
        let c = confusion(&pred, &gt).unwrap();
        assert_eq!(c, ConfusionCounts::new(2));
        assert!(matches!(overall_iou(&c), Err(Error::EmptyEvaluation)));
    }

    #[test]
    fn dims_checked() {
        let a = LabelMap::filled(3, 3, 2, 0).unwrap();
        let b = LabelMap::filled(3, 2, 2, 0).unwrap();
        assert!(confusion(&a, &b).is_err());
    }

    #[test]
    fn counts_accumulate() {
        let gt = four_by_four_gt();
        let pred = LabelMap::filled(4, 4, 2, 0).unwrap();
        let mut total = ConfusionCounts::default();
        total += &confusion(&pred, &gt).unwrap();
        total += &confusion(&gt, &gt).unwrap();
        assert_eq!(total.tp, vec![20, 6]);
    }

    #[test]
    fn boundary_of_half_planes() {
        let data = (0..24).map(|i| u8::from(i % 6 >= 3)).collect();
        let gt = LabelMap::new(6, 4, 2, data).unwrap();
        let b = boundary_mask(&gt);
        for r in 0..4 {
            for c in 0..6 {
                assert_eq!(b.get(r, c), c == 2 || c == 3);
            }
        }
        assert!(boundary_mask(&LabelMap::filled(4, 4, 1, 0).unwrap()).is_empty());
    }

    #[test]
    fn distance_corner_and_full() {
        let mut data = vec![false; 9];
        data[0] = true;
        let d = l1_distance_transform(&BinaryMask::new(3, 3, data).unwrap()).unwrap();
        assert_eq!(d, vec![0, 1, 2, 1, 2, 3, 2, 3, 4]);
        let full = BinaryMask::new(2, 2, vec![true; 4]).unwrap();
        assert_eq!(l1_distance_transform(&full).unwrap(), vec![0; 4]);
        assert!(l1_distance_transform(&BinaryMask::empty(2, 2)).is_err());
    }

    #[test]
    fn histogram_cases() {
        let gt = four_by_four_gt();
        assert!(boundary_error_histogram(&gt, &gt).unwrap().is_empty());

        // flip one boundary pixel
        let mut d = gt.data().to_vec();
        d[2] = 0;
        let pred = LabelMap::new(4, 4, 2, d).unwrap();
        let h = boundary_error_histogram(&pred, &gt).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
    }

    #[test]
    fn seed_quality_arithmetic() {
        let gt = LabelMap::filled(10, 10, 2, 0).unwrap();
        let all = SeedSet::from_label_map(&gt);
        let q = seed_quality(&all, &gt).unwrap();
        assert_eq!((q.coverage_pct, q.false_positive_pct), (100.0, 0.0));

        let mut entries: Vec<(usize, u8)> = (0..100).map(|p| (p, 0)).collect();
        entries[17].1 = 1;
        let seeds = SeedSet::new(10, 10, 2, entries).unwrap();
        assert!((seed_quality(&seeds, &gt).unwrap().false_positive_pct - 1.0).abs() < 1e-12);

        let none = SeedSet::new(10, 10, 2, vec![]).unwrap();
        assert!(seed_quality(&none, &gt).is_err());
    }
}
