//! Domain types shared by every stage of the pipeline.
//!
//! All types are immutable once built. Public constructors validate their
//! invariants; `validate` can be called again at any time and reports the
//! offending field on failure.

use crate::error::{Error, Result};

/// Label value reserved for "no label". Real labels are `0..num_labels`.
pub const UNLABELED: u8 = 255;

/// Largest supported number of classes (the sentinel takes the last byte value).
pub const MAX_LABELS: usize = 255;

/// Lower bound applied to every edge weight so the grid graph stays connected.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// Tolerance on per-pixel channel sums for maps flagged as normalized.
pub const NORMALIZED_TOL: f32 = 1e-4;

pub trait Validate {
    fn validate(&self) -> Result<()>;
}

fn check_len(field: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            field,
            expected,
            actual,
        });
    }
    Ok(())
}

fn check_nonzero(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroSize { width, height });
    }
    Ok(())
}

/// Row-major image with 1 (gray) or 3 (RGB) channels, interleaved, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let img = ImageRgb {
            width,
            height,
            channels,
            data,
        };
        img.validate()?;
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Luminance plane. Gray images are returned as-is; RGB uses Rec. 601 weights.
    pub fn luminance(&self) -> Vec<f64> {
        match self.channels {
            1 => self.data.iter().map(|&v| f64::from(v)).collect(),
            _ => self
                .data
                .chunks_exact(3)
                .map(|px| {
                    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2])
                })
                .collect(),
        }
    }
}

impl Validate for ImageRgb {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.width, self.height)?;
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::OutOfRange {
                field: "channels",
                detail: format!("{} (expected 1 or 3)", self.channels),
            });
        }
        check_len(
            "data",
            self.width * self.height * self.channels,
            self.data.len(),
        )?;
        for (index, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    field: "data",
                    index,
                });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    field: "data",
                    detail: format!("{v} at index {index} not in [0,1]"),
                });
            }
        }
        Ok(())
    }
}

/// Row-major per-pixel label indices with [`UNLABELED`] as the sentinel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    num_labels: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, num_labels: usize, data: Vec<u8>) -> Result<Self> {
        let map = LabelMap {
            width,
            height,
            num_labels,
            data,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn filled(width: usize, height: usize, num_labels: usize, label: u8) -> Result<Self> {
        Self::new(width, height, num_labels, vec![label; width * height])
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        num_labels: usize,
        data: Vec<u8>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data
            .iter()
            .all(|&l| l == UNLABELED || usize::from(l) < num_labels));
        LabelMap {
            width,
            height,
            num_labels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn has_unlabeled(&self) -> bool {
        self.data.contains(&UNLABELED)
    }

    /// Sorted list of distinct labels present (sentinel excluded).
    pub fn labels_present(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.data {
            seen[usize::from(l)] = true;
        }
        (0..MAX_LABELS as u8)
            .filter(|&l| seen[usize::from(l)])
            .collect()
    }

    /// Foreground mask of one label.
    pub fn mask_of(&self, label: u8) -> BinaryMask {
        BinaryMask::from_parts_unchecked(
            self.width,
            self.height,
            self.data.iter().map(|&l| l == label).collect(),
        )
    }

    /// Same data reinterpreted with a different class count.
    pub fn with_num_labels(self, num_labels: usize) -> Result<Self> {
        Self::new(self.width, self.height, num_labels, self.data)
    }
}

impl Validate for LabelMap {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.width, self.height)?;
        if self.num_labels == 0 || self.num_labels > MAX_LABELS {
            return Err(Error::OutOfRange {
                field: "num_labels",
                detail: format!("{} not in 1..={MAX_LABELS}", self.num_labels),
            });
        }
        check_len("data", self.width * self.height, self.data.len())?;
        if let Some((index, &value)) = self
            .data
            .iter()
            .enumerate()
            .find(|&(_, &l)| l != UNLABELED && usize::from(l) >= self.num_labels)
        {
            return Err(Error::InvalidLabel {
                value,
                index,
                num_labels: self.num_labels,
            });
        }
        Ok(())
    }
}

/// `channels` planar row-major planes of non-negative finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    channels: usize,
    normalized: bool,
    data: Vec<f32>,
}

impl ProbMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        let map = ProbMap {
            width,
            height,
            channels,
            normalized: false,
            data,
        };
        map.validate()?;
        Ok(map)
    }

    /// Builds a map whose per-pixel channel sums must be 1 within [`NORMALIZED_TOL`].
    pub fn new_normalized(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let map = ProbMap {
            width,
            height,
            channels,
            normalized: true,
            data,
        };
        map.validate()?;
        Ok(map)
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        ProbMap {
            width,
            height,
            channels,
            normalized: false,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let n = self.pixels();
        &self.data[channel * n..(channel + 1) * n]
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[channel * self.pixels() + row * self.width + col]
    }
}

impl Validate for ProbMap {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.width, self.height)?;
        if self.channels == 0 {
            return Err(Error::OutOfRange {
                field: "channels",
                detail: "0".into(),
            });
        }
        check_len("data", self.pixels() * self.channels, self.data.len())?;
        for (index, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    field: "data",
                    index,
                });
            }
            if v < 0.0 {
                return Err(Error::OutOfRange {
                    field: "data",
                    detail: format!("negative value {v} at index {index}"),
                });
            }
        }
        if self.normalized {
            let n = self.pixels();
            for p in 0..n {
                let sum: f32 = (0..self.channels).map(|k| self.data[k * n + p]).sum();
                if (sum - 1.0).abs() > NORMALIZED_TOL {
                    return Err(Error::OutOfRange {
                        field: "data",
                        detail: format!("channel sum {sum} at pixel {p} is not 1"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Row-major boolean field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        let mask = BinaryMask {
            width,
            height,
            data,
        };
        mask.validate()?;
        Ok(mask)
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, data: Vec<bool>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        BinaryMask {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    /// Value at a signed coordinate; outside the image reads as `false`.
    #[inline]
    pub fn get_or_bg(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            false
        } else {
            self.data[row as usize * self.width + col as usize]
        }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

impl Validate for BinaryMask {
    fn validate(&self) -> Result<()> {
        check_len("data", self.width * self.height, self.data.len())
    }
}

/// Weights of the 4-adjacency grid graph.
///
/// `horizontal[r * (width - 1) + c]` joins `(r, c)` and `(r, c + 1)`;
/// `vertical[r * width + c]` joins `(r, c)` and `(r + 1, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeightGrid {
    width: usize,
    height: usize,
    horizontal: Vec<f64>,
    vertical: Vec<f64>,
}

impl EdgeWeightGrid {
    pub fn new(
        width: usize,
        height: usize,
        horizontal: Vec<f64>,
        vertical: Vec<f64>,
    ) -> Result<Self> {
        let grid = EdgeWeightGrid {
            width,
            height,
            horizontal,
            vertical,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn uniform(width: usize, height: usize, weight: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![weight; height * width.saturating_sub(1)],
            vec![weight; height.saturating_sub(1) * width],
        )
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        horizontal: Vec<f64>,
        vertical: Vec<f64>,
    ) -> Self {
        EdgeWeightGrid {
            width,
            height,
            horizontal,
            vertical,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn horizontal(&self) -> &[f64] {
        &self.horizontal
    }

    pub fn vertical(&self) -> &[f64] {
        &self.vertical
    }

    /// Weight of the edge between `(row, col)` and `(row, col + 1)`.
    #[inline]
    pub fn right(&self, row: usize, col: usize) -> f64 {
        self.horizontal[row * (self.width - 1) + col]
    }

    /// Weight of the edge between `(row, col)` and `(row + 1, col)`.
    #[inline]
    pub fn down(&self, row: usize, col: usize) -> f64 {
        self.vertical[row * self.width + col]
    }

    /// Weighted degree of every pixel.
    pub fn degrees(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let mut deg = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                let p = r * w + c;
                if c + 1 < w {
                    let e = self.right(r, c);
                    deg[p] += e;
                    deg[p + 1] += e;
                }
                if r + 1 < h {
                    let e = self.down(r, c);
                    deg[p] += e;
                    deg[p + w] += e;
                }
            }
        }
        deg
    }

    /// Visits the 4-neighbors of pixel `p` as `(neighbor_index, weight)`.
    #[inline]
    pub fn for_each_neighbor(&self, p: usize, mut f: impl FnMut(usize, f64)) {
        let w = self.width;
        let (r, c) = (p / w, p % w);
        if c > 0 {
            f(p - 1, self.right(r, c - 1));
        }
        if c + 1 < w {
            f(p + 1, self.right(r, c));
        }
        if r > 0 {
            f(p - w, self.down(r - 1, c));
        }
        if r + 1 < self.height {
            f(p + w, self.down(r, c));
        }
    }

    /// Copy with every weight multiplied by `factor`, floored at [`WEIGHT_FLOOR`].
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let f = |v: &f64| (v * factor).max(WEIGHT_FLOOR);
        Self::new(
            self.width,
            self.height,
            self.horizontal.iter().map(f).collect(),
            self.vertical.iter().map(f).collect(),
        )
    }
}

impl Validate for EdgeWeightGrid {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.width, self.height)?;
        check_len(
            "horizontal",
            self.height * (self.width - 1),
            self.horizontal.len(),
        )?;
        check_len(
            "vertical",
            (self.height - 1) * self.width,
            self.vertical.len(),
        )?;
        for (field, values) in [
            ("horizontal", &self.horizontal),
            ("vertical", &self.vertical),
        ] {
            for (index, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { field, index });
                }
                if v < WEIGHT_FLOOR {
                    return Err(Error::OutOfRange {
                        field,
                        detail: format!("weight {v} at index {index} below floor {WEIGHT_FLOOR}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Sparse hard label assignments, sorted by pixel index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    width: usize,
    height: usize,
    num_labels: usize,
    entries: Vec<(usize, u8)>,
}

impl SeedSet {
    /// Entries may arrive in any order; they are sorted by pixel index.
    pub fn new(
        width: usize,
        height: usize,
        num_labels: usize,
        mut entries: Vec<(usize, u8)>,
    ) -> Result<Self> {
        entries.sort_unstable_by_key(|&(p, _)| p);
        let seeds = SeedSet {
            width,
            height,
            num_labels,
            entries,
        };
        seeds.validate()?;
        Ok(seeds)
    }

    /// Every labeled pixel of `map` becomes a seed.
    pub fn from_label_map(map: &LabelMap) -> Self {
        let entries = map
            .data()
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l != UNLABELED)
            .map(|(p, &l)| (p, l))
            .collect();
        SeedSet {
            width: map.width(),
            height: map.height(),
            num_labels: map.num_labels(),
            entries,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn entries(&self) -> &[(usize, u8)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dense view: seed pixels carry their label, everything else is [`UNLABELED`].
    pub fn to_label_map(&self) -> LabelMap {
        let mut data = vec![UNLABELED; self.width * self.height];
        for &(p, l) in &self.entries {
            data[p] = l;
        }
        LabelMap::from_parts_unchecked(self.width, self.height, self.num_labels, data)
    }

    /// Sorted distinct labels carried by the seeds.
    pub fn labels_present(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &(_, l) in &self.entries {
            seen[usize::from(l)] = true;
        }
        (0..MAX_LABELS as u8)
            .filter(|&l| seen[usize::from(l)])
            .collect()
    }
}

impl Validate for SeedSet {
    fn validate(&self) -> Result<()> {
        check_nonzero(self.width, self.height)?;
        if self.num_labels == 0 || self.num_labels > MAX_LABELS {
            return Err(Error::OutOfRange {
                field: "num_labels",
                detail: format!("{} not in 1..={MAX_LABELS}", self.num_labels),
            });
        }
        let n = self.width * self.height;
        for (i, &(p, l)) in self.entries.iter().enumerate() {
            if p >= n {
                return Err(Error::OutOfRange {
                    field: "entries",
                    detail: format!("pixel index {p} outside {n} pixels"),
                });
            }
            if usize::from(l) >= self.num_labels {
                return Err(Error::InvalidLabel {
                    value: l,
                    index: p,
                    num_labels: self.num_labels,
                });
            }
            if i > 0 && self.entries[i - 1].0 == p {
                return Err(Error::OutOfRange {
                    field: "entries",
                    detail: format!("duplicate pixel index {p}"),
                });
            }
        }
        Ok(())
    }
}

/// Hyperparameters of the refinement pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Minimum top-2 probability margin for a potential seed.
    pub t: f64,
    pub n_thin: usize,
    pub n_prun: usize,
    /// Edge-weight sharpness.
    pub beta: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for PipelineConfig {
    /// Hyperparameters tuned for high-resolution natural images.
    fn default() -> Self {
        PipelineConfig {
            t: 0.03,
            n_thin: 35,
            n_prun: 20,
            beta: 11.3,
            solver_tol: 1e-6,
            solver_max_iter: 2000,
        }
    }
}

impl Validate for PipelineConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::OutOfRange {
                field: "t",
                detail: format!("{} not in [0,1]", self.t),
            });
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::OutOfRange {
                field: "beta",
                detail: format!("{} must be positive", self.beta),
            });
        }
        if !(self.solver_tol.is_finite() && self.solver_tol > 0.0) {
            return Err(Error::OutOfRange {
                field: "solver_tol",
                detail: format!("{} must be positive", self.solver_tol),
            });
        }
        if self.solver_max_iter == 0 {
            return Err(Error::OutOfRange {
                field: "solver_max_iter",
                detail: "must be positive".into(),
            });
        }
        Ok(())
    }
}
