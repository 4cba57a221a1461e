//! Binary hit-or-miss, thinning and pruning with 3x3 ternary structuring elements.
//!
//! Pixels outside the image read as background. Within one structuring
//! element pass all matches are found on the pass input and removed
//! together.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Foreground,
    Background,
    DontCare,
}

/// Row-major ring order of the 8 neighbors, clockwise from the top-left corner.
const RING: [usize; 8] = [0, 1, 2, 5, 8, 7, 6, 3];
/// `(drow, dcol)` of each ring position.
const RING_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// A 3x3 ternary pattern, row-major.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement3x3 {
    cells: [Cell; 9],
}

impl StructuringElement3x3 {
    pub fn new(cells: [Cell; 9]) -> Self {
        StructuringElement3x3 { cells }
    }

    /// Parses 9 characters from `{1, 0, x}` in row-major order.
    pub fn parse(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.len() != 9 {
            return Err(Error::InvalidArgument(format!(
                "structuring element needs 9 cells, got {:?}",
                s
            )));
        }
        let mut cells = [Cell::DontCare; 9];
        for (cell, ch) in cells.iter_mut().zip(chars) {
            *cell = match ch {
                '1' => Cell::Foreground,
                '0' => Cell::Background,
                'x' | 'X' => Cell::DontCare,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "invalid structuring element cell {other:?}"
                    )))
                }
            };
        }
        Ok(StructuringElement3x3 { cells })
    }

    pub fn cells(&self) -> &[Cell; 9] {
        &self.cells
    }

    pub fn center(&self) -> Cell {
        self.cells[4]
    }

    /// Rotates the ring of neighbors one step (45 degrees) clockwise.
    pub fn rotate45(&self) -> Self {
        let mut cells = self.cells;
        for i in 0..8 {
            cells[RING[(i + 1) % 8]] = self.cells[RING[i]];
        }
        StructuringElement3x3 { cells }
    }

    /// 256-entry table: does a foreground center with the given ring code match?
    ///
    /// Bit `i` of the code is set when ring neighbor `i` is foreground.
    fn ring_table(&self) -> [bool; 256] {
        let mut fg = 0u8;
        let mut bg = 0u8;
        for (i, &idx) in RING.iter().enumerate() {
            match self.cells[idx] {
                Cell::Foreground => fg |= 1 << i,
                Cell::Background => bg |= 1 << i,
                Cell::DontCare => {}
            }
        }
        let mut table = [false; 256];
        for (code, hit) in table.iter_mut().enumerate() {
            let code = code as u8;
            *hit = code & fg == fg && code & bg == 0;
        }
        table
    }
}

impl fmt::Display for StructuringElement3x3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cells {
            let ch = match c {
                Cell::Foreground => '1',
                Cell::Background => '0',
                Cell::DontCare => 'x',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StructuringElement3x3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SE({self})")
    }
}

fn rotation_family(first: &str) -> [StructuringElement3x3; 8] {
    let mut se = StructuringElement3x3::parse(first).expect("valid pattern");
    let mut out = [se; 8];
    for slot in out.iter_mut().skip(1) {
        se = se.rotate45();
        *slot = se;
    }
    out
}

/// B1..B8: background top row, foreground bottom row, then 45-degree rotations.
pub fn thinning_elements() -> [StructuringElement3x3; 8] {
    rotation_family("000x1x111")
}

/// Endpoint elements: a foreground center with exactly one foreground neighbor.
pub fn endpoint_elements() -> [StructuringElement3x3; 8] {
    rotation_family("010010000")
}

/// Hit-or-miss transform by direct 3x3 window evaluation.
pub fn hit_or_miss(mask: &BinaryMask, se: &StructuringElement3x3) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = vec![false; w * h];
    out.par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(r, row)| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = se.cells.iter().enumerate().all(|(i, cell)| {
                    let (dr, dc) = (i as isize / 3 - 1, i as isize % 3 - 1);
                    let px = mask.get_or_bg(r as isize + dr, c as isize + dc);
                    match cell {
                        Cell::Foreground => px,
                        Cell::Background => !px,
                        Cell::DontCare => true,
                    }
                });
            }
        });
    BinaryMask::from_parts_unchecked(w, h, out)
}

/// Mutable working state: pixel data plus the frontier of foreground pixels
/// that touch background. Only frontier pixels can match an element with a
/// background cell, which every thinning and endpoint element has.
struct Frontier {
    width: usize,
    height: usize,
    data: Vec<bool>,
    queued: Vec<bool>,
    list: Vec<usize>,
}

impl Frontier {
    fn new(mask: &BinaryMask) -> Self {
        let (width, height) = (mask.width(), mask.height());
        let mut f = Frontier {
            width,
            height,
            data: mask.data().to_vec(),
            queued: vec![false; width * height],
            list: Vec::new(),
        };
        for p in 0..width * height {
            if f.data[p] && f.ring_code(p) != 0xff {
                f.queued[p] = true;
                f.list.push(p);
            }
        }
        f
    }

    #[inline]
    fn ring_code(&self, p: usize) -> u8 {
        let (r, c) = ((p / self.width) as isize, (p % self.width) as isize);
        let mut code = 0u8;
        for (i, &(dr, dc)) in RING_OFFSETS.iter().enumerate() {
            let (rr, cc) = (r + dr, c + dc);
            if rr >= 0
                && cc >= 0
                && (rr as usize) < self.height
                && (cc as usize) < self.width
                && self.data[rr as usize * self.width + cc as usize]
            {
                code |= 1 << i;
            }
        }
        code
    }

    /// Removes every frontier pixel whose ring code satisfies `hit`, all at once.
    fn remove_matching(&mut self, hit: impl Fn(u8) -> bool + Sync) -> usize {
        let matched: Vec<usize> = self
            .list
            .par_iter()
            .copied()
            .filter(|&p| hit(self.ring_code(p)))
            .collect();
        for &p in &matched {
            self.data[p] = false;
        }
        if matched.is_empty() {
            return 0;
        }
        // drop removed pixels, then enqueue foreground neighbors of removed pixels
        let data = &self.data;
        let queued = &mut self.queued;
        self.list.retain(|&p| {
            let keep = data[p];
            if !keep {
                queued[p] = false;
            }
            keep
        });
        for &p in &matched {
            let (r, c) = ((p / self.width) as isize, (p % self.width) as isize);
            for &(dr, dc) in &RING_OFFSETS {
                let (rr, cc) = (r + dr, c + dc);
                if rr < 0 || cc < 0 || rr as usize >= self.height || cc as usize >= self.width {
                    continue;
                }
                let q = rr as usize * self.width + cc as usize;
                if self.data[q] && !self.queued[q] {
                    self.queued[q] = true;
                    self.list.push(q);
                }
            }
        }
        matched.len()
    }

    fn into_mask(self) -> BinaryMask {
        BinaryMask::from_parts_unchecked(self.width, self.height, self.data)
    }
}

/// Thinning: each iteration applies B1..B8 in sequence. Stops early once an
/// iteration removes nothing.
pub fn thin(mask: &BinaryMask, n_iter: usize) -> BinaryMask {
    if n_iter == 0 {
        return mask.clone();
    }
    let tables: Vec<[bool; 256]> = thinning_elements()
        .iter()
        .map(|se| se.ring_table())
        .collect();
    let mut state = Frontier::new(mask);
    for _ in 0..n_iter {
        let mut removed = 0;
        for table in &tables {
            removed += state.remove_matching(|code| table[usize::from(code)]);
        }
        if removed == 0 {
            break;
        }
    }
    state.into_mask()
}

/// Pruning: each iteration removes every endpoint pixel simultaneously.
pub fn prune(mask: &BinaryMask, n_iter: usize) -> BinaryMask {
    if n_iter == 0 {
        return mask.clone();
    }
    let mut table = [false; 256];
    for se in endpoint_elements() {
        for (slot, hit) in table.iter_mut().zip(se.ring_table()) {
            *slot |= hit;
        }
    }
    let mut state = Frontier::new(mask);
    for _ in 0..n_iter {
        if state.remove_matching(|code| table[usize::from(code)]) == 0 {
            break;
        }
    }
    state.into_mask()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        let data = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryMask::new(w, h, data).unwrap()
    }

    #[test]
    fn family_shapes() {
        let b = thinning_elements();
        assert_eq!(b[0].to_string(), "000x1x111");
        assert_eq!(b[1].to_string(), "x0011011x");
        assert_eq!(b[2].to_string(), "1x01101x0");
        assert_eq!(
            b[0].rotate45().rotate45().rotate45().rotate45().to_string(),
            "111x1x000"
        );
        for se in b.iter().chain(endpoint_elements().iter()) {
            assert_eq!(se.center(), Cell::Foreground);
        }
        // eight distinct rotations
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(b[i], b[j]);
            }
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(StructuringElement3x3::parse("0001").is_err());
        assert!(StructuringElement3x3::parse("00000000y").is_err());
    }

    #[test]
    fn hom_empty_and_isolated() {
        let empty = BinaryMask::empty(5, 4);
        for se in thinning_elements() {
            assert!(hit_or_miss(&empty, &se).is_empty());
        }
        let m = mask_from(&["...", ".#.", "..."]);
        let se = StructuringElement3x3::parse("000010000").unwrap();
        let out = hit_or_miss(&m, &se);
        assert_eq!(out.count(), 1);
        assert!(out.get(1, 1));
    }

    #[test]
    fn thin_empty_and_isolated() {
        let empty = BinaryMask::empty(6, 6);
        assert_eq!(thin(&empty, 5), empty);
        let m = mask_from(&[".....", "..#..", "....."]);
        assert_eq!(thin(&m, 10), m);
    }

    #[test]
    fn thin_line_is_fixed() {
        let m = mask_from(&["........", ".######.", "........"]);
        assert_eq!(thin(&m, 3), m);
    }

    #[test]
    fn prune_line() {
        let m = mask_from(&[".......", ".#####.", "......."]);
        let out = prune(&m, 1);
        assert_eq!(out, mask_from(&[".......", "..###..", "......."]));
        // two more iterations leave a single, unremovable pixel
        assert_eq!(prune(&m, 5), mask_from(&[".......", "...#...", "......."]));
    }

    #[test]
    fn prune_square_and_empty() {
        let m = mask_from(&[
            ".......", ".#####.", ".#####.", ".#####.", ".#####.", ".#####.", ".......",
        ]);
        assert_eq!(prune(&m, 4), m);
        let e = BinaryMask::empty(3, 3);
        assert_eq!(prune(&e, 2), e);
    }

    #[test]
    fn prune_removes_spur_branch() {
        let m = mask_from(&[
            ".........",
            ".###.....",
            ".###.....",
            ".#######.",
            ".........",
        ]);
        // the spur loses one pixel per iteration from its tip
        let out = prune(&m, 2);
        assert!(!out.get(3, 7) && !out.get(3, 6));
        assert!(out.get(3, 5));
        assert!(out.get(1, 1));
    }

    #[test]
    fn thin_zero_iterations_identity() {
        let m = mask_from(&["###", "###", "###"]);
        assert_eq!(thin(&m, 0), m);
        assert_eq!(prune(&m, 0), m);
    }
}
