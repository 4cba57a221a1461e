#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwrefine_core::morphology::{endpoint_elements, thinning_elements};
use rwrefine_core::{BinaryMask, LabelMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::new(w, h, (0..w * h).map(|_| rng.gen_bool(density)).collect()).unwrap()
}

pub fn random_labels(rng: &mut ChaCha8Rng, w: usize, h: usize, k: u8) -> LabelMap {
    LabelMap::new(
        w,
        h,
        usize::from(k),
        (0..w * h).map(|_| rng.gen_range(0..k)).collect(),
    )
    .unwrap()
}

/// Connected components of cells equal to `value` on a grid padded by a
/// one-pixel background frame.
pub fn padded_components(mask: &BinaryMask, value: bool, eight: bool) -> usize {
    let (w, h) = (mask.width() + 2, mask.height() + 2);
    let cell = |r: usize, c: usize| {
        if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
            false
        } else {
            mask.get(r - 1, c - 1)
        }
    };
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] || cell(start / w, start % w) != value {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                        continue;
                    }
                    let q = nr as usize * w + nc as usize;
                    if !seen[q] && cell(nr as usize, nc as usize) == value {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
    }
    count
}

/// Hit-or-miss from the pattern string, reading out-of-image cells as background.
pub fn hit_or_miss_oracle(mask: &BinaryMask, pattern: &str) -> BinaryMask {
    let pat: Vec<char> = pattern.chars().collect();
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let mut hit = true;
            for (i, &want) in pat.iter().enumerate() {
                let (rr, cc) = (r + i as isize / 3 - 1, c + i as isize % 3 - 1);
                let inside = rr >= 0 && cc >= 0 && rr < h && cc < w;
                let v = inside && mask.get(rr as usize, cc as usize);
                hit &= match want {
                    '1' => v,
                    '0' => !v,
                    _ => true,
                };
            }
            out.push(hit);
        }
    }
    BinaryMask::new(mask.width(), mask.height(), out).unwrap()
}

pub fn minus(a: &BinaryMask, b: &BinaryMask) -> BinaryMask {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| x && !y)
        .collect();
    BinaryMask::new(a.width(), a.height(), data).unwrap()
}

pub fn thin_reference(mask: &BinaryMask, n: usize) -> BinaryMask {
    let mut m = mask.clone();
    for _ in 0..n {
        for se in thinning_elements() {
            m = minus(&m, &hit_or_miss_oracle(&m, &se.to_string()));
        }
    }
    m
}

pub fn prune_reference(mask: &BinaryMask, n: usize) -> BinaryMask {
    let mut m = mask.clone();
    for _ in 0..n {
        let hits: Vec<BinaryMask> = endpoint_elements()
            .iter()
            .map(|se| hit_or_miss_oracle(&m, &se.to_string()))
            .collect();
        let any = (0..m.data().len())
            .map(|p| hits.iter().any(|h| h.data()[p]))
            .collect();
        m = minus(&m, &BinaryMask::new(m.width(), m.height(), any).unwrap());
    }
    m
}
