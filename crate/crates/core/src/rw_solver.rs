//! Multi-class seeded random walker on the 4-adjacency grid.
//!
//! For each class `l` the unseeded potentials solve the grounded Laplacian
//! system `L_U x_U = -B^T x_seed`, with `x_seed` the indicator of the seeds
//! labeled `l`. `L_U` is never materialized: unknowns keep their four
//! neighbor slots and the operator is applied on the fly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{EdgeWeightGrid, LabelMap, ProbMap, SeedSet, MAX_LABELS, UNLABELED};

/// Grid size limit for [`dense_oracle_solve`].
pub const DENSE_ORACLE_MAX_PIXELS: usize = 4096;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 2000;

const NO_NEIGHBOR: u32 = u32::MAX;
const CHUNK: usize = 4096;

/// Per-class potentials plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct RwSolution {
    pub probs: ProbMap,
    /// CG iterations per class (0 for the dense oracle).
    pub iterations: Vec<usize>,
    /// Final Jacobi-scaled relative residual per class.
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
}

impl RwSolution {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

fn check_inputs(weights: &EdgeWeightGrid, seeds: &SeedSet, k: usize) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    if k == 0 || k > MAX_LABELS {
        return Err(Error::OutOfRange {
            field: "num_labels",
            detail: format!("{k} not in 1..={MAX_LABELS}"),
        });
    }
    if (weights.width(), weights.height()) != (seeds.width(), seeds.height()) {
        return Err(Error::DimensionMismatch {
            field: "seeds",
            expected: weights.width() * weights.height(),
            actual: seeds.width() * seeds.height(),
        });
    }
    if let Some(&(p, l)) = seeds.entries().iter().find(|e| usize::from(e.1) >= k) {
        return Err(Error::InvalidLabel {
            value: l,
            index: p,
            num_labels: k,
        });
    }
    Ok(())
}

/// The grounded system restricted to unseeded pixels.
struct GroundedSystem {
    /// Pixel index of each unknown.
    pixels: Vec<usize>,
    /// Unknown-to-unknown couplings; `NO_NEIGHBOR` marks an empty slot.
    neighbors: Vec<[u32; 4]>,
    couplings: Vec<[f64; 4]>,
    degree: Vec<f64>,
    /// Per class, `-B^T x_seed`: summed weight to seeds of that class.
    rhs: Vec<Vec<f64>>,
}

impl GroundedSystem {
    fn build(weights: &EdgeWeightGrid, seeds: &SeedSet, k: usize) -> Self {
        let n = weights.width() * weights.height();
        let mut seed_label = vec![UNLABELED; n];
        for &(p, l) in seeds.entries() {
            seed_label[p] = l;
        }
        let mut unknown_index = vec![NO_NEIGHBOR; n];
        let mut pixels = Vec::with_capacity(n - seeds.len());
        for p in 0..n {
            if seed_label[p] == UNLABELED {
                unknown_index[p] = pixels.len() as u32;
                pixels.push(p);
            }
        }
        let m = pixels.len();
        let mut neighbors = vec![[NO_NEIGHBOR; 4]; m];
        let mut couplings = vec![[0.0; 4]; m];
        let mut degree = vec![0.0; m];
        let mut rhs = vec![vec![0.0; m]; k];
        for (i, &p) in pixels.iter().enumerate() {
            let mut slot = 0;
            weights.for_each_neighbor(p, |q, w| {
                degree[i] += w;
                let l = seed_label[q];
                if l == UNLABELED {
                    neighbors[i][slot] = unknown_index[q];
                    couplings[i][slot] = w;
                    slot += 1;
                } else {
                    rhs[usize::from(l)][i] += w;
                }
            });
        }
        GroundedSystem {
            pixels,
            neighbors,
            couplings,
            degree,
            rhs,
        }
    }

    fn len(&self) -> usize {
        self.pixels.len()
    }

    /// `y = L_U x`; returns `x . y`, reduced in a fixed chunk order.
    fn apply_dot(&self, x: &[f64], y: &mut [f64]) -> f64 {
        let partial: Vec<f64> = y
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(chunk, out)| {
                let base = chunk * CHUNK;
                let mut xy = 0.0;
                for (j, yi) in out.iter_mut().enumerate() {
                    let i = base + j;
                    let mut acc = self.degree[i] * x[i];
                    for s in 0..4 {
                        let q = self.neighbors[i][s];
                        if q != NO_NEIGHBOR {
                            acc -= self.couplings[i][s] * x[q as usize];
                        }
                    }
                    *yi = acc;
                    xy += x[i] * acc;
                }
                xy
            })
            .collect();
        partial.iter().sum()
    }
}

/// Dot product with a fixed reduction order, so results do not depend on
/// thread scheduling.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum())
        .collect();
    partial.iter().sum()
}

struct CgOutcome {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Jacobi-preconditioned conjugate gradient from a zero initial guess.
///
/// Convergence is measured on the diagonally scaled residual
/// `||D^-1 r|| / ||D^-1 b||`, whose entries are each unknown's deviation
/// from the weighted average of its neighbors.
fn pcg(sys: &GroundedSystem, b: &[f64], tol: f64, max_iter: usize) -> CgOutcome {
    let m = sys.len();
    let inv_diag: Vec<f64> = sys.degree.iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; m];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let b_norm = dot(&z, &z).sqrt();
    if b_norm == 0.0 {
        return CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    let mut residual = 1.0;

    for iter in 1..=max_iter {
        let pap = sys.apply_dot(&p, &mut ap);
        if pap <= 0.0 || !pap.is_finite() {
            log::warn!("CG breakdown at iteration {iter} (p'Ap = {pap})");
            return CgOutcome {
                x,
                iterations: iter,
                residual,
                converged: false,
            };
        }
        let alpha = rz / pap;
        // x += alpha p; r -= alpha Ap; z = D^-1 r, accumulating z.z and r.z per chunk
        let partial: Vec<(f64, f64)> = x
            .par_chunks_mut(CHUNK)
            .zip(r.par_chunks_mut(CHUNK))
            .zip(z.par_chunks_mut(CHUNK))
            .zip(p.par_chunks(CHUNK).zip(ap.par_chunks(CHUNK)))
            .zip(inv_diag.par_chunks(CHUNK))
            .map(|((((xc, rc), zc), (pc, apc)), dc)| {
                let (mut zz, mut rzc) = (0.0, 0.0);
                for i in 0..xc.len() {
                    xc[i] += alpha * pc[i];
                    rc[i] -= alpha * apc[i];
                    zc[i] = rc[i] * dc[i];
                    zz += zc[i] * zc[i];
                    rzc += rc[i] * zc[i];
                }
                (zz, rzc)
            })
            .collect();
        let (zz, rz_next) = partial
            .iter()
            .fold((0.0, 0.0), |(a, b), &(c, d)| (a + c, b + d));
        residual = zz.sqrt() / b_norm;
        if residual <= tol {
            return CgOutcome {
                x,
                iterations: iter,
                residual,
                converged: true,
            };
        }
        let beta = rz_next / rz;
        rz = rz_next;
        p.par_chunks_mut(CHUNK)
            .zip(z.par_chunks(CHUNK))
            .for_each(|(pc, zc)| {
                for (pi, zi) in pc.iter_mut().zip(zc) {
                    *pi = zi + beta * *pi;
                }
            });
    }
    CgOutcome {
        x,
        iterations: max_iter,
        residual,
        converged: false,
    }
}

/// Writes seed indicators and solved unknowns into planar `f32` channels.
fn assemble(
    width: usize,
    height: usize,
    seeds: &SeedSet,
    pixels: &[usize],
    solutions: &[Vec<f64>],
) -> ProbMap {
    let n = width * height;
    let k = solutions.len();
    let mut data = vec![0f32; n * k];
    for &(p, l) in seeds.entries() {
        data[usize::from(l) * n + p] = 1.0;
    }
    data.par_chunks_mut(n)
        .zip(solutions.par_iter())
        .for_each(|(plane, x)| {
            for (&p, &v) in pixels.iter().zip(x) {
                plane[p] = v.clamp(0.0, 1.0) as f32;
            }
        });
    ProbMap::from_parts_unchecked(width, height, k, data)
}

/// Solves the `k` one-vs-rest random-walker systems by preconditioned CG.
///
/// Non-convergence within `max_iter` is logged and reported through
/// [`RwSolution::converged`]; the partial result is still returned.
pub fn rw_solve(
    weights: &EdgeWeightGrid,
    seeds: &SeedSet,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<RwSolution> {
    check_inputs(weights, seeds, k)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::OutOfRange {
            field: "tol",
            detail: format!("{tol} must be positive"),
        });
    }
    let sys = GroundedSystem::build(weights, seeds, k);
    let outcomes: Vec<CgOutcome> = sys
        .rhs
        .par_iter()
        .map(|b| pcg(&sys, b, tol, max_iter))
        .collect();
    for (l, o) in outcomes.iter().enumerate() {
        if !o.converged {
            log::warn!(
                "class {l}: CG stopped after {} iterations at relative residual {:.3e} (tol {tol:.1e})",
                o.iterations,
                o.residual
            );
        }
    }
    let (iterations, residuals, converged) = (
        outcomes.iter().map(|o| o.iterations).collect(),
        outcomes.iter().map(|o| o.residual).collect(),
        outcomes.iter().map(|o| o.converged).collect(),
    );
    let xs: Vec<Vec<f64>> = outcomes.into_iter().map(|o| o.x).collect();
    let probs = assemble(weights.width(), weights.height(), seeds, &sys.pixels, &xs);
    Ok(RwSolution {
        probs,
        iterations,
        residuals,
        converged,
    })
}

/// Reference solve of the same grounded systems by dense Gaussian elimination
/// with partial pivoting. Limited to [`DENSE_ORACLE_MAX_PIXELS`] pixels.
pub fn dense_oracle_solve(
    weights: &EdgeWeightGrid,
    seeds: &SeedSet,
    k: usize,
) -> Result<RwSolution> {
    let n = weights.width() * weights.height();
    if n > DENSE_ORACLE_MAX_PIXELS {
        return Err(Error::OracleSizeExceeded {
            pixels: n,
            limit: DENSE_ORACLE_MAX_PIXELS,
        });
    }
    check_inputs(weights, seeds, k)?;

    let mut is_seed = vec![None; n];
    for &(p, l) in seeds.entries() {
        is_seed[p] = Some(l);
    }
    let unknowns: Vec<usize> = (0..n).filter(|&p| is_seed[p].is_none()).collect();
    let m = unknowns.len();
    let mut col = vec![usize::MAX; n];
    for (i, &p) in unknowns.iter().enumerate() {
        col[p] = i;
    }

    // augmented matrix [L_U | rhs_0 .. rhs_{k-1}]
    let stride = m + k;
    let mut a = vec![0.0f64; m * stride];
    for (i, &p) in unknowns.iter().enumerate() {
        weights.for_each_neighbor(p, |q, w| {
            a[i * stride + i] += w;
            match is_seed[q] {
                None => a[i * stride + col[q]] -= w,
                Some(l) => a[i * stride + m + usize::from(l)] += w,
            }
        });
    }

    for c in 0..m {
        let pivot = (c..m)
            .max_by(|&i, &j| a[i * stride + c].abs().total_cmp(&a[j * stride + c].abs()))
            .expect("non-empty range");
        if a[pivot * stride + c] == 0.0 {
            return Err(Error::InvalidArgument("singular grounded system".into()));
        }
        if pivot != c {
            for j in 0..stride {
                a.swap(c * stride + j, pivot * stride + j);
            }
        }
        let diag = a[c * stride + c];
        for i in c + 1..m {
            let factor = a[i * stride + c] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in c..stride {
                a[i * stride + j] -= factor * a[c * stride + j];
            }
        }
    }
    let mut xs = vec![vec![0.0; m]; k];
    for (l, x) in xs.iter_mut().enumerate() {
        for i in (0..m).rev() {
            let mut s = a[i * stride + m + l];
            for j in i + 1..m {
                s -= a[i * stride + j] * x[j];
            }
            x[i] = s / a[i * stride + i];
        }
    }
    let probs = assemble(weights.width(), weights.height(), seeds, &unknowns, &xs);
    Ok(RwSolution {
        probs,
        iterations: vec![0; k],
        residuals: vec![0.0; k],
        converged: vec![true; k],
    })
}

/// Per-pixel argmax over channels (ties to the smaller index); seed pixels
/// always take their seed label.
pub fn argmax_labels(sol: &RwSolution, seeds: &SeedSet) -> LabelMap {
    let probs = &sol.probs;
    let (n, k) = (probs.pixels(), probs.channels());
    let data = probs.data();
    let mut labels: Vec<u8> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_v = data[p];
            for c in 1..k {
                let v = data[c * n + p];
                if v > best_v {
                    best = c;
                    best_v = v;
                }
            }
            best as u8
        })
        .collect();
    for &(p, l) in seeds.entries() {
        labels[p] = l;
    }
    LabelMap::from_parts_unchecked(probs.width(), probs.height(), k, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_weights(w01: f64, w12: f64) -> EdgeWeightGrid {
        EdgeWeightGrid::new(3, 1, vec![w01, w12], vec![]).unwrap()
    }

    #[test]
    fn symmetric_line() {
        let seeds = SeedSet::new(3, 1, 2, vec![(0, 0), (2, 1)]).unwrap();
        for sol in [
            rw_solve(&line_weights(1.0, 1.0), &seeds, 2, 1e-12, 100).unwrap(),
            dense_oracle_solve(&line_weights(1.0, 1.0), &seeds, 2).unwrap(),
        ] {
            assert!((sol.probs.get(0, 0, 1) - 0.5).abs() < 1e-7);
            assert!((sol.probs.get(1, 0, 1) - 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn weighted_line() {
        // (2 + 1) x = 2 * 1 + 1 * 0
        let seeds = SeedSet::new(3, 1, 2, vec![(0, 0), (2, 1)]).unwrap();
        let sol = rw_solve(&line_weights(2.0, 1.0), &seeds, 2, 1e-12, 100).unwrap();
        assert!((f64::from(sol.probs.get(0, 0, 1)) - 2.0 / 3.0).abs() < 1e-7);
        let dense = dense_oracle_solve(&line_weights(2.0, 1.0), &seeds, 2).unwrap();
        assert!((f64::from(dense.probs.get(0, 0, 1)) - 2.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn fully_seeded() {
        let g = EdgeWeightGrid::uniform(2, 2, 1.0).unwrap();
        let seeds = SeedSet::new(2, 2, 3, (0..4).map(|p| (p, 1)).collect()).unwrap();
        let sol = rw_solve(&g, &seeds, 3, 1e-8, 10).unwrap();
        assert_eq!(sol.probs.plane(1), &[1.0; 4]);
        assert_eq!(sol.probs.plane(0), &[0.0; 4]);
        assert_eq!(sol.iterations, vec![0, 0, 0]);
    }

    #[test]
    fn single_seed_harmonic_constant() {
        let g = EdgeWeightGrid::uniform(2, 2, 1.0).unwrap();
        let seeds = SeedSet::new(2, 2, 2, vec![(0, 0)]).unwrap();
        let dense = dense_oracle_solve(&g, &seeds, 2).unwrap();
        assert_eq!(dense.probs.plane(0), &[1.0; 4]);
        assert_eq!(dense.probs.plane(1), &[0.0; 4]);
        let cg = rw_solve(&g, &seeds, 2, 1e-12, 50).unwrap();
        for &v in cg.probs.plane(0) {
            assert!((v - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn empty_seeds_rejected() {
        let g = EdgeWeightGrid::uniform(2, 2, 1.0).unwrap();
        let seeds = SeedSet::new(2, 2, 2, vec![]).unwrap();
        assert!(matches!(
            rw_solve(&g, &seeds, 2, 1e-6, 10),
            Err(Error::EmptySeeds)
        ));
        assert!(matches!(
            dense_oracle_solve(&g, &seeds, 2),
            Err(Error::EmptySeeds)
        ));
    }

    #[test]
    fn oracle_size_cap() {
        let g = EdgeWeightGrid::uniform(65, 64, 1.0).unwrap();
        let seeds = SeedSet::new(65, 64, 2, vec![(0, 0)]).unwrap();
        assert!(matches!(
            dense_oracle_solve(&g, &seeds, 2),
            Err(Error::OracleSizeExceeded { .. })
        ));
    }

    #[test]
    fn label_beyond_k_rejected() {
        let g = EdgeWeightGrid::uniform(2, 1, 1.0).unwrap();
        let seeds = SeedSet::new(2, 1, 3, vec![(0, 2)]).unwrap();
        assert!(rw_solve(&g, &seeds, 2, 1e-6, 10).is_err());
    }

    #[test]
    fn non_convergence_reported() {
        let g = EdgeWeightGrid::uniform(40, 1, 1.0).unwrap();
        let seeds = SeedSet::new(40, 1, 2, vec![(0, 0), (39, 1)]).unwrap();
        let sol = rw_solve(&g, &seeds, 2, 1e-14, 2).unwrap();
        assert!(!sol.all_converged());
        assert_eq!(sol.iterations, vec![2, 2]);
    }

    fn sol_from(probs: Vec<f32>, w: usize, k: usize) -> RwSolution {
        RwSolution {
            probs: ProbMap::new(w, 1, k, probs).unwrap(),
            iterations: vec![0; k],
            residuals: vec![0.0; k],
            converged: vec![true; k],
        }
    }

    #[test]
    fn argmax_rules() {
        let sol = sol_from(vec![0.7, 0.5, 0.2, 0.3, 0.5, 0.8], 3, 2);
        let none = SeedSet::new(3, 1, 2, vec![]).unwrap();
        assert_eq!(argmax_labels(&sol, &none).data(), &[0, 0, 1]);
        let forced = SeedSet::new(3, 1, 2, vec![(0, 1)]).unwrap();
        assert_eq!(argmax_labels(&sol, &forced).data(), &[1, 0, 1]);
    }
}
