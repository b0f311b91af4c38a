//! Smoothed-aggregation algebraic multigrid. One V-cycle with symmetric
//! Gauss-Seidel smoothing is a fixed linear operator, so it can serve as a
//! preconditioner stage.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut};

use super::sparse::CsrMatrix;
use super::Preconditioner;
use crate::error::{Error, Result};

/// `j` is a strong neighbour of `i` when `|a_ij| ≥ θ √|a_ii a_jj|`.
const STRENGTH_THRESHOLD: f64 = 0.08;
/// Levels are added until the operator is at most this size.
const COARSE_SIZE: usize = 400;
const MAX_LEVELS: usize = 16;
const PROLONGATION_WEIGHT: f64 = 2.0 / 3.0;

#[derive(Debug)]
struct Level {
    a: CsrMatrix,
    p: CsrMatrix,
    r: CsrMatrix,
    inv_diag: Vec<f64>,
}

#[derive(Debug)]
pub struct Amg {
    levels: Vec<Level>,
    coarse: Lu<usize, f64>,
    coarse_size: usize,
}

fn inverse_diagonal(a: &CsrMatrix) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| {
            let d = a.get(i, i);
            if d != 0.0 {
                1.0 / d
            } else {
                0.0
            }
        })
        .collect()
}

/// Greedy aggregation on the strength graph: seed aggregates from nodes
/// whose strong neighbours are all free, attach stragglers to a neighbouring
/// aggregate, and group whatever is left.
fn aggregate(a: &CsrMatrix) -> (Vec<usize>, usize) {
    let n = a.nrows();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).abs()).collect();
    let strong: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            a.row(i)
                .filter(|&(j, v)| j != i && v.abs() >= STRENGTH_THRESHOLD * (diag[i] * diag[j]).sqrt() && v != 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    const FREE: usize = usize::MAX;
    let mut agg = vec![FREE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] != FREE || strong[i].is_empty() || strong[i].iter().any(|&j| agg[j] != FREE) {
            continue;
        }
        agg[i] = count;
        for &j in &strong[i] {
            agg[j] = count;
        }
        count += 1;
    }
    let seeded = agg.clone();
    for i in 0..n {
        if agg[i] == FREE {
            if let Some(&j) = strong[i].iter().find(|&&j| seeded[j] != FREE) {
                agg[i] = seeded[j];
            }
        }
    }
    for i in 0..n {
        if agg[i] != FREE {
            continue;
        }
        agg[i] = count;
        for &j in &strong[i] {
            if agg[j] == FREE {
                agg[j] = count;
            }
        }
        count += 1;
    }
    (agg, count)
}

fn lu_factor(a: &CsrMatrix) -> Result<Lu<usize, f64>> {
    let n = a.nrows();
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..n {
        for (j, v) in a.row(i) {
            t.push(Triplet::new(i, j, v));
        }
    }
    let singular = || Error::SingularPivot(0);
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t).map_err(|_| singular())?;
    let symbolic = SymbolicLu::try_new(m.symbolic()).map_err(|_| singular())?;
    Lu::try_new_with_symbolic(symbolic, m.as_ref()).map_err(|_| singular())
}

impl Amg {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_coarse_size(a, COARSE_SIZE)
    }

    /// Coarsens until the operator has at most `coarse_size` rows, then
    /// factors it. With `coarse_size >= a.nrows()` this is an exact solve.
    pub fn with_coarse_size(a: &CsrMatrix, coarse_size: usize) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let mut levels = Vec::new();
        let mut current = a.clone();
        while current.nrows() > coarse_size && levels.len() < MAX_LEVELS {
            let (agg, count) = aggregate(&current);
            if count == current.nrows() {
                break;
            }
            let n = current.nrows();
            let inv_diag = inverse_diagonal(&current);
            let tentative = CsrMatrix::from_triplets(n, count, (0..n).map(|i| (i, agg[i], 1.0)).collect());
            // P = (I - ω D⁻¹ A) P_tent
            let mut smoother = current.clone();
            let scale: Vec<f64> = inv_diag.iter().map(|d| -PROLONGATION_WEIGHT * d).collect();
            smoother.scale_rows(&scale);
            let correction = smoother.matmul(&tentative)?;
            let mut t = Vec::with_capacity(correction.nnz() + n);
            for i in 0..n {
                t.push((i, agg[i], 1.0));
                for (j, v) in correction.row(i) {
                    t.push((i, j, v));
                }
            }
            let p = CsrMatrix::from_triplets(n, count, t);
            let r = p.transpose();
            let coarse = r.matmul(&current.matmul(&p)?)?;
            levels.push(Level {
                a: current,
                p,
                r,
                inv_diag,
            });
            current = coarse;
        }
        let coarse_size = current.nrows();
        let coarse = lu_factor(&current)?;
        Ok(Amg {
            levels,
            coarse,
            coarse_size,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        let Some(lv) = self.levels.get(level) else {
            x.copy_from_slice(b);
            let n = self.coarse_size;
            self.coarse
                .solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(x, n, 1));
            return;
        };
        x.fill(0.0);
        gauss_seidel(&lv.a, &lv.inv_diag, b, x, false);
        let mut ax = vec![0.0; b.len()];
        lv.a.spmv_unchecked(x, &mut ax);
        let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut rc = vec![0.0; lv.r.nrows()];
        lv.r.spmv_unchecked(&residual, &mut rc);
        let mut xc = vec![0.0; rc.len()];
        self.cycle(level + 1, &rc, &mut xc);
        lv.p.spmv_unchecked(&xc, &mut ax);
        for (xi, c) in x.iter_mut().zip(&ax) {
            *xi += c;
        }
        gauss_seidel(&lv.a, &lv.inv_diag, b, x, true);
    }
}

fn gauss_seidel(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = a.nrows();
    let sweep = |i: usize, x: &mut [f64]| {
        if inv_diag[i] == 0.0 {
            return;
        }
        let mut s = b[i];
        for (j, v) in a.row(i) {
            if j != i {
                s -= v * x[j];
            }
        }
        x[i] = s * inv_diag[i];
    };
    if backward {
        for i in (0..n).rev() {
            sweep(i, x);
        }
    } else {
        for i in 0..n {
            sweep(i, x);
        }
    }
}

impl Preconditioner for Amg {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }
}
