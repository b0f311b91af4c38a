use super::sparse::CsrMatrix;
use super::Preconditioner;
use crate::error::{Error, Result};

/// Zero-fill incomplete LU factorization sharing the pattern of the input.
/// `L` has an implicit unit diagonal; both factors live in one value array.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "ILU(0) needs a square matrix");
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut values = a.values().to_vec();

        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularPivot(i));
            }
        }

        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for k in start..end {
                marker[col_idx[k]] = k;
            }
            for kk in start..end {
                let k = col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = values[diag[k]];
                let l = values[kk] / pivot;
                values[kk] = l;
                for kj in diag[k] + 1..row_ptr[k + 1] {
                    let m = marker[col_idx[kj]];
                    if m != usize::MAX {
                        values[m] -= l * values[kj];
                    }
                }
            }
            let d = values[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::SingularPivot(i));
            }
            for k in start..end {
                marker[col_idx[k]] = usize::MAX;
            }
        }

        Ok(Ilu0 {
            n,
            row_ptr,
            col_idx,
            values,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L U x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = x[i];
            for k in self.row_ptr[i]..self.diag[i] {
                acc -= self.values[k] * x[self.col_idx[k]];
            }
            x[i] = acc;
        }
        for i in (0..self.n).rev() {
            let mut acc = x[i];
            for k in self.diag[i] + 1..self.row_ptr[i + 1] {
                acc -= self.values[k] * x[self.col_idx[k]];
            }
            x[i] = acc / self.values[self.diag[i]];
        }
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}
