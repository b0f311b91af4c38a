//! Preconditioner for the stacked flow/constraint system.
//!
//! The unknowns are laid out variable-major in three blocks of `N`
//! (pressure, saturation, concentration); rows `0..2N` are the discrete
//! conservation laws and rows `2N..3N` are the complementarity constraints,
//! each of which only touches the three unknowns of its own cell. Every
//! constraint row is therefore eliminated exactly against one of its own
//! cell's unknowns, leaving a `2N` Schur complement on the flow rows that is
//! approximated with ILU(0) in cell-interleaved order.
//!
//! When every `A_33` diagonal entry is nonzero (smoothed Fischer-Burmeister)
//! the concentration block is eliminated in one uniform sweep. The
//! semi-smooth kinds produce zero `A_33` diagonals in single-phase cells;
//! those rows are pivoted on the saturation unknown instead.
//!
//! Optionally a pressure stage runs first (CPR): per-cell quasi-IMPES
//! weights decouple a pressure equation from the Schur complement, a sparse
//! LU (small meshes) or one AMG V-cycle approximates its solution and ILU(0)
//! handles the remainder.

use super::amg::Amg;
use super::ilu::Ilu0;
use super::sparse::CsrMatrix;
use super::Preconditioner;
use crate::error::{Error, Result};

/// Which unknown of a cell its constraint row is solved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotVariable {
    Saturation,
    Concentration,
}

#[derive(Clone, Copy, Debug)]
struct CellElimination {
    pivot: PivotVariable,
    pivot_coef: f64,
    /// Coefficients of the constraint row on the kept unknowns (pressure, other).
    kept: [f64; 2],
}

#[derive(Debug)]
pub struct BlockPreconditioner {
    n: usize,
    cells: Vec<CellElimination>,
    /// `E[i, j] = A[i, pivot_col(j)] / pivot_coef(j)` for flow rows `i`.
    coupling: CsrMatrix,
    ilu: Ilu0,
    pressure: Option<PressureStage>,
}

/// Pressure systems up to this size are factored exactly; larger ones get
/// one AMG V-cycle. The V-cycle is too weak on strongly heterogeneous
/// permeability to be worth it where a sparse LU is still cheap.
const DIRECT_PRESSURE_LIMIT: usize = 5000;

/// Stage one of the two-stage variant.
#[derive(Debug)]
struct PressureStage {
    /// Weights of the (water, hydrogen) rows of each cell.
    weights: Vec<[f64; 2]>,
    /// Interleaved Schur complement, needed for the stage-two residual.
    reduced: CsrMatrix,
    amg: Amg,
}

impl PressureStage {
    fn new(reduced: CsrMatrix, n: usize) -> Result<Self> {
        let mut weights: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                // eliminate the non-pressure unknown from the cell's own block
                let (dw, dh) = (reduced.get(2 * i, 2 * i + 1), reduced.get(2 * i + 1, 2 * i + 1));
                let m = dw.abs().max(dh.abs());
                if m > 0.0 {
                    [dh / m, -dw / m]
                } else {
                    [1.0, 0.0]
                }
            })
            .collect();
        let mut triplets = Vec::with_capacity(reduced.nnz() / 2);
        for i in 0..n {
            let w = weights[i];
            for (row, wr) in [(2 * i, w[0]), (2 * i + 1, w[1])] {
                if wr == 0.0 {
                    continue;
                }
                for (c, v) in reduced.row(row) {
                    if c % 2 == 0 {
                        triplets.push((i, c / 2, wr * v));
                    }
                }
            }
        }
        let mut app = CsrMatrix::from_triplets(n, n, triplets);
        // positive diagonal for the smoother
        let flip: Vec<f64> = (0..n).map(|i| if app.get(i, i) < 0.0 { -1.0 } else { 1.0 }).collect();
        app.scale_rows(&flip);
        for (w, f) in weights.iter_mut().zip(&flip) {
            w[0] *= f;
            w[1] *= f;
        }
        let amg = if n <= DIRECT_PRESSURE_LIMIT {
            Amg::with_coarse_size(&app, n)?
        } else {
            Amg::new(&app)?
        };
        Ok(PressureStage { weights, reduced, amg })
    }

    /// Two-stage solve of the reduced system in place.
    fn apply(&self, ilu: &Ilu0, y: &mut [f64]) {
        let n = self.weights.len();
        let rp: Vec<f64> = (0..n)
            .map(|i| self.weights[i][0] * y[2 * i] + self.weights[i][1] * y[2 * i + 1])
            .collect();
        let mut p = vec![0.0; n];
        self.amg.apply(&rp, &mut p);
        if p.iter().any(|v| !v.is_finite()) {
            ilu.solve_in_place(y);
            return;
        }
        let mut x1 = vec![0.0; 2 * n];
        for i in 0..n {
            x1[2 * i] = p[i];
        }
        let ax1 = self.reduced.mul_vec(&x1).expect("dimensions fixed at construction");
        for (yi, a) in y.iter_mut().zip(&ax1) {
            *yi -= a;
        }
        ilu.solve_in_place(y);
        for (yi, x) in y.iter_mut().zip(&x1) {
            *yi += x;
        }
    }
}

/// A constraint row is pivoted on concentration when
/// `|A_33[j,j]| > CONCENTRATION_PIVOT_FLOOR * |A_32[j,j]|`.
const CONCENTRATION_PIVOT_FLOOR: f64 = 1e-10;

impl BlockPreconditioner {
    /// Constraint elimination followed by ILU(0).
    pub fn new(a: &CsrMatrix, num_cells: usize) -> Result<Self> {
        Self::build(a, num_cells, false)
    }

    /// Adds the pressure stage. Falls back to the single-stage form if the
    /// pressure matrix cannot be factored.
    pub fn two_stage(a: &CsrMatrix, num_cells: usize) -> Result<Self> {
        Self::build(a, num_cells, true)
    }

    pub fn has_pressure_stage(&self) -> bool {
        self.pressure.is_some()
    }

    fn build(a: &CsrMatrix, num_cells: usize, pressure_stage: bool) -> Result<Self> {
        let n = num_cells;
        if a.nrows() != 3 * n || a.ncols() != 3 * n {
            return Err(Error::Dimension {
                expected: 3 * n,
                found: a.nrows(),
            });
        }

        let mut cells = Vec::with_capacity(n);
        for j in 0..n {
            let row = 2 * n + j;
            let (cp, cs, cr) = (a.get(row, j), a.get(row, n + j), a.get(row, 2 * n + j));
            let cell = if cr != 0.0 && cr.abs() > CONCENTRATION_PIVOT_FLOOR * cs.abs() {
                CellElimination {
                    pivot: PivotVariable::Concentration,
                    pivot_coef: cr,
                    kept: [cp, cs],
                }
            } else if cs != 0.0 {
                CellElimination {
                    pivot: PivotVariable::Saturation,
                    pivot_coef: cs,
                    kept: [cp, cr],
                }
            } else {
                return Err(Error::SingularPivot(row));
            };
            cells.push(cell);
        }

        let pivot_col = |j: usize| match cells[j].pivot {
            PivotVariable::Saturation => n + j,
            PivotVariable::Concentration => 2 * n + j,
        };
        let other_col = |j: usize| match cells[j].pivot {
            PivotVariable::Saturation => 2 * n + j,
            PivotVariable::Concentration => n + j,
        };

        // reduced row index: water_i -> 2i, hydrogen_i -> 2i+1
        // reduced col index: P_j -> 2j, other_j -> 2j+1
        let reduced_row = |i: usize| if i < n { 2 * i } else { 2 * (i - n) + 1 };
        let mut coupling = Vec::new();
        let mut reduced = Vec::new();
        for i in 0..2 * n {
            let ri = reduced_row(i);
            for (c, v) in a.row(i) {
                let j = c % n;
                if c == pivot_col(j) {
                    let e = v / cells[j].pivot_coef;
                    coupling.push((i, j, e));
                    reduced.push((ri, 2 * j, -e * cells[j].kept[0]));
                    reduced.push((ri, 2 * j + 1, -e * cells[j].kept[1]));
                } else if c == j {
                    reduced.push((ri, 2 * j, v));
                } else {
                    debug_assert_eq!(c, other_col(j));
                    reduced.push((ri, 2 * j + 1, v));
                }
            }
        }
        let coupling = CsrMatrix::from_triplets(2 * n, n, coupling);
        let reduced = CsrMatrix::from_triplets(2 * n, 2 * n, reduced);
        let ilu = Ilu0::new(&reduced)?;
        let pressure = if pressure_stage {
            PressureStage::new(reduced, n).ok()
        } else {
            None
        };

        Ok(BlockPreconditioner {
            n,
            cells,
            coupling,
            ilu,
            pressure,
        })
    }

    pub fn pivots(&self) -> impl Iterator<Item = PivotVariable> + '_ {
        self.cells.iter().map(|c| c.pivot)
    }

    /// True when every constraint row was eliminated on the concentration
    /// unknown, i.e. a single uniform reduction step.
    pub fn uniform_concentration_elimination(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.pivot == PivotVariable::Concentration)
    }
}

impl Preconditioner for BlockPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        let (r_flow, r_con) = r.split_at(2 * n);

        let mut corr = vec![0.0; 2 * n];
        self.coupling.spmv_unchecked(r_con, &mut corr);
        let mut y = vec![0.0; 2 * n];
        for i in 0..n {
            y[2 * i] = r_flow[i] - corr[i];
            y[2 * i + 1] = r_flow[n + i] - corr[n + i];
        }
        match &self.pressure {
            Some(stage) => stage.apply(&self.ilu, &mut y),
            None => self.ilu.solve_in_place(&mut y),
        }

        for (j, cell) in self.cells.iter().enumerate() {
            let (xp, xo) = (y[2 * j], y[2 * j + 1]);
            let xpiv = (r_con[j] - cell.kept[0] * xp - cell.kept[1] * xo) / cell.pivot_coef;
            z[j] = xp;
            match cell.pivot {
                PivotVariable::Concentration => {
                    z[n + j] = xo;
                    z[2 * n + j] = xpiv;
                }
                PivotVariable::Saturation => {
                    z[n + j] = xpiv;
                    z[2 * n + j] = xo;
                }
            }
        }
    }
}
