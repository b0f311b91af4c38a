use serde::{Deserialize, Serialize};

use super::sparse::{dot, norm2, CsrMatrix};
use super::Preconditioner;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmresConfig {
    /// Krylov dimension per cycle.
    pub restart: usize,
    pub max_iterations: usize,
    /// Relative tolerance on the true residual, `‖b - A x‖ ≤ tol ‖b‖`.
    pub tolerance: f64,
    /// Precede ILU(0) with an AMG pressure stage when preconditioning the
    /// flow/constraint system.
    pub pressure_stage: bool,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            restart: 30,
            max_iterations: 600,
            tolerance: 1e-12,
            pressure_stage: true,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        if self.restart == 0 {
            return Err(crate::error::param("restart", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(crate::error::param("max_iterations", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(crate::error::param("tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GmresStop {
    Converged,
    MaxIterations,
    Stagnated,
    /// Stalled above the tolerance but within a small multiple of the
    /// componentwise rounding bound of the residual itself; no further
    /// digits are attainable in double precision.
    RoundingFloor,
    Breakdown,
}

#[derive(Clone, Debug)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// True residual `‖b - A x‖` at exit.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    pub stop: GmresStop,
}

impl GmresResult {
    /// Converged, or stopped at the rounding floor of the residual.
    pub fn usable(&self) -> bool {
        self.converged || self.stop == GmresStop::RoundingFloor
    }

    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm == 0.0 {
            self.residual_norm
        } else {
            self.residual_norm / self.rhs_norm
        }
    }
}

/// Multiple of the componentwise rounding bound treated as the attainable floor.
const FLOOR_FACTOR: f64 = 64.0;

/// `ε ‖ |A||x| + |b| ‖`: the size of rounding noise in a computed residual.
fn rounding_floor(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, bi) in b.iter().enumerate() {
        let row: f64 = a.row(i).map(|(j, v)| (v * x[j]).abs()).sum();
        let t = row + bi.abs();
        acc += t * t;
    }
    f64::EPSILON * acc.sqrt()
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    a.spmv_unchecked(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

/// Restarted GMRES with right preconditioning, so the monitored quantity is
/// the unpreconditioned residual. Convergence is always confirmed on the
/// explicitly recomputed residual at the end of a cycle.
pub fn gmres_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &dyn Preconditioner,
    config: &GmresConfig,
) -> GmresResult {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "GMRES needs a square matrix");
    assert_eq!(b.len(), n, "rhs length mismatch");

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let rhs_norm = norm2(b);
    let target = config.tolerance * rhs_norm;
    let mut r = vec![0.0; n];
    let mut beta = true_residual(a, b, &x, &mut r);
    let mut iterations = 0;

    if rhs_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresResult {
            x,
            iterations: 0,
            converged: true,
            residual_norm: 0.0,
            rhs_norm,
            stop: GmresStop::Converged,
        };
    }

    let m = config.restart.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];

    loop {
        if !beta.is_finite() {
            return GmresResult {
                x,
                iterations,
                converged: false,
                residual_norm: beta,
                rhs_norm,
                stop: GmresStop::Breakdown,
            };
        }
        if beta <= target {
            return GmresResult {
                x,
                iterations,
                converged: true,
                residual_norm: beta,
                rhs_norm,
                stop: GmresStop::Converged,
            };
        }
        if iterations >= config.max_iterations {
            return GmresResult {
                x,
                iterations,
                converged: false,
                residual_norm: beta,
                rhs_norm,
                stop: GmresStop::MaxIterations,
            };
        }

        basis.clear();
        zs.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;

        let mut k = 0;
        while k < m && iterations < config.max_iterations {
            let mut z = vec![0.0; n];
            precond.apply(&basis[k], &mut z);
            a.spmv_unchecked(&z, &mut w);
            zs.push(z);

            // modified Gram-Schmidt with one reorthogonalization pass
            for col in h.iter_mut() {
                col[k] = 0.0;
            }
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    h[i][k] += hij;
                    for (wj, vj) in w.iter_mut().zip(v) {
                        *wj -= hij * vj;
                    }
                }
            }
            let hnext = norm2(&w);
            h[k + 1][k] = hnext;

            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];

            iterations += 1;
            k += 1;

            let happy = hnext <= 1e-14 * denom.max(f64::MIN_POSITIVE);
            if g[k].abs() <= target || happy {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // back substitution on the k×k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xj, zj) in x.iter_mut().zip(z) {
                *xj += yi * zj;
            }
        }

        let previous = beta;
        beta = true_residual(a, b, &x, &mut r);
        if beta > target && beta <= FLOOR_FACTOR * rounding_floor(a, b, &x) {
            return GmresResult {
                x,
                iterations,
                converged: false,
                residual_norm: beta,
                rhs_norm,
                stop: GmresStop::RoundingFloor,
            };
        }
        if beta > target && beta >= 0.999 * previous {
            return GmresResult {
                x,
                iterations,
                converged: false,
                residual_norm: beta,
                rhs_norm,
                stop: GmresStop::Stagnated,
            };
        }
    }
}
