//! Sparse storage, restarted GMRES and preconditioners.

mod amg;
mod block;
mod gmres;
mod ilu;
mod sparse;

pub use amg::Amg;
pub use block::{BlockPreconditioner, PivotVariable};
pub use gmres::{gmres_solve, GmresConfig, GmresResult, GmresStop};
pub use ilu::Ilu0;
pub use sparse::{dot, norm2, CsrMatrix};

/// Approximate inverse `z = M⁻¹ r`; must be linear and deterministic.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal (Jacobi) scaling.
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = (0..a.nrows())
            .map(|i| {
                let d = a.get(i, i);
                if d != 0.0 {
                    1.0 / d
                } else {
                    1.0
                }
            })
            .collect();
        JacobiPreconditioner { inv_diag }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}
