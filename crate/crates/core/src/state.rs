use crate::error::{Error, Result};

/// Per-cell primary unknowns: liquid pressure (Pa), liquid saturation and
/// dissolved hydrogen mass concentration (kg/m³).
///
/// The stacked vector layout is variable-major: all pressures, then all
/// saturations, then all concentrations.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub p_l: Vec<f64>,
    pub s_l: Vec<f64>,
    pub rho_lh: Vec<f64>,
}

impl StateVector {
    pub fn uniform(num_cells: usize, p_l: f64, s_l: f64, rho_lh: f64) -> Self {
        StateVector {
            p_l: vec![p_l; num_cells],
            s_l: vec![s_l; num_cells],
            rho_lh: vec![rho_lh; num_cells],
        }
    }

    pub fn from_stacked(u: &[f64]) -> Result<Self> {
        if u.len() % 3 != 0 {
            return Err(Error::Dimension {
                expected: 3 * (u.len() / 3),
                found: u.len(),
            });
        }
        let n = u.len() / 3;
        Ok(StateVector {
            p_l: u[..n].to_vec(),
            s_l: u[n..2 * n].to_vec(),
            rho_lh: u[2 * n..].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.p_l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_l.is_empty()
    }

    pub fn check_len(&self, num_cells: usize) -> Result<()> {
        for len in [self.p_l.len(), self.s_l.len(), self.rho_lh.len()] {
            if len != num_cells {
                return Err(Error::Dimension {
                    expected: num_cells,
                    found: len,
                });
            }
        }
        Ok(())
    }

    pub fn to_stacked(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(3 * self.len());
        u.extend_from_slice(&self.p_l);
        u.extend_from_slice(&self.s_l);
        u.extend_from_slice(&self.rho_lh);
        u
    }

    /// `self += du` for a stacked update.
    pub fn apply_update(&mut self, du: &[f64]) {
        let n = self.len();
        assert_eq!(du.len(), 3 * n);
        for (x, d) in self.p_l.iter_mut().zip(&du[..n]) {
            *x += d;
        }
        for (x, d) in self.s_l.iter_mut().zip(&du[n..2 * n]) {
            *x += d;
        }
        for (x, d) in self.rho_lh.iter_mut().zip(&du[2 * n..]) {
            *x += d;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p_l
            .iter()
            .chain(&self.s_l)
            .chain(&self.rho_lh)
            .all(|v| v.is_finite())
    }
}
