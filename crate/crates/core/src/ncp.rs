//! Complementarity functions, their smoothed variants, the discrete
//! constraint vector and the rows of the generalized Jacobian.
//!
//! The constraint pair per cell is `a = 1 - S_l` and `b = C_h P_g - ρ_l^h`;
//! the gas phase is present exactly where `a > 0` and Henry's law `b = 0`
//! holds.

use crate::constitutive::{capillary_pressure, FluidParams, VanGenuchtenParams};
use crate::error::{Error, Result};
use crate::state::StateVector;

/// A validated smoothing parameter `τ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Smoothing(f64);

impl Smoothing {
    pub fn new(tau: f64) -> Result<Self> {
        if tau >= 0.0 && tau.is_finite() {
            Ok(Smoothing(tau))
        } else {
            Err(Error::NegativeSmoothing(tau))
        }
    }

    pub fn tau(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CFunctionKind {
    Min,
    FischerBurmeister,
    SmoothFischerBurmeister(Smoothing),
    /// Chen-Harker-Kanzow-Smale smoothing `(a+b) - sqrt((a-b)² + 4τ)`; its
    /// `τ = 0` limit is `2 min(a, b)`.
    SmoothMin(Smoothing),
}

const FB_ORIGIN_ALPHA: f64 = std::f64::consts::FRAC_1_SQRT_2;
const FB_ORIGIN_BETA: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl CFunctionKind {
    pub fn tau(&self) -> Option<f64> {
        match self {
            CFunctionKind::SmoothFischerBurmeister(t) | CFunctionKind::SmoothMin(t) => Some(t.tau()),
            _ => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.tau().is_some()
    }

    /// Same family with a new smoothing parameter; non-smooth kinds are returned unchanged.
    pub fn with_smoothing(self, tau: Smoothing) -> Self {
        match self {
            CFunctionKind::SmoothFischerBurmeister(_) => CFunctionKind::SmoothFischerBurmeister(tau),
            CFunctionKind::SmoothMin(_) => CFunctionKind::SmoothMin(tau),
            k => k,
        }
    }

    /// The non-smooth C-function whose residual the smoothing solver drives to zero.
    pub fn nonsmooth(self) -> Self {
        self.with_smoothing(Smoothing(0.0))
    }

    pub fn value(&self, a: f64, b: f64) -> f64 {
        match *self {
            CFunctionKind::Min => a.min(b),
            CFunctionKind::FischerBurmeister => a.hypot(b) - (a + b),
            CFunctionKind::SmoothFischerBurmeister(t) if t.0 == 0.0 => CFunctionKind::FischerBurmeister.value(a, b),
            CFunctionKind::SmoothFischerBurmeister(t) => (a * a + b * b + 2.0 * t.0).sqrt() - (a + b),
            CFunctionKind::SmoothMin(t) => {
                let d = a - b;
                (a + b) - (d * d + 4.0 * t.0).sqrt()
            }
        }
    }

    /// Coefficients `(∂/∂a, ∂/∂b)` of the Jacobian row: the exact gradient
    /// for smooth kinds with `τ > 0`, otherwise a fixed element of the
    /// B-subdifferential.
    pub fn gradient(&self, a: f64, b: f64) -> (f64, f64) {
        match *self {
            CFunctionKind::Min => {
                if a >= b {
                    (0.0, 1.0)
                } else {
                    (1.0, 0.0)
                }
            }
            CFunctionKind::FischerBurmeister => {
                let r = a.hypot(b);
                if r == 0.0 {
                    (FB_ORIGIN_ALPHA - 1.0, FB_ORIGIN_BETA - 1.0)
                } else {
                    (a / r - 1.0, b / r - 1.0)
                }
            }
            CFunctionKind::SmoothFischerBurmeister(t) => {
                if t.0 == 0.0 {
                    return CFunctionKind::FischerBurmeister.gradient(a, b);
                }
                let r = (a * a + b * b + 2.0 * t.0).sqrt();
                (a / r - 1.0, b / r - 1.0)
            }
            CFunctionKind::SmoothMin(t) => {
                if t.0 == 0.0 {
                    let (ga, gb) = CFunctionKind::Min.gradient(a, b);
                    return (2.0 * ga, 2.0 * gb);
                }
                let d = a - b;
                let r = (d * d + 4.0 * t.0).sqrt();
                (1.0 - d / r, 1.0 + d / r)
            }
        }
    }
}

/// Evaluates the selected C-function; rejects negative smoothing.
pub fn c_function(kind: CFunctionKind, a: f64, b: f64) -> Result<f64> {
    if let Some(t) = kind.tau() {
        Smoothing::new(t)?;
    }
    Ok(kind.value(a, b))
}

/// Gradient of a constraint argument with respect to the owning cell's
/// `(P_l, S_l, ρ_l^h)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellGradient(pub [f64; 3]);

impl CellGradient {
    pub fn p(&self) -> f64 {
        self.0[0]
    }

    pub fn s(&self) -> f64 {
        self.0[1]
    }

    pub fn rho(&self) -> f64 {
        self.0[2]
    }

    fn combine(ca: f64, da: &CellGradient, cb: f64, db: &CellGradient) -> CellGradient {
        CellGradient(std::array::from_fn(|i| ca * da.0[i] + cb * db.0[i]))
    }

    /// Column/value pairs in the variable-major stacked layout of `num_cells` cells.
    pub fn to_sparse(&self, cell: usize, num_cells: usize) -> [(usize, f64); 3] {
        [
            (cell, self.0[0]),
            (num_cells + cell, self.0[1]),
            (2 * num_cells + cell, self.0[2]),
        ]
    }
}

/// Per-cell constraint arguments `a = 1 - S_l`, `b = C_h P_g - ρ_l^h`, and
/// their gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintArgs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub da: Vec<CellGradient>,
    pub db: Vec<CellGradient>,
}

impl ConstraintArgs {
    pub fn evaluate(state: &StateVector, fluid: &FluidParams, vg: &VanGenuchtenParams) -> Self {
        Self::evaluate_with_datum(state, 0.0, fluid, vg)
    }

    /// As [`evaluate`](Self::evaluate) for a state whose pressures are
    /// stored relative to `pressure_datum`.
    pub fn evaluate_with_datum(
        state: &StateVector,
        pressure_datum: f64,
        fluid: &FluidParams,
        vg: &VanGenuchtenParams,
    ) -> Self {
        let ch = fluid.henry_coefficient();
        let n = state.len();
        let mut args = ConstraintArgs {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            da: Vec::with_capacity(n),
            db: Vec::with_capacity(n),
        };
        for j in 0..n {
            let (pc, dpc) = capillary_pressure(state.s_l[j], vg);
            args.a.push(1.0 - state.s_l[j]);
            args.b.push(ch * (state.p_l[j] + pressure_datum + pc) - state.rho_lh[j]);
            args.da.push(CellGradient([0.0, -1.0, 0.0]));
            args.db.push(CellGradient([ch, ch * dpc, -1.0]));
        }
        args
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// `Θ_j = Φ(a_j, b_j)`.
pub fn assemble_theta(
    kind: CFunctionKind,
    state: &StateVector,
    fluid: &FluidParams,
    vg: &VanGenuchtenParams,
) -> Vec<f64> {
    let args = ConstraintArgs::evaluate(state, fluid, vg);
    theta_from_args(kind, &args)
}

pub fn theta_from_args(kind: CFunctionKind, args: &ConstraintArgs) -> Vec<f64> {
    args.a.iter().zip(&args.b).map(|(&a, &b)| kind.value(a, b)).collect()
}

/// Active set `A = {j : a_j ≥ b_j}` and its complement `I`.
pub fn active_set_partition(a: &[f64], b: &[f64]) -> (Vec<usize>, Vec<usize>) {
    assert_eq!(a.len(), b.len());
    (0..a.len()).partition(|&j| a[j] >= b[j])
}

/// Jacobian row of constraint `j` for the selected C-function.
pub fn constraint_jacobian_row(
    kind: CFunctionKind,
    a_j: f64,
    b_j: f64,
    da: &CellGradient,
    db: &CellGradient,
) -> CellGradient {
    let (ca, cb) = kind.gradient(a_j, b_j);
    CellGradient::combine(ca, da, cb, db)
}

/// `max_j |min(a_j, b_j)|`; zero exactly on the complementary set.
pub fn complementarity_violation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x.min(y).abs())
        .fold(0.0, f64::max)
}
