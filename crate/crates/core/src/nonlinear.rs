//! Semi-smooth Newton and Jacobian smoothing solvers for one backward-Euler
//! step. Both take full, undamped steps; divergence is left to the time-step
//! controller.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_global_with_datum, FlowModel, ResidualScaling};
use crate::error::{param, Result};
use crate::linalg::{gmres_solve, norm2, BlockPreconditioner, GmresConfig, IdentityPreconditioner, Preconditioner};
use crate::ncp::{complementarity_violation, CFunctionKind, ConstraintArgs, Smoothing};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Semi-smooth Newton with the minimum function.
    Min,
    /// Semi-smooth Newton with Fischer-Burmeister.
    Fb,
    /// Jacobian smoothing with smoothed Fischer-Burmeister.
    Sfb,
    /// Jacobian smoothing with the smoothed minimum.
    SmoothMin,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Min, Method::Fb, Method::Sfb, Method::SmoothMin];

    pub fn is_smoothing(self) -> bool {
        matches!(self, Method::Sfb | Method::SmoothMin)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Min => "min",
            Method::Fb => "fb",
            Method::Sfb => "sfb",
            Method::SmoothMin => "smooth-min",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| param("method", format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    #[default]
    Scaled,
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: Method,
    pub initial_tau: f64,
    pub tau_reduction: f64,
    pub tau_floor: f64,
    pub norm: NormMode,
    /// Pressure scale of the constraint rows (Pa).
    pub reference_pressure: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tolerance: 1e-6,
            max_iterations: 20,
            method: Method::Sfb,
            initial_tau: 1e-6,
            tau_reduction: 0.1,
            tau_floor: 1e-14,
            norm: NormMode::Scaled,
            reference_pressure: 1e6,
        }
    }
}

impl NewtonConfig {
    pub fn with_method(method: Method) -> Self {
        NewtonConfig {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(param("tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(param("max_iterations", "must be at least 1"));
        }
        if !(self.tau_reduction > 0.0 && self.tau_reduction < 1.0) {
            return Err(param("tau_reduction", "must lie in (0, 1)"));
        }
        Smoothing::new(self.tau_floor)?;
        Smoothing::new(self.initial_tau)?;
        if self.initial_tau < self.tau_floor {
            return Err(param("initial_tau", "must not be below tau_floor"));
        }
        if !(self.reference_pressure > 0.0) {
            return Err(param("reference_pressure", "must be positive"));
        }
        Ok(())
    }

    /// C-function used in the first iteration.
    pub fn initial_kind(&self) -> Result<CFunctionKind> {
        let tau = Smoothing::new(self.initial_tau)?;
        Ok(match self.method {
            Method::Min => CFunctionKind::Min,
            Method::Fb => CFunctionKind::FischerBurmeister,
            Method::Sfb => CFunctionKind::SmoothFischerBurmeister(tau),
            Method::SmoothMin => CFunctionKind::SmoothMin(tau),
        })
    }

    pub fn scaling(&self) -> ResidualScaling {
        match self.norm {
            NormMode::Scaled => ResidualScaling::Scaled {
                reference_pressure: self.reference_pressure,
            },
            NormMode::Raw => ResidualScaling::Raw,
        }
    }

    /// `τ_{k+1} = max(β τ_k, τ_floor)`.
    pub fn next_tau(&self, tau: f64) -> f64 {
        (self.tau_reduction * tau).max(self.tau_floor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewtonFailure {
    NonFiniteResidual,
    MaxIterations,
    LinearSolver,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub converged: bool,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// `‖F‖` before every iteration and at exit; one entry more than
    /// `iterations`.
    pub residual_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    /// `max_j |min(a_j, b_j)|` at the returned state.
    pub complementarity_violation: f64,
    /// Smoothing parameter of each iteration's Jacobian (smoothing methods).
    pub tau_history: Vec<f64>,
    /// Linear solves that ran unpreconditioned because the block
    /// factorization broke down.
    pub preconditioner_fallbacks: usize,
    pub failure: Option<NewtonFailure>,
}

impl NewtonReport {
    pub fn total_linear_iterations(&self) -> usize {
        self.linear_iterations.iter().sum()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// Euclidean norm of the concatenation `(H; Θ)`.
pub fn residual_norm(h: &[f64], theta: &[f64]) -> f64 {
    norm2(h).hypot(norm2(theta))
}

/// Semi-smooth Newton: the Jacobian's constraint rows are a fixed element
/// of the B-subdifferential of the selected C-function.
pub fn solve_step_semismooth(
    model: &FlowModel,
    state_old: &StateVector,
    dt: f64,
    config: &NewtonConfig,
    gmres: &GmresConfig,
) -> Result<(StateVector, NewtonReport)> {
    if config.method.is_smoothing() {
        return Err(param("method", "semi-smooth Newton needs the min or fb method"));
    }
    newton_loop(model, state_old, dt, config, gmres)
}

/// Jacobian smoothing: Jacobian rows from `G(·, τ_k)`, right-hand side from
/// the non-smooth residual, `τ` reduced after every iteration.
pub fn solve_step_smoothing(
    model: &FlowModel,
    state_old: &StateVector,
    dt: f64,
    config: &NewtonConfig,
    gmres: &GmresConfig,
) -> Result<(StateVector, NewtonReport)> {
    if !config.method.is_smoothing() {
        return Err(param("method", "Jacobian smoothing needs the sfb or smooth-min method"));
    }
    newton_loop(model, state_old, dt, config, gmres)
}

/// Dispatches on `config.method`.
pub fn solve_step(
    model: &FlowModel,
    state_old: &StateVector,
    dt: f64,
    config: &NewtonConfig,
    gmres: &GmresConfig,
) -> Result<(StateVector, NewtonReport)> {
    newton_loop(model, state_old, dt, config, gmres)
}

/// Midpoint of the pressure range, or zero for non-finite input.
fn pressure_datum(state: &StateVector) -> f64 {
    let lo = state.p_l.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = state.p_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    if mid.is_finite() {
        mid
    } else {
        0.0
    }
}

fn newton_loop(
    model: &FlowModel,
    state_old: &StateVector,
    dt: f64,
    config: &NewtonConfig,
    gmres: &GmresConfig,
) -> Result<(StateVector, NewtonReport)> {
    config.validate()?;
    gmres.validate()?;
    let n = model.num_cells();
    state_old.check_len(n)?;
    let scaling = config.scaling();
    let mut kind = config.initial_kind()?;
    let mut tau = config.initial_tau;

    // iterate on gauge pressure; see the assembly module docs
    let datum = pressure_datum(state_old);
    let mut old = state_old.clone();
    old.p_l.iter_mut().for_each(|p| *p -= datum);
    let mut u = old.clone();
    let mut report = NewtonReport {
        converged: false,
        iterations: 0,
        residual_history: Vec::new(),
        linear_iterations: Vec::new(),
        complementarity_violation: f64::NAN,
        tau_history: Vec::new(),
        preconditioner_fallbacks: 0,
        failure: None,
    };

    loop {
        let system = assemble_global_with_datum(model, &u, &old, dt, kind, scaling, datum)?;
        let norm = system.residual_norm();
        report.residual_history.push(norm);
        if !norm.is_finite() {
            report.failure = Some(NewtonFailure::NonFiniteResidual);
            break;
        }
        if norm <= config.tolerance {
            report.converged = true;
            break;
        }
        if report.iterations >= config.max_iterations {
            report.failure = Some(NewtonFailure::MaxIterations);
            break;
        }

        let block = if gmres.pressure_stage {
            BlockPreconditioner::two_stage(&system.matrix, n)
        } else {
            BlockPreconditioner::new(&system.matrix, n)
        };
        let precond: &dyn Preconditioner = match &block {
            Ok(p) => p,
            Err(_) => {
                report.preconditioner_fallbacks += 1;
                &IdentityPreconditioner
            }
        };
        let lin = gmres_solve(&system.matrix, &system.rhs, None, precond, gmres);
        report.iterations += 1;
        report.linear_iterations.push(lin.iterations);
        if let Some(t) = kind.tau() {
            report.tau_history.push(t);
        }
        if !lin.usable() {
            report.residual_history.push(norm);
            report.failure = Some(NewtonFailure::LinearSolver);
            break;
        }
        u.apply_update(&lin.x);

        if config.method.is_smoothing() {
            tau = config.next_tau(tau);
            kind = kind.with_smoothing(Smoothing::new(tau)?);
        }
    }

    let args = ConstraintArgs::evaluate_with_datum(&u, datum, &model.fluid, &model.vg);
    report.complementarity_violation = complementarity_violation(&args.a, &args.b);
    u.p_l.iter_mut().for_each(|p| *p += datum);
    Ok((u, report))
}
