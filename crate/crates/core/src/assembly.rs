//! Fully implicit finite-volume residual and Jacobian of the water and
//! hydrogen mass balances, stacked with the complementarity rows into the
//! global `3N × 3N` Newton system.
//!
//! Residual sign convention: accumulation plus outward face fluxes minus
//! prescribed inflow, all in kg/s.
//!
//! Face fluxes use two-point transmissibilities with phase-potential
//! upwinding of mobilities and advected densities. Dirichlet boundaries act
//! through a ghost cell located at the face center.
//!
//! The `*_with_datum` variants take states whose pressures are stored
//! relative to a datum. Pressure differences across the domain can be many
//! orders of magnitude below the absolute pressure, and gauge storage keeps
//! those digits through a Newton solve.

use crate::constitutive::{capillary_pressure, mobility_with_derivative, FluidParams, Phase, VanGenuchtenParams};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{face_transmissibility, CartesianMesh, Face, RockField};
use crate::ncp::{constraint_jacobian_row, CFunctionKind, ConstraintArgs};
use crate::state::StateVector;

/// Condition on one boundary face. Fluxes are mass fluxes in kg/m²/s,
/// positive into the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    NeumannFlux { water: f64, hydrogen: f64 },
    Dirichlet { p_l: f64, s_l: f64, rho_lh: f64 },
}

impl BoundaryCondition {
    pub const IMPERVIOUS: BoundaryCondition = BoundaryCondition::NeumannFlux {
        water: 0.0,
        hydrogen: 0.0,
    };
}

/// Everything the discrete operator needs apart from the state.
#[derive(Clone, Debug)]
pub struct FlowModel {
    pub mesh: CartesianMesh,
    pub rock: RockField,
    pub fluid: FluidParams,
    pub vg: VanGenuchtenParams,
    /// Gravitational acceleration vector (m/s²).
    pub gravity: [f64; 3],
    boundary: Vec<BoundaryCondition>,
    interior_trans: Vec<f64>,
    boundary_trans: Vec<f64>,
}

impl FlowModel {
    /// `boundary` holds one condition per entry of `mesh.boundary_faces()`.
    pub fn new(
        mesh: CartesianMesh,
        rock: RockField,
        fluid: FluidParams,
        vg: VanGenuchtenParams,
        gravity: [f64; 3],
        boundary: Vec<BoundaryCondition>,
    ) -> Result<Self> {
        rock.check_mesh(&mesh)?;
        fluid.validate()?;
        vg.validate()?;
        if boundary.len() != mesh.boundary_faces().len() {
            return Err(Error::Dimension {
                expected: mesh.boundary_faces().len(),
                found: boundary.len(),
            });
        }
        let interior_trans = mesh
            .interior_faces()
            .iter()
            .map(|f| face_transmissibility(f, &rock))
            .collect();
        let boundary_trans = mesh
            .boundary_faces()
            .iter()
            .map(|f| face_transmissibility(f, &rock))
            .collect();
        Ok(FlowModel {
            mesh,
            rock,
            fluid,
            vg,
            gravity,
            boundary,
            interior_trans,
            boundary_trans,
        })
    }

    /// All boundaries impervious.
    pub fn closed(
        mesh: CartesianMesh,
        rock: RockField,
        fluid: FluidParams,
        vg: VanGenuchtenParams,
        gravity: [f64; 3],
    ) -> Result<Self> {
        let bcs = vec![BoundaryCondition::IMPERVIOUS; mesh.boundary_faces().len()];
        Self::new(mesh, rock, fluid, vg, gravity, bcs)
    }

    pub fn num_cells(&self) -> usize {
        self.mesh.num_cells()
    }

    pub fn boundary_conditions(&self) -> &[BoundaryCondition] {
        &self.boundary
    }

    pub fn set_boundary_condition(&mut self, face: usize, bc: BoundaryCondition) {
        self.boundary[face] = bc;
    }

    /// `V φ ρ_w / dt` for each cell: the accumulation scale of a unit
    /// saturation change.
    pub fn accumulation_scale(&self, dt: f64) -> Vec<f64> {
        let v = self.mesh.cell_volume();
        self.rock
            .porosity()
            .iter()
            .map(|phi| v * phi * self.fluid.water_density / dt)
            .collect()
    }

    fn gravity_drop(&self, from: [f64; 3], to: [f64; 3]) -> f64 {
        (0..3).map(|a| self.gravity[a] * (to[a] - from[a])).sum()
    }
}

/// Constitutive quantities of one cell (or ghost) at the current iterate.
#[derive(Clone, Copy, Debug)]
struct CellEval {
    /// Gauge liquid and gas pressures.
    p: f64,
    r: f64,
    pg: f64,
    /// Absolute gas pressure.
    pg_abs: f64,
    dpc: f64,
    lam_l: f64,
    dlam_l: f64,
    lam_g: f64,
    dlam_g: f64,
    rho_liq: f64,
    diff: f64,
    ddiff: f64,
}

impl CellEval {
    fn new(p: f64, s: f64, r: f64, porosity: f64, datum: f64, fluid: &FluidParams, vg: &VanGenuchtenParams) -> Self {
        let (pc, dpc) = capillary_pressure(s, vg);
        let (lam_l, dlam_l) = mobility_with_derivative(Phase::Liquid, s, fluid, vg);
        let (lam_g, dlam_g) = mobility_with_derivative(Phase::Gas, s, fluid, vg);
        CellEval {
            p,
            r,
            pg: p + pc,
            pg_abs: (p + datum) + pc,
            dpc,
            lam_l,
            dlam_l,
            lam_g,
            dlam_g,
            rho_liq: fluid.water_density + r,
            diff: porosity * s * fluid.diffusion,
            ddiff: porosity * fluid.diffusion,
        }
    }
}

/// Outward mass fluxes across one face with derivatives with respect to
/// `[p_L, s_L, r_L, p_R, s_R, r_R]`.
#[derive(Clone, Copy, Debug, Default)]
struct FaceFlux {
    water: f64,
    hydrogen: f64,
    d_water: [f64; 6],
    d_hydrogen: [f64; 6],
}

const P: usize = 0;
const S: usize = 1;
const R: usize = 2;

/// `trans` is the Darcy transmissibility, `diff_trans` the geometric
/// `area / distance`, `g_dx = g · (x_R - x_L)`.
fn face_flux(l: &CellEval, r: &CellEval, trans: f64, diff_trans: f64, g_dx: f64, fluid: &FluidParams) -> FaceFlux {
    let cv = fluid.ideal_gas_coefficient();
    let rho_w = fluid.water_density;
    let mut out = FaceFlux::default();

    // liquid phase
    let dphi_l = (l.p - r.p) + 0.5 * (l.rho_liq + r.rho_liq) * g_dx;
    let mut d_dphi_l = [0.0; 6];
    d_dphi_l[P] = 1.0;
    d_dphi_l[3 + P] = -1.0;
    d_dphi_l[R] = 0.5 * g_dx;
    d_dphi_l[3 + R] = 0.5 * g_dx;
    let (up, off) = if dphi_l >= 0.0 { (l, 0) } else { (r, 3) };
    let q_l = trans * up.lam_l * dphi_l;
    let mut dq_l = [0.0; 6];
    for (k, d) in dq_l.iter_mut().enumerate() {
        *d = trans * up.lam_l * d_dphi_l[k];
    }
    dq_l[off + S] += trans * up.dlam_l * dphi_l;
    let conc = up.r;

    // gas phase
    let dphi_g = (l.pg - r.pg) + 0.5 * cv * (l.pg_abs + r.pg_abs) * g_dx;
    let (gl, gr) = (1.0 + 0.5 * cv * g_dx, -1.0 + 0.5 * cv * g_dx);
    let mut d_dphi_g = [0.0; 6];
    d_dphi_g[P] = gl;
    d_dphi_g[S] = gl * l.dpc;
    d_dphi_g[3 + P] = gr;
    d_dphi_g[3 + S] = gr * r.dpc;
    let (upg, offg) = if dphi_g >= 0.0 { (l, 0) } else { (r, 3) };
    let q_g = trans * upg.lam_g * dphi_g;
    let mut dq_g = [0.0; 6];
    for (k, d) in dq_g.iter_mut().enumerate() {
        *d = trans * upg.lam_g * d_dphi_g[k];
    }
    dq_g[offg + S] += trans * upg.dlam_g * dphi_g;
    let rho_g = cv * upg.pg_abs;

    // dissolved-hydrogen diffusion, outward
    let dbar = 0.5 * (l.diff + r.diff);
    let dr = l.r - r.r;
    let j = dbar * diff_trans * dr;
    let mut dj = [0.0; 6];
    dj[S] = 0.5 * l.ddiff * diff_trans * dr;
    dj[3 + S] = 0.5 * r.ddiff * diff_trans * dr;
    dj[R] = dbar * diff_trans;
    dj[3 + R] = -dbar * diff_trans;

    out.water = rho_w * q_l - j;
    out.hydrogen = conc * q_l + rho_g * q_g + j;
    for k in 0..6 {
        out.d_water[k] = rho_w * dq_l[k] - dj[k];
        out.d_hydrogen[k] = conc * dq_l[k] + rho_g * dq_g[k] + dj[k];
    }
    out.d_hydrogen[off + R] += q_l;
    out.d_hydrogen[offg + P] += cv * q_g;
    out.d_hydrogen[offg + S] += cv * upg.dpc * q_g;
    out
}

/// Hydrogen mass per unit pore volume, `ρ_l^h S_l + C_v P_g (1 - S_l)`, and
/// its derivatives with respect to `(P_l, S_l, ρ_l^h)`.
fn hydrogen_density(p: f64, s: f64, r: f64, fluid: &FluidParams, vg: &VanGenuchtenParams) -> (f64, [f64; 3]) {
    let cv = fluid.ideal_gas_coefficient();
    let (pc, dpc) = capillary_pressure(s, vg);
    let pg = p + pc;
    let value = r * s + cv * pg * (1.0 - s);
    let d = [cv * (1.0 - s), r + cv * dpc * (1.0 - s) - cv * pg, s];
    (value, d)
}

/// Residual of the `2N` flow equations and, optionally, their Jacobian as
/// `(row, col, value)` triplets over the `3N` stacked unknowns.
fn flow_operator(
    model: &FlowModel,
    state: &StateVector,
    old: &StateVector,
    dt: f64,
    datum: f64,
    mut jac: Option<&mut Vec<(usize, usize, f64)>>,
) -> Vec<f64> {
    let mesh = &model.mesh;
    let fluid = &model.fluid;
    let vg = &model.vg;
    let n = mesh.num_cells();
    let phi = model.rock.porosity();
    let vol = mesh.cell_volume();
    let rho_w = fluid.water_density;
    let mut res = vec![0.0; 2 * n];

    let cells: Vec<CellEval> = (0..n)
        .map(|i| CellEval::new(state.p_l[i], state.s_l[i], state.rho_lh[i], phi[i], datum, fluid, vg))
        .collect();

    let col = |var: usize, cell: usize| var * n + cell;

    for i in 0..n {
        let acc = vol * phi[i] / dt;
        res[i] = acc * rho_w * (state.s_l[i] - old.s_l[i]);
        let (m_new, dm) = hydrogen_density(state.p_l[i] + datum, state.s_l[i], state.rho_lh[i], fluid, vg);
        let (m_old, _) = hydrogen_density(old.p_l[i] + datum, old.s_l[i], old.rho_lh[i], fluid, vg);
        res[n + i] = acc * (m_new - m_old);
        if let Some(t) = jac.as_deref_mut() {
            t.push((i, col(P, i), 0.0));
            t.push((i, col(S, i), acc * rho_w));
            t.push((i, col(R, i), 0.0));
            for v in 0..3 {
                t.push((n + i, col(v, i), acc * dm[v]));
            }
        }
    }

    for (f, face) in mesh.interior_faces().iter().enumerate() {
        let (li, ri) = (face.left_cell, face.right_cell().expect("interior face"));
        let g_dx = model.gravity_drop(mesh.cell_center(li), mesh.cell_center(ri));
        let flux = face_flux(
            &cells[li],
            &cells[ri],
            model.interior_trans[f],
            face.area / face.distance,
            g_dx,
            fluid,
        );
        res[li] += flux.water;
        res[ri] -= flux.water;
        res[n + li] += flux.hydrogen;
        res[n + ri] -= flux.hydrogen;
        if let Some(t) = jac.as_deref_mut() {
            for k in 0..6 {
                let c = if k < 3 { col(k, li) } else { col(k - 3, ri) };
                t.push((li, c, flux.d_water[k]));
                t.push((ri, c, -flux.d_water[k]));
                t.push((n + li, c, flux.d_hydrogen[k]));
                t.push((n + ri, c, -flux.d_hydrogen[k]));
            }
        }
    }

    for (f, face) in mesh.boundary_faces().iter().enumerate() {
        let i = face.left_cell;
        match model.boundary[f] {
            BoundaryCondition::NeumannFlux { water, hydrogen } => {
                res[i] -= water * face.area;
                res[n + i] -= hydrogen * face.area;
            }
            BoundaryCondition::Dirichlet { p_l, s_l, rho_lh } => {
                let flux = dirichlet_flux(model, &cells[i], face, f, p_l, s_l, rho_lh, datum);
                res[i] += flux.water;
                res[n + i] += flux.hydrogen;
                if let Some(t) = jac.as_deref_mut() {
                    for k in 0..3 {
                        t.push((i, col(k, i), flux.d_water[k]));
                        t.push((n + i, col(k, i), flux.d_hydrogen[k]));
                    }
                }
            }
        }
    }
    res
}

#[allow(clippy::too_many_arguments)]
fn dirichlet_flux(
    model: &FlowModel,
    cell: &CellEval,
    face: &Face,
    f: usize,
    p_l: f64,
    s_l: f64,
    rho_lh: f64,
    datum: f64,
) -> FaceFlux {
    let i = face.left_cell;
    let ghost = CellEval::new(
        p_l - datum,
        s_l,
        rho_lh,
        model.rock.porosity()[i],
        datum,
        &model.fluid,
        &model.vg,
    );
    let g_dx = model.gravity_drop(model.mesh.cell_center(i), model.mesh.face_center(face));
    face_flux(
        cell,
        &ghost,
        model.boundary_trans[f],
        face.area / face.distance,
        g_dx,
        &model.fluid,
    )
}

/// Residual of the discrete water (`0..N`) and hydrogen (`N..2N`) balances.
pub fn residual_pde(model: &FlowModel, state_new: &StateVector, state_old: &StateVector, dt: f64) -> Result<Vec<f64>> {
    check_inputs(model, state_new, state_old, dt)?;
    Ok(flow_operator(model, state_new, state_old, dt, 0.0, None))
}

/// Analytic Jacobian of [`residual_pde`] as a `2N × 3N` matrix, upwind
/// directions frozen at `state_new`.
pub fn jacobian_pde(model: &FlowModel, state_new: &StateVector, state_old: &StateVector, dt: f64) -> Result<CsrMatrix> {
    check_inputs(model, state_new, state_old, dt)?;
    let n = model.num_cells();
    let mut trip = Vec::with_capacity(60 * n);
    flow_operator(model, state_new, state_old, dt, 0.0, Some(&mut trip));
    Ok(CsrMatrix::from_triplets(2 * n, 3 * n, trip))
}

fn check_inputs(model: &FlowModel, a: &StateVector, b: &StateVector, dt: f64) -> Result<()> {
    let n = model.num_cells();
    a.check_len(n)?;
    b.check_len(n)?;
    if !(dt > 0.0) {
        return Err(crate::error::param("dt", "must be positive"));
    }
    Ok(())
}

/// Row equilibration applied to the stacked residual and Jacobian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResidualScaling {
    /// Water rows divided by `V φ ρ_w / dt`, hydrogen rows by
    /// `V φ C_h P_ref / dt` (the dissolved-hydrogen density at the
    /// reference pressure), constraint rows by `max(1, C_h P_ref)`.
    Scaled { reference_pressure: f64 },
    Raw,
}

impl Default for ResidualScaling {
    fn default() -> Self {
        ResidualScaling::Scaled {
            reference_pressure: 1e6,
        }
    }
}

impl ResidualScaling {
    pub fn row_scale(&self, model: &FlowModel, dt: f64) -> Vec<f64> {
        let n = model.num_cells();
        match *self {
            ResidualScaling::Raw => vec![1.0; 3 * n],
            ResidualScaling::Scaled { reference_pressure } => {
                let acc = model.accumulation_scale(dt);
                let rho_h = model.fluid.henry_coefficient() * reference_pressure;
                let h_ratio = model.fluid.water_density / rho_h;
                let con = 1.0 / rho_h.max(1.0);
                let mut s = Vec::with_capacity(3 * n);
                s.extend(acc.iter().map(|a| 1.0 / a));
                s.extend(acc.iter().map(|a| h_ratio / a));
                s.extend(std::iter::repeat(con).take(n));
                s
            }
        }
    }
}

/// Row-equilibrated Newton system `J Δu = -F`.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Scaled stacked residual `F = (H; Θ)`.
    pub residual: Vec<f64>,
    pub row_scale: Vec<f64>,
    pub num_cells: usize,
}

impl GlobalSystem {
    /// Diagonal of the constraint/concentration block `A_33`.
    pub fn a33_diagonal(&self) -> Vec<f64> {
        let n = self.num_cells;
        (0..n).map(|j| self.matrix.get(2 * n + j, 2 * n + j)).collect()
    }

    pub fn residual_norm(&self) -> f64 {
        crate::linalg::norm2(&self.residual)
    }
}

/// Stacked scaled residual `(H; Θ)` where `Θ` uses the non-smooth
/// counterpart of `kind`.
pub fn stacked_residual(
    model: &FlowModel,
    state: &StateVector,
    state_old: &StateVector,
    dt: f64,
    kind: CFunctionKind,
    scaling: ResidualScaling,
) -> Result<Vec<f64>> {
    check_inputs(model, state, state_old, dt)?;
    let mut f = flow_operator(model, state, state_old, dt, 0.0, None);
    let args = ConstraintArgs::evaluate(state, &model.fluid, &model.vg);
    f.extend(crate::ncp::theta_from_args(kind.nonsmooth(), &args));
    let scale = scaling.row_scale(model, dt);
    for (v, s) in f.iter_mut().zip(&scale) {
        *v *= s;
    }
    Ok(f)
}

/// Assembles the Newton system. Constraint rows of the Jacobian come from
/// `kind` (with its current smoothing); the right-hand side always uses the
/// non-smooth residual.
pub fn assemble_global(
    model: &FlowModel,
    state: &StateVector,
    state_old: &StateVector,
    dt: f64,
    kind: CFunctionKind,
    scaling: ResidualScaling,
) -> Result<GlobalSystem> {
    assemble_global_with_datum(model, state, state_old, dt, kind, scaling, 0.0)
}

/// [`assemble_global`] for states whose pressures are stored as `P_l - datum`.
pub fn assemble_global_with_datum(
    model: &FlowModel,
    state: &StateVector,
    state_old: &StateVector,
    dt: f64,
    kind: CFunctionKind,
    scaling: ResidualScaling,
    datum: f64,
) -> Result<GlobalSystem> {
    check_inputs(model, state, state_old, dt)?;
    let n = model.num_cells();
    let mut trip = Vec::with_capacity(60 * n);
    let mut residual = flow_operator(model, state, state_old, dt, datum, Some(&mut trip));

    let args = ConstraintArgs::evaluate_with_datum(state, datum, &model.fluid, &model.vg);
    let theta_kind = kind.nonsmooth();
    for j in 0..n {
        residual.push(theta_kind.value(args.a[j], args.b[j]));
        let row = constraint_jacobian_row(kind, args.a[j], args.b[j], &args.da[j], &args.db[j]);
        for (c, v) in row.to_sparse(j, n) {
            trip.push((2 * n + j, c, v));
        }
    }

    let mut matrix = CsrMatrix::from_triplets(3 * n, 3 * n, trip);
    let row_scale = scaling.row_scale(model, dt);
    matrix.scale_rows(&row_scale);
    for (v, s) in residual.iter_mut().zip(&row_scale) {
        *v *= s;
    }
    let rhs = residual.iter().map(|v| -v).collect();
    Ok(GlobalSystem {
        matrix,
        rhs,
        residual,
        row_scale,
        num_cells: n,
    })
}

/// Total water and hydrogen mass (kg) in the domain.
pub fn mass_inventory(model: &FlowModel, state: &StateVector) -> (f64, f64) {
    let vol = model.mesh.cell_volume();
    let mut water = 0.0;
    let mut hydrogen = 0.0;
    for (i, phi) in model.rock.porosity().iter().enumerate() {
        water += phi * model.fluid.water_density * state.s_l[i] * vol;
        let (m, _) = hydrogen_density(state.p_l[i], state.s_l[i], state.rho_lh[i], &model.fluid, &model.vg);
        hydrogen += phi * m * vol;
    }
    (water, hydrogen)
}

/// Net water and hydrogen mass rates (kg/s) into the domain through the
/// boundary, evaluated at `state`.
pub fn boundary_influx(model: &FlowModel, state: &StateVector) -> (f64, f64) {
    let n = model.num_cells();
    let mut water = 0.0;
    let mut hydrogen = 0.0;
    for (f, face) in model.mesh.boundary_faces().iter().enumerate() {
        match model.boundary[f] {
            BoundaryCondition::NeumannFlux { water: w, hydrogen: h } => {
                water += w * face.area;
                hydrogen += h * face.area;
            }
            BoundaryCondition::Dirichlet { p_l, s_l, rho_lh } => {
                let i = face.left_cell;
                debug_assert!(i < n);
                let cell = CellEval::new(
                    state.p_l[i],
                    state.s_l[i],
                    state.rho_lh[i],
                    model.rock.porosity()[i],
                    0.0,
                    &model.fluid,
                    &model.vg,
                );
                let flux = dirichlet_flux(model, &cell, face, f, p_l, s_l, rho_lh, 0.0);
                water -= flux.water;
                hydrogen -= flux.hydrogen;
            }
        }
    }
    (water, hydrogen)
}
