#![allow(dead_code)]

use std::ops::ControlFlow;

use ncpflow::assembly::{boundary_influx, jacobian_pde, mass_inventory, residual_pde, BoundaryCondition, FlowModel};
use ncpflow::linalg::CsrMatrix;
use ncpflow::constitutive::{FluidParams, VanGenuchtenParams};
use ncpflow::driver::benchmarks::{benchmark_fluid, benchmark_van_genuchten};
use ncpflow::driver::{simulate, StepEvent, TimeStepController};
use ncpflow::linalg::GmresConfig;
use ncpflow::mesh::{BoundarySide, CartesianMesh, RockField};
use ncpflow::nonlinear::{solve_step, Method, NewtonConfig};
use ncpflow::state::StateVector;
use rand::Rng;

pub fn fluid() -> FluidParams {
    benchmark_fluid()
}

pub fn vg(entry_pressure: f64) -> VanGenuchtenParams {
    benchmark_van_genuchten(entry_pressure)
}

/// Line of `n` cells along x, 1 m wide, all boundaries closed.
pub fn closed_line(n: usize, permeability: f64, entry_pressure: f64) -> FlowModel {
    let mesh = CartesianMesh::new([n, 1, 1], [1.0, 1.0, 1.0], [0.0; 3]).unwrap();
    let rock = RockField::uniform(n, permeability, 0.15).unwrap();
    FlowModel::closed(mesh, rock, fluid(), vg(entry_pressure), [0.0; 3]).unwrap()
}

/// Line with a hydrogen inflow at x = 0 and a saturated outlet at the far end.
pub fn injection_line(n: usize, permeability: f64, entry_pressure: f64, rate: f64) -> FlowModel {
    let mut model = closed_line(n, permeability, entry_pressure);
    let pick = |side| model.mesh.boundary_faces_in(side, [f64::NEG_INFINITY; 3], [f64::INFINITY; 3])[0];
    let (inlet, outlet) = (pick(BoundarySide::XMin), pick(BoundarySide::XMax));
    model.set_boundary_condition(
        inlet,
        BoundaryCondition::NeumannFlux {
            water: 0.0,
            hydrogen: rate,
        },
    );
    model.set_boundary_condition(
        outlet,
        BoundaryCondition::Dirichlet {
            p_l: 1e6,
            s_l: 1.0,
            rho_lh: 0.0,
        },
    );
    model
}

/// A state with gas in the first half of the cells, liquid-only behind it,
/// and Henry's law satisfied where gas is present.
pub fn two_phase_state(model: &FlowModel) -> StateVector {
    let n = model.num_cells();
    let ch = model.fluid.henry_coefficient();
    let mut st = StateVector::uniform(n, 1e6, 1.0, 0.0);
    for i in 0..n {
        st.p_l[i] = 1e6 + 2e3 * (n - i) as f64;
        if 2 * i < n {
            st.s_l[i] = 0.75 + 0.2 * i as f64 / n as f64;
            let pg = ncpflow::constitutive::gas_pressure(st.p_l[i], st.s_l[i], &model.vg);
            st.rho_lh[i] = ch * pg;
        } else {
            st.rho_lh[i] = 0.5 * ch * st.p_l[i];
        }
    }
    st
}

pub fn max_rel_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn dense(m: &CsrMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| {
            let mut row = vec![0.0; m.ncols()];
            for (j, v) in m.row(i) {
                row[j] = v;
            }
            row
        })
        .collect()
}

/// 2 x 1 x 2 block with gravity, an inflow face and an outlet face.
pub fn fd_model() -> FlowModel {
    let mesh = CartesianMesh::new([2, 1, 2], [3.0, 2.0, 1.5], [0.0; 3]).unwrap();
    let rock = RockField::new(vec![2e-14, 5e-15, 1e-14, 3e-14], vec![0.2, 0.15, 0.1, 0.25]).unwrap();
    let mut model = FlowModel::closed(mesh, rock, fluid(), vg(2e5), [0.0, 0.0, -9.81]).unwrap();
    let faces = model.mesh.boundary_faces().to_vec();
    let inflow = faces.iter().position(|f| f.left_cell == 0 && f.normal_axis == 0).unwrap();
    let outlet = faces.iter().position(|f| f.left_cell == 3 && f.normal_axis == 0).unwrap();
    model.set_boundary_condition(
        inflow,
        BoundaryCondition::NeumannFlux {
            water: 1e-7,
            hydrogen: 3e-8,
        },
    );
    model.set_boundary_condition(
        outlet,
        BoundaryCondition::Dirichlet {
            p_l: 0.9e6,
            s_l: 1.0,
            rho_lh: 0.0,
        },
    );
    model
}

/// Random two-phase state with well separated pressures and saturations
/// away from the regularization band and from upwind switches.
pub fn random_state(rng: &mut impl Rng, n: usize) -> StateVector {
    let mut p: Vec<f64> = (0..n).map(|i| 1.0e6 + 4e4 * i as f64 + rng.gen_range(0.0..1e4)).collect();
    p.reverse();
    StateVector {
        p_l: p,
        s_l: (0..n).map(|_| rng.gen_range(0.55..0.95)).collect(),
        rho_lh: (0..n).map(|_| rng.gen_range(1e-3..1.5e-2)).collect(),
    }
}

/// Largest entrywise mismatch between the analytic PDE Jacobian and central
/// differences at a random state, in units of the allowed error: `1e-5`
/// relative, or `1e-9` of the row's largest entry for entries that vanish.
pub fn jacobian_fd_mismatch(model: &FlowModel, rng: &mut impl Rng) -> f64 {
    let n = model.num_cells();
    let state = random_state(rng, n);
    let mut old = random_state(rng, n);
    old.s_l.iter_mut().for_each(|s| *s = (*s + 0.02).min(0.97));
    let dt = 1e7;
    let jac = dense(&jacobian_pde(model, &state, &old, dt).unwrap());
    let u = state.to_stacked();
    let steps = [1.0, 1e-7, 1e-8];
    let mut worst = 0.0f64;
    for col in 0..3 * n {
        let h = steps[col / n];
        let mut up = u.clone();
        let mut dn = u.clone();
        up[col] += h;
        dn[col] -= h;
        let rp = residual_pde(model, &StateVector::from_stacked(&up).unwrap(), &old, dt).unwrap();
        let rm = residual_pde(model, &StateVector::from_stacked(&dn).unwrap(), &old, dt).unwrap();
        for row in 0..2 * n {
            let fd = (rp[row] - rm[row]) / (2.0 * h);
            let an = jac[row][col];
            let row_scale = jac[row].iter().map(|v| v.abs()).fold(0.0, f64::max);
            let allowed = (1e-5 * fd.abs().max(an.abs())).max(1e-9 * row_scale);
            worst = worst.max((fd - an).abs() / allowed);
        }
    }
    worst
}

fn tight(method: Method) -> NewtonConfig {
    // far below the conservation tolerances, so the scheme itself is measured
    NewtonConfig {
        tolerance: 1e-11,
        ..NewtonConfig::with_method(method)
    }
}

/// Relative water and hydrogen inventory drift over ten steps in a closed
/// column that starts out of equilibrium.
pub fn closed_box_drift(method: Method) -> (f64, f64) {
    let mut model = closed_line(8, 1e-16, 2e5);
    model.gravity = [-9.81, 0.0, 0.0];
    let initial = two_phase_state(&model);
    let (w0, h0) = mass_inventory(&model, &initial);
    let mut state = initial.clone();
    let mut moved = 0.0f64;
    for _ in 0..10 {
        let (next, rep) = solve_step(&model, &state, 1e5, &tight(method), &GmresConfig::default()).unwrap();
        assert!(rep.converged, "{method:?}: {rep:?}");
        moved = moved.max(max_rel_diff(&next.s_l, &state.s_l));
        state = next;
    }
    assert!(moved > 1e-6, "the column should not be at rest");
    let (w, h) = mass_inventory(&model, &state);
    ((w - w0).abs() / w0, (h - h0).abs() / h0)
}

/// Worst per-step relative mismatch between the inventory change and the
/// time-integrated boundary fluxes on an injection problem.
pub fn injection_imbalance(method: Method) -> f64 {
    let model = injection_line(30, 1e-18, 2e5, 2e-6);
    let initial = StateVector::uniform(30, 1e6, 1.0, 0.0);
    let controller = TimeStepController::with_defaults(2e4, 4e5).unwrap();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut observer = |ev: &StepEvent| {
        if let Some(new) = ev.state_new {
            let (w_old, h_old) = mass_inventory(&model, ev.state_old);
            let (w_new, h_new) = mass_inventory(&model, new);
            // backward Euler: boundary fluxes are evaluated at the new state
            let (qw, qh) = boundary_influx(&model, new);
            let scale_h = (ev.dt * 2e-6).max((h_new - h_old).abs());
            let scale_w = (ev.dt * qw).abs().max((w_new - w_old).abs()).max(1e-6 * w_old);
            worst = worst.max(((h_new - h_old) - ev.dt * qh).abs() / scale_h);
            worst = worst.max(((w_new - w_old) - ev.dt * qw).abs() / scale_w);
            checked += 1;
        }
        ControlFlow::Continue(())
    };
    let out = simulate(&model, initial, controller, &tight(method), &GmresConfig::default(), &mut observer).unwrap();
    assert!(out.completed(), "{:?}", out.abort);
    assert!(checked >= 3);
    assert!(out.final_state.s_l[0] < 1.0, "gas should form at the inlet");
    worst
}
