mod common;

use ncpflow::assembly::{assemble_global, stacked_residual, FlowModel, ResidualScaling};
use ncpflow::driver::benchmark_momas;
use ncpflow::linalg::{gmres_solve, BlockPreconditioner, GmresConfig, IdentityPreconditioner};
use ncpflow::ncp::{active_set_partition, CFunctionKind, ConstraintArgs, Smoothing};
use ncpflow::nonlinear::{
    solve_step, solve_step_semismooth, solve_step_smoothing, Method, NewtonConfig, NewtonReport,
};
use ncpflow::state::StateVector;

/// Two cells with strong hydrogen inflow: gas appears in the inlet cell
/// within one step.
fn two_cell_problem() -> (FlowModel, StateVector, f64) {
    let model = common::injection_line(2, 1e-18, 2e5, 2e-6);
    let old = StateVector::uniform(2, 1e6, 1.0, 0.0);
    (model, old, 2e4)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Damped fixed-point iteration `u ← u - ω M⁻¹ F(u)` with `M` a finite
/// difference Jacobian refreshed every few sweeps. Uses only residual
/// evaluations.
fn fixed_point_oracle(model: &FlowModel, old: &StateVector, dt: f64, kind: CFunctionKind) -> StateVector {
    let scaling = ResidualScaling::default();
    let f = |u: &[f64]| stacked_residual(model, &StateVector::from_stacked(u).unwrap(), old, dt, kind, scaling).unwrap();
    let mut u = old.to_stacked();
    let n = u.len();
    let steps: Vec<f64> = (0..n).map(|k| [1e-2, 1e-9, 1e-10][k / (n / 3)]).collect();
    let mut m = vec![vec![0.0; n]; n];
    for sweep in 0..5000 {
        let r = f(&u);
        if ncpflow::linalg::norm2(&r) < 1e-10 {
            return StateVector::from_stacked(&u).unwrap();
        }
        if sweep % 5 == 0 {
            for c in 0..n {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[c] += steps[c];
                dn[c] -= steps[c];
                let (rp, rm) = (f(&up), f(&dn));
                for row in 0..n {
                    m[row][c] = (rp[row] - rm[row]) / (2.0 * steps[c]);
                }
            }
        }
        let d = solve_dense(m.clone(), r);
        for (ui, di) in u.iter_mut().zip(&d) {
            *ui -= 0.5 * di;
        }
    }
    panic!("fixed-point oracle did not converge");
}

fn close(x: &StateVector, y: &StateVector, rel: f64, rho_scale: f64) -> bool {
    let ok = |a: &[f64], b: &[f64], scale: f64| {
        a.iter()
            .zip(b)
            .all(|(p, q)| (p - q).abs() <= rel * p.abs().max(q.abs()).max(scale))
    };
    ok(&x.p_l, &y.p_l, 1.0) && ok(&x.s_l, &y.s_l, 1.0) && ok(&x.rho_lh, &y.rho_lh, rho_scale)
}

fn check_report_shape(report: &NewtonReport, cfg: &NewtonConfig) {
    assert_eq!(report.residual_history.len(), report.iterations + 1);
    assert_eq!(report.linear_iterations.len(), report.iterations);
    if report.converged {
        assert!(report.final_residual() <= cfg.tolerance);
    }
}

#[test]
fn newton_matches_fixed_point_oracle_on_two_cells() {
    let (model, old, dt) = two_cell_problem();
    let rho_scale = model.fluid.henry_coefficient() * 1e6;
    let oracle = fixed_point_oracle(&model, &old, dt, CFunctionKind::FischerBurmeister);
    assert!(oracle.s_l[0] < 0.999, "gas should appear: {oracle:?}");
    for method in [Method::Min, Method::Fb, Method::Sfb] {
        let cfg = NewtonConfig {
            tolerance: 1e-10,
            ..NewtonConfig::with_method(method)
        };
        let (u, report) = solve_step(&model, &old, dt, &cfg, &GmresConfig::default()).unwrap();
        check_report_shape(&report, &cfg);
        assert!(report.converged, "{method:?}: {report:?}");
        assert!(close(&u, &oracle, 1e-8, rho_scale), "{method:?}\n{u:?}\n{oracle:?}");
    }
}

fn momas_first_step(cells: usize) -> (FlowModel, StateVector, f64) {
    let cfg = benchmark_momas(2e6, cells).unwrap();
    let model = cfg.build_model().unwrap();
    let dt = cfg.controller().unwrap().step_size();
    (model, cfg.initial_state(), dt)
}

/// Line of 30 cells in which the first step creates a gas region.
fn gas_problem() -> (FlowModel, StateVector, f64) {
    let model = common::injection_line(30, 1e-18, 2e5, 2e-6);
    (model, StateVector::uniform(30, 1e6, 1.0, 0.0), 2e4)
}

#[test]
fn fb_and_smoothed_fb_find_the_same_root() {
    let (model, old, dt) = gas_problem();
    let rho_scale = model.fluid.henry_coefficient() * 1e6;
    let fb_cfg = NewtonConfig::with_method(Method::Fb);
    let sfb_cfg = NewtonConfig::with_method(Method::Sfb);
    let (fb, fb_rep) = solve_step_semismooth(&model, &old, dt, &fb_cfg, &GmresConfig::default()).unwrap();
    let (sfb, sfb_rep) = solve_step_smoothing(&model, &old, dt, &sfb_cfg, &GmresConfig::default()).unwrap();
    assert!(fb_rep.converged && sfb_rep.converged, "{fb_rep:?}\n{sfb_rep:?}");
    assert!(fb.s_l[0] < 1.0, "first step should create gas");
    assert!(close(&fb, &sfb, 1e-6, rho_scale));
    for (rep, cfg) in [(&fb_rep, &fb_cfg), (&sfb_rep, &sfb_cfg)] {
        check_report_shape(rep, cfg);
        let tol = 10.0 * cfg.tolerance;
        assert!(rep.complementarity_violation <= tol * (model.fluid.henry_coefficient() * 1e6).max(1.0));
    }
    for u in [&fb, &sfb] {
        let args = ConstraintArgs::evaluate(u, &model.fluid, &model.vg);
        assert!(args.a.iter().all(|&a| a >= -1e-5));
        assert!(args.b.iter().all(|&b| b >= -1e-5));
    }
}

#[test]
fn smoothing_with_zero_tau_reproduces_fb_iterates() {
    let (model, old, dt) = gas_problem();
    let fb_cfg = NewtonConfig::with_method(Method::Fb);
    let sfb_cfg = NewtonConfig {
        initial_tau: 0.0,
        tau_floor: 0.0,
        ..NewtonConfig::with_method(Method::Sfb)
    };
    let (fb, fb_rep) = solve_step(&model, &old, dt, &fb_cfg, &GmresConfig::default()).unwrap();
    let (sfb, sfb_rep) = solve_step(&model, &old, dt, &sfb_cfg, &GmresConfig::default()).unwrap();
    assert_eq!(fb_rep.residual_history, sfb_rep.residual_history);
    assert_eq!(fb_rep.linear_iterations, sfb_rep.linear_iterations);
    assert_eq!(fb, sfb);
    assert!(sfb_rep.tau_history.iter().all(|&t| t == 0.0));
}

#[test]
fn tau_follows_the_geometric_schedule() {
    let (model, old, dt) = gas_problem();
    let cfg = NewtonConfig {
        tau_floor: 1e-9,
        ..NewtonConfig::with_method(Method::Sfb)
    };
    let (_, rep) = solve_step(&model, &old, dt, &cfg, &GmresConfig::default()).unwrap();
    assert!(rep.iterations >= 4);
    for (k, t) in rep.tau_history.iter().enumerate() {
        let expected = (1e-6 * 0.1f64.powi(k as i32)).max(1e-9);
        assert!((t - expected).abs() <= 1e-12 * expected, "{k}: {t}");
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_every_method() {
    let mut cfg = benchmark_momas(2e6, 30).unwrap();
    for b in &mut cfg.boundary {
        if let ncpflow::driver::config::ConditionSpec::Neumann { hydrogen, .. } = &mut b.condition {
            *hydrogen = 0.0;
        }
    }
    let model = cfg.build_model().unwrap();
    let old = cfg.initial_state();
    for method in Method::ALL {
        let newton = NewtonConfig::with_method(method);
        for dt in [1.0, 3e11, 3e13] {
            let (u, rep) = solve_step(&model, &old, dt, &newton, &GmresConfig::default()).unwrap();
            assert!(rep.converged);
            assert_eq!(rep.iterations, 0);
            assert_eq!(rep.residual_history, vec![0.0]);
            assert_eq!(u, old);
        }
    }
}

#[test]
fn method_and_solver_must_agree() {
    let (model, old, dt) = momas_first_step(5);
    let g = GmresConfig::default();
    assert!(solve_step_semismooth(&model, &old, dt, &NewtonConfig::with_method(Method::Sfb), &g).is_err());
    assert!(solve_step_smoothing(&model, &old, dt, &NewtonConfig::with_method(Method::Min), &g).is_err());
}

#[test]
fn a33_structure_follows_the_c_function() {
    let (model, _, dt) = momas_first_step(30);
    let n = model.num_cells();
    let ch = model.fluid.henry_coefficient();
    // saturated everywhere; half the cells sit exactly on Henry's law
    let mut state = StateVector::uniform(n, 1e6, 1.0, 0.0);
    for j in (0..n).step_by(2) {
        state.rho_lh[j] = ch * ncpflow::constitutive::gas_pressure(state.p_l[j], 1.0, &model.vg);
    }
    let old = state.clone();
    let scaling = ResidualScaling::default();

    let min = assemble_global(&model, &state, &old, dt, CFunctionKind::Min, scaling).unwrap();
    let args = ConstraintArgs::evaluate(&state, &model.fluid, &model.vg);
    let (active, inactive) = active_set_partition(&args.a, &args.b);
    assert!(!active.is_empty() && !inactive.is_empty());
    let diag = min.a33_diagonal();
    for &j in &active {
        // b-row: dρ coefficient is -1 before scaling
        assert!(diag[j] < 0.0);
        assert!(min.matrix.get(2 * n + j, j) > 0.0);
    }
    for &j in &inactive {
        // a-row: only the saturation column
        assert_eq!(diag[j], 0.0);
        assert_eq!(min.matrix.get(2 * n + j, j), 0.0);
        assert!(min.matrix.get(2 * n + j, n + j) != 0.0);
    }

    for tau in [1e-4, 1e-6, 1e-10] {
        let kind = CFunctionKind::SmoothFischerBurmeister(Smoothing::new(tau).unwrap());
        let sys = assemble_global(&model, &state, &old, dt, kind, scaling).unwrap();
        assert!(sys.a33_diagonal().iter().all(|&d| d != 0.0));
    }
}

#[test]
fn preconditioning_preserves_the_solution_and_cuts_iterations() {
    let (model, old, dt) = momas_first_step(200);
    let kind = CFunctionKind::SmoothFischerBurmeister(Smoothing::new(1e-6).unwrap());
    let sys = assemble_global(&model, &old, &old, dt, kind, ResidualScaling::default()).unwrap();
    let n = model.num_cells();
    let cfg = GmresConfig {
        max_iterations: 3000,
        restart: 200,
        ..GmresConfig::default()
    };
    let plain = gmres_solve(&sys.matrix, &sys.rhs, None, &IdentityPreconditioner, &cfg);
    let ilu = BlockPreconditioner::new(&sys.matrix, n).unwrap();
    let cpr = BlockPreconditioner::two_stage(&sys.matrix, n).unwrap();
    assert!(cpr.has_pressure_stage() && !ilu.has_pressure_stage());
    let with_ilu = gmres_solve(&sys.matrix, &sys.rhs, None, &ilu, &cfg);
    let with_cpr = gmres_solve(&sys.matrix, &sys.rhs, None, &cpr, &cfg);
    assert!(with_ilu.usable() && with_cpr.usable());
    assert!(with_ilu.iterations < plain.iterations);
    assert!(with_cpr.iterations <= with_ilu.iterations);
    let xs = ncpflow::linalg::norm2(&with_cpr.x);
    for x in [&with_ilu.x] {
        let d: Vec<f64> = x.iter().zip(&with_cpr.x).map(|(a, b)| a - b).collect();
        assert!(ncpflow::linalg::norm2(&d) <= 1e-8 * xs);
    }
}

#[test]
fn diagonal_system_takes_one_gmres_iteration() {
    let n = 50;
    let a = ncpflow::linalg::CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0 + i as f64)).collect());
    let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let jac = ncpflow::linalg::JacobiPreconditioner::new(&a);
    let res = gmres_solve(&a, &b, None, &jac, &GmresConfig::default());
    assert!(res.converged);
    assert_eq!(res.iterations, 1);
    for i in 0..n {
        assert!((res.x[i] * (1.0 + i as f64) - b[i]).abs() < 1e-14);
    }
}
