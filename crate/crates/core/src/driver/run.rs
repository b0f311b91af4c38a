use std::ops::ControlFlow;
use std::path::Path;
use std::time::{Duration, Instant};

use super::config::SimulationConfig;
use super::output::{write_cells_csv, write_ledger_csv, write_vtk};
use super::timestep::{LedgerTotals, RunLedger, TimeStepController};
use crate::assembly::FlowModel;
use crate::error::{Error, Result};
use crate::linalg::GmresConfig;
use crate::nonlinear::{solve_step, NewtonConfig, NewtonReport};
use crate::state::StateVector;

/// One attempted step, handed to observers after the solve.
pub struct StepEvent<'a> {
    pub time: f64,
    pub dt: f64,
    pub report: &'a NewtonReport,
    pub state_old: &'a StateVector,
    /// Converged state, `None` for failed attempts.
    pub state_new: Option<&'a StateVector>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub ledger: RunLedger,
    pub final_state: StateVector,
    pub final_time: f64,
    pub wall_time: Duration,
    /// Reason the run stopped before the end time.
    pub abort: Option<Error>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }

    pub fn totals(&self) -> LedgerTotals {
        self.ledger.totals()
    }
}

/// Integrates from the controller's current time to its end time, retrying
/// failed attempts from the last converged state with half the step. The
/// observer may break to stop the run early; the outcome then carries
/// [`Error::Stopped`].
pub fn simulate(
    model: &FlowModel,
    initial: StateVector,
    mut controller: TimeStepController,
    newton: &NewtonConfig,
    gmres: &GmresConfig,
    observer: &mut dyn FnMut(&StepEvent) -> ControlFlow<()>,
) -> Result<RunOutcome> {
    newton.validate()?;
    gmres.validate()?;
    initial.check_len(model.num_cells())?;
    let start = Instant::now();
    let mut ledger = RunLedger::default();
    let mut state = initial;
    let mut abort = None;

    while !controller.finished() {
        let t = controller.time();
        let dt = controller.step_size();
        let (candidate, report) = solve_step(model, &state, dt, newton, gmres)?;
        ledger.record(t, dt, &report);
        let accepted = report.converged && candidate.is_finite();
        let flow = observer(&StepEvent {
            time: t,
            dt,
            report: &report,
            state_old: &state,
            state_new: accepted.then_some(&candidate),
        });
        if report.converged && !candidate.is_finite() {
            abort = Some(Error::NonFiniteState(t + dt));
            break;
        }
        if let Err(e) = controller.advance(dt, &report) {
            abort = Some(e);
            break;
        }
        if accepted {
            state = candidate;
        }
        if flow.is_break() {
            abort = Some(Error::Stopped(controller.time()));
            break;
        }
    }

    Ok(RunOutcome {
        ledger,
        final_state: state,
        final_time: controller.time(),
        wall_time: start.elapsed(),
        abort,
    })
}

/// Builds the model from `config`, runs it and writes the configured
/// outputs. The ledger is written even when the run aborts.
pub fn run_simulation(config: &SimulationConfig) -> Result<RunOutcome> {
    config.validate()?;
    let model = config.build_model()?;
    let controller = config.controller()?;
    let unit = config.time.unit.seconds();
    let snapshots: Vec<f64> = config.output.snapshots.iter().map(|t| t * unit).collect();
    let dir = config.output.directory.as_deref();
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }

    let mut io_error = None;
    let mut observer = |ev: &StepEvent| {
        let (Some(d), Some(new)) = (dir, ev.state_new) else {
            return ControlFlow::Continue(());
        };
        let t_end = ev.time + ev.dt;
        for (idx, &ts) in snapshots.iter().enumerate() {
            if ts > ev.time && ts <= t_end * (1.0 + 1e-12) {
                let path = d.join(format!("snapshot_{idx:03}.vtk"));
                if let Err(e) = write_vtk(&path, &model, new, ts) {
                    io_error.get_or_insert(e);
                }
            }
        }
        ControlFlow::Continue(())
    };
    let outcome = simulate(
        &model,
        config.initial_state(),
        controller,
        &config.solver,
        &config.linear,
        &mut observer,
    )?;
    if let Some(e) = io_error {
        return Err(e);
    }
    if let Some(d) = dir {
        write_outputs(d, &model, &outcome)?;
    }
    Ok(outcome)
}

fn write_outputs(dir: &Path, model: &FlowModel, outcome: &RunOutcome) -> Result<()> {
    write_ledger_csv(&dir.join("ledger.csv"), &outcome.ledger)?;
    write_vtk(&dir.join("final.vtk"), model, &outcome.final_state, outcome.final_time)?;
    write_cells_csv(&dir.join("final_cells.csv"), model, &outcome.final_state)?;
    let totals = outcome.totals();
    let (ts, ns) = totals.table_cells();
    let status = match &outcome.abort {
        None => "completed".to_string(),
        Some(e) => format!("aborted: {e}"),
    };
    let text = format!(
        "status = {status}\nfinal_time_s = {:e}\nTS = {ts}\nNS = {ns}\nlinear_iterations = {}\nwall_time_s = {:.3}\n",
        outcome.final_time,
        outcome.ledger.total_linear_iterations(),
        outcome.wall_time.as_secs_f64()
    );
    std::fs::write(dir.join("summary.txt"), text)?;
    Ok(())
}
