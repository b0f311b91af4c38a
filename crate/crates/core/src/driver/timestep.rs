use crate::error::{param, Error, Result};
use crate::nonlinear::NewtonReport;

/// Largest NS after which the step is doubled.
pub const GROW_MAX_ITERATIONS: usize = 10;
/// Largest NS after which the step is kept.
pub const HOLD_MAX_ITERATIONS: usize = 15;

/// Step size rule after a converged step with `iterations` Newton iterations.
pub fn dt_after_success(dt: f64, iterations: usize) -> f64 {
    if iterations <= GROW_MAX_ITERATIONS {
        2.0 * dt
    } else if iterations <= HOLD_MAX_ITERATIONS {
        dt
    } else {
        0.5 * dt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeStepController {
    dt: f64,
    dt_min: f64,
    dt_max: f64,
    end_time: f64,
    time: f64,
    /// Intermediate times that attempts are clipped to, ascending.
    stops: Vec<f64>,
}

impl TimeStepController {
    pub fn new(initial_dt: f64, dt_min: f64, dt_max: f64, end_time: f64) -> Result<Self> {
        if !(end_time > 0.0 && end_time.is_finite()) {
            return Err(param("end_time", "must be positive and finite"));
        }
        if !(dt_min > 0.0 && dt_min <= dt_max) {
            return Err(param("dt_min", "must satisfy 0 < dt_min <= dt_max"));
        }
        if !(initial_dt >= dt_min && initial_dt <= dt_max) {
            return Err(param("initial_dt", "must lie in [dt_min, dt_max]"));
        }
        Ok(TimeStepController {
            dt: initial_dt,
            dt_min,
            dt_max,
            end_time,
            time: 0.0,
            stops: Vec::new(),
        })
    }

    /// Defaults `dt_min = 1e-3 dt0` and `dt_max = end / 4`, widened if
    /// needed so that `dt0` is admissible.
    pub fn with_defaults(initial_dt: f64, end_time: f64) -> Result<Self> {
        let dt_max = (0.25 * end_time).max(initial_dt);
        Self::new(initial_dt, 1e-3 * initial_dt, dt_max, end_time)
    }

    /// Attempts are clipped so that every time in `stops` inside
    /// `(0, end)` is hit exactly.
    pub fn with_stops(mut self, stops: &[f64]) -> Self {
        let mut s: Vec<f64> = stops
            .iter()
            .copied()
            .filter(|&t| t > 0.0 && t < self.end_time)
            .collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        self.stops = s;
        self
    }

    fn next_stop(&self) -> f64 {
        self.stops
            .iter()
            .copied()
            .find(|&t| t > self.time)
            .unwrap_or(self.end_time)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dt_min(&self) -> f64 {
        self.dt_min
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn end_time(&self) -> f64 {
        self.end_time
    }

    pub fn finished(&self) -> bool {
        self.time >= self.end_time
    }

    /// Size of the next attempt, clipped so the next stop or the end time
    /// is hit exactly.
    pub fn step_size(&self) -> f64 {
        self.dt.min(self.next_stop() - self.time)
    }

    /// Applies the outcome of an attempt of size `dt_taken`; returns the
    /// new controller step size. A failed attempt leaves the time
    /// unchanged.
    pub fn advance(&mut self, dt_taken: f64, report: &NewtonReport) -> Result<f64> {
        if report.converged {
            let stop = self.next_stop();
            if dt_taken >= stop - self.time {
                self.time = stop;
            } else {
                self.time += dt_taken;
            }
            self.dt = dt_after_success(self.dt, report.iterations).clamp(self.dt_min, self.dt_max);
        } else {
            let halved = 0.5 * self.dt.min(dt_taken);
            if halved < self.dt_min {
                return Err(Error::TimeStepUnderflow {
                    time: self.time,
                    dt: halved,
                    dt_min: self.dt_min,
                });
            }
            self.dt = halved.min(self.dt_max);
        }
        Ok(self.dt)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttemptRecord {
    /// Simulation time at the start of the attempt (s).
    pub time: f64,
    pub dt: f64,
    pub iterations: usize,
    pub linear_iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LedgerTotals {
    pub successful_steps: usize,
    pub failed_steps: usize,
    pub successful_iterations: usize,
    pub failed_iterations: usize,
}

impl LedgerTotals {
    /// `"TS (failed)"` and `"NS (failed)"` cells.
    pub fn table_cells(&self) -> (String, String) {
        (
            format!("{} ({})", self.successful_steps, self.failed_steps),
            format!("{} ({})", self.successful_iterations, self.failed_iterations),
        )
    }

    pub fn total_iterations(&self) -> usize {
        self.successful_iterations + self.failed_iterations
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLedger {
    pub records: Vec<AttemptRecord>,
}

impl RunLedger {
    pub fn record(&mut self, time: f64, dt: f64, report: &NewtonReport) {
        self.records.push(AttemptRecord {
            time,
            dt,
            iterations: report.iterations,
            linear_iterations: report.total_linear_iterations(),
            final_residual: report.final_residual(),
            converged: report.converged,
        });
    }

    pub fn totals(&self) -> LedgerTotals {
        let mut t = LedgerTotals::default();
        for r in &self.records {
            if r.converged {
                t.successful_steps += 1;
                t.successful_iterations += r.iterations;
            } else {
                t.failed_steps += 1;
                t.failed_iterations += r.iterations;
            }
        }
        t
    }

    pub fn total_linear_iterations(&self) -> usize {
        self.records.iter().map(|r| r.linear_iterations).sum()
    }
}
