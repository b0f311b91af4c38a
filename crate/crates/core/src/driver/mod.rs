//! Time integration, benchmark setups, configuration and output.

pub mod benchmarks;
pub mod config;
pub mod fields;
pub mod output;
mod run;
mod timestep;

pub use benchmarks::{benchmark_heterogeneous, benchmark_momas, RockSource};
pub use config::SimulationConfig;
pub use run::{run_simulation, simulate, RunOutcome, StepEvent};
pub use timestep::{dt_after_success, AttemptRecord, LedgerTotals, RunLedger, TimeStepController};
