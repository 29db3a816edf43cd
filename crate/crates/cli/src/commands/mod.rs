//! Implementations of the CLI subcommands, callable as library functions.

mod sweep;
mod timing;
mod train;
mod verify;

pub use sweep::{cmd_sparsity_sweep, sparseout_label, sweep_to_csv, SweepRow};
pub use timing::{cmd_timing_bench, measure_timings, timings_to_csv, TimingRecord};
pub use train::cmd_train;
pub use verify::{cmd_verify_theorems, VerifyReport};
