//! Monte-Carlo simulation harness: configuration, paired trials, CSV output.

mod config;
mod output;
mod selftest;
mod sim;

pub use config::{CodingKind, CsiKind, DetectorKind, ModemKind, SimConfig, DEFAULT_CODE_PATH};
pub use output::{compare, parse_csv, to_csv, Comparison, CSV_COLUMNS};
pub use selftest::{run_selftest, CheckResult};
pub use sim::{snr_to_noise_var, trial_rng, FrameOutcome, PointResult, Simulation};
