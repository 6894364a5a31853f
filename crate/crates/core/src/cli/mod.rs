//! Configuration-driven experiment runner behind the `zomo` binary.

mod aggregate;
mod config;
mod runner;

pub use aggregate::{aggregate_seeds, aggregate_traces, AggregatePoint};
pub use config::{ConstraintKind, ProblemConfig, ProblemKind, RunConfig};
pub use runner::{
    check_config, gen_data, load_config, run_experiment, BuiltProblem, Experiment, RunRecord,
    L_F_PROBES, OUTPUT_DIR_ENV,
};

use crate::error::Error;

/// Process exit status for an error: 2 for configuration and schema problems,
/// 3 for oracle failures, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_evaluation() {
        return 3;
    }
    match err {
        Error::Config(_) | Error::Contract(_) => 2,
        Error::AtIteration { source, .. } => exit_code(source),
        _ => 1,
    }
}
