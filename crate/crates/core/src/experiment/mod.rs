//! Batch experiments over parameter grids and seeds.

mod pipeline;
mod runner;
mod spec;

pub use pipeline::{
    adaptation_input, balance_reservoir, diagnose, evaluate, mean_and_se, run_single,
    series_len, AdaptSettings, Diagnostics, EvalSettings, Evaluation, Mode, NeuronDiagnostics,
    RunOutput, RunParams,
};
pub use runner::{
    run_experiment, write_outputs, BaselineRow, CellRow, ExperimentResult, SummaryRow, TraceSet,
};
pub use spec::{
    parse_config, parse_config_str, parse_config_with, Axis, BaselineSearch, Cell,
    ExperimentKind, ExperimentSpec, Grid, Overrides, Scale, TaskDefaults,
};
