//! Experiment configuration, the simulation loop, Monte-Carlo aggregation,
//! CSV output and the acceptance suite.

pub mod acceptance;
mod config;
mod output;
mod sim;
mod stats;

pub use config::ExperimentConfig;
pub use output::{write_gap_csv, write_scene_csv, write_trace_csv};
pub use sim::{
    build_world, engine_setup, run_monte_carlo, run_monte_carlo_with, run_single, run_single_with, simulate,
    EngineSetup, GapRow, Instrumentation, MonteCarlo, RunResult, TraceRow,
};
pub use stats::{emit_csv, read_csv, running_average, AggregateStats, StatsRow, Z_95};
