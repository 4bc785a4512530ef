//! Replication engine, execution paradigms, statistics, throughput and
//! CSV reports.

pub mod experiment;
pub mod generator;
pub mod integrand;
pub mod report;
pub mod stats;
pub mod throughput;

pub use experiment::{
    assign_stride, power_grid, run_experiment, run_experiment_with, ExperimentConfig, Paradigm, ReplicationResult,
    STRIPES,
};
pub use generator::{replication_seed, GeneratorKind, PointStream, Replica};
pub use integrand::{ConstantOne, FirstCoordinate, Integrand, ModelKind};
pub use report::{
    read_report, read_summary, summary_path, write_report, ConvergenceReport, ReportRecord, ReportRow, SummaryRecord,
};
pub use stats::{correlation, fit_slope, mean, median, sample_std, SlopeFit};
pub use throughput::{bench_throughput, bench_throughput_runs};
