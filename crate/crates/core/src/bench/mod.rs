//! Benchmark generation, fixed baseline pipelines and model comparison.

mod baseline;
mod compare;
mod generate;

pub use baseline::{evaluate_all, run_baseline, Baseline, BaselineResult};
pub use compare::{compare, score, Comparator, Compiler, Report, Row, CSV_HEADER};
pub use generate::{
    ansatz, default_suite, desk_suite, example_3q, generate, generate_all, ghz, qft,
    random_circuit, suite, write_suite, Benchmark, BenchmarkSpec, Family, MAX_QUBITS, MIN_QUBITS,
};
