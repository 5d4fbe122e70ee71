//! Simulation scenarios, evaluation metrics, BIC tuning and the benchmark
//! runner.

pub mod bench;
pub mod metrics;
pub mod scenario;
pub mod tune;

pub use bench::{run_benchmark, BenchConfig, BenchReport, CellResult, Method, MethodAggregate, MethodRunner};
pub use metrics::{metric_cpve, metric_rss_error, metric_support, MetricsReport, SUPPORT_THRESHOLD};
pub use scenario::{generate_scenario, GroundTruth, ScenarioSpec};
pub use tune::{bic_score, bic_tune, SmootherCache, TuneGrid, TunedParams};
