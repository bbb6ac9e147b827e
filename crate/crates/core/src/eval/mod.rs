//! Metrics, per-complexity reports, error-growth curve fits, benchmarks and
//! heatmap dumps.

mod bench;
mod fit;
mod heatmap;
mod metrics;
mod report;

pub use bench::{bench_inference, BenchRow};
pub use fit::{fit_piecewise, fit_power_law, ErrorCurveFit, FitForm, DEFAULT_THRESHOLD};
pub use heatmap::{write_ppm, write_ppm_pair};
pub use metrics::{mae, rel_l2};
pub use report::{evaluate_by_complexity, evaluate_samples, Axis, ClassMetric, MetricReport, SampleMetric};
