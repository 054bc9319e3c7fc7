//! Schedule-quality metrics, comparisons, Gantt charts and tables.

mod gantt;
mod metrics;
mod tables;

pub use gantt::render_gantt;
pub use metrics::{
    compare, compute_metrics, format_2dp, format_dp, gap_percent, metrics_from_csv, metrics_to_csv, to_days,
    Comparison, ComparisonRow, MetricsReport, Rational,
};
pub use tables::{render_tables, RenderedTable, Tables};
