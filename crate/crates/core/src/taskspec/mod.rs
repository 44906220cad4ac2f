//! Task files, goal conditions and benchmark metrics.

mod eval;
mod parse;

pub use eval::{
    compute_metrics, evaluate_goals, referenced_objects, EpisodeRecord, ExactMetrics, Frac,
    MetricsError, MetricsReport, Termination,
};
pub use parse::{
    parse_condition, parse_task, parse_task_file, GoalCondition, Predicate, TaskError, TaskFile,
    TaskSpec,
};
