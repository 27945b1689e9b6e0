//! Metrics, robustness checks, significance tests and report files.

mod metrics;
mod ppa;
mod report;
mod ttest;

pub use metrics::{accuracy, avg_turns, correctness, EvalResult};
pub use ppa::{all_permutations, factorial, ppa, PpaMode, PpaReport, PromptPpa, MAX_EXHAUSTIVE_OPTIONS};
pub use report::{
    emit_report, parse_json_report, render_csv, render_json, Cell, Comparison, Report, ReportFormat, ReportMeta,
    Tabular,
};
pub use ttest::{paired_t_test, regularized_incomplete_beta, two_sided_p, TTest};
