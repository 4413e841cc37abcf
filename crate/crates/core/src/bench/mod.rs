//! Benchmark harness: metrics, method registry and the suite runner.

mod methods;
mod metrics;
mod suite;
mod svg;

pub use methods::{
    all_methods, fit_method, inapplicable_reason, GroupSource, Method, MethodFit, LVGP_RANK,
};
pub use metrics::{
    dataset_quantile, pareto_points, performance_profiles, rrmse, tau_grid, wilcoxon_one_sided,
    ParetoPoint, PerformanceProfile, Score, WilcoxonResult, TAU_STEPS, WILCOXON_EXACT_MAX,
};
pub use suite::{
    expected_train_size, pareto, ranking, read_records, rrmse_profiles, run_experiment, run_suite,
    time_profiles, write_aggregates, write_profiles_csv, write_records, DatasetsSection,
    Experiment, ExperimentRecord, MethodsSection, OptimizerSection, RankingRow, RecordKey,
    SuiteConfig, SuiteOutcome, SuiteSection, PARETO_CSV, PARETO_SVG, PROFILE_CSV, PROFILE_SVG,
    RANKING_CSV, RECORDS_FILE, STATUS_OK, TIME_PROFILE_CSV, WILCOXON_ALPHA,
};
pub use svg::{pareto_plot, profile_plot};
