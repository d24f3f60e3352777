//! Dataset-scale orchestration: grid generation, holdout splitting,
//! experiment execution, and report emission.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod manifest;
pub mod report;
pub mod split;

pub use config::DatasetConfig;
pub use experiment::{
    coverage_and_length, evaluate_with_models, prepare_examples, run_experiment,
    run_experiment_prepared, train_edge_models, BreakdownRow, EdgeEvaluation, EdgeModels,
    EvaluationReport, ExperimentOptions, Method, PlotData, PreparedExample,
};
pub use generate::generate_dataset;
pub use manifest::{load_manifest, write_manifest, DatasetManifest, ExampleRecord, MANIFEST_FILE};
pub use report::{
    load_report_json, render_table, report_csv, report_file_name, write_plot_data,
    write_report_csv, write_report_json,
};
pub use split::{split_examples, SplitSets, SplitSpec};
