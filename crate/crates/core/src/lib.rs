//! Distribution-free prediction intervals for line-edge-roughness estimation.
//!
//! The crate is an end-to-end simulation and calibration toolkit: it
//! synthesizes rough line edges with a known power spectral density, renders
//! them into SEM-style micrographs with dose-controlled shot noise, estimates
//! the line-edge roughness (LER) of each edge back from the pixels, and wraps
//! every estimate in a prediction interval with a finite-sample,
//! distribution-free coverage guarantee obtained by split-conformal
//! calibration.
//!
//! # Module map
//!
//! | Module | Role |
//! |---|---|
//! | [`roughness`] | Palasantzas-family PSD, spectral edge synthesis, LER and periodogram computation |
//! | [`imaging`] | Geometry, clean rendering (texture, bloom, oblique blur), Poisson noise, Anscombe denoising |
//! | [`estimation`] | Subpixel edge detection, LER estimation, difficulty features, difficulty and quantile networks |
//! | [`conformal`] | Score functions, rank-based calibration (`cp`, `ncp`, `cqr`), interval construction |
//! | [`pipeline`] | Dataset generation + manifest, group-aware splits, train/calibrate/evaluate experiment driver, reports |
//! | [`cli`] | The `generate` / `run` / `report` subcommands behind the `roughline` binary |
//! | [`rng`] | Deterministic seed derivation so every artifact is reproducible bit-for-bit |
//! | [`error`] | Shared error type and phase-tagged exit codes |
//!
//! The most common types and functions are re-exported at the crate root.
//!
//! # Runnable examples
//!
//! Each major capability has a self-contained example under `examples/`:
//!
//! * `psd_synthesis` — PSD evaluation, edge synthesis, ensemble periodogram
//!   against the closed form, finite-record LER bias.
//! * `render_noise_denoise` — rendering a rough line, a dose ladder of noisy
//!   images, denoising, PGM previews on disk.
//! * `edge_detection` — subpixel edge detection and LER estimation versus
//!   ground truth across doses.
//! * `conformal_intervals` — the three calibration methods on a synthetic
//!   heteroscedastic regression problem, including why uncalibrated bands
//!   undercover.
//! * `quantile_training` — training the difficulty model and the quantile
//!   network on synthetic data and reading their outputs.
//! * `coverage_experiment` — a small end-to-end dataset → train → calibrate →
//!   evaluate run with per-dose breakdown.
//! * `dataset_manifest` — dataset generation, manifest round-trip, image file
//!   format, byte-identical regeneration.
//!
//! Run one with `cargo run --release -p roughline --example <name>`.

pub mod cli;
pub mod conformal;
pub mod error;
pub mod estimation;
pub mod imaging;
pub mod pipeline;
pub mod rng;
pub mod roughness;

pub use conformal::{
    calibrate_cp, calibrate_cqr, calibrate_ncp, cqr_score, interval_cp, interval_cqr,
    interval_ncp, quantile_index, residual_score, CalibrationScores, IntervalModel, ModelVariant,
    PredictionInterval,
};
pub use error::{Error, Result};
pub use estimation::{
    detect_edges, difficulty_features, estimate_ler, estimate_ler_detailed, fit_difficulty,
    fit_quantile_net, predict_quantiles, DetectedEdges, DifficultyFeatures, DifficultyModel,
    LerPrediction, QuantileNet, FEATURE_DIM,
};
pub use pipeline::{
    generate_dataset, load_manifest, prepare_examples, run_experiment, run_experiment_prepared,
    split_examples, DatasetConfig, DatasetManifest, EvaluationReport, ExperimentOptions, Method,
    SplitSpec,
};
pub use roughness::{
    compute_ler, periodogram, periodogram_of, psd_eval, synthesize_edge, synthesize_with_psd,
    EdgeProfile, PalasantzasParams,
};
