//! End-to-end interval experiments: prepare per-example predictions and
//! features once, then train, calibrate, and evaluate one interval method
//! per edge.
//!
//! The expensive pass (image reads, edge detection, feature extraction) is
//! split out as [`prepare_examples`] so that many method/split/seed
//! combinations can be evaluated against one prepared set.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::DatasetManifest;
use super::split::{split_examples, SplitSpec, SplitSets};
use crate::conformal::{
    calibrate_cp, calibrate_cqr, calibrate_ncp, interval_cp, interval_cqr, interval_ncp,
    PredictionInterval,
};
use crate::error::{Error, Result};
use crate::estimation::{
    difficulty_features, difficulty_target, estimate_ler_detailed, fit_difficulty,
    fit_quantile_net, predict_quantiles, DifficultyFeatures, DifficultyModel, LerPrediction,
    QuantileNet,
};
use crate::imaging::read_semf;
use crate::rng::derive_seed;

/// Seed-derivation words for the per-edge model trainings, chained off
/// [`ExperimentOptions::seed`].
const WORD_DIFFICULTY: u64 = 1;
const WORD_QUANTILE: u64 = 2;
const WORD_DIFFICULTY_B: u64 = 3;

pub const EDGE_NAMES: [&str; 2] = ["left", "right"];

/// An interval-construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Split conformal on absolute residuals: fixed-width intervals.
    Cp,
    /// Normalized conformal: residuals scaled by a learned difficulty factor.
    Ncp,
    /// Conformalized quantile regression, net inputs `[prediction, phi]`.
    Cqr2,
    /// Conformalized quantile regression with two independently trained
    /// difficulty scores, net inputs `[prediction, phi_a, phi_b]`.
    Cqr3,
}

impl Method {
    pub const fn name(self) -> &'static str {
        match self {
            Method::Cp => "cp",
            Method::Ncp => "ncp",
            Method::Cqr2 => "cqr-2in",
            Method::Cqr3 => "cqr-3in",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "cp" => Ok(Method::Cp),
            "ncp" => Ok(Method::Ncp),
            "cqr-2in" => Ok(Method::Cqr2),
            "cqr-3in" => Ok(Method::Cqr3),
            other => Err(Error::invalid_param(
                "method",
                format!("unknown method {other:?}; expected cp, ncp, cqr-2in, or cqr-3in"),
            )),
        }
    }

    pub const fn all() -> [Method; 4] {
        [Method::Cp, Method::Ncp, Method::Cqr2, Method::Cqr3]
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Target miscoverage (interval level is `1 - alpha`).
    pub alpha: f64,
    /// Root seed for all model trainings inside the experiment.
    pub seed: u64,
    /// Force the difficulty scale to 1 in normalized conformal, reducing it
    /// to plain split conformal. Diagnostic knob used to verify the
    /// reduction; no effect on the other methods.
    pub force_unit_gamma: bool,
}

impl ExperimentOptions {
    pub fn new(alpha: f64, seed: u64) -> Self {
        Self { alpha, seed, force_unit_gamma: false }
    }
}

/// One example after the deterministic estimation pass: base predictions from
/// the denoised image, difficulty features from the noise image, truth from
/// the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedExample {
    /// Position in `manifest.examples`.
    pub index: usize,
    pub yhat: LerPrediction,
    pub features: DifficultyFeatures,
    /// True (left, right) edge roughness, nm.
    pub labels: (f64, f64),
    pub dose: f64,
    pub sigma: f64,
    /// Rows the edge detector imputed rather than measured.
    pub detection_failures: usize,
}

impl PreparedExample {
    pub fn yhat_edge(&self, edge: usize) -> f64 {
        if edge == 0 { self.yhat.left_ler } else { self.yhat.right_ler }
    }

    pub fn label_edge(&self, edge: usize) -> f64 {
        if edge == 0 { self.labels.0 } else { self.labels.1 }
    }
}

/// Runs base estimation and feature extraction for every manifest example.
///
/// `root` is the directory the manifest's relative paths resolve against
/// (the dataset directory). Work is parallel; the output order matches
/// `manifest.examples`.
pub fn prepare_examples(manifest: &DatasetManifest, root: &Path) -> Result<Vec<PreparedExample>> {
    let geom = &manifest.config.geometry;
    manifest
        .examples
        .par_iter()
        .enumerate()
        .map(|(index, record)| {
            let denoised = read_semf(&root.join(&record.denoised_path))?;
            let noise = read_semf(&root.join(&record.noise_path))?;
            let (yhat, detection) = estimate_ler_detailed(&denoised, geom)?;
            let features = difficulty_features(&noise, &detection, geom)?;
            Ok(PreparedExample {
                index,
                yhat,
                features,
                labels: (record.left_ler_nm, record.right_ler_nm),
                dose: record.dose,
                sigma: record.sigma,
                detection_failures: detection.failure_count(),
            })
        })
        .collect()
}

/// Coverage/length row for one dose or sigma bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    /// Bucket key: the dose or sigma value.
    pub key: f64,
    pub coverage_pct: f64,
    pub avg_len_nm: f64,
    pub n: usize,
}

/// Evaluation of one edge under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvaluation {
    /// "left" or "right".
    pub edge: String,
    /// Share of test labels inside their interval, percent.
    pub coverage_pct: f64,
    /// Mean interval width over the test set, nm.
    pub avg_len_nm: f64,
    pub n_test: usize,
    /// Intervals collapsed to a point by a strongly negative CQR adjustment.
    pub degenerate_count: usize,
    /// CQR only: coverage of the raw quantile band before conformal
    /// adjustment. The gap to `coverage_pct` is what calibration bought.
    pub uncalibrated_coverage_pct: Option<f64>,
    /// Test coverage/length split by dose, ascending.
    pub by_dose: Vec<BreakdownRow>,
    /// Test coverage/length split by nominal roughness, ascending.
    pub by_sigma: Vec<BreakdownRow>,
}

/// Full result of one experiment run; serialized as the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Deterministic short id derived from manifest hash, method, alpha,
    /// seed, and split; identical reruns share it.
    pub run_id: String,
    pub method: String,
    pub alpha: f64,
    /// Hash of the dataset the run evaluated.
    pub manifest_sha256: String,
    pub split: SplitSpec,
    pub seed: u64,
    pub n_proper_train: usize,
    pub n_calibration: usize,
    pub n_test: usize,
    pub edges: Vec<EdgeEvaluation>,
}

/// One test-set point for the width-versus-error diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    /// Interval width, nm.
    pub width_nm: f64,
    /// Absolute base-prediction error `|y - yhat|`, nm.
    pub abs_error_nm: f64,
    pub dose: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgePlotData {
    pub edge: String,
    pub points: Vec<ScatterPoint>,
}

/// Per-point test-set data backing the report's aggregates; kept out of the
/// report so report files stay small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub run_id: String,
    pub edges: Vec<EdgePlotData>,
}

/// Inclusive empirical coverage (percent) and mean width (nm) of intervals
/// against labels.
pub fn coverage_and_length(intervals: &[PredictionInterval], labels: &[f64]) -> Result<(f64, f64)> {
    if intervals.is_empty() || intervals.len() != labels.len() {
        return Err(Error::invalid_param(
            "intervals",
            format!("{} intervals against {} labels", intervals.len(), labels.len()),
        ));
    }
    let n = intervals.len() as f64;
    let covered = intervals.iter().zip(labels).filter(|(iv, &y)| iv.contains(y)).count();
    let avg_len = intervals.iter().map(|iv| iv.width()).sum::<f64>() / n;
    Ok((100.0 * covered as f64 / n, avg_len))
}

/// [`prepare_examples`] followed by [`run_experiment_prepared`].
pub fn run_experiment(
    manifest: &DatasetManifest,
    root: &Path,
    split: &SplitSpec,
    method: Method,
    opts: &ExperimentOptions,
) -> Result<(EvaluationReport, PlotData)> {
    let prepared = prepare_examples(manifest, root)?;
    run_experiment_prepared(manifest, &prepared, split, method, opts)
}

/// Trains (as the method requires), calibrates, and evaluates on an already
/// prepared example set.
pub fn run_experiment_prepared(
    manifest: &DatasetManifest,
    prepared: &[PreparedExample],
    split: &SplitSpec,
    method: Method,
    opts: &ExperimentOptions,
) -> Result<(EvaluationReport, PlotData)> {
    validate_inputs(manifest, prepared, opts)?;
    let sets = split_examples(manifest, split)?;
    let models = [
        train_edge_models(prepared, &sets.proper_train, method, opts, 0)?,
        train_edge_models(prepared, &sets.proper_train, method, opts, 1)?,
    ];
    evaluate_with_models(manifest, prepared, split, &models, opts)
}

/// Calibrates and evaluates already trained per-edge models against one
/// split.
///
/// Model training depends only on the proper-training set, which a split
/// seed does not move, so sweeping calibration/test splits can train once
/// via [`train_edge_models`] and call this per split.
pub fn evaluate_with_models(
    manifest: &DatasetManifest,
    prepared: &[PreparedExample],
    split: &SplitSpec,
    models: &[EdgeModels; 2],
    opts: &ExperimentOptions,
) -> Result<(EvaluationReport, PlotData)> {
    validate_inputs(manifest, prepared, opts)?;
    let method = models[0].method;
    if models[1].method != method || models[0].edge != 0 || models[1].edge != 1 {
        return Err(Error::invalid_param(
            "models",
            "expected one left-edge and one right-edge model of the same method",
        ));
    }
    let sets = split_examples(manifest, split)?;

    let mut edges = Vec::with_capacity(2);
    let mut plot_edges = Vec::with_capacity(2);
    for (edge, edge_name) in EDGE_NAMES.iter().enumerate() {
        let (eval, plot) =
            evaluate_edge(manifest, prepared, &sets, &models[edge], opts, edge, edge_name)?;
        edges.push(eval);
        plot_edges.push(plot);
    }

    let run_id = run_id(manifest, method, opts, split);
    let report = EvaluationReport {
        run_id: run_id.clone(),
        method: method.name().to_string(),
        alpha: opts.alpha,
        manifest_sha256: manifest.manifest_sha256.clone(),
        split: split.clone(),
        seed: opts.seed,
        n_proper_train: sets.proper_train.len(),
        n_calibration: sets.calibration.len(),
        n_test: sets.test.len(),
        edges,
    };
    Ok((report, PlotData { run_id, edges: plot_edges }))
}

fn validate_inputs(
    manifest: &DatasetManifest,
    prepared: &[PreparedExample],
    opts: &ExperimentOptions,
) -> Result<()> {
    if !(opts.alpha.is_finite() && opts.alpha > 0.0 && opts.alpha < 0.5) {
        return Err(Error::invalid_param("alpha", format!("alpha {} not in (0, 0.5)", opts.alpha)));
    }
    if prepared.len() != manifest.examples.len()
        || prepared.iter().enumerate().any(|(i, p)| p.index != i)
    {
        return Err(Error::invalid_param(
            "prepared",
            "prepared examples do not line up with the manifest",
        ));
    }
    Ok(())
}

fn run_id(
    manifest: &DatasetManifest,
    method: Method,
    opts: &ExperimentOptions,
    split: &SplitSpec,
) -> String {
    let mut h = Sha256::new();
    h.update(manifest.manifest_sha256.as_bytes());
    h.update(method.name().as_bytes());
    h.update(opts.alpha.to_le_bytes());
    h.update(opts.seed.to_le_bytes());
    h.update([u8::from(opts.force_unit_gamma)]);
    h.update(split.split_seed.to_le_bytes());
    for &xi in &split.holdout_xi {
        h.update(xi.to_le_bytes());
    }
    let digest = h.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

/// The trained regressors one (method, edge) pair needs; calibration-free,
/// so one instance serves any number of calibration/test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeModels {
    method: Method,
    edge: usize,
    difficulty_a: Option<DifficultyModel>,
    difficulty_b: Option<DifficultyModel>,
    quantile: Option<QuantileNet>,
}

impl EdgeModels {
    pub fn method(&self) -> Method {
        self.method
    }

    /// Quantile-net input vector for one example.
    fn net_inputs(&self, p: &PreparedExample) -> Vec<f64> {
        let dm_a = self.difficulty_a.as_ref().expect("quantile methods carry a difficulty model");
        let mut v = vec![p.yhat_edge(self.edge), dm_a.predict_phi(&p.features)];
        if let Some(b) = &self.difficulty_b {
            v.push(b.predict_phi(&p.features));
        }
        v
    }

    /// Difficulty scale for one example; 1 when no difficulty model was
    /// trained (plain CP, or NCP under the unit-gamma override).
    fn gamma(&self, p: &PreparedExample) -> f64 {
        self.difficulty_a.as_ref().map_or(1.0, |m| m.predict_gamma(&p.features))
    }
}

fn fit_edge_difficulty(
    prepared: &[PreparedExample],
    train_idx: &[usize],
    edge: usize,
    seed: u64,
) -> Result<DifficultyModel> {
    let train: Vec<(DifficultyFeatures, f64)> = train_idx
        .iter()
        .map(|&i| {
            let p = &prepared[i];
            (p.features.clone(), difficulty_target(p.label_edge(edge) - p.yhat_edge(edge)))
        })
        .collect();
    fit_difficulty(&train, seed)
}

/// Trains the models `method` needs for one edge on the proper-training
/// indices. Plain CP needs none; NCP one difficulty model (skipped under the
/// unit-gamma override); CQR adds a quantile net over one or two difficulty
/// scores.
pub fn train_edge_models(
    prepared: &[PreparedExample],
    proper_train: &[usize],
    method: Method,
    opts: &ExperimentOptions,
    edge: usize,
) -> Result<EdgeModels> {
    if edge > 1 {
        return Err(Error::invalid_param("edge", format!("edge index {edge} not in {{0, 1}}")));
    }
    let difficulty_seed = derive_seed(opts.seed, &[WORD_DIFFICULTY, edge as u64]);
    let mut models = EdgeModels {
        method,
        edge,
        difficulty_a: None,
        difficulty_b: None,
        quantile: None,
    };
    match method {
        Method::Cp => {}
        Method::Ncp => {
            if !opts.force_unit_gamma {
                models.difficulty_a =
                    Some(fit_edge_difficulty(prepared, proper_train, edge, difficulty_seed)?);
            }
        }
        Method::Cqr2 | Method::Cqr3 => {
            models.difficulty_a =
                Some(fit_edge_difficulty(prepared, proper_train, edge, difficulty_seed)?);
            if method == Method::Cqr3 {
                models.difficulty_b = Some(fit_edge_difficulty(
                    prepared,
                    proper_train,
                    edge,
                    derive_seed(opts.seed, &[WORD_DIFFICULTY_B, edge as u64]),
                )?);
            }
            let q_train: Vec<(Vec<f64>, f64)> = proper_train
                .iter()
                .map(|&i| (models.net_inputs(&prepared[i]), prepared[i].label_edge(edge)))
                .collect();
            models.quantile = Some(fit_quantile_net(
                &q_train,
                opts.alpha,
                derive_seed(opts.seed, &[WORD_QUANTILE, edge as u64]),
            )?);
        }
    }
    Ok(models)
}

fn evaluate_edge(
    manifest: &DatasetManifest,
    prepared: &[PreparedExample],
    sets: &SplitSets,
    models: &EdgeModels,
    opts: &ExperimentOptions,
    edge: usize,
    edge_name: &str,
) -> Result<(EdgeEvaluation, EdgePlotData)> {
    let alpha = opts.alpha;
    let cal: Vec<&PreparedExample> = sets.calibration.iter().map(|&i| &prepared[i]).collect();
    let test: Vec<&PreparedExample> = sets.test.iter().map(|&i| &prepared[i]).collect();
    let test_labels: Vec<f64> = test.iter().map(|p| p.label_edge(edge)).collect();

    let mut degenerate_count = 0usize;
    let mut uncalibrated_coverage_pct = None;

    let intervals: Vec<PredictionInterval> = match models.method {
        Method::Cp => {
            let residuals: Vec<f64> =
                cal.iter().map(|p| (p.label_edge(edge) - p.yhat_edge(edge)).abs()).collect();
            let model = calibrate_cp(&residuals, alpha)?;
            test.iter().map(|p| interval_cp(p.yhat_edge(edge), &model)).collect::<Result<_>>()?
        }
        Method::Ncp => {
            let pairs: Vec<(f64, f64)> = cal
                .iter()
                .map(|p| ((p.label_edge(edge) - p.yhat_edge(edge)).abs(), models.gamma(p)))
                .collect();
            let model = calibrate_ncp(&pairs, alpha)?;
            test.iter()
                .map(|p| interval_ncp(p.yhat_edge(edge), models.gamma(p), &model))
                .collect::<Result<_>>()?
        }
        Method::Cqr2 | Method::Cqr3 => {
            let qn = models.quantile.as_ref().ok_or_else(|| {
                Error::invalid_param("models", "quantile method without a trained quantile net")
            })?;
            let triples: Vec<(f64, f64, f64)> = cal
                .iter()
                .map(|p| {
                    let (lo, hi) = predict_quantiles(qn, &models.net_inputs(p));
                    (p.label_edge(edge), lo, hi)
                })
                .collect();
            let model = calibrate_cqr(&triples, alpha)?;

            let mut raw_covered = 0usize;
            let mut intervals = Vec::with_capacity(test.len());
            for p in &test {
                let (lo, hi) = predict_quantiles(qn, &models.net_inputs(p));
                if lo <= p.label_edge(edge) && p.label_edge(edge) <= hi {
                    raw_covered += 1;
                }
                let (iv, degenerate) = interval_cqr(lo, hi, &model)?;
                degenerate_count += usize::from(degenerate);
                intervals.push(iv);
            }
            uncalibrated_coverage_pct = Some(100.0 * raw_covered as f64 / test.len() as f64);
            intervals
        }
    };

    let (coverage_pct, avg_len_nm) = coverage_and_length(&intervals, &test_labels)?;
    let by_dose = breakdown(&manifest.config.dose_list, &test, &intervals, edge, |p| p.dose)?;
    let by_sigma = breakdown(&manifest.config.sigma_list, &test, &intervals, edge, |p| p.sigma)?;

    let points = test
        .iter()
        .zip(&intervals)
        .map(|(p, iv)| ScatterPoint {
            width_nm: iv.width(),
            abs_error_nm: (p.label_edge(edge) - p.yhat_edge(edge)).abs(),
            dose: p.dose,
        })
        .collect();

    Ok((
        EdgeEvaluation {
            edge: edge_name.to_string(),
            coverage_pct,
            avg_len_nm,
            n_test: test.len(),
            degenerate_count,
            uncalibrated_coverage_pct,
            by_dose,
            by_sigma,
        },
        EdgePlotData { edge: edge_name.to_string(), points },
    ))
}

/// Coverage/length per bucket of `key` (dose or sigma), ascending, skipping
/// config values absent from the test set.
fn breakdown(
    config_keys: &[f64],
    test: &[&PreparedExample],
    intervals: &[PredictionInterval],
    edge: usize,
    key: impl Fn(&PreparedExample) -> f64,
) -> Result<Vec<BreakdownRow>> {
    let mut keys = config_keys.to_vec();
    keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keys.dedup();

    let mut rows = Vec::new();
    for k in keys {
        let mut bucket_intervals = Vec::new();
        let mut bucket_labels = Vec::new();
        for (p, iv) in test.iter().zip(intervals) {
            if key(p) == k {
                bucket_intervals.push(*iv);
                bucket_labels.push(p.label_edge(edge));
            }
        }
        if bucket_intervals.is_empty() {
            continue;
        }
        let (coverage_pct, avg_len_nm) = coverage_and_length(&bucket_intervals, &bucket_labels)?;
        rows.push(BreakdownRow { key: k, coverage_pct, avg_len_nm, n: bucket_intervals.len() });
    }
    Ok(rows)
}
