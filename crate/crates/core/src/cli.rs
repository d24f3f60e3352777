//! Batch command-line front end: `generate` builds datasets, `run` executes
//! interval experiments against a manifest, `report` merges run reports into
//! a table.
//!
//! Configuration comes from an optional key-value file plus command-line
//! overrides; overrides always win. Every command prints its full effective
//! configuration before acting, so a run can be reproduced from its log
//! alone. Exit codes are part of the interface:
//!
//! * 0 — success
//! * 1 — configuration error (bad key/value, missing manifest, malformed report)
//! * 2 — I/O failure during dataset generation
//! * 3 — training/calibration failure during `run`
//! * 4 — failure writing `run` outputs (reports, CSV, plot data)

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::pipeline::report::{
    load_report_json, render_table, report_file_name, write_plot_data, write_report_csv,
    write_report_json,
};
use crate::pipeline::{
    generate_dataset, load_manifest, prepare_examples, run_experiment_prepared, DatasetConfig,
    EvaluationReport, ExperimentOptions, Method, PlotData, SplitSpec, MANIFEST_FILE,
};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_OUTPUT: i32 = 4;

/// Command failure: a stable exit code plus the message for standard error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    fn with_code(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CmdResult = std::result::Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "roughline",
    about = "Rough-line image simulation and distribution-free prediction intervals",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset (images plus manifest) from a parameter grid.
    Generate(GenerateArgs),
    /// Run interval experiments against a generated dataset.
    Run(RunArgs),
    /// Merge run reports into a plain-text summary table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct GenerateArgs {
    /// Key-value config file (`key = value`, `#` comments).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scale preset: "desk" (small) or "paper" (full reference scale).
    #[arg(long)]
    pub preset: Option<String>,
    /// Dataset output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Root seed for all synthesis and noise draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// Key-value config file (`key = value`, `#` comments).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Path to the dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Interval method: cp, ncp, cqr-2in, cqr-3in, or all.
    #[arg(long)]
    pub method: Option<String>,
    /// Target miscoverage in (0, 0.5).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Root seed for model training.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the calibration/test group shuffle.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Comma-separated correlation lengths to hold out (default: upper half
    /// of the dataset's xi grid).
    #[arg(long)]
    pub holdout_xi: Option<String>,
    /// Output directory for reports and CSV (default: current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write width-vs-error and per-dose coverage data files.
    #[arg(long)]
    pub emit_plot_data: bool,
    /// Force the difficulty scale to 1 in normalized conformal (reduces ncp
    /// to cp; diagnostic).
    #[arg(long)]
    pub force_unit_gamma: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct ReportArgs {
    /// Run report JSON files to merge.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

/// Dispatches a parsed command, printing failures to standard error.
/// Returns the process exit code.
pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args, out),
        Command::Run(args) => cmd_run(args, out),
        Command::Report(args) => cmd_report(args, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("roughline: {}", e.message);
            e.code
        }
    }
}

// ---------------------------------------------------------------------------
// Key-value config files

/// Every key a config file may contain. `generate` and `run` read the same
/// file format; each consumes the keys relevant to it.
pub const CONFIG_KEYS: [&str; 16] = [
    "preset",
    "out",
    "seed",
    "sigma_list",
    "hurst_list",
    "xi_list",
    "originals_per_combo",
    "line_widths",
    "dose_list",
    "manifest",
    "method",
    "alpha",
    "split_seed",
    "holdout_xi",
    "jobs",
    "emit_plot_data",
];

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!(
                "{}:{}: expected `key = value`, got {raw:?}",
                path.display(),
                line_no + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!(
                "{}:{}: unknown config key {key:?}",
                path.display(),
                line_no + 1
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(CliError::config(format!(
                "{}:{}: duplicate config key {key:?}",
                path.display(),
                line_no + 1
            )));
        }
    }
    Ok(map)
}

fn parse_f64_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::config(format!("config key {key:?}: {s:?} is not a number")))
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, CliError> {
    text.parse::<T>()
        .map_err(|_| CliError::config(format!("config key {key:?}: cannot parse {text:?}")))
}

fn parse_bool(key: &str, text: &str) -> Result<bool, CliError> {
    match text {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(CliError::config(format!("config key {key:?}: {other:?} is not a boolean"))),
    }
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Runs `body` in a dedicated thread pool when a worker count was requested.
fn with_jobs<T>(jobs: Option<usize>, body: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match jobs {
        None => Ok(body()),
        Some(0) => Err(CliError::config("jobs must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot build a {n}-thread pool: {e}")))?;
            Ok(pool.install(body))
        }
    }
}

// ---------------------------------------------------------------------------
// generate

#[derive(Debug)]
struct GeneratePlan {
    config: DatasetConfig,
    jobs: Option<usize>,
}

fn resolve_generate(args: &GenerateArgs) -> Result<GeneratePlan, CliError> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };

    let preset = args
        .preset
        .clone()
        .or_else(|| file.get("preset").cloned())
        .unwrap_or_else(|| "desk".to_string());
    let out = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .ok_or_else(|| CliError::config("no output directory: set --out or the `out` config key"))?;
    let seed = match args.seed {
        Some(s) => s,
        None => match file.get("seed") {
            Some(v) => parse_scalar::<u64>("seed", v)?,
            None => 0,
        },
    };

    let mut config = match preset.as_str() {
        "desk" => DatasetConfig::desk(&out, seed),
        "paper" => DatasetConfig::paper(&out, seed),
        other => {
            return Err(CliError::config(format!(
                "unknown preset {other:?}; expected \"desk\" or \"paper\""
            )))
        }
    };

    let mut customized = false;
    if let Some(v) = file.get("sigma_list") {
        config.sigma_list = parse_f64_list("sigma_list", v)?;
        customized = true;
    }
    if let Some(v) = file.get("hurst_list") {
        config.hurst_list = parse_f64_list("hurst_list", v)?;
        customized = true;
    }
    if let Some(v) = file.get("xi_list") {
        config.xi_list = parse_f64_list("xi_list", v)?;
        customized = true;
    }
    if let Some(v) = file.get("originals_per_combo") {
        config.originals_per_combo = parse_scalar::<usize>("originals_per_combo", v)?;
        customized = true;
    }
    if let Some(v) = file.get("line_widths") {
        config.line_widths_nm = parse_f64_list("line_widths", v)?;
        customized = true;
    }
    if let Some(v) = file.get("dose_list") {
        config.dose_list = parse_f64_list("dose_list", v)?;
        customized = true;
    }
    if customized {
        config.preset = "custom".to_string();
    }
    config.validate().map_err(|e| CliError::config(e.to_string()))?;

    let jobs = match args.jobs {
        Some(j) => Some(j),
        None => match file.get("jobs") {
            Some(v) => Some(parse_scalar::<usize>("jobs", v)?),
            None => None,
        },
    };
    Ok(GeneratePlan { config, jobs })
}

fn print_generate_config(out: &mut dyn Write, plan: &GeneratePlan) {
    let c = &plan.config;
    let _ = writeln!(out, "preset = {}", c.preset);
    let _ = writeln!(out, "out = {}", c.output_root.display());
    let _ = writeln!(out, "seed = {}", c.root_seed);
    let _ = writeln!(out, "sigma_list = {}", join_f64(&c.sigma_list));
    let _ = writeln!(out, "hurst_list = {}", join_f64(&c.hurst_list));
    let _ = writeln!(out, "xi_list = {}", join_f64(&c.xi_list));
    let _ = writeln!(out, "originals_per_combo = {}", c.originals_per_combo);
    let _ = writeln!(out, "line_widths = {}", join_f64(&c.line_widths_nm));
    let _ = writeln!(out, "dose_list = {}", join_f64(&c.dose_list));
    let _ = writeln!(
        out,
        "jobs = {}",
        plan.jobs.map_or_else(|| "default".to_string(), |j| j.to_string())
    );
}

/// `generate`: build the dataset and write its manifest.
pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let plan = resolve_generate(args)?;
    print_generate_config(out, &plan);

    // Hash of a manifest already present, to report no-op regenerations.
    let manifest_path = plan.config.output_root.join(MANIFEST_FILE);
    let previous_hash: Option<String> = std::fs::read_to_string(&manifest_path)
        .ok()
        .and_then(|text| serde_json::from_str::<crate::pipeline::DatasetManifest>(&text).ok())
        .map(|m| m.manifest_sha256);

    let manifest = with_jobs(plan.jobs, || generate_dataset(&plan.config))?.map_err(|e| {
        let code = if matches!(e, Error::Io { .. }) { EXIT_IO } else { EXIT_CONFIG };
        CliError::with_code(code, e.to_string())
    })?;

    let _ = writeln!(out, "{} examples, {} groups", manifest.examples.len(), manifest.group_count());
    let _ = writeln!(out, "manifest sha256 {}", manifest.manifest_sha256);
    if previous_hash.as_deref() == Some(manifest.manifest_sha256.as_str()) {
        let _ = writeln!(out, "manifest hash unchanged");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// run

#[derive(Debug)]
struct RunPlan {
    manifest_path: PathBuf,
    methods: Vec<Method>,
    opts: ExperimentOptions,
    split_seed: u64,
    holdout_xi: Option<Vec<f64>>,
    out_dir: PathBuf,
    emit_plot_data: bool,
    jobs: Option<usize>,
}

fn resolve_run(args: &RunArgs) -> Result<RunPlan, CliError> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };

    let manifest_path = args
        .manifest
        .clone()
        .or_else(|| file.get("manifest").map(PathBuf::from))
        .ok_or_else(|| {
            CliError::config("no manifest: set --manifest or the `manifest` config key")
        })?;

    let method_text = args
        .method
        .clone()
        .or_else(|| file.get("method").cloned())
        .unwrap_or_else(|| "all".to_string());
    let methods: Vec<Method> = if method_text == "all" {
        Method::all().to_vec()
    } else {
        vec![Method::parse(&method_text).map_err(|e| CliError::config(e.to_string()))?]
    };

    let alpha = match args.alpha {
        Some(a) => a,
        None => match file.get("alpha") {
            Some(v) => parse_scalar::<f64>("alpha", v)?,
            None => 0.1,
        },
    };
    let seed = match args.seed {
        Some(s) => s,
        None => match file.get("seed") {
            Some(v) => parse_scalar::<u64>("seed", v)?,
            None => 0,
        },
    };
    let split_seed = match args.split_seed {
        Some(s) => s,
        None => match file.get("split_seed") {
            Some(v) => parse_scalar::<u64>("split_seed", v)?,
            None => 1,
        },
    };
    let holdout_xi = match &args.holdout_xi {
        Some(text) => Some(parse_f64_list("holdout_xi", text)?),
        None => match file.get("holdout_xi") {
            Some(v) => Some(parse_f64_list("holdout_xi", v)?),
            None => None,
        },
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let emit_plot_data = args.emit_plot_data
        || match file.get("emit_plot_data") {
            Some(v) => parse_bool("emit_plot_data", v)?,
            None => false,
        };
    let jobs = match args.jobs {
        Some(j) => Some(j),
        None => match file.get("jobs") {
            Some(v) => Some(parse_scalar::<usize>("jobs", v)?),
            None => None,
        },
    };

    Ok(RunPlan {
        manifest_path,
        methods,
        opts: ExperimentOptions { alpha, seed, force_unit_gamma: args.force_unit_gamma },
        split_seed,
        holdout_xi,
        out_dir,
        emit_plot_data,
        jobs,
    })
}

/// `run`: train, calibrate, and evaluate the requested methods against a
/// dataset; write one combined CSV plus one JSON report per method.
pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CmdResult {
    let plan = resolve_run(args)?;

    if !plan.manifest_path.exists() {
        return Err(CliError::config(format!(
            "manifest not found at {}",
            plan.manifest_path.display()
        )));
    }
    let manifest =
        load_manifest(&plan.manifest_path).map_err(|e| CliError::config(e.to_string()))?;
    let dataset_root =
        plan.manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));

    let split = SplitSpec {
        holdout_xi: match &plan.holdout_xi {
            Some(xi) => xi.clone(),
            None => SplitSpec::default_for(&manifest.config.xi_list, plan.split_seed).holdout_xi,
        },
        split_seed: plan.split_seed,
    };

    let _ = writeln!(out, "manifest = {}", plan.manifest_path.display());
    let _ = writeln!(out, "manifest sha256 {}", manifest.manifest_sha256);
    let _ = writeln!(
        out,
        "methods = {}",
        plan.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(out, "alpha = {}", plan.opts.alpha);
    let _ = writeln!(out, "seed = {}", plan.opts.seed);
    let _ = writeln!(out, "split_seed = {}", split.split_seed);
    let _ = writeln!(out, "holdout_xi = {}", join_f64(&split.holdout_xi));
    let _ = writeln!(out, "out = {}", plan.out_dir.display());
    let _ = writeln!(
        out,
        "jobs = {}",
        plan.jobs.map_or_else(|| "default".to_string(), |j| j.to_string())
    );
    if plan.opts.force_unit_gamma {
        let _ = writeln!(out, "force_unit_gamma = true");
    }

    std::fs::create_dir_all(&plan.out_dir).map_err(|e| {
        CliError::with_code(
            EXIT_OUTPUT,
            format!("cannot create output directory {}: {e}", plan.out_dir.display()),
        )
    })?;

    let runs: Result<Vec<(EvaluationReport, PlotData)>, CliError> =
        with_jobs(plan.jobs, || -> Result<_, CliError> {
            let prepared = prepare_examples(&manifest, &dataset_root)
                .map_err(|e| CliError::config(format!("dataset preparation failed: {e}")))?;
            plan.methods
                .iter()
                .map(|&method| {
                    run_experiment_prepared(&manifest, &prepared, &split, method, &plan.opts)
                        .map_err(|e| CliError::with_code(EXIT_TRAINING, e.to_string()))
                })
                .collect()
        })?;
    let runs = runs?;

    for (report, _) in &runs {
        for e in &report.edges {
            let _ = writeln!(
                out,
                "run {} id {} {} coverage {:.2}% len {:.4} nm",
                report.method, report.run_id, e.edge, e.coverage_pct, e.avg_len_nm
            );
        }
    }

    let write_err =
        |e: Error| CliError::with_code(EXIT_OUTPUT, format!("cannot write results: {e}"));
    let reports: Vec<EvaluationReport> = runs.iter().map(|(r, _)| r.clone()).collect();
    let csv_path = plan.out_dir.join("summary.csv");
    write_report_csv(&csv_path, &reports).map_err(write_err)?;
    let _ = writeln!(out, "wrote {}", csv_path.display());

    for (report, plot) in &runs {
        let path = plan.out_dir.join(report_file_name(report));
        write_report_json(&path, report).map_err(write_err)?;
        let _ = writeln!(out, "wrote {}", path.display());
        if plan.emit_plot_data {
            for path in write_plot_data(&plan.out_dir, report, plot).map_err(write_err)? {
                let _ = writeln!(out, "wrote {}", path.display());
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report

/// `report`: merge run reports into one table on standard output.
pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> CmdResult {
    let mut reports = Vec::with_capacity(args.reports.len());
    for path in &args.reports {
        reports.push(
            load_report_json(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        );
    }
    let _ = write!(out, "{}", render_table(&reports));
    Ok(())
}
