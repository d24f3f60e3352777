//! Full command-line journey on a small dataset: generate twice (identical
//! bytes), run every method twice (identical CSV), merge reports, and check
//! the documented failure exits.

use std::path::{Path, PathBuf};

use roughline::cli::{
    cmd_generate, cmd_report, cmd_run, GenerateArgs, ReportArgs, RunArgs, EXIT_CONFIG,
};
use roughline::pipeline::MANIFEST_FILE;

fn capture(f: impl FnOnce(&mut Vec<u8>) -> Result<(), roughline::cli::CliError>) -> (String, Option<i32>) {
    let mut buf = Vec::new();
    let code = f(&mut buf).err().map(|e| e.code);
    (String::from_utf8(buf).unwrap(), code)
}

/// Shrunken grid so the journey stays fast: 8 groups x 3 doses = 24 examples,
/// holdout half the xi grid -> 4 calibration + 4 test groups.
fn generate_args(config_path: &Path) -> GenerateArgs {
    GenerateArgs { config: Some(config_path.to_path_buf()), ..Default::default() }
}

fn write_config(dir: &Path, out_dir: &Path) -> PathBuf {
    let path = dir.join("dataset.conf");
    let text = format!(
        "# journey-test dataset\n\
         preset = desk\n\
         out = {}\n\
         seed = 11\n\
         sigma_list = 0.8, 1.2\n\
         hurst_list = 0.5\n\
         xi_list = 8, 16, 24, 32\n\
         originals_per_combo = 1\n\
         line_widths = 10, 15\n\
         dose_list = 2, 10, 200\n",
        out_dir.display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn generate_run_report_journey() {
    let work = tempfile::tempdir().unwrap();
    let data_dir = work.path().join("dataset");
    let conf = write_config(work.path(), &data_dir);

    // --- generate ---
    let (stdout, code) = capture(|out| cmd_generate(&generate_args(&conf), out));
    assert_eq!(code, None, "generate failed:\n{stdout}");
    assert!(stdout.contains("preset = custom"), "stdout:\n{stdout}");
    assert!(stdout.contains("24 examples, 8 groups"), "stdout:\n{stdout}");
    assert!(stdout.contains("manifest sha256 "), "stdout:\n{stdout}");
    assert!(!stdout.contains("manifest hash unchanged"));
    let manifest_path = data_dir.join(MANIFEST_FILE);
    let manifest_bytes = std::fs::read(&manifest_path).unwrap();

    // Regeneration: same bytes, and the summary says so.
    let (stdout, code) = capture(|out| cmd_generate(&generate_args(&conf), out));
    assert_eq!(code, None);
    assert!(stdout.contains("manifest hash unchanged"), "stdout:\n{stdout}");
    assert_eq!(std::fs::read(&manifest_path).unwrap(), manifest_bytes);

    // --- run, all methods ---
    let run_dir = work.path().join("runs");
    let run_args = RunArgs {
        manifest: Some(manifest_path.clone()),
        method: Some("all".into()),
        alpha: Some(0.2),
        seed: Some(3),
        split_seed: Some(5),
        out: Some(run_dir.clone()),
        emit_plot_data: true,
        ..Default::default()
    };
    let (stdout, code) = capture(|out| cmd_run(&run_args, out));
    assert_eq!(code, None, "run failed:\n{stdout}");
    for line in ["methods = cp,ncp,cqr-2in,cqr-3in", "alpha = 0.2", "holdout_xi = 24,32"] {
        assert!(stdout.contains(line), "missing {line:?} in:\n{stdout}");
    }

    let csv_path = run_dir.join("summary.csv");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 9, "header + 4 methods x 2 edges:\n{csv}");
    assert_eq!(lines[0], "method,edge,alpha,coverage_pct,avg_len_nm,n_test,degenerate_count");
    for method in ["cp", "ncp", "cqr-2in", "cqr-3in"] {
        assert_eq!(csv.matches(&format!("\n{method},left,")).count(), 1, "csv:\n{csv}");
        assert_eq!(csv.matches(&format!("\n{method},right,")).count(), 1);
    }

    // Report JSONs and plot data on disk.
    let report_paths: Vec<PathBuf> = std::fs::read_dir(&run_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("report-"))
        .collect();
    assert_eq!(report_paths.len(), 4);
    let dat_count = std::fs::read_dir(&run_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "dat"))
        .count();
    // 4 methods x 2 edges x 2 files.
    assert_eq!(dat_count, 16);

    // --- rerun: identical CSV bytes and identical stdout ---
    let rerun_dir = work.path().join("runs2");
    let rerun_args = RunArgs { out: Some(rerun_dir.clone()), ..run_args.clone() };
    let (stdout2, code) = capture(|out| cmd_run(&rerun_args, out));
    assert_eq!(code, None);
    assert_eq!(
        std::fs::read_to_string(rerun_dir.join("summary.csv")).unwrap(),
        csv,
        "rerun CSV differs"
    );
    let normalize = |s: &str| s.replace(rerun_dir.to_str().unwrap(), run_dir.to_str().unwrap());
    assert_eq!(normalize(&stdout2), stdout, "rerun stdout differs beyond paths");

    // --- report: merge two runs, both run ids listed ---
    let mut sorted = report_paths.clone();
    sorted.sort();
    let report_args = ReportArgs { reports: sorted.clone() };
    let (table, code) = capture(|out| cmd_report(&report_args, out));
    assert_eq!(code, None);
    assert!(table.contains("edge: left") && table.contains("edge: right"), "table:\n{table}");
    for p in &sorted {
        let name = p.file_name().unwrap().to_str().unwrap();
        // report-<method>-<run_id>.json
        let run_id = name.trim_end_matches(".json").rsplit('-').next().unwrap();
        assert!(table.contains(run_id), "run id {run_id} missing from table:\n{table}");
    }

    // Malformed report file: exit 1, path named.
    let broken = work.path().join("broken.json");
    std::fs::write(&broken, "{").unwrap();
    let (_, code) = capture(|out| cmd_report(&ReportArgs { reports: vec![broken.clone()] }, out));
    assert_eq!(code, Some(EXIT_CONFIG));

    // Unknown method: exit 1 before any work.
    let bad_method =
        RunArgs { method: Some("quantile".into()), ..RunArgs { manifest: Some(manifest_path), ..Default::default() } };
    let (_, code) = capture(|out| cmd_run(&bad_method, out));
    assert_eq!(code, Some(EXIT_CONFIG));
}

#[test]
fn jobs_flag_bounds_parallelism_without_changing_results() {
    let work = tempfile::tempdir().unwrap();
    let data_dir = work.path().join("dataset");
    let conf = write_config(work.path(), &data_dir);
    let mut args = generate_args(&conf);
    args.jobs = Some(1);
    let (stdout, code) = capture(|out| cmd_generate(&args, out));
    assert_eq!(code, None, "single-thread generate failed:\n{stdout}");
    assert!(stdout.contains("jobs = 1"));
    let single = std::fs::read(data_dir.join(MANIFEST_FILE)).unwrap();

    let data_dir2 = work.path().join("dataset2");
    let conf2 = write_config(&{
        let d = work.path().join("c2");
        std::fs::create_dir_all(&d).unwrap();
        d
    }, &data_dir2);
    let mut args2 = generate_args(&conf2);
    args2.jobs = Some(4);
    let (_, code) = capture(|out| cmd_generate(&args2, out));
    assert_eq!(code, None);
    let multi = std::fs::read(data_dir2.join(MANIFEST_FILE)).unwrap();

    // Identical content modulo the differing output_root echoed in the
    // config (which also shifts the whole-manifest hash line).
    let strip = |bytes: &[u8], root: &Path| {
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .replace(root.to_str().unwrap(), "ROOT")
            .lines()
            .filter(|l| !l.contains("manifest_sha256"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&single, &data_dir), strip(&multi, &data_dir2));
}
