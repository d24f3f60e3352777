//! Report serialization: per-run JSON, merged CSV summaries, plain-text
//! tables, and gnuplot-style `.dat` series.
//!
//! All formatting is fixed-width/fixed-precision so that rerunning an
//! identical experiment reproduces every output file byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::{EvaluationReport, PlotData};
use crate::error::{Error, Result};

/// Summary CSV over any number of runs; one row per (run, edge).
///
/// Column order is part of the format contract: downstream tooling indexes
/// these by position.
pub const CSV_HEADER: &str = "method,edge,alpha,coverage_pct,avg_len_nm,n_test,degenerate_count";

pub fn report_csv(reports: &[EvaluationReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        for e in &r.edges {
            writeln!(
                out,
                "{},{},{},{:.2},{:.4},{},{}",
                r.method, e.edge, r.alpha, e.coverage_pct, e.avg_len_nm, e.n_test,
                e.degenerate_count
            )
            .expect("string write");
        }
    }
    out
}

pub fn write_report_csv(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    std::fs::write(path, report_csv(reports)).map_err(|e| Error::io(path, e))
}

/// File name for one run's JSON report.
pub fn report_file_name(report: &EvaluationReport) -> String {
    format!("report-{}-{}.json", report.method, report.run_id)
}

pub fn write_report_json(path: &Path, report: &EvaluationReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::format(path, format!("report serialization failed: {e}")))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_report_json(path: &Path) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, format!("not a run report: {e}")))
}

/// Merged plain-text table over runs, one block per edge.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for (edge_idx, edge_name) in super::experiment::EDGE_NAMES.iter().enumerate() {
        if edge_idx > 0 {
            out.push('\n');
        }
        writeln!(out, "edge: {edge_name}").expect("string write");
        writeln!(
            out,
            "{:<8} {:<12} {:>6} {:>10} {:>12} {:>7} {:>6} {:>8}",
            "method", "run", "alpha", "coverage%", "avg_len_nm", "n_test", "degen", "uncal%"
        )
        .expect("string write");
        for r in reports {
            let Some(e) = r.edges.iter().find(|e| e.edge == *edge_name) else {
                continue;
            };
            let uncal = match e.uncalibrated_coverage_pct {
                Some(u) => format!("{u:.2}"),
                None => "-".to_string(),
            };
            writeln!(
                out,
                "{:<8} {:<12} {:>6} {:>10.2} {:>12.4} {:>7} {:>6} {:>8}",
                r.method,
                r.run_id,
                r.alpha,
                e.coverage_pct,
                e.avg_len_nm,
                e.n_test,
                e.degenerate_count,
                uncal
            )
            .expect("string write");
        }
    }
    out
}

/// Writes the per-run `.dat` series under `dir`:
///
/// * `{method}-{run}-{edge}-width-vs-error.dat` — one test point per line,
///   columns `width_nm abs_error_nm dose`.
/// * `{method}-{run}-{edge}-by-dose.dat` — columns
///   `dose coverage_pct avg_len_nm n`.
///
/// Returns the paths written.
pub fn write_plot_data(
    dir: &Path,
    report: &EvaluationReport,
    plot: &PlotData,
) -> Result<Vec<PathBuf>> {
    if report.run_id != plot.run_id {
        return Err(Error::invalid_param(
            "plot",
            format!("plot data for run {} paired with report {}", plot.run_id, report.run_id),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    for edge_plot in &plot.edges {
        let stem = format!("{}-{}-{}", report.method, report.run_id, edge_plot.edge);

        let mut scatter = String::from("# width_nm abs_error_nm dose\n");
        for p in &edge_plot.points {
            writeln!(scatter, "{:.6} {:.6} {}", p.width_nm, p.abs_error_nm, p.dose)
                .expect("string write");
        }
        let path = dir.join(format!("{stem}-width-vs-error.dat"));
        std::fs::write(&path, scatter).map_err(|e| Error::io(&path, e))?;
        written.push(path);

        if let Some(e) = report.edges.iter().find(|e| e.edge == edge_plot.edge) {
            let mut by_dose = String::from("# dose coverage_pct avg_len_nm n\n");
            for row in &e.by_dose {
                writeln!(by_dose, "{} {:.2} {:.4} {}", row.key, row.coverage_pct, row.avg_len_nm, row.n)
                    .expect("string write");
            }
            let path = dir.join(format!("{stem}-by-dose.dat"));
            std::fs::write(&path, by_dose).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::experiment::{BreakdownRow, EdgeEvaluation};
    use crate::pipeline::split::SplitSpec;

    fn fixture_report() -> EvaluationReport {
        let edge = |name: &str, cov: f64, len: f64| EdgeEvaluation {
            edge: name.to_string(),
            coverage_pct: cov,
            avg_len_nm: len,
            n_test: 5760,
            degenerate_count: 0,
            uncalibrated_coverage_pct: None,
            by_dose: vec![
                BreakdownRow { key: 2.0, coverage_pct: cov, avg_len_nm: len, n: 576 },
                BreakdownRow { key: 200.0, coverage_pct: cov, avg_len_nm: len * 0.5, n: 576 },
            ],
            by_sigma: vec![],
        };
        EvaluationReport {
            run_id: "abc123def456".to_string(),
            method: "cp".to_string(),
            alpha: 0.1,
            manifest_sha256: "0".repeat(64),
            split: SplitSpec { holdout_xi: vec![10.0, 20.0, 30.0, 40.0], split_seed: 1 },
            seed: 1,
            n_proper_train: 89280,
            n_calibration: 5760,
            n_test: 5760,
            // Reference-scale summary values: fixed-width 90% intervals of
            // mean length 0.135 nm (left) and 0.186 nm (right).
            edges: vec![edge("left", 90.22, 0.135), edge("right", 89.22, 0.186)],
        }
    }

    #[test]
    fn csv_and_table_have_fixed_formatting() {
        let report = fixture_report();
        let csv = report_csv(std::slice::from_ref(&report));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "cp,left,0.1,90.22,0.1350,5760,0");
        assert_eq!(lines[2], "cp,right,0.1,89.22,0.1860,5760,0");
        assert_eq!(lines.len(), 3);

        let table = render_table(std::slice::from_ref(&report));
        assert!(table.contains("edge: left"));
        assert!(table.contains("edge: right"));
        assert!(table.contains("90.22"));
        assert!(table.contains("0.1860"));
        assert!(table.contains("abc123def456"));

        // Identical input, identical bytes.
        assert_eq!(csv, report_csv(std::slice::from_ref(&report)));
        assert_eq!(table, render_table(std::slice::from_ref(&report)));
    }

    #[test]
    fn report_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let report = fixture_report();
        let path = dir.path().join(report_file_name(&report));
        write_report_json(&path, &report).unwrap();
        let loaded = load_report_json(&path).unwrap();
        assert_eq!(loaded, report);

        std::fs::write(&path, "{\"run_id\": 3}").unwrap();
        assert!(load_report_json(&path).is_err());
    }

    #[test]
    fn plot_files_are_written_and_mismatches_rejected() {
        use crate::pipeline::experiment::{EdgePlotData, PlotData, ScatterPoint};
        let dir = tempfile::tempdir().unwrap();
        let report = fixture_report();
        let plot = PlotData {
            run_id: report.run_id.clone(),
            edges: vec![EdgePlotData {
                edge: "left".to_string(),
                points: vec![ScatterPoint { width_nm: 0.27, abs_error_nm: 0.05, dose: 2.0 }],
            }],
        };
        let written = write_plot_data(dir.path(), &report, &plot).unwrap();
        assert_eq!(written.len(), 2);
        let scatter = std::fs::read_to_string(&written[0]).unwrap();
        assert_eq!(scatter, "# width_nm abs_error_nm dose\n0.270000 0.050000 2\n");
        let by_dose = std::fs::read_to_string(&written[1]).unwrap();
        assert!(by_dose.starts_with("# dose coverage_pct avg_len_nm n\n2 90.22 0.1350 576\n"));

        let wrong = PlotData { run_id: "ffffffffffff".to_string(), ..plot };
        assert!(write_plot_data(dir.path(), &report, &wrong).is_err());
    }
}
