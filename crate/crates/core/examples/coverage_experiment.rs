//! End-to-end coverage experiment through the library API.
//!
//! Mirrors what the `roughline` binary does, entirely in code: generate a
//! small deterministic dataset, prepare per-example estimates once, run all
//! four interval methods against the same calibration/test split, and print
//! the merged per-edge result table plus a per-dose breakdown.
//!
//! The dataset is sized for a quick demonstration (24 groups, 96 noisy
//! images), so the empirical coverage carries real finite-sample scatter —
//! the tight guarantee shows up at larger calibration sizes.
//!
//! Run with: cargo run --release -p roughline --example coverage_experiment

use roughline::pipeline::{render_table, run_experiment_prepared, SplitSpec};
use roughline::{
    generate_dataset, prepare_examples, DatasetConfig, ExperimentOptions, Method,
};

fn main() -> roughline::Result<()> {
    // --- generate ----------------------------------------------------------
    let dir = tempfile::tempdir().expect("temp dir");
    let mut config = DatasetConfig::desk(dir.path(), 2024);
    // Shrink the desk grid for demo speed: 2 sigma x 1 hurst x 4 xi x
    // 3 originals = 24 groups; x 4 doses = 96 noisy images.
    config.hurst_list = vec![0.5];
    config.originals_per_combo = 3;
    config.dose_list = vec![2.0, 10.0, 50.0, 200.0];
    config.preset = "custom".into();

    println!("generating {} groups into {} ...", 2 * 4 * 3, dir.path().display());
    let manifest = generate_dataset(&config)?;
    println!(
        "generated {} noisy images, manifest sha256 {}...",
        manifest.examples.len(),
        &manifest.manifest_sha256[..12]
    );

    // --- prepare once ------------------------------------------------------
    // Edge detection on every denoised image plus difficulty features from
    // every noise image; shared by all four methods below.
    let prepared = prepare_examples(&manifest, dir.path())?;
    let failures: usize = prepared.iter().map(|p| p.detection_failures).sum();
    println!("prepared {} examples ({} detection-failure rows total)", prepared.len(), failures);

    // --- split and run all methods -----------------------------------------
    // Hold out the two largest correlation lengths; their groups are
    // shuffled into calibration and test halves.
    let split = SplitSpec { holdout_xi: vec![24.0, 32.0], split_seed: 9 };
    let opts = ExperimentOptions::new(0.1, 5);

    let mut reports = Vec::new();
    for method in Method::all() {
        let (report, _plot) =
            run_experiment_prepared(&manifest, &prepared, &split, method, &opts)?;
        println!(
            "ran {:<7} -> run id {}, {} calibration / {} test examples",
            method.name(),
            report.run_id,
            report.n_calibration,
            report.n_test
        );
        reports.push(report);
    }

    // --- report ------------------------------------------------------------
    println!("\n{}", render_table(&reports));

    println!("per-dose coverage breakdown (left edge):");
    println!("{:<8} {:>8} {:>12} {:>12} {:>6}", "method", "dose", "coverage", "avg len", "n");
    for report in &reports {
        for row in &report.edges[0].by_dose {
            println!(
                "{:<8} {:>8} {:>11.2}% {:>12.4} {:>6}",
                report.method, row.key, row.coverage_pct, row.avg_len_nm, row.n
            );
        }
    }
    println!("\nplain intervals pay one fixed radius at every dose, so their width is");
    println!("set by the hardest images; the normalized and quantile variants spend");
    println!("width where the noise is (compare the avg len columns per dose). On a");
    println!("dataset this small the per-dose coverage is a handful of hits and");
    println!("misses -- the acceptance-scale runs are where the 90% target shows up.");
    Ok(())
}
