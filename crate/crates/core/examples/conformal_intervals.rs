//! Split conformal calibration on a toy heteroscedastic problem.
//!
//! Demonstrates the three interval constructions and the finite-sample
//! coverage guarantee, independent of the imaging stack:
//!
//!   plain      [yhat - r_m, yhat + r_m], r_m the m-th largest |residual|
//!   normalized [yhat - rho_m * gamma, yhat + rho_m * gamma], residuals
//!              scaled by a per-example difficulty gamma before ranking
//!   quantile   [lo - eps_m, hi + eps_m], a symmetric adjustment to raw
//!              quantile-band endpoints (eps_m may be negative)
//!
//! Data: y = x + noise whose scale grows with x, so fixed-radius intervals
//! must be wide everywhere while the adaptive variants track the local
//! scale. With an oracle gamma proportional to the true scale, normalized
//! conformal keeps the same marginal coverage with a visibly different
//! width profile.
//!
//! Run with: cargo run --release -p roughline --example conformal_intervals

use rand::Rng;
use rand_distr::{Distribution, Normal};
use roughline::rng::rng_from_seed;
use roughline::{
    calibrate_cp, calibrate_cqr, calibrate_ncp, interval_cp, interval_cqr, interval_ncp,
    residual_score,
};

struct Example {
    x: f64,
    y: f64,
}

/// Noise scale at x: the "difficulty" of the example.
fn scale(x: f64) -> f64 {
    0.2 + 0.8 * x
}

fn drawn(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = rng_from_seed(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>();
            let y = x + scale(x) * unit.sample(&mut rng);
            Example { x, y }
        })
        .collect()
}

fn main() -> roughline::Result<()> {
    let alpha = 0.1;
    let calib = drawn(1999, 1);
    let test = drawn(4000, 2);
    println!(
        "heteroscedastic toy: y = x + N(0, (0.2 + 0.8 x)^2), {} calibration / {} test, alpha = {alpha}",
        calib.len(),
        test.len()
    );
    // The base prediction is yhat = x (the true mean); the raw quantile band
    // is the oracle 25%..75% band, deliberately too narrow for 90% coverage
    // so the calibration has to widen it.
    let raw_band = |x: f64| {
        let half = 0.6745 * scale(x); // 25th/75th percentile of the normal
        (x - half, x + half)
    };

    // --- calibrate all three on the same scores ---------------------------
    let residuals: Vec<f64> = calib.iter().map(|e| residual_score(e.y, e.x)).collect();
    let cp = calibrate_cp(&residuals, alpha)?;

    let pairs: Vec<(f64, f64)> =
        calib.iter().map(|e| (residual_score(e.y, e.x), scale(e.x))).collect();
    let ncp = calibrate_ncp(&pairs, alpha)?;

    let triples: Vec<(f64, f64, f64)> = calib
        .iter()
        .map(|e| {
            let (lo, hi) = raw_band(e.x);
            (e.y, lo, hi)
        })
        .collect();
    let cqr = calibrate_cqr(&triples, alpha)?;

    println!("\ncalibrated constants (m-th largest score, m = floor(alpha (n+1)) = {}):", {
        (alpha * (calib.len() as f64 + 1.0)).floor() as usize
    });
    println!("  plain      r_m   = {:?}", cp.variant);
    println!("  normalized rho_m = {:?}", ncp.variant);
    println!("  quantile   eps_m = {:?}", cqr.variant);

    // --- evaluate on the test set -----------------------------------------
    let mut rows = Vec::new();
    for (name, build) in [
        ("plain", 0usize),
        ("normalized", 1),
        ("quantile", 2),
    ] {
        let mut covered = 0usize;
        let mut width_sum = 0.0;
        let mut width_lo_x = 0.0; // mean width on the easy half (x < 0.5)
        let mut width_hi_x = 0.0;
        let (mut n_lo, mut n_hi) = (0usize, 0usize);
        let mut raw_covered = 0usize;
        for e in &test {
            let interval = match build {
                0 => interval_cp(e.x, &cp)?,
                1 => interval_ncp(e.x, scale(e.x), &ncp)?,
                _ => {
                    let (lo, hi) = raw_band(e.x);
                    if lo <= e.y && e.y <= hi {
                        raw_covered += 1;
                    }
                    interval_cqr(lo, hi, &cqr)?.0
                }
            };
            if interval.contains(e.y) {
                covered += 1;
            }
            width_sum += interval.width();
            if e.x < 0.5 {
                width_lo_x += interval.width();
                n_lo += 1;
            } else {
                width_hi_x += interval.width();
                n_hi += 1;
            }
        }
        rows.push((
            name,
            100.0 * covered as f64 / test.len() as f64,
            width_sum / test.len() as f64,
            width_lo_x / n_lo as f64,
            width_hi_x / n_hi as f64,
        ));
        if build == 2 {
            println!(
                "\nraw quantile band coverage before calibration: {:.2}% (undercovers by design)",
                100.0 * raw_covered as f64 / test.len() as f64
            );
        }
    }

    println!(
        "\n{:<12} {:>10} {:>11} {:>14} {:>14}",
        "method", "coverage", "avg width", "width x<0.5", "width x>=0.5"
    );
    for (name, cov, w, wl, wh) in rows {
        println!("{name:<12} {cov:>9.2}% {w:>11.3} {wl:>14.3} {wh:>14.3}");
    }
    println!("\nall three sit near 90% marginal coverage; only the adaptive variants");
    println!("spend their width where the noise actually is.");
    Ok(())
}
