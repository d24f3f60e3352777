//! Classical edge detection and the base LER regressor built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{ImageGeometry, SemImage};
use crate::roughness::compute_ler;

/// Sample LER of the two edges of one line, nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LerPrediction {
    pub left_ler: f64,
    pub right_ler: f64,
}

/// Per-row edge positions recovered from an image.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedEdges {
    /// Left edge position per row, nm from the image's left border.
    pub left_nm: Vec<f64>,
    /// Right edge position per row, nm.
    pub right_nm: Vec<f64>,
    /// Rows whose gradient contrast fell below threshold; their positions
    /// were imputed from the nearest confident row.
    pub failed_rows: Vec<usize>,
}

impl DetectedEdges {
    pub fn failure_count(&self) -> usize {
        self.failed_rows.len()
    }
}

/// Fraction of the profile's gradient peak below which a row counts as a
/// detection failure.
const FAILURE_CONTRAST_FRACTION: f64 = 0.05;
/// Search-window margin outside the nominal line region, px.
const WINDOW_MARGIN_PX: i64 = 12;
/// Per-row horizontal smoothing before differentiation.
const ROW_SMOOTH_SIGMA: f64 = 1.0;
const ROW_SMOOTH_RADIUS: i64 = 3;

/// Locate the line's two edges in every row.
///
/// The column-mean profile fixes the coarse line region (largest run above
/// the mid-range threshold). Per row, the intensity is smoothed with a small
/// Gaussian, differentiated by central differences, and each edge taken as
/// the extreme gradient inside its half-window: maximal rise for the left
/// edge, maximal fall for the right. A parabolic fit through the gradient
/// peak refines the position to subpixel accuracy. Rows whose peak gradient
/// is below a fraction of the image-level contrast are flagged and imputed
/// from the nearest unflagged row.
pub fn detect_edges(img: &SemImage, geom: &ImageGeometry) -> Result<DetectedEdges> {
    let (h, w) = img.pixels.dim();
    if h != geom.height_px || w != geom.width_px {
        return Err(Error::Geometry(format!(
            "image {w}x{h} does not match geometry {}x{}",
            geom.width_px, geom.height_px
        )));
    }

    // Coarse line region from the column-mean profile.
    let profile: Vec<f64> =
        (0..w).map(|c| (0..h).map(|r| img.pixels[(r, c)]).sum::<f64>() / h as f64).collect();
    let lo = profile.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo <= 1e-9 {
        return Err(Error::Geometry("image has no contrast; cannot locate a line".into()));
    }
    let threshold = 0.5 * (lo + hi);
    let (region_start, region_end) = longest_run_above(&profile, threshold)
        .ok_or_else(|| Error::Geometry("no above-threshold line region found".into()))?;

    let mid = ((region_start + region_end) / 2) as i64;
    let left_window = window(region_start as i64 - WINDOW_MARGIN_PX, mid, w);
    let right_window = window(mid + 1, region_end as i64 + WINDOW_MARGIN_PX, w);

    // Failure threshold proportional to the mean-profile edge strength.
    let mut profile_grad_peak: f64 = 0.0;
    for c in 1..w - 1 {
        profile_grad_peak = profile_grad_peak.max((0.5 * (profile[c + 1] - profile[c - 1])).abs());
    }
    let min_peak = FAILURE_CONTRAST_FRACTION * profile_grad_peak;

    let mut left_nm = vec![f64::NAN; h];
    let mut right_nm = vec![f64::NAN; h];
    let mut failed = vec![false; h];
    let mut row_buf = vec![0.0; w];
    let mut grad = vec![0.0; w];
    for row in 0..h {
        smooth_row(img, row, &mut row_buf);
        grad[0] = 0.0;
        grad[w - 1] = 0.0;
        for c in 1..w - 1 {
            grad[c] = 0.5 * (row_buf[c + 1] - row_buf[c - 1]);
        }

        let left_peak = argmax_in(&grad, left_window, 1.0);
        let right_peak = argmax_in(&grad, right_window, -1.0);
        match (left_peak, right_peak) {
            (Some((lc, lg)), Some((rc, rg))) if lg >= min_peak && rg >= min_peak => {
                left_nm[row] = refine_subpixel(&grad, lc, geom.px_w);
                right_nm[row] = refine_subpixel(&grad, rc, geom.px_w);
            }
            _ => failed[row] = true,
        }
    }

    let failed_rows: Vec<usize> = (0..h).filter(|&r| failed[r]).collect();
    if failed_rows.len() == h {
        return Err(Error::Geometry("every row failed edge detection".into()));
    }
    impute_failed(&mut left_nm, &failed);
    impute_failed(&mut right_nm, &failed);

    Ok(DetectedEdges { left_nm, right_nm, failed_rows })
}

/// Base LER regressor: detect the edges, take the population standard
/// deviation of each position sequence.
pub fn estimate_ler(img: &SemImage, geom: &ImageGeometry) -> Result<LerPrediction> {
    Ok(estimate_ler_detailed(img, geom)?.0)
}

/// [`estimate_ler`] plus the detection it was computed from, for callers
/// that also need positions or failure accounting.
pub fn estimate_ler_detailed(
    img: &SemImage,
    geom: &ImageGeometry,
) -> Result<(LerPrediction, DetectedEdges)> {
    let detected = detect_edges(img, geom)?;
    let prediction = LerPrediction {
        left_ler: compute_ler(&detected.left_nm),
        right_ler: compute_ler(&detected.right_nm),
    };
    Ok((prediction, detected))
}

fn window(start: i64, end: i64, w: usize) -> (usize, usize) {
    let s = start.clamp(1, w as i64 - 2) as usize;
    let e = end.clamp(1, w as i64 - 2) as usize;
    (s, e.max(s))
}

/// Longest contiguous run of columns with `profile >= threshold`.
fn longest_run_above(profile: &[f64], threshold: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for (c, &v) in profile.iter().enumerate() {
        if v >= threshold {
            run_start.get_or_insert(c);
        } else if let Some(s) = run_start.take() {
            if best.is_none_or(|(bs, be)| c - 1 - s > be - bs) {
                best = Some((s, c - 1));
            }
        }
    }
    if let Some(s) = run_start {
        let e = profile.len() - 1;
        if best.is_none_or(|(bs, be)| e - s > be - bs) {
            best = Some((s, e));
        }
    }
    best
}

fn smooth_row(img: &SemImage, row: usize, out: &mut [f64]) {
    let w = out.len();
    let sigma2 = 2.0 * ROW_SMOOTH_SIGMA * ROW_SMOOTH_SIGMA;
    let taps: Vec<f64> =
        (-ROW_SMOOTH_RADIUS..=ROW_SMOOTH_RADIUS).map(|d| (-(d * d) as f64 / sigma2).exp()).collect();
    let norm: f64 = taps.iter().sum();
    for (c, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, t) in taps.iter().enumerate() {
            let src = (c as i64 + i as i64 - ROW_SMOOTH_RADIUS).clamp(0, w as i64 - 1) as usize;
            acc += t * img.pixels[(row, src)];
        }
        *slot = acc / norm;
    }
}

/// Largest `sign * grad` in `[start, end]`; returns `(column, signed peak)`.
fn argmax_in(grad: &[f64], (start, end): (usize, usize), sign: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (c, &g) in grad.iter().enumerate().take(end + 1).skip(start) {
        let v = sign * g;
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((c, v));
        }
    }
    best
}

/// Parabolic three-point refinement around a gradient extremum. The central
/// difference at column `i` is centered on that pixel's midpoint, hence the
/// `+ 0.5` when converting to physical units.
fn refine_subpixel(grad: &[f64], i: usize, px_w: f64) -> f64 {
    let delta = if i > 0 && i + 1 < grad.len() {
        let denom = grad[i - 1] - 2.0 * grad[i] + grad[i + 1];
        if denom.abs() > 1e-12 {
            (0.5 * (grad[i - 1] - grad[i + 1]) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    (i as f64 + 0.5 + delta) * px_w
}

/// Replace failed rows by the nearest confident row's value.
fn impute_failed(values: &mut [f64], failed: &[bool]) {
    let n = values.len();
    for r in 0..n {
        if !failed[r] {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for dist in 1..n {
            let down = r.checked_sub(dist);
            let up = if r + dist < n { Some(r + dist) } else { None };
            for cand in [down, up].into_iter().flatten() {
                if !failed[cand] {
                    best = Some((dist, values[cand]));
                    break;
                }
            }
            if best.is_some() {
                break;
            }
        }
        values[r] = best.expect("at least one confident row").1;
    }
}
