//! Summary features of a noise image, the inputs to the difficulty model.
//!
//! The reference difficulty models are convolutional networks reading the
//! full noise image; here a fixed feature vector stands in for them. The
//! features are chosen to expose what drives estimation error: overall
//! residual noise level (dose), noise concentrated where the edges are, and
//! the jaggedness of the detected edge tracks themselves.

use serde::{Deserialize, Serialize};

use super::edges::DetectedEdges;
use crate::error::{Error, Result};
use crate::imaging::{ImageGeometry, ImageKind, SemImage};

/// Feature vector length; recorded in trained models so checkpoints can
/// reject mismatched extractors.
pub const FEATURE_DIM: usize = 11;

/// Half-width of the per-edge noise band, px.
const EDGE_BAND_PX: i64 = 3;

/// Inputs to the difficulty regressor, in a fixed order:
///
/// 0. global mean of the noise image
/// 1. global standard deviation
/// 2. global maximum
/// 3. left-band mean (noise within ±3 px of the detected left edge)
/// 4. left-band standard deviation
/// 5. right-band mean
/// 6. right-band standard deviation
/// 7. left edge row-to-row increment standard deviation, nm
/// 8. right edge row-to-row increment standard deviation, nm
/// 9. dose proxy: reciprocal of the global mean (floored at 1e-12)
/// 10. constant bias term (1.0)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyFeatures {
    pub values: [f64; FEATURE_DIM],
}

impl DifficultyFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Extract [`DifficultyFeatures`] from a noise image and the edge detection
/// of the corresponding noisy image.
pub fn difficulty_features(
    noise: &SemImage,
    detection: &DetectedEdges,
    geom: &ImageGeometry,
) -> Result<DifficultyFeatures> {
    if noise.kind != ImageKind::Noise {
        return Err(Error::invalid_param(
            "noise",
            format!("expected a noise image, got {:?}", noise.kind),
        ));
    }
    let (h, w) = noise.pixels.dim();
    if h != geom.height_px || w != geom.width_px {
        return Err(Error::Geometry(format!(
            "noise image {w}x{h} does not match geometry {}x{}",
            geom.width_px, geom.height_px
        )));
    }
    if detection.left_nm.len() != h || detection.right_nm.len() != h {
        return Err(Error::Geometry("detection does not span the image rows".into()));
    }

    let n = (h * w) as f64;
    let mean = noise.pixels.sum() / n;
    let var = noise.pixels.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let max = noise.pixels.iter().cloned().fold(0.0, f64::max);

    let (left_mean, left_std) = band_stats(noise, &detection.left_nm, geom);
    let (right_mean, right_std) = band_stats(noise, &detection.right_nm, geom);

    let values = [
        mean,
        var.sqrt(),
        max,
        left_mean,
        left_std,
        right_mean,
        right_std,
        increment_std(&detection.left_nm),
        increment_std(&detection.right_nm),
        1.0 / mean.max(1e-12),
        1.0,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_param("features", format!("non-finite feature in {values:?}")));
    }
    Ok(DifficultyFeatures { values })
}

/// Mean and population std of the noise pixels within ±3 px of the detected
/// edge column, over all rows.
fn band_stats(noise: &SemImage, positions_nm: &[f64], geom: &ImageGeometry) -> (f64, f64) {
    let w = geom.width_px as i64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for (row, &pos) in positions_nm.iter().enumerate() {
        let center = (pos / geom.px_w).floor() as i64;
        for col in center - EDGE_BAND_PX..=center + EDGE_BAND_PX {
            let c = col.clamp(0, w - 1) as usize;
            let v = noise.pixels[(row, c)];
            sum += v;
            sum_sq += v * v;
            count += 1;
        }
    }
    let n = count as f64;
    let mean = sum / n;
    (mean, (sum_sq / n - mean * mean).max(0.0).sqrt())
}

/// Population std of successive differences of an edge track.
fn increment_std(positions_nm: &[f64]) -> f64 {
    let diffs: Vec<f64> = positions_nm.windows(2).map(|p| p[1] - p[0]).collect();
    if diffs.is_empty() {
        return 0.0;
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n).sqrt()
}
