//! Dataset generation configuration and the two built-in scale presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{DoseLevel, ImageGeometry};

/// Full description of a synthetic dataset: the roughness parameter grid,
/// how many original images each parameter combination gets, line widths and
/// dose levels, image geometry, and the root seed every draw chains from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub sigma_list: Vec<f64>,
    pub hurst_list: Vec<f64>,
    pub xi_list: Vec<f64>,
    /// Original (clean) images per parameter combination. Each original
    /// consumes two synthesized edges.
    pub originals_per_combo: usize,
    pub line_widths_nm: Vec<f64>,
    pub dose_list: Vec<f64>,
    pub geometry: ImageGeometry,
    pub root_seed: u64,
    pub output_root: PathBuf,
    /// Which preset this config started from: "desk", "paper", or "custom".
    pub preset: String,
}

impl DatasetConfig {
    /// Small smoke-scale preset: 2 sigmas x 2 Hursts x 4 correlation
    /// lengths x 2 originals = 32 groups; x 5 doses = 160 noisy images.
    pub fn desk(output_root: impl Into<PathBuf>, root_seed: u64) -> Self {
        Self {
            sigma_list: vec![0.6, 1.4],
            hurst_list: vec![0.3, 0.7],
            xi_list: vec![8.0, 16.0, 24.0, 32.0],
            originals_per_combo: 2,
            line_widths_nm: vec![10.0, 15.0],
            dose_list: vec![2.0, 5.0, 10.0, 50.0, 200.0],
            geometry: ImageGeometry::default(),
            root_seed,
            output_root: output_root.into(),
            preset: "desk".into(),
        }
    }

    /// Full reference-scale preset: 8 sigmas x 9 Hursts x 35 correlation
    /// lengths = 2520 combinations, 4 originals each (eight edges per
    /// combination) = 10080 groups; x 10 doses = 100800 noisy images.
    pub fn paper(output_root: impl Into<PathBuf>, root_seed: u64) -> Self {
        Self {
            sigma_list: vec![0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8],
            hurst_list: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            xi_list: (6..=40).map(|i| i as f64).collect(),
            originals_per_combo: 4,
            line_widths_nm: vec![10.0, 15.0],
            dose_list: DoseLevel::PAPER_SET.to_vec(),
            geometry: ImageGeometry::default(),
            root_seed,
            output_root: output_root.into(),
            preset: "paper".into(),
        }
    }

    pub fn combination_count(&self) -> usize {
        self.sigma_list.len() * self.hurst_list.len() * self.xi_list.len()
    }

    /// Number of original images (= groups).
    pub fn group_count(&self) -> usize {
        self.combination_count() * self.originals_per_combo
    }

    /// Number of noisy images (= examples).
    pub fn example_count(&self) -> usize {
        self.group_count() * self.dose_list.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        for (key, list) in [
            ("sigma_list", &self.sigma_list),
            ("hurst_list", &self.hurst_list),
            ("xi_list", &self.xi_list),
            ("line_widths_nm", &self.line_widths_nm),
            ("dose_list", &self.dose_list),
        ] {
            if list.is_empty() {
                return Err(Error::invalid_param(key, "list must not be empty"));
            }
        }
        for &s in &self.sigma_list {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid_param("sigma_list", format!("sigma must be positive, got {s}")));
            }
        }
        for &h in &self.hurst_list {
            if !(h.is_finite() && h > 0.0 && h < 1.0) {
                return Err(Error::invalid_param("hurst_list", format!("hurst must lie in (0,1), got {h}")));
            }
        }
        for &x in &self.xi_list {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid_param("xi_list", format!("xi must be positive, got {x}")));
            }
        }
        for &w in &self.line_widths_nm {
            if !(w.is_finite() && w > 0.0 && w < self.geometry.width_nm()) {
                return Err(Error::invalid_param(
                    "line_widths_nm",
                    format!("line width {w} does not fit a {} nm image", self.geometry.width_nm()),
                ));
            }
        }
        for &d in &self.dose_list {
            DoseLevel::new(d)?;
        }
        if self.originals_per_combo == 0 {
            return Err(Error::invalid_param("originals_per_combo", "must be at least 1"));
        }
        if !self.geometry.height_px.is_power_of_two() {
            return Err(Error::invalid_param(
                "geometry",
                format!("edge synthesis needs a power-of-two row count, got {}", self.geometry.height_px),
            ));
        }
        Ok(())
    }
}
