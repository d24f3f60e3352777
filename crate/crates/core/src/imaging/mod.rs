//! Simplified SEM-style imaging: rendering, dose noise, denoising.
//!
//! The renderer is an intentionally simple stand-in for a full SEM simulator:
//! it produces a bright line on a textured background with edge bloom,
//! anisotropic blur at an oblique angle, and dose-controlled Poisson noise.
//! That is enough structure for the estimation stack to have something real
//! to fight — edge bloom biases naive detectors, the oblique blur makes the
//! two edges statistically different, and dose drives difficulty — without
//! claiming electron-optics fidelity.
//!
//! Submodules:
//! * [`render`] — clean-image synthesis from a [`LineSpec`]
//! * [`noise`] — Poisson dose noise, Anscombe denoising, noise images
//! * [`semf`] — the raw `.semf` image file format

mod noise;
mod render;
mod semf;

pub use noise::{apply_poisson, denoise, noise_image, poisson_counts};
pub use render::{edge_gradient_asymmetry, render_clean};
pub use semf::{read_semf, write_semf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roughness::EdgeProfile;

/// Minimum clearance between any rendered edge position and the image
/// border, nm. Enough room for bloom (half a pixel) and the blur kernel's
/// bulk to decay before the border.
pub const BORDER_MARGIN_NM: f64 = 2.0;

/// Pixel grid and physical pixel size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGeometry {
    pub width_px: usize,
    pub height_px: usize,
    /// Pixel width (fast axis, across the line), nm.
    pub px_w: f64,
    /// Pixel height (slow axis, along the line), nm.
    pub px_h: f64,
}

impl Default for ImageGeometry {
    fn default() -> Self {
        Self { width_px: 64, height_px: 1024, px_w: 0.5, px_h: 2.0 }
    }
}

impl ImageGeometry {
    /// Physical image width, nm.
    pub fn width_nm(&self) -> f64 {
        self.width_px as f64 * self.px_w
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px < 8 || self.height_px < 8 {
            return Err(Error::invalid_param(
                "geometry",
                format!("grid {}x{} too small", self.width_px, self.height_px),
            ));
        }
        if !(self.px_w.is_finite() && self.px_w > 0.0 && self.px_h.is_finite() && self.px_h > 0.0) {
            return Err(Error::invalid_param("geometry", "pixel sizes must be positive"));
        }
        Ok(())
    }
}

/// A rough line placed in an image: two edge profiles around a nominal
/// center.
#[derive(Debug, Clone)]
pub struct LineSpec {
    pub left: EdgeProfile,
    pub right: EdgeProfile,
    /// Nominal line center measured from the image's left border, nm.
    pub center_offset: f64,
    /// Nominal line width, nm (10 or 15 in the reference datasets).
    pub width: f64,
}

impl LineSpec {
    /// Continuous edge positions for one row, nm from the image's left
    /// border: `(left, right)`.
    pub fn edge_positions(&self, row: usize) -> (f64, f64) {
        let l = self.center_offset - 0.5 * self.width + self.left.displacements[row];
        let r = self.center_offset + 0.5 * self.width + self.right.displacements[row];
        (l, r)
    }

    /// Edge positions rounded to the pixel grid, for pixel-level exports.
    /// Labels never come from these; the continuous profiles stay the ground
    /// truth.
    pub fn rounded_edge_cols(&self, geom: &ImageGeometry, row: usize) -> (i64, i64) {
        let (l, r) = self.edge_positions(row);
        ((l / geom.px_w).round() as i64, (r / geom.px_w).round() as i64)
    }

    /// Checks the line against the geometry: profiles must span every row,
    /// and every row's rendered edges must stay ordered and inside the image
    /// with [`BORDER_MARGIN_NM`] to spare (room for bloom and blur to
    /// decay).
    pub fn validate(&self, geom: &ImageGeometry) -> Result<()> {
        geom.validate()?;
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Geometry(format!("line width must be positive, got {}", self.width)));
        }
        if self.left.len() != geom.height_px || self.right.len() != geom.height_px {
            return Err(Error::Geometry(format!(
                "edge profiles ({}, {}) do not span {} rows",
                self.left.len(),
                self.right.len(),
                geom.height_px
            )));
        }
        let margin = BORDER_MARGIN_NM;
        let w = geom.width_nm();
        for row in 0..geom.height_px {
            let (l, r) = self.edge_positions(row);
            if !(l.is_finite() && r.is_finite()) || l >= r {
                return Err(Error::Geometry(format!("row {row}: edges out of order ({l}, {r})")));
            }
            if l < margin || r > w - margin {
                return Err(Error::Geometry(format!(
                    "row {row}: line [{l:.3}, {r:.3}] leaves less than {margin} nm of margin in a {w} nm image"
                )));
            }
        }
        Ok(())
    }
}

/// What stage of the imaging chain a [`SemImage`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageKind {
    Clean,
    Noisy,
    Denoised,
    /// Absolute difference between a noisy image and its denoised version.
    Noise,
}

impl ImageKind {
    pub(crate) fn to_bits(self) -> u32 {
        match self {
            ImageKind::Clean => 0,
            ImageKind::Noisy => 1,
            ImageKind::Denoised => 2,
            ImageKind::Noise => 3,
        }
    }

    pub(crate) fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            0 => Some(ImageKind::Clean),
            1 => Some(ImageKind::Noisy),
            2 => Some(ImageKind::Denoised),
            3 => Some(ImageKind::Noise),
            _ => None,
        }
    }
}

/// An intensity image at one stage of the chain. Values lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemImage {
    /// Row-major `(height, width)` intensities.
    pub pixels: Array2<f64>,
    pub kind: ImageKind,
    /// Electrons per pixel for noisy/derived images; `None` for clean ones.
    /// Not serialized into `.semf` files — the dataset manifest carries it.
    pub dose: Option<f64>,
}

impl SemImage {
    pub fn new(pixels: Array2<f64>, kind: ImageKind, dose: Option<f64>) -> Self {
        Self { pixels, kind, dose }
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn mean(&self) -> f64 {
        self.pixels.mean().unwrap_or(0.0)
    }
}

/// Electron dose per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseLevel(f64);

impl DoseLevel {
    /// The dose grid used by the reference datasets.
    pub const PAPER_SET: [f64; 10] = [2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 30.0, 50.0, 100.0, 200.0];

    /// Any strictly positive dose is accepted; the canonical grid is
    /// [`Self::PAPER_SET`].
    pub fn new(electrons_per_pixel: f64) -> Result<Self> {
        if !(electrons_per_pixel.is_finite() && electrons_per_pixel > 0.0) {
            return Err(Error::invalid_param(
                "dose",
                format!("must be > 0, got {electrons_per_pixel}"),
            ));
        }
        Ok(Self(electrons_per_pixel))
    }

    pub fn electrons_per_pixel(&self) -> f64 {
        self.0
    }

    pub fn is_in_paper_set(&self) -> bool {
        Self::PAPER_SET.iter().any(|&d| d == self.0)
    }

    pub fn paper_set() -> Vec<DoseLevel> {
        Self::PAPER_SET.iter().map(|&d| DoseLevel(d)).collect()
    }
}

/// Intensity constants and blur for [`render_clean`].
///
/// These are configuration, not physical claims: `background`, `line` and
/// `bloom` set the relative contrast before the final min-max normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    /// Background level before texture.
    pub background: f64,
    /// Line interior level.
    pub line: f64,
    /// Edge-bloom level applied in a ±1 px band around each edge; `None`
    /// renders edges without rims.
    pub bloom: Option<f64>,
    /// Peak amplitude of the smooth background texture; 0 disables it.
    pub texture_amplitude: f64,
    /// Coarse texture grid (rows, cols) interpolated up to full resolution.
    pub texture_cells: (usize, usize),
    /// Anisotropic blur; `None` leaves the composition unblurred.
    pub blur: Option<BlurStyle>,
}

/// Oblique anisotropic blur plus a one-sided drift tail.
///
/// The Gaussian core alone is centrally symmetric and therefore cannot make
/// the rising and falling edge of a stripe look different; the exponential
/// tail along the positive major axis is what produces the left/right
/// asymmetry the estimation stack is exercised against.
///
/// The default keeps the major axis close to horizontal: blur across the
/// stripe softens the edge transition without touching the roughness
/// signal, whereas any vertical component mixes edge positions from
/// neighbouring rows and systematically erases fine roughness — a bias no
/// downstream estimator can undo. The effective vertical sigma of the
/// default core is `sqrt((2 sin 10°)² + (0.5 cos 10°)²) ≈ 0.6 px`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurStyle {
    /// Standard deviation along the principal axis, px.
    pub sigma_major_px: f64,
    /// Standard deviation across the principal axis, px.
    pub sigma_minor_px: f64,
    /// Principal-axis angle to the horizontal, degrees.
    pub angle_deg: f64,
    /// Mass fraction of the one-sided exponential drift tail in `[0, 1)`.
    pub drift_fraction: f64,
    /// Decay length of the drift tail along the +major axis, px.
    pub drift_tau_px: f64,
}

impl Default for BlurStyle {
    fn default() -> Self {
        Self {
            sigma_major_px: 2.0,
            sigma_minor_px: 0.5,
            angle_deg: 10.0,
            drift_fraction: 0.15,
            drift_tau_px: 3.0,
        }
    }
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            background: 0.2,
            line: 0.55,
            bloom: Some(0.9),
            texture_amplitude: 0.05,
            texture_cells: (64, 8),
            blur: Some(BlurStyle::default()),
        }
    }
}

impl RenderStyle {
    /// Bloom rims but no texture and no blur: the "ideal binary stripe with
    /// rims" used to pin down compositing geometry.
    pub fn binary() -> Self {
        Self { texture_amplitude: 0.0, blur: None, ..Self::default() }
    }

    /// Two flat levels only — no bloom, texture or blur. Edge detectors are
    /// exact on this style, which makes it the reference for subpixel
    /// accuracy checks.
    pub fn flat() -> Self {
        Self { bloom: None, texture_amplitude: 0.0, blur: None, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(self.background) || !unit(self.line) || !self.bloom.is_none_or(unit) {
            return Err(Error::invalid_param("style", "intensity levels must lie in [0,1]"));
        }
        if !(self.texture_amplitude.is_finite() && self.texture_amplitude >= 0.0) {
            return Err(Error::invalid_param("style", "texture amplitude must be >= 0"));
        }
        if self.texture_amplitude > 0.0 && (self.texture_cells.0 < 2 || self.texture_cells.1 < 2) {
            return Err(Error::invalid_param("style", "texture grid needs at least 2x2 cells"));
        }
        if let Some(b) = self.blur {
            if !(b.sigma_major_px > 0.0 && b.sigma_minor_px > 0.0 && b.sigma_major_px.is_finite()) {
                return Err(Error::invalid_param("style", "blur sigmas must be positive"));
            }
            if !(0.0..1.0).contains(&b.drift_fraction) {
                return Err(Error::invalid_param("style", "drift fraction must lie in [0,1)"));
            }
            if b.drift_fraction > 0.0 && !(b.drift_tau_px.is_finite() && b.drift_tau_px > 0.0) {
                return Err(Error::invalid_param("style", "drift tau must be positive"));
            }
        }
        Ok(())
    }
}
