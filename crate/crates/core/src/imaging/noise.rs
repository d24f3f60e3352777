//! Dose-controlled Poisson noise and the classical denoising chain.

use ndarray::Array2;
use rand_distr::{Distribution, Poisson};

use super::{DoseLevel, ImageKind, SemImage};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Raw dose-scaled Poisson samples: each pixel `p` becomes
/// `Poisson(dose * p) / dose`, with `Poisson(0) = 0`.
///
/// This is the pre-normalization stage: means equal the clean pixels and the
/// per-pixel variance is `p / dose` exactly, which the statistical tests pin
/// down here rather than after [`apply_poisson`]'s range adjustment.
pub fn poisson_counts(img: &SemImage, dose: DoseLevel, seed: u64) -> Result<Array2<f64>> {
    let d = dose.electrons_per_pixel();
    let mut rng = rng_from_seed(seed);
    let mut out = Array2::zeros(img.pixels.dim());
    for (slot, &p) in out.iter_mut().zip(img.pixels.iter()) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid_param(
                "image",
                format!("pixel {p} outside [0,1]; normalize before adding noise"),
            ));
        }
        let lambda = d * p;
        *slot = if lambda > 0.0 {
            let poisson = Poisson::new(lambda)
                .map_err(|e| Error::invalid_param("dose", format!("bad Poisson rate {lambda}: {e}")))?;
            poisson.sample(&mut rng) / d
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Corrupt a clean image with shot noise at the given dose.
///
/// Samples [`poisson_counts`], clips to `[0, 1]` (the normalized range of
/// the input; the lower clip is inherent in counts) and rescales the realized
/// maximum to 1. The rescale couples dose to contrast: at low dose some
/// pixel almost surely saturates and the rescale is a no-op, at high dose it
/// is a mild stretch. An all-zero image stays all-zero at any dose.
pub fn apply_poisson(img: &SemImage, dose: DoseLevel, seed: u64) -> Result<SemImage> {
    let mut pixels = poisson_counts(img, dose, seed)?;
    pixels.mapv_inplace(|v| v.min(1.0));
    let hi = pixels.iter().cloned().fold(0.0, f64::max);
    if hi > 0.0 {
        pixels.mapv_inplace(|v| v / hi);
    }
    Ok(SemImage::new(pixels, ImageKind::Noisy, Some(dose.electrons_per_pixel())))
}

/// Classical shot-noise denoiser: Anscombe transform, dose-adaptive
/// anisotropic Gaussian smoothing, exact algebraic inverse.
///
/// Intensities are rescaled to counts with the image's dose (1.0 when the
/// dose is unknown), stabilized with `2 sqrt(c + 3/8)`, smoothed with a
/// [`smoothing_sigma`]-wide kernel across the stripe and half that along it
/// (radius 3 sigma, replicate borders — constants pass through untouched),
/// inverted and clipped back to `[0, 1]`. The anisotropy matters: each row
/// is an independent edge measurement, so along-line smoothing averages
/// *signal* (true roughness) together with the noise, while across-line
/// smoothing only widens the intensity transition that the subpixel edge
/// detector is built to handle.
///
/// Smoothing is contractive, not idempotent: denoising twice smooths twice.
pub fn denoise(img: &SemImage) -> SemImage {
    let dose = img.dose.unwrap_or(1.0);
    let sigma = smoothing_sigma(dose);
    let mut work = img.pixels.mapv(|x| 2.0 * (x * dose + 0.375).sqrt());
    work = gaussian_smooth(&work, sigma, 0.5 * sigma);
    work.mapv_inplace(|a| {
        let half = a / 2.0;
        ((half * half - 0.375) / dose).clamp(0.0, 1.0)
    });
    SemImage::new(work, ImageKind::Denoised, img.dose)
}

/// Smoothing bandwidth (px) for a dose: `clamp(3 / sqrt(dose), 0.6, 1.2)`.
///
/// This is the across-line bandwidth; [`denoise`] uses half of it along
/// the line. The Anscombe transform stabilizes the noise to unit variance
/// at every dose, but the stripe's contrast in the stabilized domain grows
/// like `sqrt(dose)` — a high-dose image needs almost no smoothing, and
/// smoothing it anyway planes off genuine edge roughness and leaves a bias
/// floor in the LER estimate. Scaling the bandwidth with the stabilized-domain
/// signal-to-noise ratio keeps both error sources falling as dose rises,
/// and the deliberately light ceiling keeps the smoothing distortion below
/// the residual shot noise at every dose, so the estimator's error profile
/// stays monotone in dose instead of dipping where the two biases cancel.
pub fn smoothing_sigma(dose: f64) -> f64 {
    (3.0 / dose.max(f64::MIN_POSITIVE).sqrt()).clamp(0.6, 1.2)
}

/// `|noisy - denoised|` per pixel: the residual structure the difficulty
/// features read.
pub fn noise_image(noisy: &SemImage, denoised: &SemImage) -> Result<SemImage> {
    if noisy.pixels.dim() != denoised.pixels.dim() {
        return Err(Error::Geometry(format!(
            "image shapes differ: {:?} vs {:?}",
            noisy.pixels.dim(),
            denoised.pixels.dim()
        )));
    }
    let pixels = Array2::from_shape_fn(noisy.pixels.dim(), |idx| {
        (noisy.pixels[idx] - denoised.pixels[idx]).abs()
    });
    Ok(SemImage::new(pixels, ImageKind::Noise, noisy.dose.or(denoised.dose)))
}

/// Separable anisotropic Gaussian smoothing with replicate borders;
/// `sigma_h` acts along rows (across the stripe), `sigma_v` along columns.
fn gaussian_smooth(img: &Array2<f64>, sigma_h: f64, sigma_v: f64) -> Array2<f64> {
    let taps = |sigma: f64| -> Vec<f64> {
        let radius = (3.0 * sigma).ceil() as i64;
        let raw: Vec<f64> = (-radius..=radius)
            .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = raw.iter().sum();
        raw.into_iter().map(|t| t / norm).collect()
    };
    let (taps_h, taps_v) = (taps(sigma_h), taps(sigma_v));
    let (rh, rv) = ((taps_h.len() / 2) as i64, (taps_v.len() / 2) as i64);

    let (h, w) = img.dim();
    // Horizontal pass, then vertical.
    let horiz = Array2::from_shape_fn((h, w), |(row, col)| {
        taps_h
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let c = (col as i64 + i as i64 - rh).clamp(0, w as i64 - 1) as usize;
                t * img[(row, c)]
            })
            .sum::<f64>()
    });
    Array2::from_shape_fn((h, w), |(row, col)| {
        taps_v
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let rr = (row as i64 + i as i64 - rv).clamp(0, h as i64 - 1) as usize;
                t * horiz[(rr, col)]
            })
            .sum::<f64>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{render_clean, ImageGeometry, LineSpec, RenderStyle};
    use crate::roughness::{synthesize_edge, PalasantzasParams};
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn dose(d: f64) -> DoseLevel {
        DoseLevel::new(d).unwrap()
    }

    fn constant_image(v: f64, kind: ImageKind, dose: Option<f64>) -> SemImage {
        SemImage::new(Array2::from_elem((1024, 64), v), kind, dose)
    }

    /// 50 rendered clean images shared by the heavier statistical tests.
    fn clean_ensemble() -> &'static Vec<SemImage> {
        static CACHE: OnceLock<Vec<SemImage>> = OnceLock::new();
        CACHE.get_or_init(|| {
            let geom = ImageGeometry::default();
            let params = PalasantzasParams::new(1.0, 0.5, 10.0).unwrap();
            (0..50)
                .map(|i| {
                    let spec = LineSpec {
                        left: synthesize_edge(&params, geom.height_px, geom.px_h, 900 + 2 * i).unwrap(),
                        right: synthesize_edge(&params, geom.height_px, geom.px_h, 901 + 2 * i).unwrap(),
                        center_offset: 16.0,
                        width: 10.0,
                    };
                    render_clean(&spec, &geom, &RenderStyle::default(), 300 + i).unwrap()
                })
                .collect()
        })
    }

    fn rms(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let n = a.len() as f64;
        (a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n).sqrt()
    }

    #[test]
    fn huge_dose_reproduces_the_clean_image() {
        let clean = &clean_ensemble()[0];
        let noisy = apply_poisson(clean, dose(1e6), 42).unwrap();
        assert!(rms(&noisy.pixels, &clean.pixels) < 0.01);
        assert_eq!(noisy.kind, ImageKind::Noisy);
        assert_eq!(noisy.dose, Some(1e6));
    }

    #[test]
    fn zero_image_stays_zero() {
        let z = constant_image(0.0, ImageKind::Clean, None);
        for d in [2.0, 50.0, 200.0] {
            let noisy = apply_poisson(&z, dose(d), 1).unwrap();
            assert!(noisy.pixels.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn raw_samples_have_poisson_mean_and_variance() {
        // dose 2 on a constant 0.5 image: mean 0.5, variance 0.5/2 = 0.25.
        let img = constant_image(0.5, ImageKind::Clean, None);
        let counts = poisson_counts(&img, dose(2.0), 7).unwrap();
        let n = counts.len() as f64;
        let mean = counts.sum() / n;
        let var = counts.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
        // 3 standard errors for the mean: 3 * sqrt(0.25 / 65536).
        assert!((mean - 0.5).abs() < 3.0 * (0.25f64 / n).sqrt(), "mean {mean}");
        assert!((var - 0.25).abs() < 0.05 * 0.25, "variance {var}");
    }

    #[test]
    fn noisy_mean_matches_clean_at_every_dose() {
        let clean = &clean_ensemble()[1];
        let clean_mean = clean.mean();
        let n = clean.pixels.len() as f64;
        for (i, &d) in DoseLevel::PAPER_SET.iter().enumerate() {
            let counts = poisson_counts(clean, dose(d), 100 + i as u64).unwrap();
            let mean = counts.sum() / n;
            // Var of the mean = sum(p_i / dose) / N^2 = mean_p / (dose * N).
            let se = (clean_mean / (d * n)).sqrt();
            assert!(
                (mean - clean_mean).abs() < 3.0 * se,
                "dose {d}: mean {mean} vs clean {clean_mean} (se {se})"
            );
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let clean = &clean_ensemble()[2];
        let a = apply_poisson(clean, dose(5.0), 9).unwrap();
        let b = apply_poisson(clean, dose(5.0), 9).unwrap();
        assert_eq!(a.pixels, b.pixels);
        let c = apply_poisson(clean, dose(5.0), 10).unwrap();
        assert_ne!(a.pixels, c.pixels);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let img = constant_image(1.5, ImageKind::Clean, None);
        assert!(apply_poisson(&img, dose(10.0), 0).is_err());
    }

    #[test]
    fn denoising_preserves_constants() {
        let img = constant_image(0.4, ImageKind::Noisy, Some(10.0));
        let out = denoise(&img);
        for &v in out.pixels.iter() {
            assert_abs_diff_eq!(v, 0.4, epsilon = 1e-6);
        }
        assert_eq!(out.kind, ImageKind::Denoised);

        // Unknown dose falls back to treating intensities as counts.
        let img = constant_image(0.7, ImageKind::Noisy, None);
        let out = denoise(&img);
        for &v in out.pixels.iter() {
            assert_abs_diff_eq!(v, 0.7, epsilon = 1e-6);
        }
    }

    #[test]
    fn denoising_reduces_rms_error_at_every_dose() {
        let ensemble = clean_ensemble();
        for (di, &d) in DoseLevel::PAPER_SET.iter().enumerate() {
            let mut noisy_rms = 0.0;
            let mut denoised_rms = 0.0;
            for (i, clean) in ensemble.iter().enumerate() {
                let seed = (di * 1000 + i) as u64;
                let noisy = apply_poisson(clean, dose(d), seed).unwrap();
                let den = denoise(&noisy);
                noisy_rms += rms(&noisy.pixels, &clean.pixels);
                denoised_rms += rms(&den.pixels, &clean.pixels);
            }
            assert!(
                denoised_rms < noisy_rms,
                "dose {d}: denoised RMS {denoised_rms} not below noisy RMS {noisy_rms}"
            );
        }
    }

    #[test]
    fn noise_image_is_symmetric_absolute_difference() {
        let a = constant_image(0.3, ImageKind::Noisy, Some(5.0));
        let same = noise_image(&a, &a).unwrap();
        assert!(same.pixels.iter().all(|&v| v == 0.0));
        assert_eq!(same.kind, ImageKind::Noise);

        let b = constant_image(0.8, ImageKind::Denoised, Some(5.0));
        let ab = noise_image(&a, &b).unwrap();
        let ba = noise_image(&b, &a).unwrap();
        assert_eq!(ab.pixels, ba.pixels);
        assert!(ab.pixels.iter().all(|&v| (v - 0.5).abs() < 1e-15));

        let small = SemImage::new(Array2::zeros((4, 4)), ImageKind::Denoised, None);
        assert!(noise_image(&a, &small).is_err());
    }

    #[test]
    fn noise_level_decreases_with_dose() {
        // Ensemble mean of |noisy - denoised| must fall strictly as dose
        // rises: the monotone difficulty proxy the feature extractor uses.
        let ensemble = clean_ensemble();
        let mut means = Vec::new();
        for (di, &d) in DoseLevel::PAPER_SET.iter().enumerate() {
            let mut total = 0.0;
            for (i, clean) in ensemble.iter().enumerate() {
                let seed = (70_000 + di * 1000 + i) as u64;
                let noisy = apply_poisson(clean, dose(d), seed).unwrap();
                let den = denoise(&noisy);
                total += noise_image(&noisy, &den).unwrap().mean();
            }
            means.push(total / ensemble.len() as f64);
        }
        for pair in means.windows(2) {
            assert!(
                pair[1] < pair[0],
                "noise-image mean failed to decrease: {means:?}"
            );
        }
    }
}
