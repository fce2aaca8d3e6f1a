//! Synthetic weak-phase specimens and their de-focused recordings, used as
//! ground truth when no real micrograph is at hand.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::optics::record_intensity;
use crate::{ComplexField, Error, OpticsParams, RealImage, Result};

/// One Gaussian component of a multi-blob phantom, placed relative to the
/// phantom center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub dx: f64,
    pub dy: f64,
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhantomKind {
    GaussianBlob { sigma: f64 },
    /// Flat phase inside `radius`.
    Disk { radius: f64 },
    /// Gaussian ring profile `exp(-(r - radius)^2 / (2 width^2))`.
    Annulus { radius: f64, width: f64 },
    MultiBlob { blobs: Vec<Blob> },
}

/// Phantom geometry is in pixels; `center` is `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub peak_phase: f64,
    pub amplitude_contrast: f64,
    pub center: (f64, f64),
    pub height: usize,
    pub width: usize,
    pub pixel_pitch: f64,
}

/// Pixel pitch of the KLH recordings, 2.2 Angstrom.
pub const DEFAULT_PHANTOM_PITCH: f64 = 2.2e-10;

impl PhantomSpec {
    /// Centered phantom on a `size x size` grid at the default pitch.
    pub fn centered(kind: PhantomKind, peak_phase: f64, size: usize) -> Self {
        PhantomSpec {
            kind,
            peak_phase,
            amplitude_contrast: 0.0,
            center: (size as f64 / 2.0, size as f64 / 2.0),
            height: size,
            width: size,
            pixel_pitch: DEFAULT_PHANTOM_PITCH,
        }
    }

    /// `(shape value in [0, 1] before scaling, support flag)` at `(x, y)`.
    fn profile(&self, x: f64, y: f64) -> (f64, bool) {
        let (cx, cy) = self.center;
        let r = libm::hypot(x - cx, y - cy);
        match &self.kind {
            PhantomKind::GaussianBlob { sigma } => (gauss(r, *sigma), r <= 2.0 * sigma),
            PhantomKind::Disk { radius } => {
                let inside = r <= *radius;
                (if inside { 1.0 } else { 0.0 }, inside)
            }
            PhantomKind::Annulus { radius, width } => {
                (gauss(r - radius, *width), (r - radius).abs() <= 2.0 * width)
            }
            PhantomKind::MultiBlob { blobs } => blobs.iter().fold((0.0, false), |(v, s), b| {
                let rb = libm::hypot(x - cx - b.dx, y - cy - b.dy);
                (v + b.weight * gauss(rb, b.sigma), s || rb <= 2.0 * b.sigma)
            }),
        }
    }

    /// Largest distance from the center that the shape reaches.
    fn extent(&self) -> Result<(f64, f64, f64, f64)> {
        let (cx, cy) = self.center;
        let boxed = |r: f64| (cx - r, cx + r, cy - r, cy + r);
        match &self.kind {
            PhantomKind::GaussianBlob { sigma } => positive("sigma", *sigma).map(|_| boxed(2.0 * sigma)),
            PhantomKind::Disk { radius } => positive("radius", *radius).map(|_| boxed(*radius)),
            PhantomKind::Annulus { radius, width } => {
                positive("radius", *radius)?;
                positive("width", *width)?;
                Ok(boxed(radius + 2.0 * width))
            }
            PhantomKind::MultiBlob { blobs } => {
                if blobs.is_empty() {
                    return Err(Error::param("blobs", "need at least one blob"));
                }
                let mut ext = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for b in blobs {
                    positive("sigma", b.sigma)?;
                    positive("weight", b.weight)?;
                    let r = 2.0 * b.sigma;
                    ext.0 = ext.0.min(cx + b.dx - r);
                    ext.1 = ext.1.max(cx + b.dx + r);
                    ext.2 = ext.2.min(cy + b.dy - r);
                    ext.3 = ext.3.max(cy + b.dy + r);
                }
                Ok(ext)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.height < 2 || self.width < 2 {
            return Err(Error::InvalidDimensions {
                height: self.height,
                width: self.width,
                reason: "both dimensions must be at least 2",
            });
        }
        if !(self.peak_phase.is_finite() && self.peak_phase >= 0.0) {
            return Err(Error::param("peak_phase", "must be non-negative and finite"));
        }
        if !(0.0..1.0).contains(&self.amplitude_contrast) {
            return Err(Error::param("amplitude_contrast", "must lie in [0, 1)"));
        }
        let (x0, x1, y0, y1) = self.extent()?;
        if x0 < 0.0 || y0 < 0.0 || x1 > (self.width - 1) as f64 || y1 > (self.height - 1) as f64 {
            return Err(Error::param("phantom geometry", "shape extends outside the grid"));
        }
        Ok(())
    }
}

fn gauss(r: f64, sigma: f64) -> f64 {
    libm::exp(-r * r / (2.0 * sigma * sigma))
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "must be positive"))
    }
}

/// Exit wave `A exp(i theta)` with `max theta = peak_phase` and
/// `A = 1 - amplitude_contrast` on the phantom support, 1 elsewhere.
pub fn make_phantom(spec: &PhantomSpec) -> Result<ComplexField> {
    spec.validate()?;
    if spec.peak_phase > 1.0 {
        log::warn!("peak phase {} rad is outside the weak-phase regime", spec.peak_phase);
    }
    let samples: Vec<(f64, bool)> = (0..spec.height * spec.width)
        .map(|i| spec.profile((i % spec.width) as f64, (i / spec.width) as f64))
        .collect();
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.0));
    let scale = if max > 0.0 { spec.peak_phase / max } else { 0.0 };
    let data = samples
        .into_iter()
        .map(|(v, support)| {
            let amp = if support { 1.0 - spec.amplitude_contrast } else { 1.0 };
            Complex64::from_polar(amp, v * scale)
        })
        .collect();
    ComplexField::new(spec.height, spec.width, spec.pixel_pitch, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum NoiseModel {
    None,
    /// Additive noise with standard deviation `mean(I) / snr`.
    Gaussian { snr: f64 },
    /// Counting noise at `dose` electrons per pixel on the mean level.
    Poisson { dose: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            model: NoiseModel::None,
            seed: 0,
        }
    }
}

/// Records the phantom's de-focused image and applies detector noise.
/// Negative samples after noise are clamped to 0.
pub fn make_hologram(phantom: &ComplexField, params: &OpticsParams, noise: &NoiseSpec) -> Result<RealImage> {
    let clean = record_intensity(phantom, params)?;
    let mean = clean.mean();
    let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
    let noisy: Vec<f64> = match noise.model {
        NoiseModel::None => return Ok(clean),
        NoiseModel::Gaussian { snr } => {
            positive("snr", snr)?;
            let normal = Normal::new(0.0, mean / snr).map_err(|_| Error::param("snr", "invalid noise level"))?;
            clean.data().iter().map(|v| v + normal.sample(&mut rng)).collect()
        }
        NoiseModel::Poisson { dose } => {
            positive("dose", dose)?;
            if !(mean > 0.0) {
                return Err(Error::param("hologram", "mean intensity must be positive"));
            }
            clean
                .data()
                .iter()
                .map(|&v| {
                    let lambda = dose * v / mean;
                    let counts = if lambda > 0.0 {
                        Poisson::new(lambda)
                            .map_err(|_| Error::param("dose", "invalid Poisson rate"))?
                            .sample(&mut rng)
                    } else {
                        0.0
                    };
                    Ok(counts * mean / dose)
                })
                .collect::<Result<_>>()?
        }
    };
    RealImage::new(
        clean.height(),
        clean.width(),
        clean.pixel_pitch(),
        noisy.into_iter().map(|v| v.max(0.0)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params() -> OpticsParams {
        OpticsParams::new(3.349e-12, 3e-6, 2e-3, DEFAULT_PHANTOM_PITCH, 0.07).unwrap()
    }

    #[test]
    fn flat_phantom_is_unit_field() {
        let spec = PhantomSpec::centered(PhantomKind::GaussianBlob { sigma: 3.0 }, 0.0, 16);
        let g = make_phantom(&spec).unwrap();
        assert!(g.data().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn blob_peak_phase() {
        let spec = PhantomSpec::centered(PhantomKind::GaussianBlob { sigma: 4.0 }, 0.3, 32);
        let g = make_phantom(&spec).unwrap();
        let max = g.phase().data().iter().fold(0.0f64, |m, p| m.max(p.abs()));
        assert!((max - 0.3).abs() < 1e-12);
    }

    #[test]
    fn annulus_is_rotationally_symmetric() {
        let spec = PhantomSpec::centered(PhantomKind::Annulus { radius: 8.0, width: 2.0 }, 0.5, 32);
        let g = make_phantom(&spec).unwrap();
        let c = 16;
        // Points at radius 5 along the four axes and at (3, 4) offsets.
        let pts = [(c + 5, c), (c - 5, c), (c, c + 5), (c, c - 5), (c + 3, c + 4), (c - 4, c + 3)];
        let phases: Vec<f64> = pts.iter().map(|&(x, y)| g.get(y, x).arg()).collect();
        for p in &phases {
            assert!((p - phases[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn amplitude_contrast_on_support() {
        let mut spec = PhantomSpec::centered(PhantomKind::Disk { radius: 4.0 }, 0.2, 16);
        spec.amplitude_contrast = 0.1;
        let g = make_phantom(&spec).unwrap();
        assert!((g.get(8, 8).norm() - 0.9).abs() < 1e-12);
        assert!((g.get(0, 0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometry_outside_grid_is_rejected() {
        let mut spec = PhantomSpec::centered(PhantomKind::Disk { radius: 10.0 }, 0.2, 16);
        assert!(make_phantom(&spec).is_err());
        spec.kind = PhantomKind::MultiBlob {
            blobs: vec![Blob { dx: 6.0, dy: 0.0, sigma: 2.0, weight: 1.0 }],
        };
        assert!(make_phantom(&spec).is_err());
    }

    #[test]
    fn noiseless_flat_hologram_is_constant() {
        let spec = PhantomSpec::centered(PhantomKind::GaussianBlob { sigma: 3.0 }, 0.0, 16);
        let img = make_hologram(&make_phantom(&spec).unwrap(), &params(), &NoiseSpec::none()).unwrap();
        assert!(img.data().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn poisson_variance_matches_dose() {
        let spec = PhantomSpec::centered(PhantomKind::GaussianBlob { sigma: 3.0 }, 0.0, 128);
        let flat = make_phantom(&spec).unwrap();
        let dose = 50.0;
        let noise = NoiseSpec {
            model: NoiseModel::Poisson { dose },
            seed: 11,
        };
        let img = make_hologram(&flat, &params(), &noise).unwrap();
        let n = img.data().len() as f64;
        let mean = img.mean();
        let var = img.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let expected = mean * mean / dose;
        assert!((var - expected).abs() < 0.1 * expected, "{var} vs {expected}");
    }

    #[test]
    fn gaussian_residual_level() {
        let spec = PhantomSpec::centered(PhantomKind::GaussianBlob { sigma: 6.0 }, 0.3, 128);
        let g = make_phantom(&spec).unwrap();
        let clean = make_hologram(&g, &params(), &NoiseSpec::none()).unwrap();
        let noise = NoiseSpec {
            model: NoiseModel::Gaussian { snr: 5.0 },
            seed: 3,
        };
        let noisy = make_hologram(&g, &params(), &noise).unwrap();
        // SNR 5 at mean 1 keeps clamping negligible (5 sigma below the mean).
        let n = clean.data().len() as f64;
        let res: Vec<f64> = noisy.data().iter().zip(clean.data()).map(|(a, b)| a - b).collect();
        let rm = res.iter().sum::<f64>() / n;
        let sd = libm::sqrt(res.iter().map(|r| (r - rm) * (r - rm)).sum::<f64>() / (n - 1.0));
        let want = clean.mean() / 5.0;
        assert!((sd - want).abs() < 0.05 * want, "{sd} vs {want}");
    }

    #[test]
    fn noise_is_seeded() {
        let spec = PhantomSpec::centered(PhantomKind::GaussianBlob { sigma: 3.0 }, 0.3, 32);
        let g = make_phantom(&spec).unwrap();
        let noise = NoiseSpec {
            model: NoiseModel::Poisson { dose: 20.0 },
            seed: 5,
        };
        let a = make_hologram(&g, &params(), &noise).unwrap();
        let b = make_hologram(&g, &params(), &noise).unwrap();
        assert_eq!(a, b);
    }
}
