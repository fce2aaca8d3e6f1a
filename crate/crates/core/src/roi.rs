//! Particle region-of-interest extraction and intensity normalization.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, RealImage, Result};

pub const DEFAULT_ROI_SIZE: usize = 256;

/// Square crop centered on a particle. Within the crop the center sits at
/// index `size / 2` along both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub center_x: usize,
    pub center_y: usize,
    pub size: usize,
}

impl RoiSpec {
    pub fn new(center_x: usize, center_y: usize, size: usize) -> Result<Self> {
        if size < 2 || size % 2 != 0 {
            return Err(Error::param("roi size", "must be even and at least 2"));
        }
        Ok(RoiSpec {
            center_x,
            center_y,
            size,
        })
    }

    /// Top-left corner `(row, col)`, if the crop starts inside the image.
    pub fn origin(&self) -> Option<(usize, usize)> {
        let half = self.size / 2;
        Some((self.center_y.checked_sub(half)?, self.center_x.checked_sub(half)?))
    }
}

/// Cuts the `size x size` window out of `img`. Windows reaching past the
/// border are rejected rather than padded.
pub fn crop_roi(img: &RealImage, spec: &RoiSpec) -> Result<RealImage> {
    if spec.size < 2 || spec.size % 2 != 0 {
        return Err(Error::param("roi size", "must be even and at least 2"));
    }
    let (row0, col0) = spec
        .origin()
        .ok_or_else(|| Error::param("roi", "window extends past the top or left edge"))?;
    if row0 + spec.size > img.height() || col0 + spec.size > img.width() {
        return Err(Error::param("roi", "window extends past the bottom or right edge"));
    }
    let mut data = Vec::with_capacity(spec.size * spec.size);
    for r in row0..row0 + spec.size {
        let start = r * img.width() + col0;
        data.extend_from_slice(&img.data()[start..start + spec.size]);
    }
    RealImage::new(spec.size, spec.size, img.pixel_pitch(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizePolicy {
    None,
    /// Divide by the mean so the unscattered background sits near 1.
    #[default]
    MeanOne,
}

pub fn normalize_roi(roi: &RealImage, policy: NormalizePolicy) -> Result<RealImage> {
    match policy {
        NormalizePolicy::None => Ok(roi.clone()),
        NormalizePolicy::MeanOne => {
            let mean = roi.mean();
            if !(mean > 0.0) {
                return Err(Error::param("roi", "mean must be positive to normalize"));
            }
            roi.scaled(1.0 / mean)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ramp(n: usize) -> RealImage {
        RealImage::from_fn(n, n, 1.0, |r, c| (r * n + c) as f64).unwrap()
    }

    #[test]
    fn full_size_crop_is_identity() {
        let img = ramp(8);
        let out = crop_roi(&img, &RoiSpec::new(4, 4, 8).unwrap()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn small_crop_indexing() {
        let img = ramp(4);
        let at_center = crop_roi(&img, &RoiSpec::new(2, 2, 2).unwrap()).unwrap();
        assert_eq!(at_center.data(), &[5.0, 6.0, 9.0, 10.0]);
        let lower_right = crop_roi(&img, &RoiSpec::new(3, 3, 2).unwrap()).unwrap();
        assert_eq!(lower_right.data(), &[10.0, 11.0, 14.0, 15.0]);
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let img = ramp(4);
        assert!(crop_roi(&img, &RoiSpec::new(0, 2, 2).unwrap()).is_err());
        assert!(crop_roi(&img, &RoiSpec::new(2, 4, 2).unwrap()).is_err());
        assert!(crop_roi(&img, &RoiSpec::new(2, 2, 6).unwrap()).is_err());
        assert!(RoiSpec::new(2, 2, 3).is_err());
    }

    #[test]
    fn mean_one_normalization() {
        let img = RealImage::new(2, 2, 1.0, vec![3.5; 4]).unwrap();
        let n = normalize_roi(&img, NormalizePolicy::MeanOne).unwrap();
        assert!(n.data().iter().all(|&v| v == 1.0));
        assert_eq!(normalize_roi(&img, NormalizePolicy::None).unwrap(), img);
        let zero = RealImage::new(2, 2, 1.0, vec![0.0; 4]).unwrap();
        assert!(normalize_roi(&zero, NormalizePolicy::MeanOne).is_err());
    }
}
