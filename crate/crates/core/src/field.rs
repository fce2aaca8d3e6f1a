use alloc::vec::Vec;

use num_complex::Complex64;

use crate::{Error, Result};

fn check_shape(height: usize, width: usize, len: usize) -> Result<()> {
    if height < 2 || width < 2 {
        return Err(Error::InvalidDimensions {
            height,
            width,
            reason: "both dimensions must be at least 2",
        });
    }
    if height.checked_mul(width) != Some(len) {
        return Err(Error::InvalidDimensions {
            height,
            width,
            reason: "sample count does not match dimensions",
        });
    }
    Ok(())
}

fn check_pitch(pixel_pitch: f64) -> Result<()> {
    if pixel_pitch.is_finite() && pixel_pitch > 0.0 {
        Ok(())
    } else {
        Err(Error::param("pixel_pitch", "must be positive and finite"))
    }
}

pub(crate) fn check_even(height: usize, width: usize) -> Result<()> {
    if height % 2 != 0 || width % 2 != 0 {
        return Err(Error::InvalidDimensions {
            height,
            width,
            reason: "FFT operations need even dimensions",
        });
    }
    Ok(())
}

/// Row-major complex grid with a physical pixel pitch (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    height: usize,
    width: usize,
    pixel_pitch: f64,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(height: usize, width: usize, pixel_pitch: f64, data: Vec<Complex64>) -> Result<Self> {
        check_shape(height, width, data.len())?;
        check_pitch(pixel_pitch)?;
        if let Some(index) = data.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(ComplexField {
            height,
            width,
            pixel_pitch,
            data,
        })
    }

    /// Builds a field from `f(row, col)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        pixel_pitch: f64,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let data = (0..height * width).map(|i| f(i / width.max(1), i % width.max(1))).collect();
        ComplexField::new(height, width, pixel_pitch, data)
    }

    pub fn constant(height: usize, width: usize, pixel_pitch: f64, value: Complex64) -> Result<Self> {
        ComplexField::new(height, width, pixel_pitch, alloc::vec![value; height * width])
    }

    /// Internal constructor for buffers already known to satisfy the invariants.
    pub(crate) fn from_parts(height: usize, width: usize, pixel_pitch: f64, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        ComplexField {
            height,
            width,
            pixel_pitch,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    /// Discrete L2 norm over all samples.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v.norm_sqr()).sum())
    }

    /// `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        ensure_same_shape(self.shape(), other.shape())?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn real_part(&self) -> RealImage {
        RealImage::from_parts(self.height, self.width, self.pixel_pitch, self.data.iter().map(|v| v.re).collect())
    }

    pub fn imag_part(&self) -> RealImage {
        RealImage::from_parts(self.height, self.width, self.pixel_pitch, self.data.iter().map(|v| v.im).collect())
    }

    pub fn amplitude(&self) -> RealImage {
        RealImage::from_parts(self.height, self.width, self.pixel_pitch, self.data.iter().map(|v| v.norm()).collect())
    }

    /// Pointwise `|v|^2`.
    pub fn intensity(&self) -> RealImage {
        RealImage::from_parts(self.height, self.width, self.pixel_pitch, self.data.iter().map(|v| v.norm_sqr()).collect())
    }

    /// Argument in radians, wrapped to `(-pi, pi]`.
    pub fn phase(&self) -> RealImage {
        let data = self
            .data
            .iter()
            .map(|v| {
                let a = v.arg();
                if a <= -core::f64::consts::PI {
                    core::f64::consts::PI
                } else {
                    a
                }
            })
            .collect();
        RealImage::from_parts(self.height, self.width, self.pixel_pitch, data)
    }
}

/// Row-major real grid with a physical pixel pitch (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    height: usize,
    width: usize,
    pixel_pitch: f64,
    data: Vec<f64>,
}

impl RealImage {
    pub fn new(height: usize, width: usize, pixel_pitch: f64, data: Vec<f64>) -> Result<Self> {
        check_shape(height, width, data.len())?;
        check_pitch(pixel_pitch)?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(RealImage {
            height,
            width,
            pixel_pitch,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        pixel_pitch: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let data = (0..height * width).map(|i| f(i / width.max(1), i % width.max(1))).collect();
        RealImage::new(height, width, pixel_pitch, data)
    }

    pub(crate) fn from_parts(height: usize, width: usize, pixel_pitch: f64, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        RealImage {
            height,
            width,
            pixel_pitch,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Fails with [`Error::Negative`] at the first negative sample.
    pub fn ensure_non_negative(&self) -> Result<()> {
        match self.data.iter().position(|&v| v < 0.0) {
            Some(index) => Err(Error::Negative {
                index,
                value: self.data[index],
            }),
            None => Ok(()),
        }
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<RealImage> {
        RealImage::new(
            self.height,
            self.width,
            self.pixel_pitch,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Same samples with a different pixel pitch.
    pub fn with_pixel_pitch(self, pixel_pitch: f64) -> Result<RealImage> {
        check_pitch(pixel_pitch)?;
        Ok(RealImage { pixel_pitch, ..self })
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_parts(
            self.height,
            self.width,
            self.pixel_pitch,
            self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

pub(crate) fn ensure_same_shape(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Spatial-frequency axes (cycles per meter) in DFT order: zero first,
/// negative frequencies in the upper half.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    fx: Vec<f64>,
    fy: Vec<f64>,
}

fn dft_frequencies(n: usize, pixel_pitch: f64) -> Vec<f64> {
    let step = 1.0 / (n as f64 * pixel_pitch);
    (0..n)
        .map(|k| {
            let signed = if 2 * k >= n { k as f64 - n as f64 } else { k as f64 };
            signed * step
        })
        .collect()
}

impl FrequencyGrid {
    pub fn new(height: usize, width: usize, pixel_pitch: f64) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                reason: "both dimensions must be at least 2",
            });
        }
        check_pitch(pixel_pitch)?;
        Ok(FrequencyGrid {
            fx: dft_frequencies(width, pixel_pitch),
            fy: dft_frequencies(height, pixel_pitch),
        })
    }

    pub fn height(&self) -> usize {
        self.fy.len()
    }

    pub fn width(&self) -> usize {
        self.fx.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.fy.len(), self.fx.len())
    }

    /// Horizontal frequency of a column (constant down each column).
    pub fn fx(&self, _row: usize, col: usize) -> f64 {
        self.fx[col]
    }

    /// Vertical frequency of a row (constant along each row).
    pub fn fy(&self, row: usize, _col: usize) -> f64 {
        self.fy[row]
    }

    pub fn fx_axis(&self) -> &[f64] {
        &self.fx
    }

    pub fn fy_axis(&self) -> &[f64] {
        &self.fy
    }

    /// Squared radial frequency `fx^2 + fy^2`.
    pub fn rho_sq(&self, row: usize, col: usize) -> f64 {
        self.fx[col] * self.fx[col] + self.fy[row] * self.fy[row]
    }
}

/// Builds the DFT-ordered frequency grid for a `height x width` field.
pub fn make_frequency_grid(height: usize, width: usize, pixel_pitch: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::new(height, width, pixel_pitch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn four_point_ordering() {
        let g = make_frequency_grid(4, 4, 1.0).unwrap();
        assert_eq!(g.fx_axis(), &[0.0, 0.25, -0.5, -0.25]);
        assert_eq!(g.fy_axis(), &[0.0, 0.25, -0.5, -0.25]);
    }

    #[test]
    fn two_point_ordering() {
        let g = make_frequency_grid(2, 2, 1.0).unwrap();
        for r in 0..2 {
            assert_eq!(g.fx(r, 0), 0.0);
            assert_eq!(g.fx(r, 1), -0.5);
        }
    }

    #[test]
    fn nyquist_at_klh_pitch() {
        let pitch = 2.2e-10;
        let g = make_frequency_grid(256, 256, pitch).unwrap();
        let nyq = g.fx_axis().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((nyq - 1.0 / (2.0 * pitch)).abs() < 1e-6 * nyq);
        assert!((nyq * 1e-9 - 2.2727).abs() < 1e-3);
    }

    #[test]
    fn conjugate_index_pairing() {
        for n in [2usize, 5, 8, 9, 16] {
            let f = dft_frequencies(n, 0.5);
            assert_eq!(f[0], 0.0);
            for k in 1..n {
                if 2 * k != n {
                    assert!((f[k] + f[n - k]).abs() < 1e-12, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_frequency_grid(1, 4, 1.0).is_err());
        assert!(make_frequency_grid(4, 0, 1.0).is_err());
        assert!(make_frequency_grid(4, 4, 0.0).is_err());
        assert!(make_frequency_grid(4, 4, -1.0).is_err());
    }

    #[test]
    fn field_invariants() {
        assert!(ComplexField::new(2, 2, 1.0, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        assert!(ComplexField::new(1, 4, 1.0, vec![Complex64::new(0.0, 0.0); 4]).is_err());
        let nan = vec![Complex64::new(0.0, 0.0), Complex64::new(f64::NAN, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(ComplexField::new(2, 2, 1.0, nan), Err(Error::NonFinite { index: 1 }));
        assert!(RealImage::new(2, 2, 1.0, vec![0.0, f64::INFINITY, 0.0, 0.0]).is_err());
    }

    #[test]
    fn phase_wraps_into_half_open_interval() {
        let f = ComplexField::new(2, 2, 1.0, vec![Complex64::new(-1.0, -0.0); 4]).unwrap();
        for &p in f.phase().data() {
            assert_eq!(p, core::f64::consts::PI);
        }
    }
}
