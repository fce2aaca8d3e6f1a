//! De-focus estimation by numerical back-propagation of a particle ROI and
//! maximization of the sparsity-of-gradient (Tamura) merit function.

use alloc::vec::Vec;

use crate::field::check_even;
use crate::optics::{build_transfer, SymmetrizedSpectrum};
use crate::{ComplexField, Error, OpticsParams, RealImage, Result};

/// De-focus sweep `z_min, z_min + step, ... <= z_max`. Only the de-focus
/// of `base_params` is varied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    z_min: f64,
    z_max: f64,
    z_step: f64,
    base_params: OpticsParams,
}

impl SweepConfig {
    pub fn new(z_min: f64, z_max: f64, z_step: f64, base_params: OpticsParams) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite() && z_min < z_max) {
            return Err(Error::param("sweep range", "z_min must be below z_max"));
        }
        if !(z_step > 0.0 && z_step <= z_max - z_min) {
            return Err(Error::param("z_step", "must lie in (0, z_max - z_min]"));
        }
        Ok(SweepConfig {
            z_min,
            z_max,
            z_step,
            base_params,
        })
    }

    /// Default range 2-4 um in 5 nm steps.
    pub fn standard(base_params: OpticsParams) -> Self {
        SweepConfig::new(2e-6, 4e-6, 5e-9, base_params).expect("static sweep is valid")
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn z_step(&self) -> f64 {
        self.z_step
    }

    pub fn base_params(&self) -> &OpticsParams {
        &self.base_params
    }

    /// Sample positions. The end point is included when it lies on the grid
    /// up to rounding.
    pub fn z_values(&self) -> Vec<f64> {
        let count = libm::floor((self.z_max - self.z_min) / self.z_step + 1e-9) as usize + 1;
        (0..count).map(|k| self.z_min + k as f64 * self.z_step).collect()
    }
}

/// Sampled merit function with its peak.
#[derive(Debug, Clone, PartialEq)]
pub struct MeritCurve {
    z_values: Vec<f64>,
    merit: Vec<f64>,
    peak_index: usize,
}

impl MeritCurve {
    /// Locates the peak; ties go to the smaller z (earlier sample).
    pub fn from_samples(z_values: Vec<f64>, merit: Vec<f64>) -> Result<Self> {
        if z_values.is_empty() || z_values.len() != merit.len() {
            return Err(Error::param("merit curve", "needs equal-length, non-empty samples"));
        }
        if merit.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::param("merit curve", "values must be finite and non-negative"));
        }
        let mut peak_index = 0;
        for (i, &m) in merit.iter().enumerate() {
            if m > merit[peak_index] {
                peak_index = i;
            }
        }
        Ok(MeritCurve {
            z_values,
            merit,
            peak_index,
        })
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    pub fn merit(&self) -> &[f64] {
        &self.merit
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    pub fn peak_z(&self) -> f64 {
        self.z_values[self.peak_index]
    }

    pub fn peak_merit(&self) -> f64 {
        self.merit[self.peak_index]
    }
}

fn check_roi(roi: &RealImage) -> Result<()> {
    check_even(roi.height(), roi.width())?;
    roi.ensure_non_negative()
}

/// Back-propagated field `q(x, y; z)`: the mirror-extended ROI filtered by
/// `exp(i pi lambda z rho^2 - i (pi/2) Cs lambda^3 rho^4)`.
pub fn back_propagate(roi: &RealImage, params: &OpticsParams, z: f64) -> Result<ComplexField> {
    FocusSweep::new(roi, params)?.back_propagate(z)
}

/// Forward-difference gradient magnitude of a complex field. The last
/// column has zero x-gradient and the last row zero y-gradient.
pub fn gradient_magnitude(q: &ComplexField) -> RealImage {
    let (h, w) = q.shape();
    let data = q.data();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let v = data[r * w + c];
            let gx = if c + 1 < w { (data[r * w + c + 1] - v).norm_sqr() } else { 0.0 };
            let gy = if r + 1 < h { (data[(r + 1) * w + c] - v).norm_sqr() } else { 0.0 };
            out.push(libm::sqrt(gx + gy));
        }
    }
    RealImage::from_parts(h, w, q.pixel_pitch(), out)
}

/// Tamura coefficient `sqrt(sigma / mean)` with the population standard
/// deviation. An all-zero image scores 0.
pub fn tamura_coefficient(u: &RealImage) -> Result<f64> {
    u.ensure_non_negative()?;
    let n = u.data().len() as f64;
    let mean = u.mean();
    if mean <= 0.0 {
        return Ok(0.0);
    }
    let var = u.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(libm::sqrt(libm::sqrt(var) / mean))
}

/// A ROI prepared for repeated back-propagation: the mirrored spectrum is
/// computed once and each z costs one inverse FFT.
///
/// Evaluations are independent of each other, so callers may distribute
/// them over threads.
#[derive(Debug, Clone)]
pub struct FocusSweep {
    spectrum: SymmetrizedSpectrum,
    params: OpticsParams,
}

impl FocusSweep {
    pub fn new(roi: &RealImage, params: &OpticsParams) -> Result<Self> {
        check_roi(roi)?;
        Ok(FocusSweep {
            spectrum: SymmetrizedSpectrum::new(roi)?,
            params: *params,
        })
    }

    pub fn back_propagate(&self, z: f64) -> Result<ComplexField> {
        let params = self.params.with_defocus(z)?;
        let transfer = build_transfer(&params, self.spectrum.grid()).conj();
        self.spectrum.filter(&transfer)
    }

    /// `M(z)` for a single de-focus.
    pub fn merit(&self, z: f64) -> Result<f64> {
        tamura_coefficient(&gradient_magnitude(&self.back_propagate(z)?))
    }
}

/// Evaluates the merit function over the sweep and locates its peak.
pub fn sweep_focus(roi: &RealImage, cfg: &SweepConfig) -> Result<MeritCurve> {
    let z_values = cfg.z_values();
    if z_values.len() < 2 {
        return Err(Error::param("sweep", "needs at least two sample points"));
    }
    let sweep = FocusSweep::new(roi, cfg.base_params())?;
    let merit = z_values.iter().map(|&z| sweep.merit(z)).collect::<Result<Vec<_>>>()?;
    MeritCurve::from_samples(z_values, merit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use num_complex::Complex64;

    fn klh() -> OpticsParams {
        OpticsParams::new(3.349e-12, 0.0, 2e-3, 2.2e-10, 0.07).unwrap()
    }

    #[test]
    fn back_propagation_at_zero_is_identity() {
        let p = OpticsParams::new(3.349e-12, 0.0, 0.0, 2.2e-10, 0.07).unwrap();
        let roi = RealImage::from_fn(8, 10, 2.2e-10, |r, c| 1.0 + 0.1 * ((r * c) % 3) as f64).unwrap();
        let q = back_propagate(&roi, &p, 0.0).unwrap();
        for (a, b) in q.data().iter().zip(roi.data()) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn back_propagate_rejects_negative_roi() {
        let roi = RealImage::new(2, 2, 2.2e-10, vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(back_propagate(&roi, &klh(), 1e-6), Err(Error::Negative { .. })));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let q = ComplexField::constant(4, 5, 1.0, Complex64::new(3.0, -2.0)).unwrap();
        assert!(gradient_magnitude(&q).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_ramps() {
        let real = ComplexField::from_fn(4, 4, 1.0, |_, c| Complex64::new(c as f64, 0.0)).unwrap();
        let imag = ComplexField::from_fn(4, 4, 1.0, |_, c| Complex64::new(0.0, c as f64)).unwrap();
        let ur = gradient_magnitude(&real);
        let ui = gradient_magnitude(&imag);
        for r in 0..4 {
            for c in 0..4 {
                let want = if c == 3 { 0.0 } else { 1.0 };
                assert_eq!(ur.get(r, c), want);
                assert_eq!(ui.get(r, c), want);
            }
        }
    }

    #[test]
    fn tamura_values() {
        let flat = RealImage::new(2, 2, 1.0, vec![3.0; 4]).unwrap();
        assert_eq!(tamura_coefficient(&flat).unwrap(), 0.0);
        let zero = RealImage::new(2, 2, 1.0, vec![0.0; 4]).unwrap();
        assert_eq!(tamura_coefficient(&zero).unwrap(), 0.0);
        let two = RealImage::new(2, 2, 1.0, vec![0.0, 2.0, 0.0, 2.0]).unwrap();
        assert!((tamura_coefficient(&two).unwrap() - 1.0).abs() < 1e-15);
        let neg = RealImage::new(2, 2, 1.0, vec![0.0, -2.0, 0.0, 2.0]).unwrap();
        assert!(tamura_coefficient(&neg).is_err());
    }

    #[test]
    fn sweep_grid_includes_end_point() {
        let cfg = SweepConfig::standard(klh());
        let z = cfg.z_values();
        assert_eq!(z.len(), 401);
        assert!((z[400] - 4e-6).abs() < 1e-15);
    }

    #[test]
    fn sweep_config_validation() {
        assert!(SweepConfig::new(3e-6, 2e-6, 5e-9, klh()).is_err());
        assert!(SweepConfig::new(2e-6, 4e-6, 0.0, klh()).is_err());
        assert!(SweepConfig::new(2e-6, 4e-6, 3e-6, klh()).is_err());
    }

    #[test]
    fn constant_roi_has_flat_curve_peaking_at_start() {
        let roi = RealImage::new(8, 8, 2.2e-10, vec![1.0; 64]).unwrap();
        let cfg = SweepConfig::new(2e-6, 2.1e-6, 1e-8, klh()).unwrap();
        let curve = sweep_focus(&roi, &cfg).unwrap();
        let m0 = curve.merit()[0];
        assert!(curve.merit().iter().all(|m| (m - m0).abs() < 1e-10));
        assert_eq!(curve.peak_index(), 0);
        assert_eq!(curve.peak_z(), 2e-6);
    }

    #[test]
    fn merit_curve_ties_break_toward_smaller_z() {
        let c = MeritCurve::from_samples(vec![1.0, 2.0, 3.0], vec![0.5, 0.7, 0.7]).unwrap();
        assert_eq!(c.peak_index(), 1);
        assert!(MeritCurve::from_samples(vec![1.0], vec![f64::NAN]).is_err());
    }
}
