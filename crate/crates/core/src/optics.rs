//! Imaging forward model: coherent transfer functions, the detector-plane
//! operator and its adjoint, mirror-symmetrized filtering, and the scalar
//! contrast transfer function.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::Fft2;
use crate::field::{check_even, ensure_same_shape};
use crate::{ComplexField, Error, FrequencyGrid, OpticsParams, RealImage, Result};

/// Coherent transfer function sampled on a [`FrequencyGrid`], with the
/// envelope fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
    params: OpticsParams,
}

impl TransferFunction {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn params(&self) -> &OpticsParams {
        &self.params
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Complex conjugate, i.e. the transfer function of the adjoint operator.
    pub fn conj(&self) -> TransferFunction {
        TransferFunction {
            values: self.values.iter().map(|v| v.conj()).collect(),
            ..self.clone()
        }
    }

    /// Multiplies a spectrum in place.
    fn modulate(&self, spectrum: &mut [Complex64]) {
        for (s, h) in spectrum.iter_mut().zip(&self.values) {
            *s *= h;
        }
    }
}

/// `H(f) = exp(-i pi lambda dz rho^2 + i (pi/2) Cs lambda^3 rho^4)`.
pub fn build_transfer(params: &OpticsParams, grid: &FrequencyGrid) -> TransferFunction {
    let (height, width) = grid.shape();
    let mut values = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let rho_sq = grid.rho_sq(r, c);
            let chi = params.aberration_phase(libm::sqrt(rho_sq));
            values.push(Complex64::from_polar(1.0, chi));
        }
    }
    TransferFunction {
        height,
        width,
        values,
        params: *params,
    }
}

fn check_pitch_matches(field_pitch: f64, params: &OpticsParams) -> Result<()> {
    let expected = params.pixel_pitch();
    if (field_pitch - expected).abs() <= 1e-9 * expected {
        Ok(())
    } else {
        Err(Error::param(
            "pixel_pitch",
            alloc::format!("field pitch {field_pitch:e} m differs from optics pitch {expected:e} m"),
        ))
    }
}

/// The detector-plane operator `A g = F^-1{H F[g]}` and its adjoint, with
/// the FFT plan and transfer function cached for repeated use.
#[derive(Debug, Clone)]
pub struct Propagator {
    transfer: TransferFunction,
    plan: Fft2,
    pixel_pitch: f64,
}

impl Propagator {
    pub fn new(params: &OpticsParams, height: usize, width: usize) -> Result<Self> {
        check_even(height, width)?;
        let grid = FrequencyGrid::new(height, width, params.pixel_pitch())?;
        Ok(Propagator {
            transfer: build_transfer(params, &grid),
            plan: Fft2::new(height, width),
            pixel_pitch: params.pixel_pitch(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.transfer.shape()
    }

    pub fn params(&self) -> &OpticsParams {
        &self.transfer.params
    }

    pub fn transfer(&self) -> &TransferFunction {
        &self.transfer
    }

    fn filter(&self, g: &ComplexField, conjugate: bool) -> Result<ComplexField> {
        ensure_same_shape(self.shape(), g.shape())?;
        check_pitch_matches(g.pixel_pitch(), &self.transfer.params)?;
        let mut buf = g.data().to_vec();
        self.plan.forward(&mut buf);
        for (s, h) in buf.iter_mut().zip(&self.transfer.values) {
            *s *= if conjugate { h.conj() } else { *h };
        }
        self.plan.inverse(&mut buf);
        let (h, w) = self.shape();
        Ok(ComplexField::from_parts(h, w, self.pixel_pitch, buf))
    }

    /// `A g`: exit wave to detector plane.
    pub fn forward(&self, g: &ComplexField) -> Result<ComplexField> {
        self.filter(g, false)
    }

    /// `A^dagger d`: filtering with the conjugate transfer function.
    pub fn adjoint(&self, d: &ComplexField) -> Result<ComplexField> {
        self.filter(d, true)
    }
}

/// Detector-plane field `A g`.
pub fn apply_forward(g: &ComplexField, params: &OpticsParams) -> Result<ComplexField> {
    Propagator::new(params, g.height(), g.width())?.forward(g)
}

/// Adjoint `A^dagger d`.
pub fn apply_adjoint(d: &ComplexField, params: &OpticsParams) -> Result<ComplexField> {
    Propagator::new(params, d.height(), d.width())?.adjoint(d)
}

/// Recorded irradiance `|A g|^2`.
pub fn record_intensity(g: &ComplexField, params: &OpticsParams) -> Result<RealImage> {
    Ok(apply_forward(g, params)?.intensity())
}

/// Spectrum of the even (mirror) extension of an image, reusable across
/// many filters. Filtering returns the top-left quadrant.
#[derive(Debug, Clone)]
pub struct SymmetrizedSpectrum {
    height: usize,
    width: usize,
    pixel_pitch: f64,
    grid: FrequencyGrid,
    plan: Fft2,
    spectrum: Vec<Complex64>,
}

/// Even extension to `2H x 2W`: `M[i][j] = img[min(i, 2H-1-i)][min(j, 2W-1-j)]`.
pub fn mirror_extend(img: &RealImage) -> Vec<f64> {
    let (h, w) = img.shape();
    let mut out = Vec::with_capacity(4 * h * w);
    for i in 0..2 * h {
        let src_row = i.min(2 * h - 1 - i);
        for j in 0..2 * w {
            out.push(img.get(src_row, j.min(2 * w - 1 - j)));
        }
    }
    out
}

impl SymmetrizedSpectrum {
    pub fn new(img: &RealImage) -> Result<Self> {
        let (h, w) = img.shape();
        check_even(h, w)?;
        let plan = Fft2::new(2 * h, 2 * w);
        let mut spectrum: Vec<Complex64> = mirror_extend(img).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        plan.forward(&mut spectrum);
        Ok(SymmetrizedSpectrum {
            height: h,
            width: w,
            pixel_pitch: img.pixel_pitch(),
            grid: FrequencyGrid::new(2 * h, 2 * w, img.pixel_pitch())?,
            plan,
            spectrum,
        })
    }

    /// Frequency grid of the doubled domain.
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn filter(&self, transfer: &TransferFunction) -> Result<ComplexField> {
        ensure_same_shape(self.grid.shape(), transfer.shape())?;
        let mut buf = self.spectrum.clone();
        transfer.modulate(&mut buf);
        self.plan.inverse(&mut buf);
        let full_width = 2 * self.width;
        let mut quadrant = Vec::with_capacity(self.height * self.width);
        for row in buf.chunks_exact(full_width).take(self.height) {
            quadrant.extend_from_slice(&row[..self.width]);
        }
        Ok(ComplexField::from_parts(self.height, self.width, self.pixel_pitch, quadrant))
    }
}

/// Mirror-extends `img`, filters it in the frequency domain with the
/// transfer function produced by `build` for the doubled grid, and returns
/// the top-left quadrant.
pub fn filter_symmetrized<F>(img: &RealImage, build: F) -> Result<ComplexField>
where
    F: FnOnce(&FrequencyGrid) -> TransferFunction,
{
    let spectrum = SymmetrizedSpectrum::new(img)?;
    let transfer = build(spectrum.grid());
    spectrum.filter(&transfer)
}

/// `CTF(rho) = w cos chi + sqrt(1 - w^2) sin chi`.
pub fn eval_ctf(params: &OpticsParams, rho: f64) -> Result<f64> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::param("rho", "must be non-negative and finite"));
    }
    let chi = params.aberration_phase(rho);
    let w = params.amplitude_contrast();
    Ok(w * libm::cos(chi) + libm::sqrt(1.0 - w * w) * libm::sin(chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn klh(defocus: f64) -> OpticsParams {
        OpticsParams::new(3.349e-12, defocus, 2e-3, 2.2e-10, 0.07).unwrap()
    }

    #[test]
    fn identity_transfer_at_focus_without_cs() {
        let p = OpticsParams::new(3.349e-12, 0.0, 0.0, 2.2e-10, 0.0).unwrap();
        let grid = FrequencyGrid::new(8, 8, 2.2e-10).unwrap();
        let h = build_transfer(&p, &grid);
        assert!(h.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn transfer_is_unit_modulus_and_one_at_dc() {
        let grid = FrequencyGrid::new(16, 12, 2.2e-10).unwrap();
        let h = build_transfer(&klh(2.7e-6), &grid);
        assert_eq!(h.values()[0], Complex64::new(1.0, 0.0));
        for v in h.values() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_phase_matches_scalar_formula() {
        // Grid chosen so that one sample sits exactly at rho = 1 nm^-1.
        let pitch = 1.0e-10;
        let n = 20;
        let grid = FrequencyGrid::new(n, n, pitch).unwrap();
        let col = 2;
        assert!((grid.fx(0, col) - 1e9).abs() < 1.0);
        let p = OpticsParams::new(3.349e-12, 2.7e-6, 2e-3, pitch, 0.07).unwrap();
        let h = build_transfer(&p, &grid);
        let rho = grid.fx(0, col);
        let expected = -PI * 3.349e-12 * 2.7e-6 * rho * rho + FRAC_PI_2 * 2e-3 * libm::pow(3.349e-12, 3.0) * libm::pow(rho, 4.0);
        let got = h.values()[col];
        let want = Complex64::from_polar(1.0, expected);
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn constant_plane_wave_records_unit_intensity() {
        let g = ComplexField::constant(8, 8, 2.2e-10, Complex64::new(1.0, 0.0)).unwrap();
        let img = record_intensity(&g, &klh(3e-6)).unwrap();
        for v in img.data() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn in_focus_phase_object_has_no_contrast() {
        let p = OpticsParams::new(3.349e-12, 0.0, 0.0, 2.2e-10, 0.0).unwrap();
        let g = ComplexField::from_fn(8, 8, 2.2e-10, |r, c| Complex64::new(1.0, 0.01 * (r * c) as f64)).unwrap();
        let img = record_intensity(&g, &p).unwrap();
        for (v, z) in img.data().iter().zip(g.data()) {
            assert!((v - (1.0 + z.im * z.im)).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_dimensions_are_rejected() {
        let g = ComplexField::constant(5, 4, 2.2e-10, Complex64::new(1.0, 0.0)).unwrap();
        assert!(apply_forward(&g, &klh(1e-6)).is_err());
        let img = RealImage::new(3, 2, 1.0, vec![1.0; 6]).unwrap();
        assert!(SymmetrizedSpectrum::new(&img).is_err());
    }

    #[test]
    fn pitch_mismatch_is_rejected() {
        let g = ComplexField::constant(4, 4, 1e-10, Complex64::new(1.0, 0.0)).unwrap();
        assert!(apply_forward(&g, &klh(1e-6)).is_err());
    }

    #[test]
    fn mirror_extension_of_two_by_two() {
        let img = RealImage::new(2, 2, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = mirror_extend(&img);
        assert_eq!(
            m,
            vec![1.0, 2.0, 2.0, 1.0, 3.0, 4.0, 4.0, 3.0, 3.0, 4.0, 4.0, 3.0, 1.0, 2.0, 2.0, 1.0]
        );
    }

    #[test]
    fn mirror_extension_quadruples_constant_energy() {
        let img = RealImage::new(4, 6, 1.0, vec![1.5; 24]).unwrap();
        let e: f64 = img.data().iter().map(|v| v * v).sum();
        let em: f64 = mirror_extend(&img).iter().map(|v| v * v).sum();
        assert_eq!(em, 4.0 * e);
    }

    #[test]
    fn symmetrized_identity_filter() {
        let img = RealImage::from_fn(6, 8, 1.0, |r, c| (r * 7 + c * 3) as f64 % 5.0).unwrap();
        let out = filter_symmetrized(&img, |grid| {
            build_transfer(&OpticsParams::new(1e-12, 0.0, 0.0, 1.0, 0.0).unwrap(), grid)
        })
        .unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a.re - b).abs() < 1e-12);
            assert!(a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrized_constant_stays_constant() {
        let img = RealImage::new(8, 8, 2.2e-10, vec![2.5; 64]).unwrap();
        let out = filter_symmetrized(&img, |grid| build_transfer(&klh(3e-6), grid)).unwrap();
        for v in out.data() {
            assert!((v - Complex64::new(2.5, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn ctf_values() {
        let p = klh(2.7e-6);
        assert_eq!(eval_ctf(&p, 0.0).unwrap(), 0.07);
        assert!(eval_ctf(&p, -1.0).is_err());
        // w = 0 and chi = pi/2: pick rho so that -pi lambda dz rho^2 = pi/2 with Cs = 0.
        let q = OpticsParams::new(1e-12, -1e-6, 0.0, 1e-10, 0.0).unwrap();
        let rho = libm::sqrt(0.5 / (1e-12 * 1e-6));
        assert!((eval_ctf(&q, rho).unwrap() - 1.0).abs() < 1e-12);
    }
}
