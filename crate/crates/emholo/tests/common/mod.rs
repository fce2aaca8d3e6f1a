#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use emholo::core::roi::{crop_roi, RoiSpec};
use emholo::core::synth::{make_hologram, make_phantom, NoiseSpec, PhantomKind, PhantomSpec};
use emholo::core::{wavelength_from_voltage, Complex64, ComplexField, OpticsParams, RealImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn klh(defocus: f64) -> OpticsParams {
    OpticsParams::new(wavelength_from_voltage(120e3).unwrap(), defocus, 2e-3, 2.2e-10, 0.07).unwrap()
}

pub fn random_field(h: usize, w: usize, pitch: f64, rng: &mut ChaCha8Rng) -> ComplexField {
    let data = (0..h * w)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexField::new(h, w, pitch, data).unwrap()
}

pub fn random_image(h: usize, w: usize, pitch: f64, rng: &mut ChaCha8Rng) -> RealImage {
    let data = (0..h * w).map(|_| rng.random_range(0.5..1.5)).collect();
    RealImage::new(h, w, pitch, data).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct O(N^2) 2-D DFT, `sign = -1` forward, `+1` inverse (unscaled).
pub fn dft2(data: &[Complex64], h: usize, w: usize, sign: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for ku in 0..h {
        for kv in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = sign * 2.0 * PI * ((ku * r) as f64 / h as f64 + (kv * c) as f64 / w as f64);
                    acc += data[r * w + c] * Complex64::from_polar(1.0, phase);
                }
            }
            out[ku * w + kv] = acc;
        }
    }
    out
}

fn freq(k: usize, n: usize, pitch: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    if k < n / 2.0 {
        k / (n * pitch)
    } else {
        (k - n) / (n * pitch)
    }
}

/// `F^-1 (exp(i chi) F g)` with the direct DFT.
pub fn naive_forward(g: &ComplexField, params: &OpticsParams) -> Vec<Complex64> {
    let (h, w) = g.shape();
    let lambda = params.wavelength();
    let p = params.pixel_pitch();
    let spec = dft2(g.data(), h, w, -1.0);
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let rho2 = freq(r, h, p).powi(2) + freq(c, w, p).powi(2);
            let chi = -PI * lambda * params.defocus() * rho2 + 0.5 * PI * params.cs() * lambda.powi(3) * rho2 * rho2;
            out.push(spec[r * w + c] * Complex64::from_polar(1.0, chi));
        }
    }
    let n = (h * w) as f64;
    dft2(&out, h, w, 1.0).into_iter().map(|v| v / n).collect()
}

pub fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Noise-free hologram of a sharp-edged weak-phase disk generated on a
/// `canvas` grid and cropped to the central `roi` window.
pub fn disk_hologram(params: &OpticsParams, radius: f64, canvas: usize, roi: usize) -> RealImage {
    let mut spec = PhantomSpec::centered(PhantomKind::Disk { radius }, 0.3, canvas);
    spec.pixel_pitch = params.pixel_pitch();
    let holo = make_hologram(&make_phantom(&spec).unwrap(), params, &NoiseSpec::none()).unwrap();
    crop_roi(&holo, &RoiSpec::new(canvas / 2, canvas / 2, roi).unwrap()).unwrap()
}

/// Every file below `dir` with its contents, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}
