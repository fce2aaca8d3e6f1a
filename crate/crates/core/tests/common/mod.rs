#![allow(dead_code)]

use std::f64::consts::PI;

use emholo_core::{Complex64, ComplexField, OpticsParams, RealImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(h: usize, w: usize, pitch: f64, seed: u64) -> ComplexField {
    let mut r = rng(seed);
    let data = (0..h * w)
        .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    ComplexField::new(h, w, pitch, data).unwrap()
}

pub fn random_image(h: usize, w: usize, pitch: f64, seed: u64) -> RealImage {
    let mut r = rng(seed);
    let data = (0..h * w).map(|_| r.random_range(0.5..1.5)).collect();
    RealImage::new(h, w, pitch, data).unwrap()
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

/// Signed DFT frequency of bin `k` out of `n` at spacing `pitch`.
pub fn freq(k: usize, n: usize, pitch: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k < n_f / 2.0 {
        k / (n_f * pitch)
    } else {
        (k - n_f) / (n_f * pitch)
    }
}

/// exp(i chi(rho)) evaluated directly from the aberration polynomial.
pub fn transfer(params: &OpticsParams, h: usize, w: usize) -> Vec<Complex64> {
    let lambda = params.wavelength();
    let p = params.pixel_pitch();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let rho2 = freq(r, h, p).powi(2) + freq(c, w, p).powi(2);
            let chi = -PI * lambda * params.defocus() * rho2 + 0.5 * PI * params.cs() * lambda.powi(3) * rho2 * rho2;
            out.push(Complex64::from_polar(1.0, chi));
        }
    }
    out
}

/// `F^-1 (H F g)` using the direct DFT.
pub fn naive_forward(g: &ComplexField, params: &OpticsParams) -> Vec<Complex64> {
    let (h, w) = g.shape();
    let hf = transfer(params, h, w);
    let spec: Vec<Complex64> = dft2(g.data(), h, w, -1.0).iter().zip(&hf).map(|(a, b)| a * b).collect();
    let n = (h * w) as f64;
    dft2(&spec, h, w, 1.0).into_iter().map(|v| v / n).collect()
}

pub fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn klh(defocus: f64) -> OpticsParams {
    let lambda = emholo_core::wavelength_from_voltage(120e3).unwrap();
    OpticsParams::new(lambda, defocus, 2e-3, 2.2e-10, 0.07).unwrap()
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
