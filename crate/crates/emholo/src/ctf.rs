//! CTF curves for diagnostics.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use emholo_core::optics::eval_ctf;
use emholo_core::OpticsParams;

use crate::plot::render_curve;
use crate::raster::{encode_pgm, io_err, write_text};
use crate::Result;

/// `samples` evenly spaced frequencies on `[0, rho_max]` (1/m) and the CTF at each.
pub fn ctf_curve(params: &OpticsParams, rho_max: f64, samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = samples.max(2);
    let rho: Vec<f64> = (0..n).map(|i| rho_max * i as f64 / (n - 1) as f64).collect();
    let ctf = rho.iter().map(|&r| eval_ctf(params, r)).collect::<emholo_core::Result<Vec<_>>>()?;
    Ok((rho, ctf))
}

/// Smallest `rho` in `(0, rho_max]` where the CTF vanishes.
///
/// The CTF equals `sin(chi + asin w)`, and `chi` is a quadratic in
/// `u = rho^2`, so its zeros are roots of `a u^2 + b u = k pi - asin w`.
pub fn first_zero(params: &OpticsParams, rho_max: f64) -> Option<f64> {
    let lambda = params.wavelength();
    let a = 0.5 * PI * params.cs() * lambda.powi(3);
    let b = -PI * lambda * params.defocus();
    let alpha = params.amplitude_contrast().asin();
    let u_max = rho_max * rho_max;
    let chi = |u: f64| a * u * u + b * u;
    let mut lo = chi(0.0).min(chi(u_max));
    let mut hi = chi(0.0).max(chi(u_max));
    if a != 0.0 {
        let vertex = -b / (2.0 * a);
        if vertex > 0.0 && vertex < u_max {
            lo = lo.min(chi(vertex));
            hi = hi.max(chi(vertex));
        }
    }
    let k_lo = ((lo + alpha) / PI).ceil() as i64;
    let k_hi = ((hi + alpha) / PI).floor() as i64;
    let mut best: Option<f64> = None;
    for k in k_lo..=k_hi {
        let c = k as f64 * PI - alpha;
        let roots: Vec<f64> = if a == 0.0 {
            if b == 0.0 {
                Vec::new()
            } else {
                vec![c / b]
            }
        } else {
            let disc = b * b + 4.0 * a * c;
            if disc < 0.0 {
                Vec::new()
            } else {
                // Numerically stable pair.
                let s = disc.sqrt();
                let q = -0.5 * (b + b.signum() * s);
                if q == 0.0 {
                    vec![0.0]
                } else {
                    vec![q / a, -c / q]
                }
            }
        };
        for u in roots {
            if u > 0.0 && u <= u_max && best.is_none_or(|bu| u < bu) {
                best = Some(u);
            }
        }
    }
    best.map(f64::sqrt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtfPlotFiles {
    pub table: PathBuf,
    pub preview: PathBuf,
    pub first_zero: Option<f64>,
}

/// Writes `ctf.txt` (frequency in 1/nm, CTF) and `ctf.pgm` into `out_dir`.
pub fn write_ctf_plot(params: &OpticsParams, rho_max: f64, samples: usize, out_dir: &Path) -> Result<CtfPlotFiles> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let (rho, ctf) = ctf_curve(params, rho_max, samples)?;
    let zero = first_zero(params, rho_max);
    let mut text = String::from("# rho_per_nm ctf\n");
    for (r, c) in rho.iter().zip(&ctf) {
        text.push_str(&format!("{:.6} {:.9}\n", r * 1e-9, c));
    }
    let table = out_dir.join("ctf.txt");
    write_text(&table, &text)?;
    let xs: Vec<f64> = rho.iter().map(|r| r * 1e-9).collect();
    let (w, h) = (800, 300);
    let pixels = render_curve(&xs, &ctf, w, h, zero.map(|z| z * 1e-9));
    let preview = out_dir.join("ctf.pgm");
    fs::write(&preview, encode_pgm(w, h, &pixels)).map_err(io_err(&preview))?;
    Ok(CtfPlotFiles {
        table,
        preview,
        first_zero: zero,
    })
}
