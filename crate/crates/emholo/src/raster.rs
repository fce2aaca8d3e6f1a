//! Output rasters: float32 MRC data, a JSON side-car with metadata, and an
//! 8-bit PGM preview windowed between the image minimum and maximum.

use std::fs;
use std::path::{Path, PathBuf};

use emholo_core::autofocus::MeritCurve;
use emholo_core::RealImage;
use serde::{Deserialize, Serialize};

use crate::mrc;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub height: usize,
    pub width: usize,
    pub pixel_pitch_m: f64,
    pub min: f64,
    pub max: f64,
    pub provenance: serde_json::Value,
}

/// Files produced for one raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterFiles {
    pub data: PathBuf,
    pub meta: PathBuf,
    pub preview: PathBuf,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Min-max window to 0..=255; a constant image maps to mid-gray 128.
pub fn preview_bytes(img: &RealImage) -> Vec<u8> {
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    img.data()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                128
            }
        })
        .collect()
}

/// Binary PGM (P5) encoding of 8-bit samples.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Writes `<stem>.mrc`, `<stem>.json` and `<stem>.pgm`.
pub fn write_raster(img: &RealImage, stem: &Path, provenance: serde_json::Value) -> Result<RasterFiles> {
    let files = RasterFiles {
        data: stem.with_extension("mrc"),
        meta: stem.with_extension("json"),
        preview: stem.with_extension("pgm"),
    };
    mrc::write_float32(&files.data, img)?;
    let (min, max) = img.min_max();
    let meta = RasterMeta {
        height: img.height(),
        width: img.width(),
        pixel_pitch_m: img.pixel_pitch(),
        min,
        max,
        provenance,
    };
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&files.meta, text + "\n").map_err(io_err(&files.meta))?;
    fs::write(&files.preview, encode_pgm(img.width(), img.height(), &preview_bytes(img))).map_err(io_err(&files.preview))?;
    Ok(files)
}

/// Reads back the float32 data of a raster written by [`write_raster`].
pub fn read_raster(path: &Path) -> Result<RealImage> {
    Ok(mrc::read_micrograph(path)?.0)
}

/// Two columns: de-focus in micrometers and merit value.
pub fn merit_curve_text(curve: &MeritCurve) -> String {
    let mut out = String::from("# z_um merit\n");
    for (z, m) in curve.z_values().iter().zip(curve.merit()) {
        out.push_str(&format!("{:.6} {:.12e}\n", z * 1e6, m));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_preview_is_mid_gray() {
        let img = RealImage::new(3, 3, 1.0, vec![4.2; 9]).unwrap();
        assert!(preview_bytes(&img).iter().all(|&p| p == 128));
    }

    #[test]
    fn preview_follows_linear_window() {
        let data: Vec<f64> = (0..16).map(|i| -1.0 + 0.37 * i as f64).collect();
        let img = RealImage::new(4, 4, 1.0, data.clone()).unwrap();
        let px = preview_bytes(&img);
        let (lo, hi) = (data[0], data[15]);
        assert_eq!(px[0], 0);
        assert_eq!(px[15], 255);
        for (p, v) in px.iter().zip(&data) {
            let expected = (255.0 * (v - lo) / (hi - lo)).round() as u8;
            assert_eq!(*p, expected);
        }
    }

    #[test]
    fn pgm_header() {
        let bytes = encode_pgm(2, 1, &[0, 255]);
        assert_eq!(&bytes[..], b"P5\n2 1\n255\n\x00\xff");
    }
}
