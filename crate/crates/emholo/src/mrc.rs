//! MRC-style micrograph rasters: a 1024-byte header, an optional extended
//! header, then `NX * NY` samples. Modes 0 (int8), 1 (int16), 2 (float32)
//! and 6 (uint16) are read in either byte order; only single slices
//! (`NZ = 1`) are accepted. Files are written as little-endian float32.

use std::fs;
use std::path::Path;

use emholo_core::RealImage;

use crate::{Error, Result};

pub const HEADER_LEN: usize = 1024;

/// Used when the header carries no usable cell dimensions.
pub const FALLBACK_PITCH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Int8,
    Int16,
    Float32,
    Uint16,
}

impl Mode {
    fn from_code(code: i32) -> Option<Mode> {
        match code {
            0 => Some(Mode::Int8),
            1 => Some(Mode::Int16),
            2 => Some(Mode::Float32),
            6 => Some(Mode::Uint16),
            _ => None,
        }
    }

    pub fn code(self) -> i32 {
        match self {
            Mode::Int8 => 0,
            Mode::Int16 => 1,
            Mode::Float32 => 2,
            Mode::Uint16 => 6,
        }
    }

    pub fn sample_bytes(self) -> usize {
        match self {
            Mode::Int8 => 1,
            Mode::Int16 | Mode::Uint16 => 2,
            Mode::Float32 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrographHeader {
    pub width: usize,
    pub height: usize,
    pub mode: Mode,
    /// Meters per pixel from the cell dimensions, when present.
    pub pixel_pitch: Option<f64>,
    pub byte_order: ByteOrder,
    pub extended_header_len: usize,
}

struct Words<'a> {
    bytes: &'a [u8],
    order: ByteOrder,
}

impl Words<'_> {
    fn raw(&self, offset: usize) -> [u8; 4] {
        self.bytes[offset..offset + 4].try_into().expect("4-byte word")
    }

    fn i32(&self, offset: usize) -> i32 {
        match self.order {
            ByteOrder::Little => i32::from_le_bytes(self.raw(offset)),
            ByteOrder::Big => i32::from_be_bytes(self.raw(offset)),
        }
    }

    fn f32(&self, offset: usize) -> f32 {
        match self.order {
            ByteOrder::Little => f32::from_le_bytes(self.raw(offset)),
            ByteOrder::Big => f32::from_be_bytes(self.raw(offset)),
        }
    }
}

fn format_err(path: &str, offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_string(),
        offset: offset as u64,
        reason: reason.into(),
    }
}

fn detect_order(bytes: &[u8]) -> ByteOrder {
    // MACHST stamp at byte 212; fall back to whichever order gives a sane mode.
    match bytes[212] {
        0x44 => ByteOrder::Little,
        0x11 => ByteOrder::Big,
        _ => {
            let le = i32::from_le_bytes(bytes[12..16].try_into().expect("word"));
            if Mode::from_code(le).is_some() {
                ByteOrder::Little
            } else {
                ByteOrder::Big
            }
        }
    }
}

/// Parses a header from the first 1024 bytes. `source` labels errors.
pub fn parse_header(bytes: &[u8], source: &str) -> Result<MicrographHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(source, bytes.len(), "file shorter than the 1024-byte header"));
    }
    let order = detect_order(bytes);
    let w = Words { bytes, order };
    let nx = w.i32(0);
    let ny = w.i32(4);
    let nz = w.i32(8);
    let mode_code = w.i32(12);
    let mode = Mode::from_code(mode_code).ok_or_else(|| format_err(source, 12, format!("unsupported mode {mode_code}")))?;
    if nx < 2 {
        return Err(format_err(source, 0, format!("NX = {nx} is below 2")));
    }
    if ny < 2 {
        return Err(format_err(source, 4, format!("NY = {ny} is below 2")));
    }
    if nz != 1 {
        return Err(format_err(source, 8, format!("NZ = {nz}; only single slices are supported")));
    }
    let mx = w.i32(28);
    let cell_x = w.f32(40) as f64;
    let pixel_pitch = if mx > 0 && cell_x.is_finite() && cell_x > 0.0 {
        Some(cell_x / mx as f64 * 1e-10)
    } else {
        None
    };
    let nsymbt = w.i32(92);
    if nsymbt < 0 {
        return Err(format_err(source, 92, format!("negative extended header length {nsymbt}")));
    }
    Ok(MicrographHeader {
        width: nx as usize,
        height: ny as usize,
        mode,
        pixel_pitch,
        byte_order: order,
        extended_header_len: nsymbt as usize,
    })
}

/// Decodes a complete file image held in memory.
pub fn parse_micrograph(bytes: &[u8], source: &str) -> Result<(RealImage, MicrographHeader)> {
    let header = parse_header(bytes, source)?;
    let start = HEADER_LEN + header.extended_header_len;
    let count = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| format_err(source, 0, "dimension overflow"))?;
    let len = count
        .checked_mul(header.mode.sample_bytes())
        .and_then(|n| n.checked_add(start))
        .ok_or_else(|| format_err(source, 0, "dimension overflow"))?;
    if bytes.len() < len {
        return Err(format_err(
            source,
            bytes.len(),
            format!("truncated data: expected {len} bytes, found {}", bytes.len()),
        ));
    }
    let body = &bytes[start..len];
    let big = header.byte_order == ByteOrder::Big;
    let data: Vec<f64> = match header.mode {
        Mode::Int8 => body.iter().map(|&b| b as i8 as f64).collect(),
        Mode::Int16 => body
            .chunks_exact(2)
            .map(|c| {
                let b = [c[0], c[1]];
                (if big { i16::from_be_bytes(b) } else { i16::from_le_bytes(b) }) as f64
            })
            .collect(),
        Mode::Uint16 => body
            .chunks_exact(2)
            .map(|c| {
                let b = [c[0], c[1]];
                (if big { u16::from_be_bytes(b) } else { u16::from_le_bytes(b) }) as f64
            })
            .collect(),
        Mode::Float32 => body
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                (if big { f32::from_be_bytes(b) } else { f32::from_le_bytes(b) }) as f64
            })
            .collect(),
    };
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(format_err(source, start + i * header.mode.sample_bytes(), "non-finite sample"));
    }
    let pitch = header.pixel_pitch.unwrap_or(FALLBACK_PITCH);
    let image = RealImage::new(header.height, header.width, pitch, data)?;
    Ok((image, header))
}

/// Reads a micrograph from disk. The pixel pitch comes from the header
/// cell dimensions (1 Angstrom if absent) and may be overridden by callers.
pub fn read_micrograph(path: &Path) -> Result<(RealImage, MicrographHeader)> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_micrograph(&bytes, &path.display().to_string())
}

/// Encodes an image as a little-endian float32 MRC file.
pub fn encode_float32(img: &RealImage) -> Vec<u8> {
    let (h, w) = img.shape();
    let mut out = vec![0u8; HEADER_LEN];
    let put_i32 = |out: &mut Vec<u8>, off: usize, v: i32| out[off..off + 4].copy_from_slice(&v.to_le_bytes());
    put_i32(&mut out, 0, w as i32);
    put_i32(&mut out, 4, h as i32);
    put_i32(&mut out, 8, 1);
    put_i32(&mut out, 12, Mode::Float32.code());
    put_i32(&mut out, 28, w as i32);
    put_i32(&mut out, 32, h as i32);
    put_i32(&mut out, 36, 1);
    put_i32(&mut out, 64, 1);
    put_i32(&mut out, 68, 2);
    put_i32(&mut out, 72, 3);
    let samples: Vec<f32> = img.data().iter().map(|&v| v as f32).collect();
    let (lo, hi) = samples.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mean = samples.iter().map(|&v| v as f64).sum::<f64>() / samples.len() as f64;
    let rms = (samples.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    let pitch_a = (img.pixel_pitch() * 1e10) as f32;
    let put_f32 = |out: &mut Vec<u8>, off: usize, v: f32| out[off..off + 4].copy_from_slice(&v.to_le_bytes());
    put_f32(&mut out, 40, pitch_a * w as f32);
    put_f32(&mut out, 44, pitch_a * h as f32);
    put_f32(&mut out, 48, pitch_a);
    for off in [52, 56, 60] {
        put_f32(&mut out, off, 90.0);
    }
    put_f32(&mut out, 76, lo);
    put_f32(&mut out, 80, hi);
    put_f32(&mut out, 84, mean as f32);
    put_f32(&mut out, 216, rms as f32);
    out[208..212].copy_from_slice(b"MAP ");
    out[212..216].copy_from_slice(&[0x44, 0x44, 0x00, 0x00]);
    out.reserve(samples.len() * 4);
    for v in samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_float32(path: &Path, img: &RealImage) -> Result<()> {
    fs::write(path, encode_float32(img)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
