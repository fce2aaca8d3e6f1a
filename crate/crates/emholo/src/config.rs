//! Flat `key = value` configuration with unit-suffixed lengths. Keys mirror
//! the command-line flags; values given on the command line are applied
//! after the file.
//!
//! ```text
//! # KLH micrograph
//! input = klh_0001.mrc
//! pixel-pitch = 2.2A
//! voltage = 120kV
//! cs = 2mm
//! sweep = 2um:4um:5nm
//! roi = 812,1033
//! roi = 1410,512,256
//! ```

use std::path::{Path, PathBuf};

use emholo_core::autofocus::SweepConfig;
use emholo_core::retrieval::{RetrievalConfig, DEFAULT_MAX_ITERS, DEFAULT_TAU, DEFAULT_THETA_STOP};
use emholo_core::roi::{NormalizePolicy, RoiSpec, DEFAULT_ROI_SIZE};
use emholo_core::synth::{Blob, NoiseModel, NoiseSpec, PhantomKind, PhantomSpec};
use emholo_core::{wavelength_from_voltage, OpticsParams};

use crate::units::{parse_frequency, parse_length, parse_voltage};
use crate::{Error, Result};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "EMHOLO_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub input: Option<PathBuf>,
    pub rois: Vec<RoiSpec>,
    pub roi_size: usize,
    /// Overrides the micrograph header when set.
    pub pixel_pitch: Option<f64>,
    pub voltage: f64,
    pub cs: f64,
    pub amplitude_contrast: f64,
    /// Pins the de-focus and skips the sweep.
    pub defocus: Option<f64>,
    pub sweep: (f64, f64, f64),
    pub tau: f64,
    pub theta_stop: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub normalize: NormalizePolicy,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses every logical core.
    pub workers: Option<usize>,
    /// Negates de-focus values before they enter the transfer functions,
    /// for datasets recorded with the opposite sign convention.
    pub flip_defocus_sign: bool,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            input: None,
            rois: Vec::new(),
            roi_size: DEFAULT_ROI_SIZE,
            pixel_pitch: None,
            voltage: 120e3,
            cs: 2e-3,
            amplitude_contrast: 0.07,
            defocus: None,
            sweep: (2e-6, 4e-6, 5e-9),
            tau: DEFAULT_TAU,
            theta_stop: DEFAULT_THETA_STOP,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            normalize: NormalizePolicy::MeanOne,
            out_dir: PathBuf::from("emholo-out"),
            workers: None,
            flip_defocus_sign: false,
        }
    }
}

impl JobConfig {
    /// Optics at the given pixel pitch with the configured (signed) de-focus,
    /// or zero when none is pinned.
    pub fn optics(&self, pixel_pitch: f64) -> Result<OpticsParams> {
        let wavelength = wavelength_from_voltage(self.voltage)?;
        let defocus = self.defocus.map(|d| self.signed(d)).unwrap_or(0.0);
        Ok(OpticsParams::new(wavelength, defocus, self.cs, pixel_pitch, self.amplitude_contrast)?)
    }

    /// Applies the sign convention to a de-focus value.
    pub fn signed(&self, defocus: f64) -> f64 {
        if self.flip_defocus_sign {
            -defocus
        } else {
            defocus
        }
    }

    pub fn sweep_config(&self, base: OpticsParams) -> Result<SweepConfig> {
        let (lo, hi, step) = self.sweep;
        let (lo, hi) = if self.flip_defocus_sign { (-hi, -lo) } else { (lo, hi) };
        Ok(SweepConfig::new(lo, hi, step, base)?)
    }

    pub fn retrieval_config(&self, params: OpticsParams) -> Result<RetrievalConfig> {
        Ok(RetrievalConfig::new(self.tau, self.theta_stop, self.max_iters, self.seed, params)?)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "roi" => self.rois.push(parse_roi(value, self.roi_size)?),
            "roi-size" => self.roi_size = parse_num(key, value)?,
            "pixel-pitch" => self.pixel_pitch = Some(parse_length(value)?),
            "voltage" => self.voltage = parse_voltage(value)?,
            "cs" => self.cs = parse_length(value)?,
            "amplitude-contrast" => self.amplitude_contrast = parse_num(key, value)?,
            "defocus" => {
                self.defocus = match value {
                    "" | "auto" | "sweep" => None,
                    v => Some(parse_length(v)?),
                }
            }
            "sweep" => self.sweep = parse_sweep(value)?,
            "tau" => self.tau = parse_num(key, value)?,
            "theta-stop" => self.theta_stop = parse_num(key, value)?,
            "max-iters" => self.max_iters = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "normalize" => self.normalize = parse_normalize(value)?,
            "out-dir" => self.out_dir = PathBuf::from(value),
            "workers" => {
                let n: usize = parse_num(key, value)?;
                self.workers = if n == 0 { None } else { Some(n) };
            }
            "flip-defocus-sign" => self.flip_defocus_sign = parse_bool(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Synthetic specimen and recording settings for `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub phantom: String,
    pub peak_phase: f64,
    pub radius: f64,
    pub width: f64,
    pub sigma: f64,
    pub amplitude_contrast: f64,
    pub size: usize,
    pub noise: NoiseModel,
    pub noise_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            phantom: "disk".into(),
            peak_phase: 0.3,
            radius: 20.0,
            width: 4.0,
            sigma: 6.0,
            amplitude_contrast: 0.0,
            size: 512,
            noise: NoiseModel::None,
            noise_seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn phantom_spec(&self, pixel_pitch: f64) -> Result<PhantomSpec> {
        let kind = match self.phantom.as_str() {
            "disk" => PhantomKind::Disk { radius: self.radius },
            "gaussian-blob" => PhantomKind::GaussianBlob { sigma: self.sigma },
            "annulus" => PhantomKind::Annulus {
                radius: self.radius,
                width: self.width,
            },
            "multi-blob" => PhantomKind::MultiBlob {
                blobs: multi_blob_pattern(self.sigma),
            },
            other => return Err(Error::Value(format!("unknown phantom kind {other:?}"))),
        };
        let mut spec = PhantomSpec::centered(kind, self.peak_phase, self.size);
        spec.amplitude_contrast = self.amplitude_contrast;
        spec.pixel_pitch = pixel_pitch;
        Ok(spec)
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            model: self.noise,
            seed: self.noise_seed,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "phantom" => self.phantom = value.to_string(),
            "peak-phase" => self.peak_phase = parse_num(key, value)?,
            "phantom-radius" => self.radius = parse_num(key, value)?,
            "phantom-width" => self.width = parse_num(key, value)?,
            "phantom-sigma" => self.sigma = parse_num(key, value)?,
            "phantom-amplitude-contrast" => self.amplitude_contrast = parse_num(key, value)?,
            "sim-size" => self.size = parse_num(key, value)?,
            "noise" => self.noise = parse_noise(value)?,
            "noise-seed" => self.noise_seed = parse_num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Four blobs of decreasing weight around the center, sized by `sigma`.
pub fn multi_blob_pattern(sigma: f64) -> Vec<Blob> {
    vec![
        Blob { dx: 0.0, dy: 0.0, sigma, weight: 1.0 },
        Blob { dx: 3.0 * sigma, dy: 1.5 * sigma, sigma: 0.7 * sigma, weight: 0.8 },
        Blob { dx: -2.5 * sigma, dy: 2.5 * sigma, sigma: 0.8 * sigma, weight: 0.6 },
        Blob { dx: -1.5 * sigma, dy: -3.0 * sigma, sigma: 0.5 * sigma, weight: 0.9 },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtfPlotConfig {
    pub rho_max: f64,
    pub samples: usize,
}

impl Default for CtfPlotConfig {
    fn default() -> Self {
        CtfPlotConfig {
            rho_max: 2e9,
            samples: 2000,
        }
    }
}

impl CtfPlotConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "rho-max" => self.rho_max = parse_frequency(value)?,
            "samples" => self.samples = parse_num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Everything a config file can hold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub job: JobConfig,
    pub simulation: SimulationConfig,
    pub ctf: CtfPlotConfig,
}

impl Settings {
    /// Applies one `key = value` pair. Underscores in keys are accepted as
    /// hyphens.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if self.job.set(&key, value)? || self.simulation.set(&key, value)? || self.ctf.set(&key, value)? {
            Ok(())
        } else {
            Err(Error::Value(format!("unknown config key {key:?}")))
        }
    }

    /// Parses config text, reporting the offending line on failure.
    pub fn parse(text: &str, source: &str) -> Result<Settings> {
        let mut settings = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                source_name: source.to_string(),
                line: n + 1,
                reason: "expected key = value".into(),
            })?;
            settings.apply(key, value).map_err(|e| Error::Config {
                source_name: source.to_string(),
                line: n + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Settings::parse(&text, &path.display().to_string())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Value(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Value(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// `x,y[,size]` in pixel coordinates.
pub fn parse_roi(value: &str, default_size: usize) -> Result<RoiSpec> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    let num = |s: &str| parse_num::<usize>("roi", s);
    let spec = match parts.as_slice() {
        [x, y] => RoiSpec::new(num(x)?, num(y)?, default_size),
        [x, y, size] => RoiSpec::new(num(x)?, num(y)?, num(size)?),
        _ => return Err(Error::Value(format!("roi {value:?}: expected x,y[,size]"))),
    };
    Ok(spec?)
}

/// `zmin:zmax:step` with unit suffixes, e.g. `2um:4um:5nm`.
pub fn parse_sweep(value: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => Ok((parse_length(lo)?, parse_length(hi)?, parse_length(step)?)),
        _ => Err(Error::Value(format!("sweep {value:?}: expected zmin:zmax:step"))),
    }
}

pub fn parse_normalize(value: &str) -> Result<NormalizePolicy> {
    match value {
        "none" => Ok(NormalizePolicy::None),
        "mean-one" => Ok(NormalizePolicy::MeanOne),
        _ => Err(Error::Value(format!("normalize: expected none or mean-one, got {value:?}"))),
    }
}

/// `none`, `gaussian:SNR` or `poisson:DOSE`.
pub fn parse_noise(value: &str) -> Result<NoiseModel> {
    let (model, level) = value.split_once(':').unwrap_or((value, ""));
    let level = || parse_num::<f64>("noise", level);
    match model {
        "none" => Ok(NoiseModel::None),
        "gaussian" => Ok(NoiseModel::Gaussian { snr: level()? }),
        "poisson" => Ok(NoiseModel::Poisson { dose: level()? }),
        _ => Err(Error::Value(format!("noise: unknown model {model:?}"))),
    }
}
