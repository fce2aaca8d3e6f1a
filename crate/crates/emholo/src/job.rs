//! Batch processing of ROIs from one micrograph.
//!
//! ROIs are processed on a rayon pool; every file is written by a single
//! writer thread, and the report is emitted in ROI order once all ROIs are
//! done, so output is identical regardless of the worker count.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use emholo_core::autofocus::MeritCurve;
use emholo_core::retrieval::{retrieve, RetrievalResult};
use emholo_core::roi::{crop_roi, normalize_roi, RoiSpec};
use emholo_core::RealImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::JobConfig;
use crate::mrc::read_micrograph;
use crate::plot::render_curve;
use crate::raster::{encode_pgm, io_err, merit_curve_text, write_raster, write_text};
use crate::sweep::sweep_focus_parallel;
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobMode {
    /// Sweep only.
    Focus,
    /// Retrieval at the pinned de-focus.
    Retrieve,
    /// Sweep unless de-focus is pinned, then retrieve.
    Full,
}

/// One line of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiReport {
    pub index: usize,
    pub center_x: usize,
    pub center_y: usize,
    pub size: usize,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// De-focus used for retrieval or found by the sweep, in meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defocus_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defocus_pinned: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_merit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobReport {
    pub rois: Vec<RoiReport>,
    pub report_path: PathBuf,
}

impl JobReport {
    pub fn all_ok(&self) -> bool {
        self.rois.iter().all(|r| r.ok)
    }
}

struct RoiOutcome {
    curve: Option<MeritCurve>,
    defocus: Option<(f64, bool)>,
    retrieval: Option<RetrievalResult>,
}

enum Output {
    Raster {
        img: RealImage,
        stem: PathBuf,
        provenance: serde_json::Value,
    },
    Text {
        path: PathBuf,
        text: String,
    },
    Bytes {
        path: PathBuf,
        bytes: Vec<u8>,
    },
}

fn write_output(out: Output) -> Result<()> {
    match out {
        Output::Raster { img, stem, provenance } => write_raster(&img, &stem, provenance).map(|_| ()),
        Output::Text { path, text } => write_text(&path, &text),
        Output::Bytes { path, bytes } => fs::write(&path, bytes).map_err(io_err(&path)),
    }
}

/// File stem prefix for one ROI inside the output directory.
pub fn roi_stem(out_dir: &Path, index: usize, spec: &RoiSpec) -> PathBuf {
    out_dir.join(format!("roi{index:03}_{}_{}", spec.center_x, spec.center_y))
}

fn named(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!("_{suffix}"));
    stem.with_file_name(name)
}

/// Loads the micrograph named by the config, applying a pitch override.
pub fn load_input(cfg: &JobConfig) -> Result<RealImage> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Value("no input micrograph configured".into()))?;
    let (img, header) = read_micrograph(path)?;
    match cfg.pixel_pitch {
        Some(p) => Ok(img.with_pixel_pitch(p)?),
        None => {
            if header.pixel_pitch.is_none() {
                log::warn!("{}: no pixel size in header, assuming 1 A", path.display());
            }
            Ok(img)
        }
    }
}

/// Reads the configured micrograph and processes every ROI.
pub fn run_job(cfg: &JobConfig, mode: JobMode) -> Result<JobReport> {
    if mode == JobMode::Retrieve && cfg.defocus.is_none() {
        return Err(Error::Value("retrieve needs a pinned de-focus".into()));
    }
    if cfg.rois.is_empty() {
        return run_on_image(None, cfg, mode);
    }
    let img = load_input(cfg)?;
    run_on_image(Some(&img), cfg, mode)
}

/// Processes every configured ROI of an already loaded micrograph.
pub fn run_on_image(img: Option<&RealImage>, cfg: &JobConfig, mode: JobMode) -> Result<JobReport> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    // Validate everything global before any ROI starts.
    let pitch = img.map(|i| i.pixel_pitch()).unwrap_or(1e-10);
    let base = cfg.optics(pitch)?;
    cfg.sweep_config(base)?;
    cfg.retrieval_config(base)?;
    if !cfg.rois.is_empty() && img.is_none() {
        return Err(Error::Value("ROIs given without an image".into()));
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Value(format!("thread pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<(usize, Output)>();
    let writer = std::thread::spawn(move || {
        let mut failures: Vec<(usize, String)> = Vec::new();
        for (index, out) in rx {
            if let Err(e) = write_output(out) {
                failures.push((index, e.to_string()));
            }
        }
        failures
    });

    let outcomes: Vec<Result<RoiOutcome>> = pool.install(|| {
        cfg.rois
            .par_iter()
            .enumerate()
            .map_with(tx, |tx, (index, spec)| {
                let img = img.expect("checked above");
                process_roi(img, cfg, mode, index, spec, tx)
            })
            .collect()
    });
    let failures = writer.join().map_err(|_| Error::Value("writer thread panicked".into()))?;

    let mut rois: Vec<RoiReport> = outcomes
        .into_iter()
        .zip(&cfg.rois)
        .enumerate()
        .map(|(index, (outcome, spec))| roi_report(index, spec, outcome))
        .collect();
    for (index, msg) in failures {
        let r = &mut rois[index];
        if r.ok {
            r.ok = false;
            r.error = Some(msg);
        }
    }

    let report_path = cfg.out_dir.join(REPORT_FILE);
    let mut text = String::new();
    for r in &rois {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_text(&report_path, &text)?;
    Ok(JobReport { rois, report_path })
}

fn roi_report(index: usize, spec: &RoiSpec, outcome: Result<RoiOutcome>) -> RoiReport {
    let mut r = RoiReport {
        index,
        center_x: spec.center_x,
        center_y: spec.center_y,
        size: spec.size,
        ok: true,
        error: None,
        defocus_m: None,
        defocus_pinned: None,
        peak_merit: None,
        relative_error: None,
        iterations: None,
        converged: None,
    };
    match outcome {
        Err(e) => {
            r.ok = false;
            r.error = Some(e.to_string());
        }
        Ok(o) => {
            if let Some((z, pinned)) = o.defocus {
                r.defocus_m = Some(z);
                r.defocus_pinned = Some(pinned);
            }
            r.peak_merit = o.curve.as_ref().map(|c| c.peak_merit());
            if let Some(res) = o.retrieval {
                r.relative_error = Some(res.final_error);
                r.iterations = Some(res.iterations);
                r.converged = Some(res.converged);
            }
        }
    }
    r
}

fn process_roi(
    img: &RealImage,
    cfg: &JobConfig,
    mode: JobMode,
    index: usize,
    spec: &RoiSpec,
    tx: &mut mpsc::Sender<(usize, Output)>,
) -> Result<RoiOutcome> {
    let send = |out: Output| {
        // The writer only stops once every sender is gone.
        let _ = tx.send((index, out));
    };
    let roi = normalize_roi(&crop_roi(img, spec)?, cfg.normalize)?;
    let stem = roi_stem(&cfg.out_dir, index, spec);
    let base = cfg.optics(roi.pixel_pitch())?;
    let provenance = |what: &str, extra: serde_json::Value| {
        json!({
            "quantity": what,
            "roi": { "index": index, "center_x": spec.center_x, "center_y": spec.center_y, "size": spec.size },
            "normalize": cfg.normalize,
            "voltage_v": cfg.voltage,
            "cs_m": cfg.cs,
            "extra": extra,
        })
    };
    send(Output::Raster {
        img: roi.clone(),
        stem: named(&stem, "input"),
        provenance: provenance("normalized input", json!(null)),
    });

    let mut outcome = RoiOutcome {
        curve: None,
        defocus: None,
        retrieval: None,
    };
    let defocus = match (mode, cfg.defocus) {
        (JobMode::Focus, _) | (JobMode::Full, None) => {
            let curve = sweep_focus_parallel(&roi, &cfg.sweep_config(base)?)?;
            let z = curve.peak_z();
            send(Output::Text {
                path: named(&stem, "merit.txt"),
                text: merit_curve_text(&curve),
            });
            let xs: Vec<f64> = curve.z_values().iter().map(|z| z * 1e6).collect();
            let (w, h) = (640, 320);
            send(Output::Bytes {
                path: named(&stem, "merit.pgm"),
                bytes: encode_pgm(w, h, &render_curve(&xs, curve.merit(), w, h, Some(z * 1e6))),
            });
            outcome.curve = Some(curve);
            outcome.defocus = Some((z, false));
            z
        }
        (_, Some(z)) => {
            let z = cfg.signed(z);
            outcome.defocus = Some((z, true));
            z
        }
        (JobMode::Retrieve, None) => unreachable!("rejected before processing"),
    };
    if mode == JobMode::Focus {
        return Ok(outcome);
    }

    let params = base.with_defocus(defocus)?;
    let rcfg = cfg.retrieval_config(params)?;
    let res = retrieve(&roi, &rcfg)?;
    let extra = json!({
        "defocus_m": defocus,
        "tau": cfg.tau,
        "theta_stop_deg": cfg.theta_stop,
        "max_iters": cfg.max_iters,
        "seed": cfg.seed,
        "iterations": res.iterations,
        "relative_error": res.final_error,
    });
    for (img, name) in [
        (res.amplitude.clone(), "amplitude"),
        (res.phase.clone(), "phase"),
        (res.reprojection.clone(), "reprojection"),
        (res.exit_wave.real_part(), "exit_re"),
        (res.exit_wave.imag_part(), "exit_im"),
    ] {
        send(Output::Raster {
            img,
            stem: named(&stem, name),
            provenance: provenance(name, extra.clone()),
        });
    }
    let mut tsv = String::from("iter\ttheta_deg\trelative_error\n");
    for (i, (t, e)) in res.theta_history.iter().zip(&res.error_history).enumerate() {
        tsv.push_str(&format!("{i}\t{t:.6}\t{e:.9e}\n"));
    }
    send(Output::Text {
        path: named(&stem, "iterations.tsv"),
        text: tsv,
    });
    outcome.retrieval = Some(res);
    Ok(outcome)
}
