use emholo_core::autofocus::{FocusSweep, MeritCurve, SweepConfig};
use emholo_core::RealImage;
use rayon::prelude::*;

use crate::Result;

/// Same curve as [`emholo_core::autofocus::sweep_focus`], with the de-focus
/// samples spread over the current rayon pool. Each sample is computed
/// independently, so the result does not depend on the thread count.
pub fn sweep_focus_parallel(roi: &RealImage, cfg: &SweepConfig) -> Result<MeritCurve> {
    let z_values = cfg.z_values();
    let sweep = FocusSweep::new(roi, cfg.base_params())?;
    let merit = z_values
        .par_iter()
        .map(|&z| sweep.merit(z))
        .collect::<emholo_core::Result<Vec<f64>>>()?;
    Ok(MeritCurve::from_samples(z_values, merit)?)
}
