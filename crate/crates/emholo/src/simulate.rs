//! Synthetic holograms from the built-in phantoms.

use std::fs;
use std::path::Path;

use emholo_core::synth::{make_hologram, make_phantom, DEFAULT_PHANTOM_PITCH};
use emholo_core::{ComplexField, OpticsParams, RealImage};
use serde_json::json;

use crate::config::Settings;
use crate::raster::{io_err, write_raster};
use crate::Result;

/// De-focus used by `simulate` when none is configured.
pub const DEFAULT_SIM_DEFOCUS: f64 = 3e-6;

#[derive(Debug, Clone)]
pub struct Simulation {
    pub phantom: ComplexField,
    pub hologram: RealImage,
    pub params: OpticsParams,
}

pub fn simulate(settings: &Settings) -> Result<Simulation> {
    let job = &settings.job;
    let pitch = job.pixel_pitch.unwrap_or(DEFAULT_PHANTOM_PITCH);
    let defocus = job.signed(job.defocus.unwrap_or(DEFAULT_SIM_DEFOCUS));
    let params = job.optics(pitch)?.with_defocus(defocus)?;
    let spec = settings.simulation.phantom_spec(pitch)?;
    let phantom = make_phantom(&spec)?;
    let hologram = make_hologram(&phantom, &params, &settings.simulation.noise_spec())?;
    Ok(Simulation {
        phantom,
        hologram,
        params,
    })
}

/// Writes `hologram`, `truth_phase` and `truth_amplitude` rasters into `out_dir`.
pub fn write_simulation(sim: &Simulation, settings: &Settings, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let s = &settings.simulation;
    let provenance = |what: &str| {
        json!({
            "quantity": what,
            "phantom": s.phantom,
            "peak_phase": s.peak_phase,
            "size": s.size,
            "noise": format!("{:?}", s.noise),
            "noise_seed": s.noise_seed,
            "defocus_m": sim.params.defocus(),
            "wavelength_m": sim.params.wavelength(),
            "cs_m": sim.params.cs(),
        })
    };
    write_raster(&sim.hologram, &out_dir.join("hologram"), provenance("hologram"))?;
    write_raster(&sim.phantom.phase(), &out_dir.join("truth_phase"), provenance("phase"))?;
    write_raster(&sim.phantom.amplitude(), &out_dir.join("truth_amplitude"), provenance("amplitude"))?;
    Ok(())
}
