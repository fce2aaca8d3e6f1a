use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PLANCK: f64 = 6.626_070_15e-34;
const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relativistic de Broglie wavelength (meters) of an electron accelerated
/// through `voltage` volts.
pub fn wavelength_from_voltage(voltage: f64) -> Result<f64> {
    if !(voltage.is_finite() && voltage > 0.0) {
        return Err(Error::param("voltage", "must be positive and finite"));
    }
    let energy = ELEMENTARY_CHARGE * voltage;
    let rest = ELECTRON_MASS * SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    let momentum_sq = 2.0 * ELECTRON_MASS * energy * (1.0 + energy / (2.0 * rest));
    Ok(PLANCK / libm::sqrt(momentum_sq))
}

/// Imaging parameters shared by every transfer function. All lengths are
/// meters; a positive `defocus` is under-focus.
///
/// Deserialization goes through the same validation as [`OpticsParams::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOptics")]
pub struct OpticsParams {
    wavelength: f64,
    defocus: f64,
    cs: f64,
    pixel_pitch: f64,
    amplitude_contrast: f64,
}

#[derive(Deserialize)]
struct RawOptics {
    wavelength: f64,
    defocus: f64,
    cs: f64,
    pixel_pitch: f64,
    amplitude_contrast: f64,
}

impl TryFrom<RawOptics> for OpticsParams {
    type Error = Error;

    fn try_from(raw: RawOptics) -> Result<Self> {
        OpticsParams::new(
            raw.wavelength,
            raw.defocus,
            raw.cs,
            raw.pixel_pitch,
            raw.amplitude_contrast,
        )
    }
}

impl OpticsParams {
    pub fn new(
        wavelength: f64,
        defocus: f64,
        cs: f64,
        pixel_pitch: f64,
        amplitude_contrast: f64,
    ) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::param("wavelength", "must be positive and finite"));
        }
        if !defocus.is_finite() {
            return Err(Error::param("defocus", "must be finite"));
        }
        if !(cs.is_finite() && cs >= 0.0) {
            return Err(Error::param("cs", "must be non-negative and finite"));
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(Error::param("pixel_pitch", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&amplitude_contrast) {
            return Err(Error::param("amplitude_contrast", "must lie in [0, 1)"));
        }
        Ok(OpticsParams {
            wavelength,
            defocus,
            cs,
            pixel_pitch,
            amplitude_contrast,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn defocus(&self) -> f64 {
        self.defocus
    }

    pub fn cs(&self) -> f64 {
        self.cs
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn amplitude_contrast(&self) -> f64 {
        self.amplitude_contrast
    }

    /// Copy with a different de-focus.
    pub fn with_defocus(self, defocus: f64) -> Result<Self> {
        OpticsParams::new(
            self.wavelength,
            defocus,
            self.cs,
            self.pixel_pitch,
            self.amplitude_contrast,
        )
    }

    /// Aberration phase `chi(rho) = -pi lambda dz rho^2 + (pi/2) Cs lambda^3 rho^4`
    /// at radial frequency `rho` (cycles per meter).
    pub fn aberration_phase(&self, rho: f64) -> f64 {
        use core::f64::consts::{FRAC_PI_2, PI};
        let rho2 = rho * rho;
        let lambda3 = self.wavelength * self.wavelength * self.wavelength;
        -PI * self.wavelength * self.defocus * rho2 + FRAC_PI_2 * self.cs * lambda3 * rho2 * rho2
    }
}
