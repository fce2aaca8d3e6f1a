//! Sparsity-assisted Fresnel-zone phase retrieval.
//!
//! The cost `C = ||I - |A g|^2||^2 + alpha * sum(sqrt(1 + |grad g|^2 / delta^2) - 1)`
//! is never evaluated with an explicit `alpha`. Instead each iteration moves
//! along the bisector of the two unit-normalized Wirtinger gradients (mean
//! gradient descent), and iteration stops once the two directions are
//! nearly opposed.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::field::ensure_same_shape;
use crate::optics::Propagator;
use crate::{ComplexField, Error, OpticsParams, RealImage, Result};

pub const DEFAULT_TAU: f64 = 1e-4;
pub const DEFAULT_THETA_STOP: f64 = 160.0;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalConfig {
    tau: f64,
    theta_stop: f64,
    max_iters: usize,
    rng_seed: u64,
    params: OpticsParams,
}

impl RetrievalConfig {
    pub fn new(tau: f64, theta_stop: f64, max_iters: usize, rng_seed: u64, params: OpticsParams) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::param("tau", "must be positive"));
        }
        if !(theta_stop > 90.0 && theta_stop < 180.0) {
            return Err(Error::param("theta_stop", "must lie strictly between 90 and 180 degrees"));
        }
        if max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        Ok(RetrievalConfig {
            tau,
            theta_stop,
            max_iters,
            rng_seed,
            params,
        })
    }

    /// tau = 1e-4, stop at 160 degrees, at most 500 iterations.
    pub fn with_defaults(params: OpticsParams, rng_seed: u64) -> Self {
        RetrievalConfig::new(DEFAULT_TAU, DEFAULT_THETA_STOP, DEFAULT_MAX_ITERS, rng_seed, params)
            .expect("defaults are valid")
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta_stop(&self) -> f64 {
        self.theta_stop
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn params(&self) -> &OpticsParams {
        &self.params
    }
}

/// Iterate plus per-iteration diagnostics. `theta_history[n]` and
/// `error_history[n]` describe the iterate the n-th step started from.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalState {
    pub g: ComplexField,
    pub iter: usize,
    pub theta_history: Vec<f64>,
    pub error_history: Vec<f64>,
    pub delta: f64,
}

impl RetrievalState {
    pub fn new(g: ComplexField) -> Self {
        RetrievalState {
            g,
            iter: 0,
            theta_history: Vec::new(),
            error_history: Vec::new(),
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub exit_wave: ComplexField,
    pub amplitude: RealImage,
    /// Radians, wrapped to `(-pi, pi]`.
    pub phase: RealImage,
    /// `|A g|^2`.
    pub reprojection: RealImage,
    pub final_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub theta_history: Vec<f64>,
    pub error_history: Vec<f64>,
}

/// Forward differences along x and y; zero in the last column / row.
pub fn forward_gradient(g: &ComplexField) -> (Vec<Complex64>, Vec<Complex64>) {
    let (h, w) = g.shape();
    let d = g.data();
    let zero = Complex64::new(0.0, 0.0);
    let mut gx = Vec::with_capacity(h * w);
    let mut gy = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let v = d[r * w + c];
            gx.push(if c + 1 < w { d[r * w + c + 1] - v } else { zero });
            gy.push(if r + 1 < h { d[(r + 1) * w + c] - v } else { zero });
        }
    }
    (gx, gy)
}

/// Backward-difference divergence, the exact negative adjoint of
/// [`forward_gradient`]: `<grad g, p> = -<g, div p>`.
pub fn divergence(px: &[Complex64], py: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let x_here = if c + 1 < width { px[i] } else { zero };
            let x_left = if c > 0 { px[i - 1] } else { zero };
            let y_here = if r + 1 < height { py[i] } else { zero };
            let y_up = if r > 0 { py[i - width] } else { zero };
            out.push(x_here - x_left + y_here - y_up);
        }
    }
    out
}

/// Data-fidelity term `C1 = sum (I - |A g|^2)^2`.
pub fn data_cost(g: &ComplexField, roi: &RealImage, params: &OpticsParams) -> Result<f64> {
    ensure_same_shape(roi.shape(), g.shape())?;
    let ag = Propagator::new(params, g.height(), g.width())?.forward(g)?;
    Ok(roi
        .data()
        .iter()
        .zip(ag.data())
        .map(|(i, a)| {
            let r = i - a.norm_sqr();
            r * r
        })
        .sum())
}

/// Modified Huber penalty `C2 = sum (sqrt(1 + |grad g|^2 / delta^2) - 1)`.
pub fn huber_cost(g: &ComplexField, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (gx, gy) = forward_gradient(g);
    let d2 = delta * delta;
    Ok(gx
        .iter()
        .zip(&gy)
        .map(|(x, y)| libm::sqrt(1.0 + (x.norm_sqr() + y.norm_sqr()) / d2) - 1.0)
        .sum())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::param("delta", "must be positive and finite"))
    }
}

fn data_gradient_with(prop: &Propagator, g: &ComplexField, roi: &RealImage) -> Result<(ComplexField, f64)> {
    ensure_same_shape(roi.shape(), g.shape())?;
    let ag = prop.forward(g)?;
    let mut residual_sq = 0.0;
    let weighted: Vec<Complex64> = roi
        .data()
        .iter()
        .zip(ag.data())
        .map(|(i, a)| {
            let r = i - a.norm_sqr();
            residual_sq += r * r;
            a * r
        })
        .collect();
    let weighted = ComplexField::from_parts(g.height(), g.width(), g.pixel_pitch(), weighted);
    let grad = prop.adjoint(&weighted)?.into_data().into_iter().map(|v| v * -2.0).collect();
    let grad = ComplexField::from_parts(g.height(), g.width(), g.pixel_pitch(), grad);
    Ok((grad, libm::sqrt(residual_sq)))
}

/// Wirtinger gradient of `C1` with respect to `conj(g)`:
/// `-2 A^dagger[(I - |A g|^2) A g]`.
pub fn data_gradient(g: &ComplexField, roi: &RealImage, params: &OpticsParams) -> Result<ComplexField> {
    let prop = Propagator::new(params, g.height(), g.width())?;
    Ok(data_gradient_with(&prop, g, roi)?.0)
}

/// Huber-weighted gradient field `grad g / sqrt(1 + |grad g|^2 / delta^2)`.
/// Its magnitude saturates at `delta` where `|grad g| >> delta`.
pub fn huber_flux(g: &ComplexField, delta: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_delta(delta)?;
    let (mut gx, mut gy) = forward_gradient(g);
    let d2 = delta * delta;
    for (x, y) in gx.iter_mut().zip(gy.iter_mut()) {
        let weight = 1.0 / libm::sqrt(1.0 + (x.norm_sqr() + y.norm_sqr()) / d2);
        *x *= weight;
        *y *= weight;
    }
    Ok((gx, gy))
}

/// Wirtinger gradient of `C2` with respect to `conj(g)`:
/// `-(1 / (2 delta^2)) div[grad g / sqrt(1 + |grad g|^2 / delta^2)]`.
pub fn huber_gradient(g: &ComplexField, delta: f64) -> Result<ComplexField> {
    let (fx, fy) = huber_flux(g, delta)?;
    let scale = -0.5 / (delta * delta);
    let data = divergence(&fx, &fy, g.height(), g.width())
        .into_iter()
        .map(|v| v * scale)
        .collect();
    Ok(ComplexField::from_parts(g.height(), g.width(), g.pixel_pitch(), data))
}

/// Lower median of the forward-difference gradient magnitudes. Falls back
/// to the smallest positive magnitude, then to 1.
pub fn update_delta(g: &ComplexField) -> f64 {
    let (gx, gy) = forward_gradient(g);
    let mut mags: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(x, y)| libm::sqrt(x.norm_sqr() + y.norm_sqr()))
        .collect();
    mags.sort_unstable_by(f64::total_cmp);
    let median = mags[(mags.len() - 1) / 2];
    if median > 0.0 {
        median
    } else {
        mags.iter().copied().find(|&m| m > 0.0).unwrap_or(1.0)
    }
}

/// `(u1 + u2) / 2` for the unit-normalized gradients; a zero gradient
/// normalizes to zero.
pub fn bisector_direction(grad1: &ComplexField, grad2: &ComplexField) -> Result<ComplexField> {
    ensure_same_shape(grad1.shape(), grad2.shape())?;
    let n1 = grad1.norm();
    let n2 = grad2.norm();
    if n1 == 0.0 && n2 == 0.0 {
        return Err(Error::Stationary);
    }
    let s1 = if n1 > 0.0 { 0.5 / n1 } else { 0.0 };
    let s2 = if n2 > 0.0 { 0.5 / n2 } else { 0.0 };
    let data = grad1
        .data()
        .iter()
        .zip(grad2.data())
        .map(|(a, b)| a * s1 + b * s2)
        .collect();
    Ok(ComplexField::from_parts(grad1.height(), grad1.width(), grad1.pixel_pitch(), data))
}

/// Angle in degrees between two complex fields viewed as real vectors of
/// concatenated real and imaginary parts.
pub fn angle_between(grad1: &ComplexField, grad2: &ComplexField) -> Result<f64> {
    ensure_same_shape(grad1.shape(), grad2.shape())?;
    let n1 = grad1.norm();
    let n2 = grad2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::param("gradient", "angle undefined for a zero vector"));
    }
    let dot: f64 = grad1
        .data()
        .iter()
        .zip(grad2.data())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum();
    let cos = (dot / (n1 * n2)).clamp(-1.0, 1.0);
    Ok(libm::acos(cos).to_degrees())
}

/// `||I - |A g|^2|| / ||I||`.
pub fn relative_error(roi: &RealImage, g: &ComplexField, params: &OpticsParams) -> Result<f64> {
    ensure_same_shape(roi.shape(), g.shape())?;
    let roi_norm = roi.norm();
    if roi_norm == 0.0 {
        return Err(Error::param("roi", "zero norm"));
    }
    Ok(libm::sqrt(data_cost(g, roi, params)?) / roi_norm)
}

/// Random real starting guess, uniform on `[0, 2m)` with `m` the mean of
/// `sqrt(I)`.
pub fn initial_guess(roi: &RealImage, seed: u64) -> Result<ComplexField> {
    roi.ensure_non_negative()?;
    let mean_amp = roi.data().iter().map(|v| libm::sqrt(*v)).sum::<f64>() / roi.data().len() as f64;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let upper = 2.0 * mean_amp;
    let data = (0..roi.data().len())
        .map(|_| Complex64::new(upper * rng.random::<f64>(), 0.0))
        .collect();
    ComplexField::new(roi.height(), roi.width(), roi.pixel_pitch(), data)
}

/// Mean-gradient-descent solver bound to one ROI.
#[derive(Debug, Clone)]
pub struct MgdSolver<'a> {
    roi: &'a RealImage,
    cfg: RetrievalConfig,
    prop: Propagator,
    roi_norm: f64,
}

impl<'a> MgdSolver<'a> {
    pub fn new(roi: &'a RealImage, cfg: &RetrievalConfig) -> Result<Self> {
        roi.ensure_non_negative()?;
        let roi_norm = roi.norm();
        if roi_norm == 0.0 {
            return Err(Error::param("roi", "zero norm"));
        }
        let prop = Propagator::new(cfg.params(), roi.height(), roi.width())?;
        Ok(MgdSolver {
            roi,
            cfg: *cfg,
            prop,
            roi_norm,
        })
    }

    /// One iteration: refresh delta, take both gradients, record the angle
    /// and error of the current iterate, then
    /// `g <- g - tau ||g|| (u1 + u2) / 2`.
    pub fn step(&self, mut state: RetrievalState) -> Result<RetrievalState> {
        self.advance(&mut state)?;
        Ok(state)
    }

    // Leaves the state untouched on error.
    fn advance(&self, state: &mut RetrievalState) -> Result<()> {
        let delta = update_delta(&state.g);
        let (grad1, residual) = data_gradient_with(&self.prop, &state.g, self.roi)?;
        let grad2 = huber_gradient(&state.g, delta)?;
        let direction = bisector_direction(&grad1, &grad2)?;
        // With one gradient zero there is no conflict between the terms.
        let theta = angle_between(&grad1, &grad2).unwrap_or(0.0);

        let step = self.cfg.tau * state.g.norm();
        let (h, w) = state.g.shape();
        let pitch = state.g.pixel_pitch();
        let next: Vec<Complex64> = state
            .g
            .data()
            .iter()
            .zip(direction.data())
            .map(|(g, u)| g - u * step)
            .collect();
        state.g = ComplexField::from_parts(h, w, pitch, next);
        state.iter += 1;
        state.theta_history.push(theta);
        state.error_history.push(residual / self.roi_norm);
        state.delta = delta;
        Ok(())
    }

    /// Iterates from the seeded random guess until the gradient angle
    /// reaches `theta_stop` or `max_iters` runs out.
    pub fn run(&self) -> Result<RetrievalResult> {
        let mut state = RetrievalState::new(initial_guess(self.roi, self.cfg.rng_seed)?);
        let mut converged = false;
        while state.iter < self.cfg.max_iters {
            match self.advance(&mut state) {
                Ok(()) => {}
                Err(Error::Stationary) => {
                    converged = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            if state.theta_history.last().is_some_and(|&t| t >= self.cfg.theta_stop) {
                converged = true;
                break;
            }
        }
        self.finish(state, converged)
    }

    fn finish(&self, state: RetrievalState, converged: bool) -> Result<RetrievalResult> {
        let ag = self.prop.forward(&state.g)?;
        let reprojection = ag.intensity();
        let residual: f64 = self
            .roi
            .data()
            .iter()
            .zip(reprojection.data())
            .map(|(i, p)| (i - p) * (i - p))
            .sum();
        Ok(RetrievalResult {
            amplitude: state.g.amplitude(),
            phase: state.g.phase(),
            reprojection,
            final_error: libm::sqrt(residual) / self.roi_norm,
            iterations: state.iter,
            converged,
            theta_history: state.theta_history,
            error_history: state.error_history,
            exit_wave: state.g,
        })
    }
}

/// Single mean-gradient-descent iteration.
pub fn mgd_step(state: RetrievalState, roi: &RealImage, cfg: &RetrievalConfig) -> Result<RetrievalState> {
    MgdSolver::new(roi, cfg)?.step(state)
}

/// Full retrieval from the seeded random starting guess.
pub fn retrieve(roi: &RealImage, cfg: &RetrievalConfig) -> Result<RetrievalResult> {
    MgdSolver::new(roi, cfg)?.run()
}
