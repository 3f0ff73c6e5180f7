//! Closed-form paraxial predictions for Gaussian envelopes on the photon
//! lattice. These serve as fast design formulas and as independent checks on
//! the numeric propagators; their approximation chain (sqrt(n) -> sqrt(n0),
//! cos k expanded to second order) is deliberately kept as is, so numeric
//! deviations are physical, not bugs.

use crate::error::{Error, Result};

/// Gaussian envelope |c_n| ~ exp(-(n-n0)^2/(4 sigma^2)) carrying linear
/// phase k0 (rad/photon) and quadratic phase phi0 (rad/photon^2) about n0.
/// sigma is the standard deviation of the population distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeam {
    pub n0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub phi0: f64,
}

impl GaussianBeam {
    pub fn new(n0: f64, sigma: f64, k0: f64, phi0: f64) -> Result<Self> {
        if !(sigma > 0.0) || !n0.is_finite() || !k0.is_finite() || !phi0.is_finite() {
            return Err(Error::Domain(
                "beam requires sigma > 0 and finite parameters".into(),
            ));
        }
        Ok(GaussianBeam { n0, sigma, k0, phi0 })
    }
}

/// Drift and spread of a phase-flat-curvature beam (phi0 = 0) under pump
/// magnitude eps_p for time t:
/// nc = n0 - 2 k0 sqrt(n0) eps t, sigma_t^2 = sigma^2 + (sqrt(n0) eps t / sigma)^2.
pub fn free_prop_center_width(beam: &GaussianBeam, eps_p: f64, t: f64) -> (f64, f64) {
    let root = beam.n0.sqrt() * eps_p * t;
    let nc = beam.n0 - 2.0 * beam.k0 * root;
    let sigma_t = (beam.sigma * beam.sigma + (root / beam.sigma).powi(2)).sqrt();
    (nc, sigma_t)
}

/// Mean photon number after pumping with phase phi_p:
/// nbar - 2 sqrt(nbar) sin(phi_p) eps t.
pub fn refracted_mean(nbar: f64, phi_p: f64, eps_p: f64, t: f64) -> f64 {
    nbar - 2.0 * nbar.sqrt() * phi_p.sin() * eps_p * t
}

/// Width evolution of a beam with quadratic phase:
/// sigma(t)^2 = sigma^2 [(1 - 4 sqrt(n0) eps phi0 t)^2 + (sqrt(n0) eps t / sigma^2)^2].
pub fn lens_width(beam: &GaussianBeam, eps_p: f64, t: f64) -> f64 {
    let root = beam.n0.sqrt() * eps_p * t;
    let focus = 1.0 - 4.0 * beam.phi0 * root;
    beam.sigma * (focus * focus + (root / (beam.sigma * beam.sigma)).powi(2)).sqrt()
}

/// Time of minimum width: phi0 / (sqrt(n0) eps (4 phi0^2 + 1/(4 sigma^4))).
/// Positive for a converging (phi0 > 0) beam, negative for a diverging one.
pub fn focal_time(beam: &GaussianBeam, eps_p: f64) -> Result<f64> {
    if beam.phi0 == 0.0 {
        return Err(Error::Domain("focal_time: phi0 = 0 has no focus".into()));
    }
    if !(eps_p > 0.0) {
        return Err(Error::Domain("focal_time: pump magnitude must be positive".into()));
    }
    let denom = beam.n0.sqrt() * eps_p * (4.0 * beam.phi0 * beam.phi0 + 0.25 / beam.sigma.powi(4));
    Ok(beam.phi0 / denom)
}

/// Width at the focus; independent of the pump strength. Approaches
/// 1/(4 |phi0| sigma) for wide beams (Fourier pair up to the 4 phi0 scale).
pub fn min_width(beam: &GaussianBeam) -> f64 {
    let s2 = beam.sigma * beam.sigma;
    1.0 / (beam.sigma * (16.0 * beam.phi0 * beam.phi0 + 1.0 / (s2 * s2)).sqrt())
}

/// Quadratic phase that focuses an nbar-photon beam at time t_f (wide-beam
/// limit of focal_time): phi0 = 1/(4 sqrt(nbar) eps t_f).
pub fn phi0_for_focal_time(nbar: f64, eps_p: f64, t_f: f64) -> Result<f64> {
    if !(nbar > 0.0 && eps_p > 0.0 && t_f != 0.0) {
        return Err(Error::Domain(
            "phi0_for_focal_time: need nbar > 0, eps > 0, t_f != 0".into(),
        ));
    }
    Ok(1.0 / (4.0 * nbar.sqrt() * eps_p * t_f))
}

/// Detuning-selected focus of the pump-frequency prism: nbar + delta/k4.
pub fn newton_focus(nbar: f64, delta_tilde: f64, k4: f64) -> Result<f64> {
    if k4 == 0.0 {
        return Err(Error::Domain("newton_focus: k4 = 0 disperses nothing".into()));
    }
    Ok(nbar + delta_tilde / k4)
}
