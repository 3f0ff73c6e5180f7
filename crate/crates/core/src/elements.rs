//! Optical elements on the photon-number lattice and their design solvers:
//! prism (linear phase), Kerr wait (lens), weak pump (free propagation),
//! displacement, explicit phase profiles, and non-destructive measurement
//! snapshots, composed by `run_elements`.

use num_complex::Complex64;

use crate::dynamics::{build_hamiltonian, evolve, kerr_free_phase, PropagatorConfig};
use crate::error::{Error, Result};
use crate::hilbert::{moments, QubitLevel, StateVector, SystemParams};
use crate::states;

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// c_n -> c_n e^{i n phi_p}.
    Prism { phi_p: f64 },
    /// Diagonal Kerr evolution for t at the given detuning.
    KerrWait { t: f64, delta: f64 },
    /// Driven evolution under the full banded Hamiltonian.
    Pump { eps_p: Complex64, delta: f64, t: f64 },
    Displace { beta: Complex64 },
    /// c_n -> c_n e^{i phases[n]}; entries beyond the list act as zero.
    PhaseProfile { phases: Vec<f64> },
    /// Snapshot without disturbing the state.
    Measure { kind: MeasureKind, label: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Populations,
    Moments,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureData {
    Populations(Vec<f64>),
    Moments { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub label: String,
    pub time_us: f64,
    pub data: MeasureData,
    pub norm: f64,
}

/// Kerr-wait lens solved for a given center: the detuning cancels the phase
/// slope at n_center, leaving the quadratic coefficient phi0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensDesign {
    pub n_center: f64,
    pub t_phi: f64,
    pub delta_l: f64,
    pub phi0: f64,
}

pub fn design_lens(n_center: f64, t_phi: f64, params: &SystemParams) -> Result<LensDesign> {
    if !(t_phi > 0.0) {
        return Err(Error::Domain("design_lens: t_phi must be positive".into()));
    }
    if params.k4 == 0.0 {
        return Err(Error::Domain("design_lens: k4 = 0 has no lens".into()));
    }
    Ok(LensDesign {
        n_center,
        t_phi,
        delta_l: stationary_delta(n_center, params),
        phi0: 0.5 * (params.k6 * n_center + params.k4 - params.k6) * t_phi,
    })
}

/// Detuning at which the accumulated Kerr phase is stationary at n_center:
/// (K4/2)(2n-1) + (K6/6)(3n^2 - 6n + 2).
pub fn stationary_delta(n_center: f64, params: &SystemParams) -> f64 {
    let n = n_center;
    0.5 * params.k4 * (2.0 * n - 1.0) + params.k6 / 6.0 * (3.0 * n * n - 6.0 * n + 2.0)
}

/// Pump detuning that also cancels the first-order drift of the packet
/// center during the pump itself: the stationary detuning minus
/// eps / sqrt(n_center).
pub fn drift_free_delta(n_center: f64, eps_mag: f64, params: &SystemParams) -> f64 {
    stationary_delta(n_center, params) - eps_mag / n_center.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingPlan {
    pub t_u: f64,
    pub t_f: f64,
    pub t_v: f64,
    pub m: f64,
    pub n0: f64,
}

/// Solves 1/t_u + 1/t_v = 1/t_f for the image time; real images need
/// t_u > t_f.
pub fn imaging_plan(t_u: f64, t_f: f64, n0: f64) -> Result<ImagingPlan> {
    if !(t_f > 0.0) {
        return Err(Error::Domain("imaging_plan: t_f must be positive".into()));
    }
    if t_u <= t_f {
        return Err(Error::Domain(format!(
            "imaging_plan: t_u = {t_u} us within the focal time {t_f} us forms no real image"
        )));
    }
    let t_v = 1.0 / (1.0 / t_f - 1.0 / t_u);
    Ok(ImagingPlan {
        t_u,
        t_f,
        t_v,
        m: t_v / t_u,
        n0,
    })
}

/// Inverted, magnified amplitude map about n0: the image at n samples the
/// object at n0 - (n - n0)/M (linear interpolation, zero outside), then
/// renormalizes. The example pair "peaks at n0 +- M*(offset)" fixes this
/// orientation of the map.
pub fn ideal_image(object: &[Complex64], m: f64, n0: f64) -> Result<Vec<Complex64>> {
    if !(m > 0.0) {
        return Err(Error::Domain("ideal_image: magnification must be positive".into()));
    }
    let len = object.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (n, slot) in out.iter_mut().enumerate() {
        let src = n0 - (n as f64 - n0) / m;
        if src < 0.0 || src > (len - 1) as f64 {
            continue;
        }
        let lo = src.floor() as usize;
        let frac = src - lo as f64;
        *slot = if lo + 1 < len {
            object[lo] * (1.0 - frac) + object[lo + 1] * frac
        } else {
            object[lo]
        };
    }
    let norm: f64 = out.iter().map(|c| c.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::Domain("ideal_image: image is empty".into()));
    }
    let inv = 1.0 / norm.sqrt();
    for c in &mut out {
        *c *= inv;
    }
    Ok(out)
}

/// Executes a sequence of elements, collecting measurement snapshots in
/// order. The time cursor advances with KerrWait and Pump durations; phase
/// and displacement steps count as instantaneous.
pub fn run_elements(
    state: &StateVector,
    steps: &[Element],
    params: &SystemParams,
    cfg: &PropagatorConfig,
) -> Result<(StateVector, Vec<MeasurementRecord>)> {
    let mut psi = state.clone();
    let mut records = Vec::new();
    let mut cursor = 0.0;
    for step in steps {
        match step {
            Element::Prism { phi_p } => {
                psi = crate::hilbert::apply_phase_profile(&psi, |n| phi_p * n as f64);
            }
            Element::KerrWait { t, delta } => {
                if *t < 0.0 {
                    return Err(Error::Domain("KerrWait duration must be >= 0".into()));
                }
                psi = kerr_free_phase(&psi, &params.with_delta(*delta), *t)?;
                cursor += t;
            }
            Element::Pump { eps_p, delta, t } => {
                if *t < 0.0 {
                    return Err(Error::Domain("Pump duration must be >= 0".into()));
                }
                let h = build_hamiltonian(
                    &params.with_delta(*delta).with_eps(*eps_p),
                    QubitLevel::Ground,
                    psi.dim(),
                );
                psi = evolve(&psi, &h, *t, cfg)?;
                cursor += t;
            }
            Element::Displace { beta } => {
                psi = states::displace(&psi, *beta)?;
            }
            Element::PhaseProfile { phases } => {
                psi = crate::hilbert::apply_phase_profile(&psi, |n| {
                    phases.get(n).copied().unwrap_or(0.0)
                });
            }
            Element::Measure { kind, label } => {
                let data = match kind {
                    MeasureKind::Populations => MeasureData::Populations(psi.populations()),
                    MeasureKind::Moments => {
                        let (mean, variance) = moments(&psi);
                        MeasureData::Moments { mean, variance }
                    }
                };
                records.push(MeasurementRecord {
                    label: label.clone(),
                    time_us: cursor,
                    data,
                    norm: psi.norm_sqr().sqrt(),
                });
            }
        }
    }
    Ok((psi, records))
}
