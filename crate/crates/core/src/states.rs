//! Displacement, slingshot preparation of two-peak states through a
//! low-dimensional detour near the phase-space origin, and displaced-parity
//! Wigner evaluation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{evolve, BandedHamiltonian, Method, PropagatorConfig};
use crate::error::{Error, Result};
use crate::hilbert::{dg_state, moments, StateVector};

fn displace_cfg() -> PropagatorConfig {
    PropagatorConfig {
        method: Method::KrylovExpm,
        step: 0.1,
        tol: 1e-11,
    }
}

/// Unitary displacement D(beta) = exp(beta a+ - beta* a), realized as
/// evolution under the Hermitian generator i(beta a+ - beta* a) for unit
/// time. The result must keep ten standard deviations of headroom below the
/// truncation edge.
pub fn displace(state: &StateVector, beta: Complex64) -> Result<StateVector> {
    if beta.norm_sqr() == 0.0 {
        return Ok(state.clone());
    }
    let dim = state.dim();
    let h = BandedHamiltonian {
        diag: vec![0.0; dim],
        offdiag: (0..dim - 1)
            .map(|n| -Complex64::I * beta.conj() * ((n + 1) as f64).sqrt())
            .collect(),
    };
    let out = evolve(state, &h, 1.0, &displace_cfg())?;
    let (mean, _) = moments(&out);
    if mean + 10.0 * mean.sqrt() >= dim as f64 {
        return Err(Error::Truncation {
            tail: mean + 10.0 * mean.sqrt() - dim as f64,
            budget: 0.0,
        });
    }
    Ok(out)
}

/// Recipe for reaching a two-peak state at high photon number from a
/// cutoff-dimensional state near the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlingshotSpec {
    pub n1: f64,
    pub n2: f64,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
    pub sigma: f64,
    /// Displacement amplitude; defaults to sqrt((n1+n2)/2).
    pub beta: Complex64,
    /// Dimension budget for the near-origin state.
    pub cutoff: usize,
}

impl SlingshotSpec {
    pub fn new(n1: f64, n2: f64, r1: f64, r2: f64, theta: f64, sigma: f64) -> Self {
        SlingshotSpec {
            n1,
            n2,
            r1,
            r2,
            theta,
            sigma,
            beta: Complex64::new((0.5 * (n1 + n2)).sqrt(), 0.0),
            cutoff: 35,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cutoff < 1 {
            return Err(Error::Domain("slingshot cutoff must be >= 1".into()));
        }
        let b2 = self.beta.norm_sqr();
        let lo = self.n1.min(self.n2) / 4.0;
        let hi = 4.0 * self.n1.max(self.n2);
        if !(b2 >= lo && b2 <= hi) {
            return Err(Error::Domain(format!(
                "slingshot |beta|^2 = {b2:.2} outside [{lo:.2}, {hi:.2}]"
            )));
        }
        Ok(())
    }
}

/// Builds the target two-peak state, pulls it to the origin with D(-beta),
/// audits how much population the cutoff would discard, and slings the
/// truncated state back out with D(+beta).
///
/// Returns (near-origin state in cutoff dims, re-displaced state in full
/// dims, discarded population fraction).
pub fn slingshot_prepare(
    spec: &SlingshotSpec,
    dim: usize,
) -> Result<(StateVector, StateVector, f64)> {
    spec.validate()?;
    if spec.cutoff >= dim {
        return Err(Error::Domain(format!(
            "slingshot cutoff {} must be below dim {dim}",
            spec.cutoff
        )));
    }
    let target = dg_state(spec.n1, spec.n2, spec.r1, spec.r2, spec.theta, spec.sigma, dim)?;
    let pulled = displace(&target, -spec.beta)?;
    let residual: f64 = pulled.amps[spec.cutoff..]
        .iter()
        .map(|c| c.norm_sqr())
        .sum();
    if residual > 0.01 {
        return Err(Error::Truncation {
            tail: residual,
            budget: 0.01,
        });
    }
    let low = StateVector::normalized(pulled.amps[..spec.cutoff].to_vec())?;
    let mut embedded = vec![Complex64::new(0.0, 0.0); dim];
    embedded[..spec.cutoff].copy_from_slice(&low.amps);
    let final_state = displace(&StateVector { amps: embedded }, spec.beta)?;
    Ok((low, final_state, residual))
}

/// Displaced-parity Wigner function W(alpha) = (2/pi) sum (-1)^n P_n of the
/// state displaced by -alpha. Values lie in [-2/pi, 2/pi].
pub fn wigner(state: &StateVector, grid: &[Complex64]) -> Result<Vec<f64>> {
    if state.dim() > 128 {
        return Err(Error::Domain(format!(
            "wigner limited to dim <= 128, got {}",
            state.dim()
        )));
    }
    grid.par_iter()
        .map(|alpha| {
            let shifted = displace(state, -alpha)?;
            let parity: f64 = shifted
                .amps
                .iter()
                .enumerate()
                .map(|(n, c)| if n % 2 == 0 { c.norm_sqr() } else { -c.norm_sqr() })
                .sum();
            Ok(2.0 / std::f64::consts::PI * parity)
        })
        .collect()
}
