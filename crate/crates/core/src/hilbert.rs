//! Truncated Fock-space states, canonical constructors, moments, and the
//! unit helpers used everywhere else.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

/// MHz (f = omega/2pi) to rad/us.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// kHz to rad/us.
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Hz to rad/us.
pub fn hz(f: f64) -> f64 {
    TAU * f * 1e-6
}

/// ns to us.
pub fn ns(t: f64) -> f64 {
    t * 1e-3
}

/// Mode and drive constants. Angular frequencies in rad/us, `kappa` in 1/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Pump detuning.
    pub delta: f64,
    /// Fourth-order self-Kerr.
    pub k4: f64,
    /// Sixth-order self-Kerr.
    pub k6: f64,
    /// Qubit cross-Kerr (single-photon shift of the readout qubit).
    pub chi: f64,
    /// Excited-state Kerr correction.
    pub ke: f64,
    /// Pump amplitude; the argument is the pump phase.
    pub eps_p: Complex64,
    /// Single-photon decay rate 1/T1; zero disables dissipation.
    pub kappa: f64,
}

impl SystemParams {
    /// Reference device constants used by the built-in scenarios.
    pub fn reference() -> Self {
        SystemParams {
            delta: 0.0,
            k4: khz(2.18),
            k6: hz(1.0),
            chi: mhz(0.596),
            ke: khz(0.52),
            eps_p: Complex64::new(mhz(0.88), 0.0),
            kappa: 1.0 / 1600.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_eps(mut self, eps_p: Complex64) -> Self {
        self.eps_p = eps_p;
        self
    }

    /// Pump magnitude in rad/us.
    pub fn eps_mag(&self) -> f64 {
        self.eps_p.norm()
    }
}

/// Classical branch label for the qubit-conditioned diagonal shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitLevel {
    Ground,
    Excited,
}

/// Normalized amplitude vector c_n over Fock states n = 0..dim-1.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes after normalizing them.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("state dimension must be at least 1".into()));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("state amplitudes must be finite".into()));
        }
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        for c in &mut amps {
            *c /= norm;
        }
        Ok(StateVector { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Coherent state with amplitude `alpha`; mean photon number |alpha|^2.
pub fn coherent_state(alpha: Complex64, dim: usize) -> Result<StateVector> {
    if dim < 1 {
        return Err(Error::Domain("coherent_state: dim must be at least 1".into()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let r = alpha.norm();
    if r == 0.0 {
        amps[0] = Complex64::new(1.0, 0.0);
        return Ok(StateVector { amps });
    }
    let a2 = r * r;
    let phase = alpha.arg();
    let ln_r = r.ln();
    let mut ln_fact = 0.0;
    for (n, slot) in amps.iter_mut().enumerate() {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let ln_mag = -0.5 * a2 + n as f64 * ln_r - 0.5 * ln_fact;
        *slot = Complex64::from_polar(ln_mag.exp(), phase * n as f64);
    }
    let mass: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let tail = 1.0 - mass;
    if tail >= 1e-9 {
        return Err(Error::Truncation { tail, budget: 1e-9 });
    }
    StateVector::normalized(amps)
}

/// Gaussian wavepacket in photon number: amplitude exp(-(n-m)^2/(4 sigma^2)),
/// so the population distribution has standard deviation `sigma`.
pub fn gaussian_state(center: f64, sigma: f64, dim: usize) -> Result<StateVector> {
    if sigma <= 0.0 {
        return Err(Error::Domain("gaussian_state: sigma must be positive".into()));
    }
    if dim < 1 {
        return Err(Error::Domain("gaussian_state: dim must be at least 1".into()));
    }
    if center < 0.0 || center > (dim - 1) as f64 {
        return Err(Error::Domain(format!(
            "gaussian_state: center {center} outside basis 0..{}",
            dim - 1
        )));
    }
    let inv = 1.0 / (4.0 * sigma * sigma);
    let amps = (0..dim)
        .map(|n| {
            let d = n as f64 - center;
            Complex64::new((-d * d * inv).exp(), 0.0)
        })
        .collect();
    StateVector::normalized(amps)
}

/// Two-peak superposition r1|G_n1> + r2 e^{i theta}|G_n2>, normalized with
/// the overlap cross term included.
#[allow(clippy::too_many_arguments)]
pub fn dg_state(
    n1: f64,
    n2: f64,
    r1: f64,
    r2: f64,
    theta: f64,
    sigma: f64,
    dim: usize,
) -> Result<StateVector> {
    if n1 == n2 {
        return Err(Error::Domain("dg_state: peaks must differ".into()));
    }
    if r1 < 0.0 || r2 < 0.0 || (r1 == 0.0 && r2 == 0.0) {
        return Err(Error::Domain(
            "dg_state: weights must be nonnegative and not both zero".into(),
        ));
    }
    let g1 = gaussian_state(n1, sigma, dim)?;
    let g2 = gaussian_state(n2, sigma, dim)?;
    let ph = Complex64::from_polar(1.0, theta);
    let amps = g1
        .amps
        .iter()
        .zip(&g2.amps)
        .map(|(a, b)| a * r1 + b * ph * r2)
        .collect();
    StateVector::normalized(amps)
}

/// Fock basis state |n>.
pub fn fock_state(n: usize, dim: usize) -> Result<StateVector> {
    if n >= dim {
        return Err(Error::Domain(format!("fock_state: n={n} outside dim={dim}")));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[n] = Complex64::new(1.0, 0.0);
    Ok(StateVector { amps })
}

/// Multiplies each amplitude by exp(i phi(n)); moduli are untouched.
pub fn apply_phase_profile<F: Fn(usize) -> f64>(state: &StateVector, phi: F) -> StateVector {
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, phi(n)))
        .collect();
    StateVector { amps }
}

/// Mean and variance of the photon-number distribution.
pub fn moments(state: &StateVector) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (n, c) in state.amps.iter().enumerate() {
        let p = c.norm_sqr();
        m1 += n as f64 * p;
        m2 += (n as f64) * (n as f64) * p;
    }
    (m1, m2 - m1 * m1)
}

/// Population of |n>; zero beyond the basis.
pub fn population(state: &StateVector, n: usize) -> f64 {
    state.amps.get(n).map_or(0.0, |c| c.norm_sqr())
}

pub fn inner(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// |<a|b>|^2.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr())
}

/// Default basis size for workflows around mean photon number `nbar`:
/// the smallest multiple of 64 at or above nbar + 12 sqrt(nbar) + 32.
pub fn default_dim(nbar: f64) -> usize {
    let need = (nbar + 12.0 * nbar.sqrt() + 32.0).ceil() as usize;
    need.div_ceil(64) * 64
}
