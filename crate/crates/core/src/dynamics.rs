//! Propagators for the banded mode Hamiltonian: adaptive Lanczos (default),
//! Chebyshev, a dense-exponential oracle for small dims, exact diagonal
//! evolution, Monte Carlo trajectories with photon loss, and the flattened
//! k-space propagator.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{QubitLevel, StateVector, SystemParams};
use crate::linalg::{self, CMat};

/// Tridiagonal Hermitian Hamiltonian: real diagonal d_n, complex coupling
/// h_n between n and n+1 (stored as the <n|H|n+1> element; the subdiagonal
/// is its conjugate).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedHamiltonian {
    pub diag: Vec<f64>,
    pub offdiag: Vec<Complex64>,
}

impl BandedHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = v[i] * self.diag[i];
            if i + 1 < n {
                acc += self.offdiag[i] * v[i + 1];
            }
            if i > 0 {
                acc += self.offdiag[i - 1].conj() * v[i - 1];
            }
            out[i] = acc;
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.offdiag.iter().all(|h| h.norm_sqr() == 0.0)
    }

    /// Gershgorin bounds on the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i + 1 < n {
                r += self.offdiag[i].norm();
            }
            if i > 0 {
                r += self.offdiag[i - 1].norm();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Dense -i t H, the exponent handed to the oracle.
    fn dense_minus_i_t(&self, t: f64) -> CMat {
        let n = self.diag.len();
        let mit = Complex64::new(0.0, -t);
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m.set(i, i, mit * self.diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, mit * self.offdiag[i]);
                m.set(i + 1, i, mit * self.offdiag[i].conj());
            }
        }
        m
    }
}

/// Kerr-expanded diagonal for one qubit branch:
/// d_n = delta n - (K4/2) n(n-1) - (K6/6) n(n-1)(n-2), with the excited
/// branch adding -chi n + (Ke/2) n(n-1).
fn diag_term(params: &SystemParams, qubit: QubitLevel, n: f64) -> f64 {
    let mut d = params.delta * n
        - 0.5 * params.k4 * n * (n - 1.0)
        - params.k6 / 6.0 * n * (n - 1.0) * (n - 2.0);
    if qubit == QubitLevel::Excited {
        d += -params.chi * n + 0.5 * params.ke * n * (n - 1.0);
    }
    d
}

pub fn build_hamiltonian(params: &SystemParams, qubit: QubitLevel, dim: usize) -> BandedHamiltonian {
    let diag = (0..dim).map(|n| diag_term(params, qubit, n as f64)).collect();
    let offdiag = (0..dim.saturating_sub(1))
        .map(|n| params.eps_p * ((n + 1) as f64).sqrt())
        .collect();
    BandedHamiltonian { diag, offdiag }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    KrylovExpm,
    ChebyshevExpm,
    /// Dense scaling-and-squaring; dim <= 128, test use.
    DenseExpmOracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Largest substep in us.
    pub step: f64,
    /// Accumulated amplitude-error budget for the whole evolve call.
    pub tol: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            method: Method::KrylovExpm,
            step: 0.25,
            tol: 1e-10,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(Error::Domain(format!(
                "propagator tol {} outside (0, 1e-4]",
                self.tol
            )));
        }
        if !(self.step > 0.0) {
            return Err(Error::Domain("propagator step must be positive".into()));
        }
        Ok(())
    }
}

/// e^{-iHt} |psi> with amplitude error within cfg.tol.
pub fn evolve(
    state: &StateVector,
    h: &BandedHamiltonian,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if state.dim() != h.dim() {
        return Err(Error::DimensionMismatch(state.dim(), h.dim()));
    }
    if t < 0.0 {
        return Err(Error::Domain("evolve: negative duration".into()));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    if h.is_diagonal() {
        // exact: phases only
        let amps = state
            .amps
            .iter()
            .zip(&h.diag)
            .map(|(c, d)| c * Complex64::from_polar(1.0, -d * t))
            .collect();
        return Ok(StateVector { amps });
    }
    match cfg.method {
        Method::KrylovExpm => krylov_evolve(state, h, t, cfg),
        Method::ChebyshevExpm => chebyshev_evolve(state, h, t, cfg),
        Method::DenseExpmOracle => {
            if h.dim() > 128 {
                return Err(Error::Domain(format!(
                    "dense oracle limited to dim <= 128, got {}",
                    h.dim()
                )));
            }
            let e = linalg::expm(&h.dense_minus_i_t(t))?;
            Ok(StateVector {
                amps: e.matvec(&state.amps),
            })
        }
    }
}

const KRYLOV_MAX: usize = 48;

fn krylov_evolve(
    state: &StateVector,
    h: &BandedHamiltonian,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    let n = state.dim();
    let mut psi = state.amps.clone();
    let mut remaining = t;
    let mut hv = vec![Complex64::new(0.0, 0.0); n];
    while remaining > 1e-15 * t {
        // local spread of H on the current state sets the natural substep
        h.apply(&psi, &mut hv);
        let mean: Complex64 = psi.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        let spread = psi
            .iter()
            .zip(&hv)
            .map(|(a, b)| (b - mean.re * a).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let mut dt = remaining.min(cfg.step).min(12.0 / spread.max(1e-9));
        loop {
            match krylov_substep(&psi, h, dt, cfg.tol * dt / t) {
                Some(next) => {
                    psi = next;
                    break;
                }
                None => {
                    dt *= 0.5;
                    if dt < 1e-8 {
                        return Err(Error::Convergence(
                            "Krylov substep shrank below 1e-8 us without meeting tol".into(),
                        ));
                    }
                }
            }
        }
        remaining -= dt;
    }
    Ok(StateVector { amps: psi })
}

/// One Lanczos substep; None when 48 vectors cannot reach the budget.
fn krylov_substep(
    psi: &[Complex64],
    h: &BandedHamiltonian,
    dt: f64,
    budget: f64,
) -> Option<Vec<Complex64>> {
    let n = psi.len();
    let m_max = KRYLOV_MAX.min(n);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m_max);
    let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
    let mut betas: Vec<f64> = Vec::with_capacity(m_max);
    basis.push(psi.to_vec());
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut happy = false;
    let scale = {
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        h.apply(psi, &mut tmp);
        tmp.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0)
    };
    for j in 0.. {
        h.apply(&basis[j], &mut w);
        if j > 0 {
            let b = betas[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * vi;
            }
        }
        let alpha: f64 = basis[j]
            .iter()
            .zip(&w)
            .map(|(v, wi)| (v.conj() * wi).re)
            .sum();
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= alpha * vi;
        }
        // full reorthogonalization keeps the basis clean over many steps
        for v in &basis {
            let ip: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= ip * vi;
            }
        }
        alphas.push(alpha);
        let beta = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        betas.push(beta);
        let m = j + 1;
        if beta < 1e-12 * scale {
            happy = true;
        }
        let check = happy || m == m_max || (m >= 8 && m % 4 == 0);
        if check {
            let y = linalg::expm_itridiag_e1(&alphas, &betas[..m - 1], dt).ok()?;
            let err = if happy { 0.0 } else { beta * y[m - 1].norm() };
            if err <= budget || happy {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (yk, v) in y.iter().zip(&basis) {
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += yk * vi;
                    }
                }
                return Some(out);
            }
            if m == m_max {
                return None;
            }
        }
        let inv = 1.0 / beta;
        basis.push(w.iter().map(|c| c * inv).collect());
    }
    unreachable!()
}

fn chebyshev_evolve(
    state: &StateVector,
    h: &BandedHamiltonian,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    let chunks = (t / cfg.step).ceil().max(1.0) as usize;
    let dt = t / chunks as f64;
    let tol = cfg.tol / chunks as f64;
    let (lo, hi) = h.spectral_bounds();
    let a = 0.5 * (hi + lo);
    let b = (0.5 * (hi - lo) * 1.01).max(1e-12);
    let mut psi = state.amps.clone();
    for _ in 0..chunks {
        psi = chebyshev_chunk(&psi, h, a, b, dt, tol)?;
    }
    Ok(StateVector { amps: psi })
}

fn chebyshev_chunk(
    psi: &[Complex64],
    h: &BandedHamiltonian,
    a: f64,
    b: f64,
    dt: f64,
    tol: f64,
) -> Result<Vec<Complex64>> {
    let n = psi.len();
    let z = b * dt;
    let bessel = bessel_j_table(z, tol / 8.0)?;
    let kmax = bessel.len() - 1;
    // phi recurrence on the shifted operator (H - a)/b
    let apply_shifted = |v: &[Complex64], out: &mut [Complex64]| {
        h.apply(v, out);
        let ib = 1.0 / b;
        for (o, vi) in out.iter_mut().zip(v) {
            *o = (*o - a * vi) * ib;
        }
    };
    let mut phi_prev = psi.to_vec();
    let mut phi = vec![Complex64::new(0.0, 0.0); n];
    apply_shifted(&phi_prev, &mut phi);
    let mut acc: Vec<Complex64> = phi_prev.iter().map(|c| c * bessel[0]).collect();
    let mut ik = Complex64::new(0.0, -1.0); // (-i)^k at k=1
    if kmax >= 1 {
        for (accn, pn) in acc.iter_mut().zip(&phi) {
            *accn += 2.0 * bessel[1] * ik * pn;
        }
    }
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    for k in 2..=kmax {
        apply_shifted(&phi, &mut tmp);
        for i in 0..n {
            tmp[i] = 2.0 * tmp[i] - phi_prev[i];
        }
        std::mem::swap(&mut phi_prev, &mut phi);
        std::mem::swap(&mut phi, &mut tmp);
        ik *= Complex64::new(0.0, -1.0);
        let c = 2.0 * bessel[k] * ik;
        for (accn, pn) in acc.iter_mut().zip(&phi) {
            *accn += c * pn;
        }
    }
    let global = Complex64::from_polar(1.0, -a * dt);
    Ok(acc.iter().map(|c| c * global).collect())
}

/// J_0..J_K(z) by Miller's backward recurrence, K chosen so the dropped
/// tail of the Chebyshev series is below `tail_tol`.
fn bessel_j_table(z: f64, tail_tol: f64) -> Result<Vec<f64>> {
    if z < 1e-8 {
        // series truncates immediately
        let mut out = vec![0.0; 2];
        out[0] = 1.0 - z * z / 4.0;
        out[1] = z / 2.0;
        return Ok(out);
    }
    let m_keep = (z + 12.0 * z.cbrt() + 60.0).ceil() as usize;
    let start = m_keep + 30 + (m_keep as f64).sqrt() as usize;
    let mut jp1 = 0.0f64;
    let mut j = 1e-280f64;
    let mut table = vec![0.0; m_keep + 1];
    let mut even_sum = 0.0f64; // J_0 + 2 sum J_2k
    for k in (0..=start).rev() {
        let jm1 = (2.0 * (k as f64 + 1.0) / z) * j - jp1;
        jp1 = j;
        j = jm1;
        if k <= m_keep {
            table[k] = j;
        }
        if k % 2 == 0 {
            even_sum += if k == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            even_sum *= s;
            for v in table.iter_mut() {
                *v *= s;
            }
        }
    }
    if even_sum == 0.0 || !even_sum.is_finite() {
        return Err(Error::Convergence("Bessel normalization failed".into()));
    }
    let inv = 1.0 / even_sum;
    for v in table.iter_mut() {
        *v *= inv;
    }
    // cut where two consecutive coefficients drop below the tail budget
    let mut k = table.len() - 1;
    while k > 1 && table[k].abs() < tail_tol && table[k - 1].abs() < tail_tol {
        k -= 1;
    }
    table.truncate(k + 1);
    Ok(table)
}

/// Exact diagonal Kerr evolution c_n -> c_n e^{-i d_n t} (ground branch).
pub fn kerr_free_phase(state: &StateVector, params: &SystemParams, t: f64) -> Result<StateVector> {
    if t < 0.0 {
        return Err(Error::Domain("kerr_free_phase: negative duration".into()));
    }
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let d = diag_term(params, QubitLevel::Ground, n as f64);
            c * Complex64::from_polar(1.0, -d * t)
        })
        .collect();
    Ok(StateVector { amps })
}

/// Monte Carlo wave-function average with jump operator sqrt(kappa) a.
/// Returns per-n mean populations and their standard errors.
pub fn evolve_mcwf(
    state: &StateVector,
    h: &BandedHamiltonian,
    t: f64,
    kappa: f64,
    trials: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if kappa <= 0.0 {
        return Err(Error::Domain("evolve_mcwf: kappa must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::Domain("evolve_mcwf: trials must be >= 1".into()));
    }
    if state.dim() != h.dim() {
        return Err(Error::DimensionMismatch(state.dim(), h.dim()));
    }
    let n = state.dim();
    let runs: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| mcwf_trajectory(state, h, t, kappa, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; n];
    for run in &runs {
        for (m, p) in mean.iter_mut().zip(run) {
            *m += p;
        }
    }
    for m in &mut mean {
        *m /= trials as f64;
    }
    let mut se = vec![0.0; n];
    if trials > 1 {
        for run in &runs {
            for ((s, p), m) in se.iter_mut().zip(run).zip(&mean) {
                *s += (p - m) * (p - m);
            }
        }
        let f = 1.0 / (trials as f64 * (trials - 1) as f64);
        for s in &mut se {
            *s = (*s * f).sqrt();
        }
    }
    Ok((mean, se))
}

const MCWF_STEP: f64 = 0.02;
const JUMP_TIME_RESOLUTION: f64 = 1e-4;

fn mcwf_trajectory(
    state: &StateVector,
    h: &BandedHamiltonian,
    t: f64,
    kappa: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = state.amps.clone();
    let mut threshold: f64 = rng.random();
    let diagonal = h.is_diagonal();
    // diagonal Hamiltonians commute with the decay, so large exact steps work
    let step = if diagonal { (t / 8.0).max(MCWF_STEP) } else { MCWF_STEP };
    let n_steps = (t / step).ceil().max(1.0) as usize;
    let dt = t / n_steps as f64;
    let cfg = PropagatorConfig {
        tol: 1e-9,
        ..PropagatorConfig::default()
    };
    for _ in 0..n_steps {
        // segment = stretch between jumps inside this step
        let mut seg_state = psi.clone();
        let mut seg_t0 = 0.0;
        loop {
            psi = seg_state.clone();
            advance_nonunitary(&mut psi, h, kappa, dt - seg_t0, &cfg)?;
            if norm_sqr(&psi) >= threshold {
                break;
            }
            // bisect the crossing time within (seg_t0, dt]
            let mut lo = seg_t0;
            let mut hi = dt;
            while hi - lo > JUMP_TIME_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                let mut probe = seg_state.clone();
                advance_nonunitary(&mut probe, h, kappa, mid - seg_t0, &cfg)?;
                if norm_sqr(&probe) < threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut at_jump = seg_state.clone();
            advance_nonunitary(&mut at_jump, h, kappa, hi - seg_t0, &cfg)?;
            apply_lowering(&mut at_jump);
            let norm = norm_sqr(&at_jump).sqrt();
            if norm == 0.0 {
                at_jump[0] = Complex64::new(1.0, 0.0); // numerically empty: park in vacuum
            } else {
                for c in &mut at_jump {
                    *c /= norm;
                }
            }
            threshold = rng.random();
            seg_state = at_jump;
            seg_t0 = hi;
            if dt - seg_t0 <= 0.0 {
                psi = seg_state.clone();
                break;
            }
        }
    }
    let n2 = norm_sqr(&psi);
    Ok(psi.iter().map(|c| c.norm_sqr() / n2).collect())
}

/// Strang split of exp(-i(H - i kappa/2 n) dt): half decay, unitary, half
/// decay. Exact when H is diagonal.
fn advance_nonunitary(
    psi: &mut Vec<Complex64>,
    h: &BandedHamiltonian,
    kappa: f64,
    dt: f64,
    cfg: &PropagatorConfig,
) -> Result<()> {
    if dt == 0.0 {
        return Ok(());
    }
    let half = 0.25 * kappa * dt;
    for (n, c) in psi.iter_mut().enumerate() {
        *c *= (-half * n as f64).exp();
    }
    let evolved = evolve(&StateVector { amps: std::mem::take(psi) }, h, dt, cfg)?;
    *psi = evolved.amps;
    for (n, c) in psi.iter_mut().enumerate() {
        *c *= (-half * n as f64).exp();
    }
    Ok(())
}

fn apply_lowering(psi: &mut [Complex64]) {
    let n = psi.len();
    for i in 0..n - 1 {
        psi[i] = ((i + 1) as f64).sqrt() * psi[i + 1];
    }
    psi[n - 1] = Complex64::new(0.0, 0.0);
}

fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

/// Flattened-coupling propagator: FFT to the k lattice, multiply by
/// e^{-2i sqrt(nbar) |eps| cos(k + arg eps) t}, FFT back. Unitary by
/// construction.
pub fn kspace_propagate(
    state: &StateVector,
    eps_p: Complex64,
    nbar: f64,
    t: f64,
) -> Result<StateVector> {
    if nbar <= 0.0 {
        return Err(Error::Domain("kspace_propagate: nbar must be positive".into()));
    }
    let n = state.dim();
    let mut planner = rustfft::FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf = state.amps.clone();
    forward.process(&mut buf);
    let rate = 2.0 * nbar.sqrt() * eps_p.norm();
    let phase_off = eps_p.arg();
    for (j, c) in buf.iter_mut().enumerate() {
        let k = crate::hilbert::TAU * j as f64 / n as f64;
        *c *= Complex64::from_polar(1.0, -rate * (k + phase_off).cos() * t);
    }
    inverse.process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for c in buf.iter_mut() {
        *c *= inv_n;
    }
    Ok(StateVector { amps: buf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{self, apply_phase_profile, coherent_state, gaussian_state, moments};

    fn random_banded(rng: &mut ChaCha8Rng, dim: usize) -> BandedHamiltonian {
        let diag = (0..dim).map(|_| rng.random::<f64>() * 100.0 - 50.0).collect();
        let offdiag = (0..dim - 1)
            .map(|_| {
                Complex64::from_polar(rng.random::<f64>() * 10.0, rng.random::<f64>() * hilbert::TAU)
            })
            .collect();
        BandedHamiltonian { diag, offdiag }
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
        let amps = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        StateVector::normalized(amps).unwrap()
    }

    #[test]
    fn reference_diagonal_values() {
        let p = SystemParams::reference();
        let h = build_hamiltonian(&p, QubitLevel::Ground, 256);
        assert_eq!(h.diag[0], 0.0);
        // polynomial at n=150: -(2.18e-3/2)*150*149 - (1e-6/6)*150*149*148 MHz
        let expect = -hilbert::mhz(24.9128);
        assert!((h.diag[150] - expect).abs() < 1e-9 * expect.abs());
        let he = build_hamiltonian(&p, QubitLevel::Excited, 256);
        assert!((he.diag[1] - h.diag[1] + p.chi).abs() < 1e-12);
        assert!((h.offdiag[8].re - p.eps_p.re * 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_time_is_bit_identical() {
        let s = coherent_state(Complex64::new(2.0, 0.0), 32).unwrap();
        let h = build_hamiltonian(&SystemParams::reference(), QubitLevel::Ground, 32);
        let out = evolve(&s, &h, 0.0, &PropagatorConfig::default()).unwrap();
        assert_eq!(s.amps, out.amps);
    }

    #[test]
    fn diagonal_evolve_equals_kerr_free_phase() {
        let p = SystemParams::reference().with_eps(Complex64::new(0.0, 0.0));
        let s = coherent_state(Complex64::new(3.0, 0.5), 64).unwrap();
        let h = build_hamiltonian(&p, QubitLevel::Ground, 64);
        let a = evolve(&s, &h, 0.37, &PropagatorConfig::default()).unwrap();
        let b = kerr_free_phase(&s, &p, 0.37).unwrap();
        for (x, y) in a.amps.iter().zip(&b.amps) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let oracle = PropagatorConfig {
            method: Method::DenseExpmOracle,
            ..PropagatorConfig::default()
        };
        for _ in 0..6 {
            let dim = 24 + (rng.random::<f64>() * 16.0) as usize;
            let h = random_banded(&mut rng, dim);
            let s = random_state(&mut rng, dim);
            let t = 0.1 + rng.random::<f64>() * 1.4;
            let a = evolve(&s, &h, t, &PropagatorConfig::default()).unwrap();
            let b = evolve(&s, &h, t, &oracle).unwrap();
            let err = a
                .amps
                .iter()
                .zip(&b.amps)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "krylov vs dense err {err}");
        }
    }

    #[test]
    fn chebyshev_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let oracle = PropagatorConfig {
            method: Method::DenseExpmOracle,
            ..PropagatorConfig::default()
        };
        let cheb = PropagatorConfig {
            method: Method::ChebyshevExpm,
            ..PropagatorConfig::default()
        };
        for _ in 0..4 {
            let dim = 32;
            let h = random_banded(&mut rng, dim);
            let s = random_state(&mut rng, dim);
            let t = 0.2 + rng.random::<f64>();
            let a = evolve(&s, &h, t, &cheb).unwrap();
            let b = evolve(&s, &h, t, &oracle).unwrap();
            let err = a
                .amps
                .iter()
                .zip(&b.amps)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "chebyshev vs dense err {err}");
        }
    }

    #[test]
    fn dense_oracle_rejects_large_dims() {
        let h = build_hamiltonian(&SystemParams::reference(), QubitLevel::Ground, 129);
        let s = coherent_state(Complex64::new(1.0, 0.0), 129).unwrap();
        let cfg = PropagatorConfig {
            method: Method::DenseExpmOracle,
            ..PropagatorConfig::default()
        };
        assert!(matches!(evolve(&s, &h, 0.1, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn config_bounds_enforced() {
        let s = coherent_state(Complex64::new(1.0, 0.0), 24).unwrap();
        let h = build_hamiltonian(&SystemParams::reference(), QubitLevel::Ground, 24);
        for bad in [
            PropagatorConfig { tol: 0.0, ..PropagatorConfig::default() },
            PropagatorConfig { tol: 1e-3, ..PropagatorConfig::default() },
            PropagatorConfig { step: 0.0, ..PropagatorConfig::default() },
        ] {
            assert!(evolve(&s, &h, 0.1, &bad).is_err());
        }
    }

    #[test]
    fn kerr_phase_preserves_populations_and_centers_at_design_detuning() {
        let p = SystemParams::reference().with_delta(hilbert::mhz(0.337011));
        let s = coherent_state(Complex64::new(150f64.sqrt(), 0.0), 512).unwrap();
        let t = 4.684;
        let out = kerr_free_phase(&s, &p, t).unwrap();
        for (a, b) in s.amps.iter().zip(&out.amps) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        // finite difference of the accumulated phase is stationary at n=150
        let phase = |st: &StateVector, n: usize| (st.amps[n] * s.amps[n].conj()).arg();
        let slope_at = |n: usize| {
            let mut p1 = phase(&out, n + 1) - phase(&out, n);
            while p1 > std::f64::consts::PI {
                p1 -= hilbert::TAU;
            }
            while p1 < -std::f64::consts::PI {
                p1 += hilbert::TAU;
            }
            p1
        };
        assert!(slope_at(150).abs() < slope_at(145).abs());
        assert!(slope_at(150).abs() < slope_at(155).abs());
        let s150 = slope_at(149).signum();
        let s151 = slope_at(151).signum();
        assert_ne!(s150, s151, "sign change brackets the stationary point");
    }

    #[test]
    fn kspace_identity_and_unitarity() {
        let s = gaussian_state(100.0, 8.0, 256).unwrap();
        let eps = Complex64::new(hilbert::mhz(0.88), 0.0);
        let same = kspace_propagate(&s, eps, 100.0, 0.0).unwrap();
        let d0 = s
            .amps
            .iter()
            .zip(&same.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d0 < 1e-13);
        let out = kspace_propagate(&s, eps, 100.0, 0.7).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kspace_group_velocity() {
        let k0 = 0.3;
        let nbar = 100.0;
        let eps = hilbert::mhz(0.88);
        let s0 = gaussian_state(nbar, 8.0, 256).unwrap();
        let s = apply_phase_profile(&s0, |n| k0 * n as f64);
        let t = 0.01;
        let out = kspace_propagate(&s, Complex64::new(eps, 0.0), nbar, t).unwrap();
        let (m0, _) = moments(&s);
        let (m1, _) = moments(&out);
        let predicted = -2.0 * nbar.sqrt() * eps * k0.sin() * t;
        let got = m1 - m0;
        assert!(
            ((got - predicted) / predicted).abs() < 0.02,
            "drift {got} vs {predicted}"
        );
    }

    #[test]
    fn kspace_against_exact_coupling() {
        // amplitude-level overlap decays through the k-linear drift phase the
        // flattening discards, so compare the population distributions
        let s = coherent_state(Complex64::new(150f64.sqrt(), 0.0), 512).unwrap();
        let mut p = SystemParams::reference();
        p.k4 = 0.0;
        p.k6 = 0.0;
        let h = build_hamiltonian(&p, QubitLevel::Ground, 512);
        let t = 0.2;
        let exact = evolve(&s, &h, t, &PropagatorConfig::default()).unwrap();
        let flat = kspace_propagate(&s, p.eps_p, 150.0, t).unwrap();
        let bhatta: f64 = exact
            .populations()
            .iter()
            .zip(flat.populations())
            .map(|(a, b)| (a * b).sqrt())
            .sum();
        assert!(bhatta >= 0.99, "distribution fidelity {bhatta}");
    }

    #[test]
    fn mcwf_no_loss_limit_matches_unitary() {
        let s = coherent_state(Complex64::new(2.0, 0.0), 32).unwrap();
        let p = SystemParams::reference();
        let h = build_hamiltonian(&p, QubitLevel::Ground, 32);
        let u = evolve(&s, &h, 0.5, &PropagatorConfig::default()).unwrap();
        let (mean, _) = evolve_mcwf(&s, &h, 0.5, 1e-12, 4, 3).unwrap();
        for (m, e) in mean.iter().zip(u.populations()) {
            assert!((m - e).abs() < 1e-6, "pop err {}", (m - e).abs());
        }
    }

    #[test]
    fn mcwf_single_photon_survival() {
        let s = hilbert::fock_state(1, 4).unwrap();
        let h = BandedHamiltonian {
            diag: vec![0.0; 4],
            offdiag: vec![Complex64::new(0.0, 0.0); 3],
        };
        let kappa = 1.0 / 1600.0;
        let t = 400.0;
        let trials = 1200;
        let (mean, se) = evolve_mcwf(&s, &h, t, kappa, trials, 19).unwrap();
        let expect = (-kappa * t).exp();
        assert!(
            (mean[1] - expect).abs() < 4.0 * se[1].max(1e-4),
            "survival {} vs {expect} (se {})",
            mean[1],
            se[1]
        );
    }

    #[test]
    fn mcwf_is_deterministic() {
        let s = hilbert::fock_state(3, 8).unwrap();
        let h = BandedHamiltonian {
            diag: vec![0.0; 8],
            offdiag: vec![Complex64::new(0.0, 0.0); 7],
        };
        let a = evolve_mcwf(&s, &h, 100.0, 1.0 / 1600.0, 64, 7).unwrap();
        let b = evolve_mcwf(&s, &h, 100.0, 1.0 / 1600.0, 64, 7).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn twenty_beam_unitarity() {
        let p = SystemParams::reference().with_delta(hilbert::mhz(0.337011));
        let h = build_hamiltonian(&p, QubitLevel::Ground, 512);
        let s = coherent_state(Complex64::new(150f64.sqrt(), 0.0), 512).unwrap();
        let out = evolve(&s, &h, 2.0, &PropagatorConfig::default()).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
