//! Pattern fits and figures of merit: Gaussian-enveloped cosine fringes,
//! single and double Gaussian peak fits, cosine similarity, fringe-spacing
//! scaling, and the displacement-sensing gain.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::TAU;
use crate::linalg::{lm_fit, lstsq_full, LmModel};

/// Result of `fit_gauss_cos`: f(n) = A exp(-alpha0 (n-n0)^2) cos(2pi (n-n0)/x + theta)
/// with theta and n0 held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeFit {
    pub amplitude: f64,
    pub alpha0: f64,
    /// Fringe spacing x in photons.
    pub spacing: f64,
    pub n0: f64,
    pub theta: f64,
    /// 1-sigma half-widths for (amplitude, alpha0, spacing).
    pub half_widths: [f64; 3],
    pub rms: f64,
}

/// Result of `fit_fringe_pattern`: g(n) = A exp(-alpha0 u^2) (1 + V cos(2pi u/x + theta)),
/// u = n - n0. Visibility is reported as |V| with theta shifted accordingly.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternFit {
    pub amplitude: f64,
    pub alpha0: f64,
    pub visibility: f64,
    pub theta: f64,
    pub spacing: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub sigma: f64,
    pub amplitude: f64,
    /// 1-sigma half-widths for (mean, sigma, amplitude).
    pub half_widths: [f64; 3],
    pub rms: f64,
}

const X_STARTS: [f64; 10] = [8.0, 10.0, 12.0, 14.0, 17.0, 20.0, 24.0, 28.0, 33.0, 40.0];

struct GaussCos<'a> {
    ys: &'a [f64],
    n0: f64,
    theta: f64,
}

impl LmModel for GaussCos<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.ys.len(), 3)
    }
    fn eval(&self, p: &[f64], r: &mut [f64], jac: &mut [f64]) {
        let (a, alpha, x) = (p[0], p[1], p[2]);
        for (i, &y) in self.ys.iter().enumerate() {
            let u = i as f64 - self.n0;
            let env = (-alpha * u * u).exp();
            let phi = TAU * u / x + self.theta;
            let (s, c) = phi.sin_cos();
            r[i] = a * env * c - y;
            jac[i * 3] = env * c;
            jac[i * 3 + 1] = -a * u * u * env * c;
            jac[i * 3 + 2] = a * env * s * TAU * u / (x * x);
        }
    }
}

fn data_rms(ys: &[f64]) -> f64 {
    (ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64).sqrt()
}

fn envelope_alpha_guess(ys: &[f64], n0: f64) -> f64 {
    let mut w = 0.0;
    let mut m2 = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let u = i as f64 - n0;
        w += y.abs();
        m2 += y.abs() * u * u;
    }
    if w <= 0.0 {
        return 1e-3;
    }
    (0.5 / (m2 / w).max(2.0)).clamp(1e-5, 0.5)
}

fn half_widths_at<M: LmModel>(model: &M, p: &[f64]) -> Vec<f64> {
    let (nr, np) = model.dims();
    let mut r = vec![0.0; nr];
    let mut jac = vec![0.0; nr * np];
    model.eval(p, &mut r, &mut jac);
    let rows: Vec<Vec<f64>> = (0..nr).map(|i| jac[i * np..(i + 1) * np].to_vec()).collect();
    match lstsq_full(&rows, &r) {
        Ok((_, hw, _)) => hw,
        Err(_) => vec![f64::INFINITY; np],
    }
}

fn pick_best(cands: Vec<(f64, Vec<f64>)>, x_index: usize) -> Option<(f64, Vec<f64>)> {
    let best = cands
        .iter()
        .map(|(c, _)| *c)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    cands
        .into_iter()
        .filter(|(c, _)| *c <= best * (1.0 + 1e-9) + 1e-300)
        .min_by(|a, b| a.1[x_index].partial_cmp(&b.1[x_index]).unwrap())
}

/// Fits a Gaussian-enveloped cosine over the index grid with fixed phase
/// offset `theta` and fixed center `n0`. Multi-start over a spacing grid to
/// avoid locking onto a harmonic.
pub fn fit_gauss_cos(populations: &[f64], theta: f64, n0: f64) -> Result<FringeFit> {
    if populations.len() < 8 {
        return Err(Error::Domain("fringe fit needs at least 8 bins".into()));
    }
    let rms0 = data_rms(populations);
    if rms0 <= 0.0 {
        return Err(Error::Domain("fringe fit on an all-zero signal".into()));
    }
    let model = GaussCos { ys: populations, n0, theta };
    let a0 = populations.iter().cloned().fold(0.0f64, |m, y| m.max(y.abs()));
    let alpha0 = envelope_alpha_guess(populations, n0);

    let cands: Vec<(f64, Vec<f64>)> = X_STARTS
        .par_iter()
        .filter_map(|&x0| {
            let (p, cost) = lm_fit(&model, &[a0, alpha0, x0]).ok()?;
            // spacings at or below 2 bins are aliases of a coarser one on
            // the integer grid
            if p[2] <= 2.0 || p[1] < 0.0 {
                return None;
            }
            Some((cost, p))
        })
        .collect();
    let (cost, p) = pick_best(cands, 2)
        .ok_or_else(|| Error::FitDiverged("no fringe fit start converged".into()))?;
    let rms = (cost / populations.len() as f64).sqrt();
    if rms > 0.5 * rms0 {
        return Err(Error::FitDiverged(format!(
            "fringe fit rms {rms:.3e} vs signal rms {rms0:.3e}"
        )));
    }
    let hw = half_widths_at(&model, &p);
    Ok(FringeFit {
        amplitude: p[0],
        alpha0: p[1],
        spacing: p[2],
        n0,
        theta,
        half_widths: [hw[0], hw[1], hw[2]],
        rms,
    })
}

struct Envelope<'a> {
    ys: &'a [f64],
    n0: f64,
    fixed_x: Option<f64>,
}

impl LmModel for Envelope<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.ys.len(), if self.fixed_x.is_some() { 4 } else { 5 })
    }
    fn eval(&self, p: &[f64], r: &mut [f64], jac: &mut [f64]) {
        let np = if self.fixed_x.is_some() { 4 } else { 5 };
        let (a, alpha, v, th) = (p[0], p[1], p[2], p[3]);
        let x = self.fixed_x.unwrap_or_else(|| p[4]);
        for (i, &y) in self.ys.iter().enumerate() {
            let u = i as f64 - self.n0;
            let env = (-alpha * u * u).exp();
            let phi = TAU * u / x + th;
            let (s, c) = phi.sin_cos();
            let bracket = 1.0 + v * c;
            r[i] = a * env * bracket - y;
            jac[i * np] = env * bracket;
            jac[i * np + 1] = -a * u * u * env * bracket;
            jac[i * np + 2] = a * env * c;
            jac[i * np + 3] = -a * env * v * s;
            if np == 5 {
                jac[i * np + 4] = a * env * v * s * TAU * u / (x * x);
            }
        }
    }
}

/// Fits A exp(-alpha0 u^2) (1 + V cos(2pi u/x + theta)) to a full pattern.
/// With `fixed_x` the spacing is pinned and only the modulation is free,
/// which is how a visibility is read off a pattern whose period is known.
pub fn fit_fringe_pattern(
    populations: &[f64],
    n0: f64,
    fixed_x: Option<f64>,
) -> Result<PatternFit> {
    if populations.len() < 10 {
        return Err(Error::Domain("pattern fit needs at least 10 bins".into()));
    }
    let rms0 = data_rms(populations);
    if rms0 <= 0.0 {
        return Err(Error::Domain("pattern fit on an all-zero signal".into()));
    }
    let a0 = populations.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
    let alpha0 = envelope_alpha_guess(populations, n0);
    let xs: Vec<f64> = match fixed_x {
        Some(x) => {
            if !(x > 0.0) {
                return Err(Error::Domain("fixed spacing must be positive".into()));
            }
            vec![x]
        }
        None => X_STARTS.to_vec(),
    };
    let mut starts = Vec::new();
    for &x in &xs {
        for &v0 in &[0.9, 0.3] {
            for &th0 in &[0.0, std::f64::consts::PI] {
                starts.push((x, v0, th0));
            }
        }
    }
    let model = Envelope { ys: populations, n0, fixed_x };
    let cands: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .filter_map(|&(x, v0, th0)| {
            let p0 = if fixed_x.is_some() {
                vec![a0 / (1.0 + 0.5 * v0), alpha0, v0, th0]
            } else {
                vec![a0 / (1.0 + 0.5 * v0), alpha0, v0, th0, x]
            };
            let (p, cost) = lm_fit(&model, &p0).ok()?;
            if p[1] < 0.0 {
                return None;
            }
            if fixed_x.is_none() && p[4] <= 2.0 {
                return None;
            }
            Some((cost, p))
        })
        .collect();
    let x_index = if fixed_x.is_some() { 2 } else { 4 };
    let (cost, p) = pick_best(cands, x_index)
        .ok_or_else(|| Error::FitDiverged("no pattern fit start converged".into()))?;
    let rms = (cost / populations.len() as f64).sqrt();
    if rms > 0.5 * rms0 {
        return Err(Error::FitDiverged(format!(
            "pattern fit rms {rms:.3e} vs signal rms {rms0:.3e}"
        )));
    }
    let (mut v, mut th) = (p[2], p[3]);
    if v < 0.0 {
        v = -v;
        th += std::f64::consts::PI;
    }
    th = th.rem_euclid(TAU);
    if th > std::f64::consts::PI {
        th -= TAU;
    }
    Ok(PatternFit {
        amplitude: p[0],
        alpha0: p[1],
        visibility: v,
        theta: th,
        spacing: fixed_x.unwrap_or_else(|| p[4]),
        rms,
    })
}

struct GaussPeaks<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
    peaks: usize,
}

impl LmModel for GaussPeaks<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.ys.len(), 3 * self.peaks)
    }
    fn eval(&self, p: &[f64], r: &mut [f64], jac: &mut [f64]) {
        let np = 3 * self.peaks;
        for (i, (&x, &y)) in self.xs.iter().zip(self.ys).enumerate() {
            let mut m = -y;
            for k in 0..self.peaks {
                let (a, mu, sg) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
                let d = x - mu;
                let g = (-d * d / (2.0 * sg * sg)).exp();
                m += a * g;
                jac[i * np + 3 * k] = g;
                jac[i * np + 3 * k + 1] = a * g * d / (sg * sg);
                jac[i * np + 3 * k + 2] = a * g * d * d / (sg * sg * sg);
            }
            r[i] = m;
        }
    }
}

/// Single Gaussian peak fit in a +-12 bin window around the data maximum.
pub fn fit_gaussian(populations: &[f64]) -> Result<GaussianFit> {
    let nonzero = populations.iter().filter(|&&p| p > 0.0).count();
    if nonzero < 5 {
        return Err(Error::Domain(format!(
            "gaussian fit needs at least 5 nonzero bins, got {nonzero}"
        )));
    }
    if populations.iter().any(|&p| p < 0.0) {
        return Err(Error::Domain("gaussian fit on negative data".into()));
    }
    let peak = populations
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let lo = peak.saturating_sub(12);
    let hi = (peak + 13).min(populations.len());
    let xs: Vec<f64> = (lo..hi).map(|i| i as f64).collect();
    let ys: Vec<f64> = populations[lo..hi].to_vec();
    let model = GaussPeaks { xs: &xs, ys: &ys, peaks: 1 };
    let p0 = [populations[peak], peak as f64, 3.0];
    let (p, cost) = lm_fit(&model, &p0)?;
    let rms = (cost / ys.len() as f64).sqrt();
    let rms0 = data_rms(&ys);
    if !p.iter().all(|v| v.is_finite()) || rms > 0.5 * rms0 {
        return Err(Error::FitDiverged(format!(
            "gaussian fit rms {rms:.3e} vs window rms {rms0:.3e}"
        )));
    }
    let hw = half_widths_at(&model, &p);
    Ok(GaussianFit {
        mean: p[1],
        sigma: p[2].abs(),
        amplitude: p[0],
        half_widths: [hw[1], hw[2], hw[0]],
        rms,
    })
}

fn boxcar(data: &[f64], half: usize) -> Vec<f64> {
    let n = data.len();
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        *slot = data[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    }
    out
}

fn half_max_sigma(data: &[f64], peak: usize) -> f64 {
    let hm = data[peak] * 0.5;
    let mut l = peak;
    while l > 0 && data[l] > hm {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < data.len() && data[r] > hm {
        r += 1;
    }
    ((r - l) as f64 / 2.355).max(1.5)
}

/// Two-Gaussian fit initialized from the two tallest local maxima at least
/// 3 bins apart; the maxima are located on a 5-bin smoothed copy so fringe
/// ripple on a lobe does not pass for a second peak. Returns (lower-center
/// peak, higher-center peak, center separation, amplitude ratio
/// lower/higher).
pub fn fit_two_gaussians(
    populations: &[f64],
) -> Result<(GaussianFit, GaussianFit, f64, f64)> {
    let nonzero = populations.iter().filter(|&&p| p > 0.0).count();
    if nonzero < 10 {
        return Err(Error::Domain(format!(
            "two-gaussian fit needs at least 10 nonzero bins, got {nonzero}"
        )));
    }
    let smooth = boxcar(populations, 2);
    let mut maxima: Vec<(usize, f64)> = Vec::new();
    for i in 1..smooth.len().saturating_sub(1) {
        if smooth[i] > 0.0 && smooth[i] >= smooth[i - 1] && smooth[i] > smooth[i + 1] {
            maxima.push((i, smooth[i]));
        }
    }
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let first = *maxima.first().ok_or_else(|| {
        Error::PeakNotFound("no interior local maximum".into())
    })?;
    let second = maxima
        .iter()
        .find(|(i, _)| i.abs_diff(first.0) >= 3)
        .copied()
        .ok_or_else(|| {
            Error::PeakNotFound("no second local maximum 3 or more bins away".into())
        })?;
    let xs: Vec<f64> = (0..populations.len()).map(|i| i as f64).collect();
    let model = GaussPeaks { xs: &xs, ys: populations, peaks: 2 };
    let p0 = [
        first.1,
        first.0 as f64,
        half_max_sigma(&smooth, first.0),
        second.1,
        second.0 as f64,
        half_max_sigma(&smooth, second.0),
    ];
    let (p, cost) = lm_fit(&model, &p0)?;
    let rms = (cost / populations.len() as f64).sqrt();
    let rms0 = data_rms(populations);
    if !p.iter().all(|v| v.is_finite()) || rms > 0.5 * rms0 {
        return Err(Error::FitDiverged(format!(
            "two-gaussian fit rms {rms:.3e} vs data rms {rms0:.3e}"
        )));
    }
    let hw = half_widths_at(&model, &p);
    let peak = |k: usize| GaussianFit {
        mean: p[3 * k + 1],
        sigma: p[3 * k + 2].abs(),
        amplitude: p[3 * k],
        half_widths: [hw[3 * k + 1], hw[3 * k + 2], hw[3 * k]],
        rms,
    };
    let (lo, hi) = if p[1] <= p[4] {
        (peak(0), peak(1))
    } else {
        (peak(1), peak(0))
    };
    let separation = hi.mean - lo.mean;
    let ratio = lo.amplitude / hi.amplitude;
    Ok((lo, hi, separation, ratio))
}

/// A.B / (|A| |B|) for non-negative histograms.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).min(1.0))
}

/// Linear fit of spacing x against 1/d. Returns (slope, intercept,
/// half-widths in that order).
pub fn fringe_scaling(series: &[(f64, f64)]) -> Result<(f64, f64, [f64; 2])> {
    if series.len() < 3 {
        return Err(Error::SingularFit(format!(
            "scaling fit needs at least 3 points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|&(d, _)| d <= 0.0) {
        return Err(Error::Domain("separations must be positive".into()));
    }
    let design: Vec<Vec<f64>> = series.iter().map(|&(d, _)| vec![1.0, 1.0 / d]).collect();
    let ys: Vec<f64> = series.iter().map(|&(_, x)| x).collect();
    let (coef, hw, _) = lstsq_full(&design, &ys)?;
    Ok((coef[1], coef[0], [hw[1], hw[0]]))
}

/// Small-displacement sensing gain over a coherent state of the same mean
/// photon number, in dB: 20 log10(sqrt(nbar)/sigma).
pub fn metrology_gain_db(nbar: f64, sigma: f64) -> f64 {
    20.0 * (nbar.sqrt() / sigma).log10()
}

/// The width compression factor sqrt(nbar)/sigma itself.
pub fn compression_fold(nbar: f64, sigma: f64) -> f64 {
    nbar.sqrt() / sigma
}

/// Total variation distance between two histograms, 0.5 sum |p - q|.
/// Unequal lengths are treated as zero-padded.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let mut s = 0.0;
    for i in 0..n {
        let a = p.get(i).copied().unwrap_or(0.0);
        let b = q.get(i).copied().unwrap_or(0.0);
        s += (a - b).abs();
    }
    0.5 * s
}
