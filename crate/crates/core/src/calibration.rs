//! Qubit-shift forward model and fits: the photon-number camera relation
//! Dq(n) = -n chi - n(n-1) Ke/2, the local-slope extraction of the sixth
//! order Kerr from focus detunings, and a number-splitting spectrum
//! synthesizer.

use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::linalg::lstsq_full;

/// Qubit frequency shift conditioned on n photons.
pub fn camera_model(n: usize, chi: f64, ke: f64) -> f64 {
    let nf = n as f64;
    -nf * chi - 0.5 * nf * (nf - 1.0) * ke
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraFit {
    pub chi: f64,
    pub ke: f64,
    pub residual_rms: f64,
    /// 1-sigma half-widths for (chi, ke).
    pub half_widths: [f64; 2],
}

/// Linear least squares in the basis {-n, -n(n-1)/2}.
pub fn fit_camera(points: &[(usize, f64)]) -> Result<CameraFit> {
    if points.len() < 3 {
        return Err(Error::SingularFit(format!(
            "camera fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let design: Vec<Vec<f64>> = points
        .iter()
        .map(|&(n, _)| {
            let nf = n as f64;
            vec![-nf, -0.5 * nf * (nf - 1.0)]
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let (x, hw, ssr) = lstsq_full(&design, &ys)?;
    Ok(CameraFit {
        chi: x[0],
        ke: x[1],
        residual_rms: (ssr / points.len() as f64).sqrt(),
        half_widths: [hw[0], hw[1]],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct K6Fit {
    /// d(Delta)/d(n0) of the local linear fit.
    pub slope: f64,
    pub k6: f64,
    pub k4_input: f64,
    pub half_width: f64,
}

/// Extracts K6 from focus-detuning pairs (n0, Delta): over a narrow window
/// the stationary detuning is a line with slope K6 n0 + K4 - K6, linearized
/// at the window mean.
pub fn fit_k6(pairs: &[(f64, f64)], k4: f64) -> Result<K6Fit> {
    if pairs.len() < 3 {
        return Err(Error::SingularFit(format!(
            "k6 fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let design: Vec<Vec<f64>> = pairs.iter().map(|&(n0, _)| vec![1.0, n0]).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, d)| d).collect();
    let (x, hw, _) = lstsq_full(&design, &ys)?;
    let mean_n0 = pairs.iter().map(|&(n0, _)| n0).sum::<f64>() / pairs.len() as f64;
    if (mean_n0 - 1.0).abs() < 1e-9 {
        return Err(Error::Domain("k6 fit window centered on n0 = 1".into()));
    }
    let slope = x[1];
    Ok(K6Fit {
        slope,
        k6: (slope - k4) / (mean_n0 - 1.0),
        k4_input: k4,
        half_width: hw[1] / (mean_n0 - 1.0).abs(),
    })
}

/// Qubit flip probability vs probe detuning: each Fock component
/// contributes a unit-peak Lorentzian of the given full width at Dq(n),
/// weighted by its population.
pub fn number_splitting_spectrum(
    state: &StateVector,
    chi: f64,
    ke: f64,
    linewidth: f64,
    probe_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(linewidth > 0.0) {
        return Err(Error::Domain("linewidth must be positive".into()));
    }
    let pops = state.populations();
    let hw2 = 0.25 * linewidth * linewidth;
    Ok(probe_grid
        .iter()
        .map(|&probe| {
            pops.iter()
                .enumerate()
                .filter(|(_, p)| **p > 1e-14)
                .map(|(n, p)| {
                    let d = probe - camera_model(n, chi, ke);
                    p * hw2 / (d * d + hw2)
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{self, coherent_state, fock_state};
    use crate::linalg::randn;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chi() -> f64 {
        hilbert::mhz(0.596)
    }
    fn ke() -> f64 {
        hilbert::khz(0.52)
    }

    #[test]
    fn camera_model_anchor_points() {
        assert_eq!(camera_model(0, chi(), ke()), 0.0);
        assert_eq!(camera_model(1, chi(), ke()), -chi());
        // -150*0.596 - 11175*0.00052 = -95.211 MHz
        let v = camera_model(150, chi(), ke());
        assert!((v - -hilbert::mhz(95.211)).abs() < 1e-9 * hilbert::mhz(95.211));
    }

    #[test]
    fn fit_camera_roundtrip_noiseless() {
        let pts: Vec<(usize, f64)> = (0..19).map(|i| {
            let n = i * 10;
            (n, camera_model(n, chi(), ke()))
        }).collect();
        let fit = fit_camera(&pts).unwrap();
        assert!((fit.chi - chi()).abs() / chi() < 1e-10);
        assert!((fit.ke - ke()).abs() / ke() < 1e-10);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn fit_camera_under_scan_noise() {
        let noise = hilbert::khz(25.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1001);
        let pts: Vec<(usize, f64)> = (0..19).map(|i| {
            let n = i * 10;
            (n, camera_model(n, chi(), ke()) + noise * randn(&mut rng))
        }).collect();
        let fit = fit_camera(&pts).unwrap();
        assert!((fit.chi - chi()).abs() / chi() < 2e-3);
        assert!((fit.ke - ke()).abs() / ke() < 0.1);
        assert!(fit.half_widths[0] > 0.0);
    }

    #[test]
    fn fit_camera_rank_guard() {
        let pts = [(0usize, 0.0), (1, -chi())];
        assert!(matches!(fit_camera(&pts), Err(Error::SingularFit(_))));
        let degenerate = [(5usize, 1.0), (5, 1.1), (5, 0.9)];
        assert!(matches!(fit_camera(&degenerate), Err(Error::SingularFit(_))));
    }

    #[test]
    fn fit_k6_recovers_generator() {
        let p = hilbert::SystemParams::reference();
        let pairs: Vec<(f64, f64)> = (140..=160)
            .map(|n0| (n0 as f64, crate::elements::stationary_delta(n0 as f64, &p)))
            .collect();
        let fit = fit_k6(&pairs, p.k4).unwrap();
        assert!((fit.slope - hilbert::khz(2.329)).abs() / hilbert::khz(2.329) < 1e-10);
        assert!((fit.k6 - hilbert::hz(1.0)).abs() / hilbert::hz(1.0) < 1e-9, "k6 {}", fit.k6);
    }

    #[test]
    fn fit_k6_zero_k6_gives_pure_k4_slope() {
        let p = hilbert::SystemParams { k6: 0.0, ..hilbert::SystemParams::reference() };
        let pairs: Vec<(f64, f64)> = (140..=160)
            .step_by(5)
            .map(|n0| (n0 as f64, crate::elements::stationary_delta(n0 as f64, &p)))
            .collect();
        let fit = fit_k6(&pairs, p.k4).unwrap();
        assert!((fit.slope - p.k4).abs() < 1e-12);
        assert!(fit.k6.abs() < 1e-14);
    }

    #[test]
    fn spectrum_single_and_double_peaks() {
        let gamma = hilbert::mhz(0.1);
        let grid: Vec<f64> = (-400..=100).map(|i| hilbert::mhz(0.002) * i as f64).collect();
        let vac = fock_state(0, 8).unwrap();
        let s = number_splitting_spectrum(&vac, chi(), ke(), gamma, &grid).unwrap();
        let peak = grid[s.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0];
        assert!(peak.abs() < hilbert::mhz(0.011));
        assert!(s.iter().all(|&v| (0.0..=1.0).contains(&v)));

        // equal 0/1 mixture: two equal peaks at 0 and -chi
        let mixed = StateVector::normalized(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]).unwrap();
        let s = number_splitting_spectrum(&mixed, chi(), ke(), gamma, &grid).unwrap();
        let at = |f: f64| {
            let idx = grid.iter().position(|&g| (g - f).abs() < 1e-9).unwrap();
            s[idx]
        };
        assert!((at(0.0) - at(-chi())).abs() < 1e-3);
        assert!(at(0.0) > 0.49);
    }

    #[test]
    fn spectrum_envelope_tracks_coherent_center() {
        let state = coherent_state(Complex64::new(150f64.sqrt(), 0.0), 512).unwrap();
        let gamma = hilbert::mhz(0.1);
        let grid: Vec<f64> = (0..4000)
            .map(|i| -hilbert::mhz(97.0) + i as f64 * hilbert::mhz(0.001))
            .collect();
        let s = number_splitting_spectrum(&state, chi(), ke(), gamma, &grid).unwrap();
        let peak = grid[s.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0];
        let spacing = chi() + 149.0 * ke(); // local peak separation near n=150
        assert!(
            (peak - camera_model(150, chi(), ke())).abs() <= spacing * 1.01,
            "envelope peak {peak}"
        );
    }

    #[test]
    fn spectrum_mass_scales_with_population() {
        let gamma = hilbert::mhz(0.05);
        let grid: Vec<f64> = (-8000..=2000).map(|i| hilbert::mhz(0.001) * i as f64).collect();
        let s = number_splitting_spectrum(&fock_state(1, 4).unwrap(), chi(), ke(), gamma, &grid).unwrap();
        let h = hilbert::mhz(0.001);
        let mass: f64 = s.iter().sum::<f64>() * h;
        let expect = std::f64::consts::PI * gamma / 2.0;
        assert!((mass - expect).abs() / expect < 0.01, "mass {mass} vs {expect}");
    }
}
