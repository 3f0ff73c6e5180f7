//! Small dense numerics used by the propagators and the fitters: a complex
//! matrix type with Pade exponential and LU solve, a Jacobi eigensolver for
//! real symmetric tridiagonals, Householder least squares with parameter
//! covariance, and a damped Gauss-Newton minimizer.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major complex matrix.
#[derive(Debug, Clone)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &CMat, s: Complex64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn one_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect()
    }
}

/// Solves A X = B in place via LU with partial pivoting; B holds X on return.
pub fn lu_solve(a: &mut CMat, b: &mut CMat) -> Result<()> {
    let n = a.n;
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pmax, mut prow) = (a.at(k, k).norm(), k);
        for i in k + 1..n {
            let m = a.at(i, k).norm();
            if m > pmax {
                pmax = m;
                prow = i;
            }
        }
        if pmax == 0.0 {
            return Err(Error::SingularFit("singular matrix in LU solve".into()));
        }
        if prow != k {
            for j in 0..n {
                let t = a.at(k, j);
                a.set(k, j, a.at(prow, j));
                a.set(prow, j, t);
            }
            piv.swap(k, prow);
            for j in 0..b.n {
                let t = b.at(k, j);
                b.set(k, j, b.at(prow, j));
                b.set(prow, j, t);
            }
        }
        let inv = Complex64::new(1.0, 0.0) / a.at(k, k);
        for i in k + 1..n {
            let f = a.at(i, k) * inv;
            a.set(i, k, f);
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let v = a.at(i, j) - f * a.at(k, j);
                a.set(i, j, v);
            }
            for j in 0..b.n {
                let v = b.at(i, j) - f * b.at(k, j);
                b.set(i, j, v);
            }
        }
    }
    for j in 0..b.n {
        for i in (0..n).rev() {
            let mut s = b.at(i, j);
            for k in i + 1..n {
                s -= a.at(i, k) * b.at(k, j);
            }
            b.set(i, j, s / a.at(i, i));
        }
    }
    Ok(())
}

const PADE13_THETA: f64 = 5.371920351148152;
const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by degree-13 Pade with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.n;
    let norm = a.one_norm();
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let mut m = a.clone();
    if s > 0 {
        m.scale(Complex64::new(1.0 / 2f64.powi(s as i32), 0.0));
    }
    let m2 = m.matmul(&m);
    let m4 = m2.matmul(&m2);
    let m6 = m4.matmul(&m2);
    let b = &PADE13_B;
    let one = Complex64::new(1.0, 0.0);

    // u = M (M6 (b13 M6 + b11 M4 + b9 M2) + b7 M6 + b5 M4 + b3 M2 + b1 I)
    let mut inner = CMat::zeros(n);
    inner.add_scaled(&m6, Complex64::new(b[13], 0.0));
    inner.add_scaled(&m4, Complex64::new(b[11], 0.0));
    inner.add_scaled(&m2, Complex64::new(b[9], 0.0));
    let mut u = m6.matmul(&inner);
    u.add_scaled(&m6, Complex64::new(b[7], 0.0));
    u.add_scaled(&m4, Complex64::new(b[5], 0.0));
    u.add_scaled(&m2, Complex64::new(b[3], 0.0));
    u.add_scaled(&CMat::eye(n), Complex64::new(b[1], 0.0));
    let u = m.matmul(&u);

    // v = M6 (b12 M6 + b10 M4 + b8 M2) + b6 M6 + b4 M4 + b2 M2 + b0 I
    let mut inner = CMat::zeros(n);
    inner.add_scaled(&m6, Complex64::new(b[12], 0.0));
    inner.add_scaled(&m4, Complex64::new(b[10], 0.0));
    inner.add_scaled(&m2, Complex64::new(b[8], 0.0));
    let mut v = m6.matmul(&inner);
    v.add_scaled(&m6, Complex64::new(b[6], 0.0));
    v.add_scaled(&m4, Complex64::new(b[4], 0.0));
    v.add_scaled(&m2, Complex64::new(b[2], 0.0));
    v.add_scaled(&CMat::eye(n), Complex64::new(b[0], 0.0));

    // r = (v - u)^{-1} (v + u)
    let mut lhs = v.clone();
    lhs.add_scaled(&u, -one);
    let mut rhs = v;
    rhs.add_scaled(&u, one);
    lu_solve(&mut lhs, &mut rhs)?;
    let mut r = rhs;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// Eigendecomposition of a real symmetric matrix (row-major, n x n) by cyclic
/// Jacobi rotations. Returns (eigenvalues, eigenvectors as columns).
pub fn eigh(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * scale {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&p, &q| m[p * n + p].partial_cmp(&m[q * n + q]).unwrap());
            let vals: Vec<f64> = idx.iter().map(|&p| m[p * n + p]).collect();
            let mut vecs = vec![0.0; n * n];
            for (newc, &oldc) in idx.iter().enumerate() {
                for r in 0..n {
                    vecs[r * n + newc] = v[r * n + oldc];
                }
            }
            return Ok((vals, vecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Convergence("Jacobi eigensolver stalled".into()))
}

/// exp(-i T t) e_1 for a real symmetric tridiagonal T given by `diag` and
/// `offdiag` (len m and m-1). Used for the Krylov-projected propagator.
pub fn expm_itridiag_e1(diag: &[f64], offdiag: &[f64], t: f64) -> Result<Vec<Complex64>> {
    let m = diag.len();
    let mut full = vec![0.0; m * m];
    for i in 0..m {
        full[i * m + i] = diag[i];
        if i + 1 < m {
            full[i * m + i + 1] = offdiag[i];
            full[(i + 1) * m + i] = offdiag[i];
        }
    }
    let (vals, vecs) = eigh(&full, m)?;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        let phase = Complex64::from_polar(1.0, -vals[j] * t);
        let w = vecs[j] * phase; // row 0 of V times the phase
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += vecs[k * m + j] * w;
        }
    }
    Ok(out)
}

/// Linear least squares min ||A x - y|| by Householder QR.
/// Returns the solution; fails on rank deficiency.
pub fn lstsq(a: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    lstsq_full(a, y).map(|(x, _, _)| x)
}

/// Least squares with extras: (x, half-widths of 1-sigma parameter
/// intervals, residual sum of squares). Half-widths are zero when the system
/// is square or exactly consistent.
pub fn lstsq_full(a: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let rows = a.len();
    if rows == 0 || rows != y.len() {
        return Err(Error::Domain("lstsq: empty or mismatched system".into()));
    }
    let cols = a[0].len();
    if rows < cols {
        return Err(Error::SingularFit(format!(
            "lstsq: {rows} rows for {cols} unknowns"
        )));
    }
    let mut r: Vec<f64> = Vec::with_capacity(rows * cols);
    for row in a {
        if row.len() != cols {
            return Err(Error::Domain("lstsq: ragged design matrix".into()));
        }
        r.extend_from_slice(row);
    }
    let mut b = y.to_vec();
    let scale: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for k in 0..cols {
        let mut alpha = 0.0;
        for i in k..rows {
            alpha += r[i * cols + k] * r[i * cols + k];
        }
        let mut alpha = alpha.sqrt();
        if alpha < 1e-13 * scale {
            return Err(Error::SingularFit(format!(
                "lstsq: column {k} is numerically dependent"
            )));
        }
        if r[k * cols + k] > 0.0 {
            alpha = -alpha;
        }
        let mut v = vec![0.0; rows - k];
        v[0] = r[k * cols + k] - alpha;
        for i in k + 1..rows {
            v[i - k] = r[i * cols + k];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..cols {
                let mut dot = 0.0;
                for i in k..rows {
                    dot += v[i - k] * r[i * cols + j];
                }
                let f = 2.0 * dot / vnorm2;
                for i in k..rows {
                    r[i * cols + j] -= f * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..rows {
                dot += v[i - k] * b[i];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                b[i] -= f * v[i - k];
            }
        }
    }
    let mut x = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut s = b[i];
        for j in i + 1..cols {
            s -= r[i * cols + j] * x[j];
        }
        x[i] = s / r[i * cols + i];
    }
    let ssr: f64 = b[cols..].iter().map(|v| v * v).sum();

    // (A^T A)^{-1} = R^{-1} R^{-T}: columns of R^{-1} by back substitution.
    let mut rinv = vec![0.0; cols * cols];
    for j in 0..cols {
        let mut col = vec![0.0; cols];
        col[j] = 1.0;
        for i in (0..=j).rev() {
            let mut s = col[i];
            for k in i + 1..cols {
                s -= r[i * cols + k] * col[k];
            }
            col[i] = s / r[i * cols + i];
        }
        for i in 0..cols {
            rinv[i * cols + j] = col[i];
        }
    }
    let dof = rows.saturating_sub(cols);
    let s2 = if dof > 0 { ssr / dof as f64 } else { 0.0 };
    let half_widths: Vec<f64> = (0..cols)
        .map(|i| {
            let diag: f64 = (0..cols).map(|k| rinv[i * cols + k] * rinv[i * cols + k]).sum();
            (diag * s2).sqrt()
        })
        .collect();
    Ok((x, half_widths, ssr))
}

/// Model interface for `lm_fit`: residuals r_i(p) and the analytic Jacobian
/// dr_i/dp_j, both evaluated in one pass.
pub trait LmModel {
    fn dims(&self) -> (usize, usize); // (residuals, params)
    fn eval(&self, p: &[f64], r: &mut [f64], jac: &mut [f64]);
}

/// Levenberg-Marquardt with analytic Jacobians. Returns (params, final cost).
pub fn lm_fit<M: LmModel>(model: &M, p0: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (nr, np) = model.dims();
    if nr < np {
        return Err(Error::SingularFit(format!(
            "fit: {nr} residuals for {np} parameters"
        )));
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; nr];
    let mut jac = vec![0.0; nr * np];
    model.eval(&p, &mut r, &mut jac);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = -1.0;
    for _iter in 0..200 {
        // normal equations JtJ + lambda diag(JtJ)
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for i in 0..nr {
            for a in 0..np {
                let ja = jac[i * np + a];
                if ja == 0.0 {
                    continue;
                }
                jtr[a] += ja * r[i];
                for b in a..np {
                    jtj[a * np + b] += ja * jac[i * np + b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[a * np + b] = jtj[b * np + a];
            }
        }
        if lambda < 0.0 {
            let maxdiag = (0..np).map(|a| jtj[a * np + a]).fold(0.0, f64::max);
            lambda = 1e-3 * maxdiag.max(1e-12);
        }
        let mut improved = false;
        for _inner in 0..30 {
            let mut m = vec![0.0; np * np];
            m.copy_from_slice(&jtj);
            for a in 0..np {
                m[a * np + a] += lambda * jtj[a * np + a].max(1e-12);
            }
            let delta = match solve_spd(&m, &jtr, np) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(pi, di)| pi - di).collect();
            let mut rt = vec![0.0; nr];
            let mut jt = vec![0.0; nr * np];
            model.eval(&trial, &mut rt, &mut jt);
            let ct: f64 = rt.iter().map(|v| v * v).sum();
            if ct.is_finite() && ct < cost {
                let step: f64 = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                let drop = cost - ct;
                p = trial;
                r = rt;
                jac = jt;
                cost = ct;
                lambda /= 3.0;
                improved = true;
                if drop <= 1e-14 * cost.max(1e-30) || step < 1e-13 {
                    return Ok((p, cost));
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            return Ok((p, cost));
        }
    }
    Ok((p, cost))
}

/// Cholesky solve for the small SPD systems inside `lm_fit`.
fn solve_spd(m: &[f64], rhs: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::SingularFit("non-positive pivot".into()));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

/// Standard normal via Box-Muller.
pub fn randn<R: rand::Rng>(rng: &mut R) -> f64 {
    let u: f64 = loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            break x;
        }
    };
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (crate::hilbert::TAU * v).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_matches_diagonal_closed_form() {
        let mut a = CMat::zeros(3);
        a.set(0, 0, Complex64::new(0.0, -1.5));
        a.set(1, 1, Complex64::new(0.0, 2.0));
        a.set(2, 2, Complex64::new(-0.3, 0.0));
        let e = expm(&a).unwrap();
        for i in 0..3 {
            let expect = a.at(i, i).exp();
            assert!((e.at(i, i) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn expm_rotation_block() {
        // exp([[0,-t],[t,0]]) is a rotation by t
        let t = 0.7;
        let mut a = CMat::zeros(2);
        a.set(0, 1, Complex64::new(-t, 0.0));
        a.set(1, 0, Complex64::new(t, 0.0));
        let e = expm(&a).unwrap();
        assert!((e.at(0, 0).re - t.cos()).abs() < 1e-14);
        assert!((e.at(1, 0).re - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn expm_handles_large_norm_by_squaring() {
        let mut a = CMat::zeros(2);
        a.set(0, 0, Complex64::new(0.0, -40.0));
        a.set(0, 1, Complex64::new(0.0, 3.0));
        a.set(1, 0, Complex64::new(0.0, 3.0));
        a.set(1, 1, Complex64::new(0.0, 10.0));
        let e = expm(&a).unwrap();
        // unitary since iH with H hermitian
        let mut dagger = CMat::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                dagger.set(i, j, e.at(j, i).conj());
            }
        }
        let prod = dagger.matmul(&e);
        assert!((prod.at(0, 0).re - 1.0).abs() < 1e-12);
        assert!(prod.at(0, 1).norm() < 1e-12);
    }

    #[test]
    fn eigh_recovers_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let a = [2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = eigh(&a, 2).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // columns normalized
        let c0 = (vecs[0] * vecs[0] + vecs[2] * vecs[2]).sqrt();
        assert!((c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tridiag_phase_evolution_is_unitary() {
        let diag = [1.0, -2.0, 0.5, 3.0];
        let off = [0.4, 0.9, 0.1];
        let y = expm_itridiag_e1(&diag, &off, 1.3).unwrap();
        let norm: f64 = y.iter().map(|c| c.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-13);
    }

    #[test]
    fn tridiag_diagonal_case_is_pure_phase() {
        let diag = [2.0, 5.0];
        let off = [0.0];
        let y = expm_itridiag_e1(&diag, &off, 0.8).unwrap();
        assert!((y[0] - Complex64::from_polar(1.0, -1.6)).norm() < 1e-13);
        assert!(y[1].norm() < 1e-13);
    }

    #[test]
    fn lstsq_exact_line() {
        let a: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let (x, hw, ssr) = lstsq_full(&a, &y).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!(ssr < 1e-20);
        assert!(hw[0] < 1e-10 && hw[1] < 1e-10);
    }

    #[test]
    fn lstsq_flags_dependent_columns() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let y = vec![1.0, 2.0, 3.0];
        assert!(matches!(lstsq(&a, &y), Err(Error::SingularFit(_))));
    }

    #[test]
    fn lstsq_covariance_scales_with_noise() {
        // y = 1 + x with a known symmetric perturbation
        let xs = [0.0, 1.0, 2.0, 3.0];
        let noise = [0.1, -0.1, 0.1, -0.1];
        let a: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let y: Vec<f64> = xs.iter().zip(&noise).map(|(&x, &e)| 1.0 + x + e).collect();
        let (x, hw, _) = lstsq_full(&a, &y).unwrap();
        assert!((x[1] - 0.96).abs() < 1e-12);
        assert!(hw[1] > 0.0 && hw[1] < 0.2);
    }

    struct Parabola<'a> {
        xs: &'a [f64],
        ys: &'a [f64],
    }
    impl LmModel for Parabola<'_> {
        fn dims(&self) -> (usize, usize) {
            (self.xs.len(), 2)
        }
        fn eval(&self, p: &[f64], r: &mut [f64], jac: &mut [f64]) {
            for (i, (&x, &y)) in self.xs.iter().zip(self.ys).enumerate() {
                let m = p[0] * (x - p[1]) * (x - p[1]);
                r[i] = m - y;
                jac[i * 2] = (x - p[1]) * (x - p[1]);
                jac[i * 2 + 1] = -2.0 * p[0] * (x - p[1]);
            }
        }
    }

    #[test]
    fn lm_converges_on_shifted_parabola() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.7 * (x - 4.2) * (x - 4.2)).collect();
        let model = Parabola { xs: &xs, ys: &ys };
        let (p, cost) = lm_fit(&model, &[1.0, 3.0]).unwrap();
        assert!((p[0] - 1.7).abs() < 1e-8, "a {}", p[0]);
        assert!((p[1] - 4.2).abs() < 1e-8, "x0 {}", p[1]);
        assert!(cost < 1e-16);
    }

    #[test]
    fn randn_moments() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| randn(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
