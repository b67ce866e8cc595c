//! Spatial discretizations of R^d for the truncated-domain solver.
//!
//! `dim = 1` is a periodic box [-L, L] with Fourier collocation; `dim = 3`
//! is a radial ball of radius L with a finite-volume reduced Laplacian and
//! a homogeneous Dirichlet condition at r = L. Quadrature weights are exact
//! cell measures, so they sum to the truncated-domain measure to roundoff.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NlsError, Result};

pub(crate) enum GridKind {
    /// Periodic Fourier collocation on [-L, L).
    Line {
        /// Signed wavenumbers in FFT layout.
        k: Vec<f64>,
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
    /// Cell-centered radial grid on (0, L); Dirichlet at r = L.
    RadialBall {
        dr: f64,
        /// Face areas r_{j+1/2}^2 for j = 0..n (faces between cells).
        face: Vec<f64>,
        /// Cell volumes divided by 4*pi: ((r+)^3 - (r-)^3)/3.
        vol: Vec<f64>,
    },
}

pub struct Grid {
    pub dim: u32,
    pub l: f64,
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub(crate) kind: GridKind,
}

pub fn make_grid(dim: u32, l: f64, n: usize) -> Result<Arc<Grid>> {
    if l <= 0.0 {
        return Err(NlsError::Grid(format!("domain half-width must be positive, got {l}")));
    }
    if n < 256 {
        return Err(NlsError::Grid(format!("N = {n} under-resolved; need N >= 256")));
    }
    match dim {
        1 => {
            if !n.is_power_of_two() {
                return Err(NlsError::Grid(format!("N = {n} not a power of two (dim = 1)")));
            }
            let dx = 2.0 * l / n as f64;
            let nodes: Vec<f64> = (0..n).map(|j| -l + j as f64 * dx).collect();
            let weights = vec![dx; n];
            let mut k = vec![0.0; n];
            for (j, kj) in k.iter_mut().enumerate() {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                *kj = PI / l * m;
            }
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            Ok(Arc::new(Grid {
                dim,
                l,
                n,
                nodes,
                weights,
                kind: GridKind::Line { k, fwd, inv },
            }))
        }
        3 => {
            let dr = l / n as f64;
            let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * dr).collect();
            let face: Vec<f64> = (0..=n).map(|j| (j as f64 * dr).powi(2)).collect();
            let vol: Vec<f64> = (0..n)
                .map(|j| {
                    let rm = j as f64 * dr;
                    let rp = (j + 1) as f64 * dr;
                    (rp.powi(3) - rm.powi(3)) / 3.0
                })
                .collect();
            let weights: Vec<f64> = vol.iter().map(|v| 4.0 * PI * v).collect();
            Ok(Arc::new(Grid {
                dim,
                l,
                n,
                nodes,
                weights,
                kind: GridKind::RadialBall { dr, face, vol },
            }))
        }
        _ => Err(NlsError::Grid(format!("dim must be 1 or 3, got {dim}"))),
    }
}

impl Grid {
    pub fn measure(&self) -> f64 {
        match self.dim {
            1 => 2.0 * self.l,
            _ => 4.0 * PI / 3.0 * self.l.powi(3),
        }
    }

    pub(crate) fn fft(&self, buf: &mut [C64]) {
        match &self.kind {
            GridKind::Line { fwd, .. } => fwd.process(buf),
            _ => panic!("fft only defined for dim = 1"),
        }
    }

    pub(crate) fn ifft(&self, buf: &mut [C64]) {
        match &self.kind {
            GridKind::Line { inv, .. } => {
                inv.process(buf);
                let s = 1.0 / self.n as f64;
                for v in buf.iter_mut() {
                    *v *= s;
                }
            }
            _ => panic!("ifft only defined for dim = 1"),
        }
    }

    pub(crate) fn wavenumbers(&self) -> &[f64] {
        match &self.kind {
            GridKind::Line { k, .. } => k,
            _ => panic!("wavenumbers only defined for dim = 1"),
        }
    }

    /// Apply the (negative-definite) Laplacian of the discretization.
    pub fn laplacian(&self, f: &[C64]) -> Vec<C64> {
        assert_eq!(f.len(), self.n);
        match &self.kind {
            GridKind::Line { k, .. } => {
                let mut buf = f.to_vec();
                self.fft(&mut buf);
                for (v, kj) in buf.iter_mut().zip(k) {
                    *v *= -kj * kj;
                }
                self.ifft(&mut buf);
                buf
            }
            GridKind::RadialBall { dr, face, vol } => {
                let n = self.n;
                let mut out = vec![C64::ZERO; n];
                for j in 0..n {
                    // Flux form: [S_{j+1/2}(f_{j+1}-f_j) - S_{j-1/2}(f_j-f_{j-1})]/(V_j dr).
                    // Inner face at r=0 has zero area; Dirichlet ghost at r=L.
                    let up = if j + 1 < n { f[j + 1] - f[j] } else { -2.0 * f[j] };
                    let lo = if j > 0 { f[j] - f[j - 1] } else { C64::ZERO };
                    out[j] = (face[j + 1] * up - face[j] * lo) / (vol[j] * dr);
                }
                out
            }
        }
    }

    /// Spatial derivative; dim = 1 only (spectral, exact for resolved modes).
    pub fn derivative(&self, f: &[C64]) -> Vec<C64> {
        match &self.kind {
            GridKind::Line { k, .. } => {
                let mut buf = f.to_vec();
                self.fft(&mut buf);
                let n = self.n;
                for (j, v) in buf.iter_mut().enumerate() {
                    // Nyquist mode has no well-defined sign; zero it for an odd operator.
                    if j == n / 2 {
                        *v = C64::ZERO;
                    } else {
                        *v *= C64::new(0.0, k[j]);
                    }
                }
                self.ifft(&mut buf);
                buf
            }
            GridKind::RadialBall { dr, .. } => {
                // Second-order central differences; one-sided parity/Dirichlet closures.
                let n = self.n;
                let mut out = vec![C64::ZERO; n];
                for j in 0..n {
                    let up = if j + 1 < n { f[j + 1] } else { -f[n - 1] };
                    let lo = if j > 0 { f[j - 1] } else { f[0] };
                    out[j] = (up - lo) / (2.0 * dr);
                }
                out
            }
        }
    }

    /// Solve (-Laplacian + 1) x = f exactly for the discrete operator.
    pub fn helmholtz_inverse(&self, f: &[C64]) -> Vec<C64> {
        match &self.kind {
            GridKind::Line { k, .. } => {
                let mut buf = f.to_vec();
                self.fft(&mut buf);
                for (v, kj) in buf.iter_mut().zip(k) {
                    *v /= kj * kj + 1.0;
                }
                self.ifft(&mut buf);
                buf
            }
            GridKind::RadialBall { .. } => self.implicit_lap_solve(C64::new(1.0, 0.0), f),
        }
    }

    /// Solve (I - alpha Lap) x = f on the radial grid (tridiagonal Thomas);
    /// alpha may be complex (Crank-Nicolson uses alpha = i dt/2).
    pub(crate) fn implicit_lap_solve(&self, alpha: C64, f: &[C64]) -> Vec<C64> {
        match &self.kind {
            GridKind::RadialBall { dr, face, vol } => {
                let n = self.n;
                let mut sub = vec![C64::ZERO; n];
                let mut diag = vec![C64::ZERO; n];
                let mut sup = vec![C64::ZERO; n];
                for j in 0..n {
                    let a_up = alpha * (face[j + 1] / (vol[j] * dr));
                    let a_lo = alpha * (face[j] / (vol[j] * dr));
                    let mut d = C64::new(1.0, 0.0) + a_up + a_lo;
                    if j + 1 < n {
                        sup[j] = -a_up;
                    } else {
                        d += a_up; // Dirichlet ghost f_N = -f_{N-1}
                    }
                    if j > 0 {
                        sub[j] = -a_lo;
                    } else {
                        d -= a_lo; // zero face area; keeps the formula explicit
                    }
                    diag[j] = d;
                }
                thomas(&sub, &mut diag, &sup, f)
            }
            _ => panic!("implicit_lap_solve only defined for dim = 3"),
        }
    }

    /// Continuous translation by x0 via transform-space phase shift (dim = 1).
    pub fn shift(&self, f: &[C64], x0: f64) -> Vec<C64> {
        match &self.kind {
            GridKind::Line { k, .. } => {
                let mut buf = f.to_vec();
                self.fft(&mut buf);
                for (v, kj) in buf.iter_mut().zip(k) {
                    *v *= C64::from_polar(1.0, kj * x0);
                }
                self.ifft(&mut buf);
                buf
            }
            _ => panic!("shift only defined for dim = 1"),
        }
    }

    /// Quadrature of a real sample vector.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Real L2 inner product (f, g) = Re sum w f conj(g).
    pub fn inner(&self, f: &[C64], g: &[C64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * (a.re * b.re + a.im * b.im))
            .sum()
    }

    pub fn l2_norm_sq(&self, f: &[C64]) -> f64 {
        self.inner(f, f)
    }

    /// Discrete Dirichlet form |grad f|^2_{L2}, consistent with `laplacian`.
    pub fn dirichlet_form(&self, f: &[C64]) -> f64 {
        match &self.kind {
            GridKind::Line { k, .. } => {
                let mut buf = f.to_vec();
                self.fft(&mut buf);
                let norm = 2.0 * self.l / (self.n as f64 * self.n as f64);
                buf.iter().zip(k).map(|(v, kj)| kj * kj * v.norm_sqr() * norm).sum()
            }
            GridKind::RadialBall { .. } => {
                let lap = self.laplacian(f);
                -self.inner(&lap, f)
            }
        }
    }

    pub fn h1_norm_sq(&self, f: &[C64]) -> f64 {
        self.l2_norm_sq(f) + self.dirichlet_form(f)
    }

    /// Homogeneous Sobolev seminorm |f|_{H^s} via the |xi|^s multiplier (dim = 1).
    pub fn hs_seminorm(&self, f: &[C64], s: f64) -> f64 {
        match &self.kind {
            GridKind::Line { k, .. } => {
                let mut buf = f.to_vec();
                self.fft(&mut buf);
                let norm = 2.0 * self.l / (self.n as f64 * self.n as f64);
                buf.iter()
                    .zip(k)
                    .map(|(v, kj)| kj.abs().powf(2.0 * s) * v.norm_sqr() * norm)
                    .sum::<f64>()
                    .sqrt()
            }
            _ => panic!("hs_seminorm only defined for dim = 1"),
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.l == other.l
    }
}

/// Thomas algorithm for a tridiagonal system; `diag` is consumed as workspace.
fn thomas(sub: &[C64], diag: &mut [C64], sup: &[C64], rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    let mut x = rhs.to_vec();
    for i in 1..n {
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        let prev = x[i - 1];
        x[i] -= m * prev;
    }
    x[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = (x[i] - sup[i] * next) / diag[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(1, 20.0, 1000).is_err()); // not a power of two
        assert!(make_grid(1, 20.0, 128).is_err()); // under-resolved
        assert!(make_grid(2, 20.0, 512).is_err());
        assert!(make_grid(1, -1.0, 512).is_err());
    }

    #[test]
    fn weights_sum_to_measure() {
        for (dim, n) in [(1u32, 1024usize), (3, 500)] {
            let g = make_grid(dim, 10.0, n).unwrap();
            let total: f64 = g.weights.iter().sum();
            assert!(
                ((total - g.measure()) / g.measure()).abs() < 1e-12,
                "dim={dim}: {total} vs {}",
                g.measure()
            );
        }
    }

    #[test]
    fn uniform_periodic_quadrature() {
        let g = make_grid(1, 20.0, 1024).unwrap();
        assert!((g.weights[0] - 40.0 / 1024.0).abs() < 1e-15);
        assert!((g.nodes[1] - g.nodes[0] - 40.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_quadrature_accuracy() {
        let g = make_grid(1, 10.0, 1024).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|x| (-x * x).exp()).collect();
        let exact = PI.sqrt(); // erf(10) = 1 to beyond double precision
        assert!((g.integrate(&f) - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn spectral_laplacian_on_plane_wave() {
        let g = make_grid(1, 10.0, 512).unwrap();
        let k = PI / 10.0 * 3.0;
        let f: Vec<C64> = g.nodes.iter().map(|x| C64::from_polar(1.0, k * x)).collect();
        let lap = g.laplacian(&f);
        for (l, v) in lap.iter().zip(&f) {
            assert!((l + k * k * v).norm() < 1e-10);
        }
    }

    #[test]
    fn helmholtz_inverse_is_exact_inverse() {
        for (dim, n) in [(1u32, 512usize), (3, 400)] {
            let g = make_grid(dim, 15.0, n).unwrap();
            let f: Vec<C64> = g
                .nodes
                .iter()
                .map(|x| C64::new((-x * x).exp(), 0.3 * (-0.5 * x * x).exp()))
                .collect();
            let x = g.helmholtz_inverse(&f);
            let lap = g.laplacian(&x);
            for j in 0..n {
                let resid = -lap[j] + x[j] - f[j];
                assert!(resid.norm() < 1e-9, "dim={dim} j={j} resid={}", resid.norm());
            }
        }
    }

    #[test]
    fn radial_laplacian_symmetric_in_weighted_inner_product() {
        let g = make_grid(3, 12.0, 300).unwrap();
        let f: Vec<C64> = g.nodes.iter().map(|r| C64::new((-r * r).exp(), 0.0)).collect();
        let h: Vec<C64> = g.nodes.iter().map(|r| C64::new(r * (-r).exp(), 0.1)).collect();
        let lf = g.laplacian(&f);
        let lh = g.laplacian(&h);
        let a = g.inner(&lf, &h);
        let b = g.inner(&f, &lh);
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn radial_laplacian_second_order() {
        // Lap of exp(-r^2) in 3d is (4r^2 - 6) exp(-r^2).
        let mut errs = vec![];
        for n in [280usize, 560] {
            let g = make_grid(3, 14.0, n).unwrap();
            let f: Vec<C64> = g.nodes.iter().map(|r| C64::new((-r * r).exp(), 0.0)).collect();
            let lap = g.laplacian(&f);
            let err = g
                .nodes
                .iter()
                .zip(&lap)
                .map(|(r, l)| (l.re - (4.0 * r * r - 6.0) * (-r * r).exp()).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn shift_is_exact_for_band_limited() {
        let g = make_grid(1, 10.0, 512).unwrap();
        let k = PI / 10.0 * 5.0;
        let f: Vec<C64> = g.nodes.iter().map(|x| C64::new((k * x).cos(), 0.0)).collect();
        let sh = g.shift(&f, 0.3);
        for (j, x) in g.nodes.iter().enumerate() {
            assert!((sh[j].re - (k * (x + 0.3)).cos()).abs() < 1e-12);
        }
    }
}
