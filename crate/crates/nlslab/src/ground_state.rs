//! Ground state Q of -Lap Q + Q - Q^p = 0, computed by Petviashvili
//! iteration and certified against the elliptic residual, positivity,
//! monotonicity, and the virial identity.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{NlsError, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::observables::{check_intercritical, observables, Observables};

pub struct GroundStateBundle {
    pub q: ComplexField,
    pub p: f64,
    pub observables: Observables,
    pub elliptic_residual: f64,
    /// Derivatives d_j Q; populated for dim = 1 (translation modes are not
    /// radial and so do not exist on the radial grid).
    pub dq: Vec<ComplexField>,
    pub virial_gap: f64,
}

/// Certificate summary for manifests.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateCertificate {
    pub residual: f64,
    pub mass: f64,
    pub energy: f64,
    pub virial_gap: f64,
}

impl GroundStateBundle {
    pub fn certificate(&self) -> GroundStateCertificate {
        GroundStateCertificate {
            residual: self.elliptic_residual,
            mass: self.observables.mass,
            energy: self.observables.energy,
            virial_gap: self.virial_gap,
        }
    }
}

/// Closed-form 1d ground state Q(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2).
pub fn closed_form_q_1d(grid: &Arc<Grid>, p: f64) -> Result<ComplexField> {
    if grid.dim != 1 {
        return Err(NlsError::Validation("closed form requires dim = 1".into()));
    }
    check_intercritical(1, p)?;
    let amp = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    let rate = (p - 1.0) / 2.0;
    let pow = 2.0 / (p - 1.0);
    Ok(ComplexField::from_real_fn(grid, |x| {
        amp * (1.0 / (rate * x).cosh()).powf(pow)
    }))
}

/// L2 norm of -Lap Q + Q - Q^p for a real field.
pub fn elliptic_residual(q: &ComplexField, p: f64) -> Result<f64> {
    if !q.is_real(1e-12) {
        return Err(NlsError::Validation("elliptic residual requires a real field".into()));
    }
    let lap = q.grid.laplacian(&q.values);
    let resid: Vec<C64> = q
        .values
        .iter()
        .zip(&lap)
        .map(|(v, l)| -l + v - v.re.abs().powf(p - 1.0) * v)
        .collect();
    Ok(q.grid.l2_norm_sq(&resid).sqrt())
}

/// Relative gap in the virial identity |grad Q|^2 = d(p-1)/(2(p+1)) |Q|_{p+1}^{p+1}.
pub fn virial_gap(obs: &Observables, dim: u32, p: f64) -> f64 {
    let rhs = dim as f64 * (p - 1.0) / (2.0 * (p + 1.0)) * obs.potential;
    (obs.kinetic - rhs).abs() / obs.kinetic
}

pub fn solve_ground_state(grid: &Arc<Grid>, p: f64, tol: f64) -> Result<GroundStateBundle> {
    let seed = ComplexField::from_real_fn(grid, |x| (-x * x).exp());
    solve_ground_state_with_seed(grid, p, tol, &seed)
}

/// Petviashvili fixed point Q -> m^gamma (-Lap+1)^{-1} Q^p with gamma = p/(p-1).
pub fn solve_ground_state_with_seed(
    grid: &Arc<Grid>,
    p: f64,
    tol: f64,
    seed: &ComplexField,
) -> Result<GroundStateBundle> {
    check_intercritical(grid.dim, p)?;
    if tol < 1e-14 {
        return Err(NlsError::Validation(format!("tol = {tol} below attainable precision")));
    }
    let gamma = p / (p - 1.0);
    let max_iters = 10_000;
    let mut q: Vec<f64> = seed.values.iter().map(|v| v.re).collect();
    let mut last_diff = f64::INFINITY;
    for iter in 0..max_iters {
        let qp: Vec<f64> = q.iter().map(|v| v.abs().powf(p - 1.0) * v).collect();
        // m = <(-Lap+1)Q, Q> / <Q^p, Q>; the numerator uses the identity
        // <(-Lap+1)Q, Q> = |grad Q|^2 + |Q|^2 evaluated through the grid.
        let qc: Vec<C64> = q.iter().map(|&v| C64::new(v, 0.0)).collect();
        let num = grid.dirichlet_form(&qc) + grid.l2_norm_sq(&qc);
        let den = grid.integrate(&qp.iter().zip(&q).map(|(a, b)| a * b).collect::<Vec<_>>());
        if den.abs() < 1e-300 {
            return Err(NlsError::TrivialFixedPoint);
        }
        let m = num / den;
        let rhs: Vec<C64> = qp.iter().map(|&v| C64::new(v, 0.0)).collect();
        let inv = grid.helmholtz_inverse(&rhs);
        let scale = m.powf(gamma);
        let next: Vec<f64> = inv.iter().map(|v| scale * v.re).collect();
        last_diff = q
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        let norm = grid
            .l2_norm_sq(&q.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
            .sqrt();
        if norm < 1e-6 {
            return Err(NlsError::TrivialFixedPoint);
        }
        if iter == 50 && q.iter().any(|&v| v < -1e-6) {
            return Err(NlsError::Validation(
                "degenerate seed: iterate not positive after 50 iterations".into(),
            ));
        }
        if last_diff <= tol {
            return certify(grid, p, q);
        }
    }
    Err(NlsError::NotConverged { iters: max_iters, residual: last_diff })
}

/// Certify a stored ground-state field (e.g. loaded from a snapshot) and
/// assemble the full bundle without re-running the fixed-point iteration.
pub fn certify_ground_state(q: &ComplexField, p: f64) -> Result<GroundStateBundle> {
    check_intercritical(q.grid.dim, p)?;
    let im_max = q.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if im_max > 1e-12 * q.l2_norm() {
        return Err(NlsError::Certificate(format!(
            "ground-state field has imaginary part {im_max:.3e}"
        )));
    }
    certify(&q.grid, p, q.values.iter().map(|v| v.re).collect())
}

fn certify(grid: &Arc<Grid>, p: f64, q: Vec<f64>) -> Result<GroundStateBundle> {
    let qf = ComplexField::from_values(grid, q.iter().map(|&v| C64::new(v, 0.0)).collect());
    qf.check_finite()?;
    // Positivity and monotone decay in |x|.
    let tol = 1e-12 * q.iter().cloned().fold(0.0, f64::max);
    let check_monotone = |idx: &mut dyn Iterator<Item = usize>| -> bool {
        let mut prev = f64::INFINITY;
        for j in idx {
            if q[j] <= 0.0 || q[j] > prev + tol {
                return false;
            }
            prev = q[j];
        }
        true
    };
    let monotone = match grid.dim {
        1 => {
            let c = grid.n / 2; // node closest to x = 0
            check_monotone(&mut (c..grid.n)) && check_monotone(&mut (0..=c).rev())
        }
        _ => check_monotone(&mut (0..grid.n)),
    };
    if !monotone {
        return Err(NlsError::Certificate(
            "ground state not positive and monotone in |x|".into(),
        ));
    }
    let residual = elliptic_residual(&qf, p)?;
    let l2 = qf.l2_norm();
    if residual > 1e-8 * l2 {
        return Err(NlsError::Certificate(format!(
            "elliptic residual {residual:.3e} exceeds 1e-8 |Q| = {:.3e}",
            1e-8 * l2
        )));
    }
    let obs = observables(&qf, p)?;
    let vgap = virial_gap(&obs, grid.dim, p);
    // The virial identity is exact for the continuum equation; the spectral
    // discretization (dim = 1) reproduces it to near roundoff, the
    // second-order radial scheme only to O(dr^2).
    let vtol = if grid.dim == 1 { 1e-8 } else { 1e-3 };
    if vgap > vtol {
        return Err(NlsError::Certificate(format!(
            "virial identity gap {vgap:.3e} exceeds {vtol:.1e}"
        )));
    }
    let dq = match grid.dim {
        1 => vec![ComplexField::from_values(grid, grid.derivative(&qf.values))],
        _ => vec![],
    };
    Ok(GroundStateBundle {
        q: qf,
        p,
        observables: obs,
        elliptic_residual: residual,
        dq,
        virial_gap: vgap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid1() -> Arc<Grid> {
        make_grid(1, 20.0, 1024).unwrap()
    }

    #[test]
    fn closed_form_peak_and_profile() {
        // dx = 1/32 so both x = 0 and x = 1 are nodes.
        let g = make_grid(1, 16.0, 1024).unwrap();
        let q = closed_form_q_1d(&g, 7.0).unwrap();
        // Q(0) = 2^{1/3}; grid node n/2 sits exactly at x = 0.
        let q0 = q.values[g.n / 2].re;
        assert!((q0 - 2f64.powf(1.0 / 3.0)).abs() < 1e-13);
        // Q(1)/Q(0) = sech(3)^{1/3}.
        let j1 = g.nodes.iter().position(|&x| (x - 1.0).abs() < 1e-9).unwrap();
        let expect = (1.0 / 3f64.cosh()).powf(1.0 / 3.0);
        assert!((q.values[j1].re / q0 - expect).abs() < 1e-13);
        // Even symmetry on the symmetric grid.
        for j in 1..g.n {
            assert_eq!(q.values[j].re, q.values[g.n - j].re);
        }
    }

    #[test]
    fn closed_form_is_discrete_solution() {
        // The sampled sech profile is not exactly periodic; its spectral
        // residual carries an e^{-2L} boundary kink, so take L large enough.
        let g = make_grid(1, 24.0, 1024).unwrap();
        let q = closed_form_q_1d(&g, 7.0).unwrap();
        let r = elliptic_residual(&q, 7.0).unwrap();
        assert!(r <= 1e-8, "residual {r:.3e}");
        // A scaled profile is not a solution.
        let r_scaled = elliptic_residual(&q.scale(1.1), 7.0).unwrap();
        assert!(r_scaled > 1e-3, "scaled residual {r_scaled:.3e}");
        // Zero field has zero residual.
        let z = ComplexField::zeros(&g);
        assert_eq!(elliptic_residual(&z, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_mass_matches_quadrature_oracle() {
        // Frozen from an independent adaptive quadrature of the closed form:
        // int 4^{1/3} sech^{2/3}(3x) dx = 2.22582534904461077 (30-digit quadrature).
        let g = grid1();
        let q = closed_form_q_1d(&g, 7.0).unwrap();
        let obs = observables(&q, 7.0).unwrap();
        assert!((obs.mass - 2.22582534904461077).abs() < 1e-11, "mass {}", obs.mass);
        assert!((obs.energy - 0.222582534904461077).abs() < 1e-11, "energy {}", obs.energy);
    }

    #[test]
    fn petviashvili_matches_closed_form() {
        let g = grid1();
        for p in [6.0, 7.0, 9.0] {
            let gs = solve_ground_state(&g, p, 1e-13).unwrap();
            let exact = closed_form_q_1d(&g, p).unwrap();
            let d = gs.q.linf_distance(&exact);
            assert!(d <= 1e-8, "p={p}: Linf distance {d:.3e}");
            assert!(gs.virial_gap <= 1e-8, "p={p}: virial gap {:.3e}", gs.virial_gap);
        }
    }

    #[test]
    fn seeds_converge_to_same_fixed_point() {
        let g = grid1();
        let s1 = ComplexField::from_real_fn(&g, |x| (-x * x).exp());
        let s2 = ComplexField::from_real_fn(&g, |x| 2.0 * (-x * x / 4.0).exp());
        let a = solve_ground_state_with_seed(&g, 7.0, 1e-13, &s1).unwrap();
        let b = solve_ground_state_with_seed(&g, 7.0, 1e-13, &s2).unwrap();
        assert!(a.q.linf_distance(&b.q) <= 1e-8);
    }

    #[test]
    fn rejects_subcritical_power() {
        let g = grid1();
        assert!(matches!(
            solve_ground_state(&g, 3.0, 1e-13),
            Err(NlsError::NotIntercritical { .. })
        ));
        assert!(closed_form_q_1d(&g, 5.0).is_err());
    }

    #[test]
    fn resolution_robustness() {
        let g1 = make_grid(1, 20.0, 1024).unwrap();
        let g2 = make_grid(1, 20.0, 2048).unwrap();
        let a = solve_ground_state(&g1, 7.0, 1e-13).unwrap();
        let b = solve_ground_state(&g2, 7.0, 1e-13).unwrap();
        let dm = (a.observables.mass - b.observables.mass).abs() / b.observables.mass;
        let de = (a.observables.energy - b.observables.energy).abs() / b.observables.energy;
        assert!(dm < 1e-10, "mass gap {dm:.3e}");
        assert!(de < 1e-10, "energy gap {de:.3e}");
    }

    #[test]
    fn radial_ground_state_d3() {
        let g = make_grid(3, 15.0, 600).unwrap();
        let gs = solve_ground_state(&g, 3.0, 1e-12).unwrap();
        assert!(gs.elliptic_residual <= 1e-8 * gs.q.l2_norm());
        assert!(gs.q.values[0].re > 1.0);
        assert!(gs.virial_gap < 1e-3, "virial gap {:.3e}", gs.virial_gap);
    }
}
