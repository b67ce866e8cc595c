//! Physical observables: conserved quantities, norms, scattering density,
//! and mass-energy threshold diagnostics.

use serde::Serialize;

use crate::error::{NlsError, Result};
use crate::field::ComplexField;
use crate::ground_state::GroundStateBundle;

/// Critical Sobolev index s_c = d/2 - 2/(p-1).
pub fn critical_index(dim: u32, p: f64) -> f64 {
    dim as f64 / 2.0 - 2.0 / (p - 1.0)
}

/// The intercritical window 1 + 4/d < p < 1 + 4/(d-2), i.e. s_c in (0, 1).
pub fn check_intercritical(dim: u32, p: f64) -> Result<()> {
    let sc = critical_index(dim, p);
    if sc > 0.0 && sc < 1.0 {
        Ok(())
    } else {
        Err(NlsError::NotIntercritical { dim, p, sc })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Observables {
    pub mass: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
    pub kinetic: f64,
    pub potential: f64,
    pub h1: f64,
    pub scattering_density: f64,
}

/// The exponent (p-1)(d+2)/2 of the scattering density |u|^{(p-1)(d+2)/2}.
pub fn scattering_exponent(dim: u32, p: f64) -> f64 {
    (p - 1.0) * (dim as f64 + 2.0) / 2.0
}

pub fn observables(u: &ComplexField, p: f64) -> Result<Observables> {
    check_intercritical(u.grid.dim, p)?;
    u.check_finite()?;
    let grid = &u.grid;
    let mass = grid.l2_norm_sq(&u.values);
    let kinetic = grid.dirichlet_form(&u.values);
    let moduli: Vec<f64> = u.values.iter().map(|v| v.norm()).collect();
    let potential = grid.integrate(&moduli.iter().map(|m| m.powf(p + 1.0)).collect::<Vec<_>>());
    let sx = scattering_exponent(grid.dim, p);
    let scattering_density =
        grid.integrate(&moduli.iter().map(|m| m.powf(sx)).collect::<Vec<_>>());
    let energy = kinetic / 2.0 - potential / (p + 1.0);
    let momentum = match grid.dim {
        1 => {
            let du = grid.derivative(&u.values);
            let px: f64 = grid
                .weights
                .iter()
                .zip(u.values.iter().zip(&du))
                .map(|(w, (v, d))| w * (v.conj() * d).im)
                .sum();
            vec![px]
        }
        // Radial fields carry no momentum.
        _ => vec![0.0; grid.dim as usize],
    };
    Ok(Observables {
        mass,
        energy,
        momentum,
        kinetic,
        potential,
        h1: mass + kinetic,
        scattering_density,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdDiagnostics {
    /// M(u)^{1-s_c} E(u)^{s_c}; None when E(u) <= 0 (strictly below threshold).
    pub me_product: Option<f64>,
    pub kinetic_product: f64,
    pub me_threshold: f64,
    pub kinetic_threshold: f64,
    pub below_me: bool,
    pub below_kinetic: bool,
    pub s_c: f64,
}

pub fn threshold_diagnostics(
    u: &ComplexField,
    gs: &GroundStateBundle,
    p: f64,
) -> Result<ThresholdDiagnostics> {
    let sc = critical_index(u.grid.dim, p);
    let obs = observables(u, p)?;
    let qobs = &gs.observables;
    let me_threshold = qobs.mass.powf(1.0 - sc) * qobs.energy.powf(sc);
    let kinetic_threshold = qobs.mass.sqrt().powf(1.0 - sc) * qobs.kinetic.sqrt().powf(sc);
    let kinetic_product = obs.mass.sqrt().powf(1.0 - sc) * obs.kinetic.sqrt().powf(sc);
    let (me_product, below_me) = if obs.energy > 0.0 {
        let prod = obs.mass.powf(1.0 - sc) * obs.energy.powf(sc);
        (Some(prod), prod < me_threshold)
    } else {
        // Nonpositive energy is strictly below any positive threshold.
        (None, true)
    };
    Ok(ThresholdDiagnostics {
        me_product,
        kinetic_product,
        me_threshold,
        kinetic_threshold,
        below_me,
        below_kinetic: kinetic_product < kinetic_threshold,
        s_c: sc,
    })
}
