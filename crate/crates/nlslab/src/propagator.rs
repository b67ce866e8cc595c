//! Strang split-step time integration of i u_t + Lap u = -|u|^{p-1} u with
//! conservation monitoring, a trapezoid scattering accumulator, and
//! bisection-refined event detection.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{NlsError, Result};
use crate::field::ComplexField;
use crate::observables::{check_intercritical, observables, scattering_exponent};

/// Relative mass drift above this is recorded as unhealthy; above the abort
/// threshold the run stops with a diagnostic.
pub const MASS_DRIFT_INVARIANT: f64 = 1e-9;
pub const MASS_DRIFT_ABORT: f64 = 1e-7;

#[derive(Clone)]
pub struct SimState {
    pub t: f64,
    pub u: ComplexField,
    pub p: f64,
    pub dt: f64,
    pub step_count: u64,
    pub mass0: f64,
    pub energy0: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// int_0^t int |u|^{(p-1)(d+2)/2} dx ds, trapezoid in time (accumulated
    /// along the path for backward runs, so it is nondecreasing in steps).
    pub accumulated_scattering: f64,
    /// Integrate the free equation only (diagnostics; default false).
    pub linear_only: bool,
    /// Use the Yoshida triple-jump composition of Strang substeps (4th order
    /// in dt). The soliton is linearly unstable (the lambda1 mode), so the
    /// O(dt^2) truncation noise of plain Strang seeds spurious exponential
    /// growth at the 1e-6 level; the composition pushes that seed below 1e-9
    /// and is the default for threshold experiments.
    pub fourth_order: bool,
    last_density: f64,
    /// Cached linear-step multipliers exp(-i k^2 tau), keyed by tau bits.
    lin_mult: Vec<(u64, Vec<C64>)>,
}

impl SimState {
    pub fn new(u0: ComplexField, p: f64, dt: f64) -> Result<Self> {
        check_intercritical(u0.grid.dim, p)?;
        check_dt(dt)?;
        u0.check_finite()?;
        let obs = observables(&u0, p)?;
        let state = Self {
            t: 0.0,
            u: u0,
            p,
            dt,
            step_count: 0,
            mass0: obs.mass,
            energy0: obs.energy,
            mass_drift: 0.0,
            energy_drift: 0.0,
            accumulated_scattering: 0.0,
            linear_only: false,
            fourth_order: false,
            last_density: obs.scattering_density,
            lin_mult: Vec::new(),
        };
        Ok(state)
    }

    fn multiplier_index(&mut self, tau: f64) -> usize {
        let key = tau.to_bits();
        if let Some(i) = self.lin_mult.iter().position(|(k, _)| *k == key) {
            return i;
        }
        let mult = self
            .u
            .grid
            .wavenumbers()
            .iter()
            .map(|k| C64::from_polar(1.0, -k * k * tau))
            .collect();
        self.lin_mult.push((key, mult));
        self.lin_mult.len() - 1
    }

    /// One step with the state's dt.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        self.step_with_dt(dt)
    }

    /// One step with an explicit dt (used by event bisection).
    pub fn step_with_dt(&mut self, dt: f64) -> Result<()> {
        check_dt(dt)?;
        if self.fourth_order {
            // Yoshida symmetric composition: dt * (w1, w0, w1) with
            // w1 = 1/(2 - 2^{1/3}), w0 = 1 - 2 w1 < 0.
            let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
            let w0 = 1.0 - 2.0 * w1;
            self.strang_substep(w1 * dt);
            self.strang_substep(w0 * dt);
            self.strang_substep(w1 * dt);
        } else {
            self.strang_substep(dt);
        }
        self.t += dt;
        self.step_count += 1;
        self.update_monitors(dt)
    }

    fn strang_substep(&mut self, dt: f64) {
        if !self.linear_only {
            self.nonlinear_half(dt);
        }
        self.linear_full(dt);
        if !self.linear_only {
            self.nonlinear_half(dt);
        }
    }

    /// Exact flow of i u_t = -|u|^{p-1} u over dt/2: a pointwise phase
    /// rotation, since |u| is conserved by this sub-flow.
    fn nonlinear_half(&mut self, dt: f64) {
        let pm1 = self.p - 1.0;
        for v in self.u.values.iter_mut() {
            let phase = 0.5 * dt * v.norm().powf(pm1);
            *v *= C64::from_polar(1.0, phase);
        }
    }

    /// Exact Fourier propagator exp(i dt Lap) for dim = 1; unitary
    /// Crank-Nicolson for the radial grid.
    fn linear_full(&mut self, dt: f64) {
        let grid = self.u.grid.clone();
        match grid.dim {
            1 => {
                let idx = self.multiplier_index(dt);
                grid.fft(&mut self.u.values);
                for (v, m) in self.u.values.iter_mut().zip(&self.lin_mult[idx].1) {
                    *v *= m;
                }
                grid.ifft(&mut self.u.values);
            }
            _ => {
                // (I - i dt/2 Lap) u' = (I + i dt/2 Lap) u; a Cayley
                // transform of the symmetric Laplacian, so mass-preserving.
                let half = C64::new(0.0, 0.5 * dt);
                let lap = grid.laplacian(&self.u.values);
                let rhs: Vec<C64> = self
                    .u
                    .values
                    .iter()
                    .zip(&lap)
                    .map(|(v, l)| v + half * l)
                    .collect();
                self.u.values = grid.implicit_lap_solve(half, &rhs);
            }
        }
    }

    fn update_monitors(&mut self, dt: f64) -> Result<()> {
        if !self.u.is_finite() {
            return Err(NlsError::MonitorAbort {
                kind: "non-finite field".into(),
                value: f64::NAN,
                t: self.t,
            });
        }
        let grid = &self.u.grid;
        let mass = grid.l2_norm_sq(&self.u.values);
        self.mass_drift = self
            .mass_drift
            .max((mass - self.mass0).abs() / self.mass0.max(1e-300));
        if self.mass_drift > MASS_DRIFT_ABORT {
            return Err(NlsError::MonitorAbort {
                kind: "mass".into(),
                value: self.mass_drift,
                t: self.t,
            });
        }
        let obs = observables(&self.u, self.p)?;
        let escale = self.energy0.abs().max(1.0);
        self.energy_drift = self.energy_drift.max((obs.energy - self.energy0).abs() / escale);
        let dens = obs.scattering_density;
        self.accumulated_scattering += 0.5 * dt.abs() * (self.last_density + dens);
        self.last_density = dens;
        Ok(())
    }

    /// Current scattering density int |u|^{(p-1)(d+2)/2} dx.
    pub fn scattering_density(&self) -> f64 {
        self.last_density
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt == 0.0 || !dt.is_finite() || dt.abs() > 0.1 {
        return Err(NlsError::Validation(format!(
            "dt = {dt} out of range (need 0 < |dt| <= 0.1)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub momentum: f64,
    pub scattering_density: f64,
    pub accumulated_scattering: f64,
}

pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub state: SimState,
    /// Bisection-refined crossing time when the stop condition was an event.
    pub event_time: Option<f64>,
}

/// When to stop `evolve`.
pub enum StopCondition<'a> {
    /// Advance until t reaches (or passes) this time.
    TimeEnd(f64),
    /// Advance until `scalar(state) >= threshold`; the crossing is then
    /// refined by bisection on the last step to within `tol` time units.
    Event {
        scalar: Box<dyn Fn(&SimState) -> Result<f64> + 'a>,
        threshold: f64,
        t_max: f64,
        tol: f64,
    },
}

/// Advance until the stop condition fires, sampling observables every
/// `stride` steps (stride 0 records only the endpoints).
pub fn evolve(mut state: SimState, stop: StopCondition, stride: usize) -> Result<Trajectory> {
    let mut samples = vec![sample(&state)];
    let record = |samples: &mut Vec<TrajectorySample>, state: &SimState| {
        samples.push(sample(state));
    };
    match stop {
        StopCondition::TimeEnd(t_end) => {
            let span = t_end - state.t;
            if span / state.dt <= 0.0 {
                return Err(NlsError::Validation(format!(
                    "t_end = {t_end} not reachable from t = {} with dt = {}",
                    state.t, state.dt
                )));
            }
            let steps = (span / state.dt).round().max(1.0) as u64;
            for i in 1..=steps {
                state.step()?;
                if stride > 0 && (i as usize) % stride == 0 {
                    record(&mut samples, &state);
                }
            }
            record(&mut samples, &state);
            Ok(Trajectory { samples, state, event_time: None })
        }
        StopCondition::Event { scalar, threshold, t_max, tol } => {
            if scalar(&state)? >= threshold {
                let t = state.t;
                return Ok(Trajectory { samples, state, event_time: Some(t) });
            }
            loop {
                if (state.t - t_max) * state.dt.signum() >= 0.0 {
                    return Err(NlsError::ExitNotReached { t_max });
                }
                let before = state.clone();
                state.step()?;
                if stride > 0 && (state.step_count as usize) % stride == 0 {
                    record(&mut samples, &state);
                }
                if scalar(&state)? >= threshold {
                    let t_event = bisect_event(before, &scalar, threshold, tol)?;
                    record(&mut samples, &state);
                    return Ok(Trajectory { samples, state, event_time: Some(t_event) });
                }
            }
        }
    }
}

/// The event fired inside the step taken from `before`; bisect the substep
/// length until the crossing time is known to within `tol`.
fn bisect_event(
    before: SimState,
    scalar: &dyn Fn(&SimState) -> Result<f64>,
    threshold: f64,
    tol: f64,
) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut hi = before.dt;
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        let mut probe = before.clone();
        probe.step_with_dt(mid)?;
        if scalar(&probe)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(before.t + 0.5 * (lo + hi))
}

fn sample(state: &SimState) -> TrajectorySample {
    let obs = observables(&state.u, state.p).expect("state is finite by monitor invariant");
    TrajectorySample {
        t: state.t,
        mass: obs.mass,
        energy: obs.energy,
        momentum: obs.momentum.first().copied().unwrap_or(0.0),
        scattering_density: obs.scattering_density,
        accumulated_scattering: state.accumulated_scattering,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
    pub max_momentum_drift: f64,
}

/// Maxima of relative drifts over the stored samples (momentum is scaled by
/// the initial mass since it is typically zero for the families studied).
pub fn conservation_report(traj: &Trajectory) -> Result<ConservationReport> {
    let first = traj
        .samples
        .first()
        .ok_or_else(|| NlsError::Validation("empty trajectory".into()))?;
    let escale = first.energy.abs().max(1.0);
    let mut report = ConservationReport {
        max_mass_drift: 0.0,
        max_energy_drift: 0.0,
        max_momentum_drift: 0.0,
    };
    for s in &traj.samples {
        report.max_mass_drift = report
            .max_mass_drift
            .max((s.mass - first.mass).abs() / first.mass.max(1e-300));
        report.max_energy_drift =
            report.max_energy_drift.max((s.energy - first.energy).abs() / escale);
        report.max_momentum_drift = report
            .max_momentum_drift
            .max((s.momentum - first.momentum).abs() / first.mass.max(1e-300));
    }
    Ok(report)
}

/// Convenience: exponent of the scattering density for this state.
pub fn state_scattering_exponent(state: &SimState) -> f64 {
    scattering_exponent(state.u.grid.dim, state.p)
}
