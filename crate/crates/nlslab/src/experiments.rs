//! The threshold-approaching family, exit-time experiments, and the
//! |log eps| regression laws.
//!
//! The family u0 = (1 - b)Q - 2a Re e+ sits on the mass shell M(u0) = M(Q)
//! with an energy deficit eps^2 ~ 2a^2; its e- coordinate alpha- grows like
//! e^{lambda1 t} until it reaches the exit threshold eta, so the exit time
//! T+(eta) scales as |log eps| / lambda1 and the accumulated scattering
//! density as (|log eps| / lambda1) * int Q^{(p-1)(d+2)/2}.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NlsError, Result};
use crate::field::ComplexField;
use crate::linearized::SpectralBundle;
use crate::modulation::{
    decompose, fit_symmetry_with, FitOptions, GrowthRate, ModulationState, SymmetryFit,
};
use crate::observables::{observables, threshold_diagnostics, ThresholdDiagnostics};
use crate::propagator::SimState;

/// One member of the threshold family.
pub struct ThresholdDatum {
    pub a: f64,
    pub b: f64,
    pub u0: ComplexField,
    /// eps with eps^2 = M(Q) + E(Q) - M(u0) - E(u0), from the discrete
    /// conserved quantities (the asymptotic eps^2 ~ 2a^2 is then measured,
    /// not assumed).
    pub eps: f64,
    pub diagnostics: ThresholdDiagnostics,
    /// +1 if the bundle's e+ satisfies the paper's sign convention
    /// int grad Q . grad Re e+ > 0, else -1 (the construction flips
    /// (e+, e-) jointly so the kinetic inequality holds either way).
    pub sign: f64,
}

/// Largest admissible amplitude: 4 a^2 int (Re e+)^2 < M(Q).
pub fn a_max(sb: &SpectralBundle) -> f64 {
    let grid = sb.ctx.grid();
    let re_ep: Vec<f64> = sb.e_plus.values.iter().map(|v| v.re * v.re).collect();
    let r = grid.integrate(&re_ep);
    (sb.ctx.gs.observables.mass / (4.0 * r)).sqrt()
}

/// Build u0 = (1 - b)Q - 2a Re e+ with b chosen so that M(u0) = M(Q)
/// exactly at the quadrature level, and certify the section 4 invariants.
pub fn construct_threshold_data(a: f64, sb: &SpectralBundle) -> Result<ThresholdDatum> {
    let grid = sb.ctx.grid().clone();
    let gs = &sb.ctx.gs;
    let q = &gs.q;
    let p = sb.ctx.p;
    let amax = a_max(sb);
    if !(a > 0.0) || !a.is_finite() {
        return Err(NlsError::Validation(format!("amplitude a = {a} must be positive")));
    }
    if a >= amax {
        return Err(NlsError::Validation(format!(
            "a = {a:.3e} too large; admissible a_max = {amax:.6e}"
        )));
    }

    // Sign convention: int grad Q . grad Re e+ > 0 makes the -2a Re e+
    // perturbation lower the kinetic energy. Flip (e+, e-) jointly if the
    // computed eigenvector came out with the other sign.
    let dq = grid.derivative(&q.values);
    let dep = grid.derivative(&sb.e_plus.values);
    let cross: f64 = grid
        .weights
        .iter()
        .zip(dq.iter().zip(&dep))
        .map(|(w, (a, b))| w * a.re * b.re)
        .sum();
    let sign = if cross >= 0.0 { 1.0 } else { -1.0 };
    let re_ep = ComplexField::from_values(
        &grid,
        sb.e_plus.values.iter().map(|v| num_complex::Complex64::new(sign * v.re, 0.0)).collect(),
    );

    // Mass-shell root: with y = 1 - b, M(y Q - 2a Re e+) = M(Q) reads
    // y^2 M - 4 a C y + 4 a^2 R - M = 0, C = (Q, Re e+), R = |Re e+|^2.
    // C is certified ~0, but using the full quadratic pins the shell to
    // roundoff rather than to the (Re e+, Q) residual.
    let m0 = gs.observables.mass;
    let c = q.inner(&re_ep);
    let r = grid.l2_norm_sq(&re_ep.values);
    let disc = 16.0 * a * a * c * c - 4.0 * m0 * (4.0 * a * a * r - m0);
    if disc <= 0.0 {
        return Err(NlsError::Validation(format!(
            "a = {a:.3e} leaves no real mass-shell root; a_max = {amax:.6e}"
        )));
    }
    let y = (4.0 * a * c + disc.sqrt()) / (2.0 * m0);
    let b = 1.0 - y;

    let u0 = q.scale(y).axpy(-2.0 * a, &re_ep);
    let obs = observables(&u0, p)?;

    // Certificates.
    let mass_err = (obs.mass - m0).abs() / m0;
    if mass_err > 1e-11 {
        return Err(NlsError::Certificate(format!(
            "threshold datum off the mass shell: relative error {mass_err:.3e}"
        )));
    }
    if !(obs.kinetic < gs.observables.kinetic) {
        return Err(NlsError::Validation(format!(
            "kinetic inequality fails at a = {a:.3e} (|grad u0|^2 = {:.6e} vs |grad Q|^2 = {:.6e}); a_max = {amax:.6e}",
            obs.kinetic, gs.observables.kinetic
        )));
    }
    let eps_sq = gs.observables.energy + m0 - obs.energy - obs.mass;
    if !(eps_sq > 0.0) {
        return Err(NlsError::Certificate(format!(
            "energy deficit eps^2 = {eps_sq:.3e} not positive at a = {a:.3e}"
        )));
    }
    let diagnostics = threshold_diagnostics(&u0, gs, p)?;

    Ok(ThresholdDatum { a, b, u0, eps: eps_sq.sqrt(), diagnostics, sign })
}

/// Parameters for exit-time runs.
#[derive(Debug, Clone, Serialize)]
pub struct ExitConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Bisection tolerance on the exit time.
    pub event_tol: f64,
    /// Record every `stride`-th modulation state in the stored series (the
    /// growth-rate fit and exit derivative always use per-step values).
    pub stride: usize,
    /// Also run backward in time to the first |alpha+| >= eta crossing.
    pub backward: bool,
}

impl Default for ExitConfig {
    fn default() -> Self {
        Self { dt: 5e-4, t_max: 30.0, event_tol: 1e-6, stride: 1, backward: false }
    }
}

/// One exit experiment: scalar results plus the modulation time series.
#[derive(Serialize)]
pub struct ExitRecord {
    pub a: f64,
    pub eps: f64,
    pub eta: f64,
    /// Exit time T+(eta): first t with |alpha-(t)| >= eta, bisection-refined.
    pub t_plus: f64,
    /// Accumulated scattering integral on [0, T+].
    pub s_accum: f64,
    /// Growth-rate fit on the window |alpha-| in [2|alpha-(0)|, eta/10];
    /// None when the window holds fewer than 20 samples (largest a's).
    pub rate_fit: Option<GrowthRate>,
    /// Finite-difference d/dt alpha- at the exit.
    pub alpha_dot_at_exit: f64,
    pub alpha_minus_0: f64,
    pub alpha_plus_0: f64,
    /// Backward exit time T-(eta) (negative) and its accumulated scattering,
    /// when the backward run was requested.
    pub t_minus: Option<f64>,
    pub s_accum_backward: Option<f64>,
    /// Path of the emitted per-run CSV, once written by the CLI.
    pub series_ref: Option<String>,
    /// Forward modulation series (strided); not serialized into reports.
    #[serde(skip)]
    pub series: Vec<ModulationState>,
    #[serde(skip)]
    pub backward_series: Vec<ModulationState>,
}

struct DirectionalExit {
    t_exit: f64,
    s_accum: f64,
    series: Vec<ModulationState>,
    /// Per-step (t, alpha) series of the tracked coordinate.
    alpha_steps: Vec<(f64, f64)>,
    alpha_dot_at_exit: f64,
}

/// Track one direction (dt > 0 watches alpha-, dt < 0 watches alpha+) until
/// the coordinate's magnitude reaches eta.
fn run_direction(
    datum: &ThresholdDatum,
    eta: f64,
    cfg: &ExitConfig,
    sb: &SpectralBundle,
    dt: f64,
) -> Result<DirectionalExit> {
    let mut st = SimState::new(datum.u0.clone(), sb.ctx.p, dt)?;
    st.fourth_order = true;
    let forward = dt > 0.0;
    let coord = |ms: &ModulationState| if forward { ms.alpha_minus } else { ms.alpha_plus };

    let mut warm: Option<(f64, f64)> = None;
    let track = |u: &ComplexField, t: f64, warm: &mut Option<(f64, f64)>| -> Result<ModulationState> {
        let opts = FitOptions { pin_translation: true, warm_start: *warm };
        let fit = fit_symmetry_with(u, t, sb, &opts)?;
        *warm = Some((fit.theta, fit.xshift));
        decompose(u, t, &fit, sb)
    };

    let ms0 = track(&st.u, st.t, &mut warm)?;
    if coord(&ms0).abs() >= eta {
        return Err(NlsError::Validation(format!(
            "initial state already past the threshold eta = {eta}"
        )));
    }
    let mut series = vec![ms0.clone()];
    let mut alpha_steps = vec![(ms0.t, coord(&ms0))];
    let stride = cfg.stride.max(1);

    loop {
        if (st.t.abs() - cfg.t_max) >= 0.0 {
            return Err(NlsError::ExitNotReached { t_max: cfg.t_max });
        }
        let before = st.clone();
        let warm_before = warm;
        st.step()?;
        let ms = track(&st.u, st.t, &mut warm)?;
        alpha_steps.push((ms.t, coord(&ms)));
        if st.step_count % stride as u64 == 0 {
            series.push(ms.clone());
        }
        if coord(&ms).abs() >= eta {
            // Bisect the substep length to pin the crossing time.
            let (mut lo, mut hi) = (0.0f64, dt);
            while (hi - lo).abs() > cfg.event_tol {
                let mid = 0.5 * (lo + hi);
                let mut probe = before.clone();
                probe.step_with_dt(mid)?;
                let mut w = warm_before;
                let pms = track(&probe.u, probe.t, &mut w)?;
                if coord(&pms).abs() >= eta {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            let mut exit_state = before.clone();
            exit_state.step_with_dt(tau)?;
            let mut w = warm_before;
            let ms_exit = track(&exit_state.u, exit_state.t, &mut w)?;
            let gap = (coord(&ms_exit).abs() - eta).abs();
            if gap > 1e-4 * eta {
                return Err(NlsError::Certificate(format!(
                    "|alpha(T_exit)| = {:.8e} misses eta = {eta} by {gap:.3e}",
                    coord(&ms_exit).abs()
                )));
            }
            // The overshooting full step may already be in the series; keep
            // the stored series monotone in |t| ending at the exit state.
            while series.last().map(|m| m.t.abs() >= ms_exit.t.abs()) == Some(true) {
                series.pop();
            }
            series.push(ms_exit.clone());
            // One-sided difference over the last full step before exit.
            let n = alpha_steps.len();
            let (t1, a1) = alpha_steps[n - 1];
            let (t0, a0) = alpha_steps[n - 2];
            let alpha_dot_at_exit = (a1 - a0) / (t1 - t0);
            return Ok(DirectionalExit {
                t_exit: exit_state.t,
                s_accum: exit_state.accumulated_scattering,
                series,
                alpha_steps,
                alpha_dot_at_exit,
            });
        }
    }
}

/// Run one exit experiment at amplitude `a` and threshold `eta`.
pub fn run_exit_experiment(
    a: f64,
    eta: f64,
    sb: &SpectralBundle,
    cfg: &ExitConfig,
) -> Result<ExitRecord> {
    if !(eta > 0.0 && eta <= 0.1) {
        return Err(NlsError::Validation(format!("eta = {eta} outside (0, 0.1]")));
    }
    let datum = construct_threshold_data(a, sb)?;

    // The gamma_j(0) = 0 normalization is automatic for this even real
    // family; assert it rather than fitting symmetries away.
    let ms0 = decompose(&datum.u0, 0.0, &SymmetryFit::identity(), sb)?;
    for g in &ms0.gamma {
        if g.abs() > 1e-8 * a.max(1e-8) {
            return Err(NlsError::Certificate(format!(
                "gamma(0) = {g:.3e} not zero for the threshold family"
            )));
        }
    }

    let fwd = run_direction(&datum, eta, cfg, sb, cfg.dt.abs())?;
    let rate_fit = growth_window_fit(&fwd.alpha_steps, eta);

    let (t_minus, s_accum_backward, backward_series) = if cfg.backward {
        let bwd = run_direction(&datum, eta, cfg, sb, -cfg.dt.abs())?;
        (Some(bwd.t_exit), Some(bwd.s_accum), bwd.series)
    } else {
        (None, None, Vec::new())
    };

    Ok(ExitRecord {
        a,
        eps: datum.eps,
        eta,
        t_plus: fwd.t_exit,
        s_accum: fwd.s_accum,
        rate_fit,
        alpha_dot_at_exit: fwd.alpha_dot_at_exit,
        alpha_minus_0: fwd.alpha_steps[0].1,
        alpha_plus_0: ms0.alpha_plus,
        t_minus,
        s_accum_backward,
        series_ref: None,
        series: fwd.series,
        backward_series,
    })
}

/// Least-squares growth rate on the window |alpha| in [2|alpha(0)|, eta/10];
/// None when the window is too short for a meaningful fit.
fn growth_window_fit(alpha_steps: &[(f64, f64)], eta: f64) -> Option<GrowthRate> {
    let a0 = alpha_steps[0].1.abs();
    let lo = 2.0 * a0;
    let hi = eta / 10.0;
    if hi <= lo {
        return None;
    }
    let mut t_lo = None;
    let mut t_hi = None;
    for (t, al) in alpha_steps {
        if t_lo.is_none() && al.abs() >= lo {
            t_lo = Some(*t);
        }
        if al.abs() <= hi {
            t_hi = Some(*t);
        }
    }
    let (t_lo, t_hi) = (t_lo?, t_hi?);
    if t_hi <= t_lo {
        return None;
    }
    crate::modulation::growth_rate(alpha_steps, (t_lo.min(t_hi), t_lo.max(t_hi))).ok()
}

#[derive(Debug, Clone, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci95: f64,
    pub points: usize,
}

/// OLS of y against |log eps|, with a 95% confidence half-width on the slope.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<LogFit> {
    if points.len() < 4 {
        return Err(NlsError::Validation(format!(
            "log-slope regression needs >= 4 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|(e, _)| {
            if *e > 0.0 {
                Ok(e.ln().abs())
            } else {
                Err(NlsError::Validation(format!("eps = {e} not positive")))
            }
        })
        .collect::<Result<_>>()?;
    let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 1e-24 {
        return Err(NlsError::DegenerateRegression);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let df = points.len() - 2;
    let stderr = (ssr / df as f64 / sxx).sqrt();
    Ok(LogFit { slope, intercept, ci95: t_quantile_975(df) * stderr, points: points.len() })
}

/// Two-sided 95% Student-t quantiles by degrees of freedom.
fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if df == 0 {
        f64::INFINITY
    } else if df <= TABLE.len() {
        TABLE[df - 1]
    } else {
        1.96
    }
}

#[derive(Serialize)]
pub struct SweepReport {
    /// Successful records, sorted by descending eps.
    pub records: Vec<ExitRecord>,
    pub slope_t: LogFit,
    pub slope_s: LogFit,
    pub lambda1_ref: f64,
    /// Per-unit-time scattering density of the soliton,
    /// int Q^{(p-1)(d+2)/2} dx.
    pub density_ref: f64,
    pub eta: f64,
    /// True when some ladder entries failed; their errors are listed.
    pub partial: bool,
    pub failures: Vec<String>,
}

/// Run the ladder of exit experiments (concurrently) and regress T+ and
/// S_accum against |log eps|.
pub fn sweep(ladder: &[f64], eta: f64, sb: &SpectralBundle, cfg: &ExitConfig) -> Result<SweepReport> {
    if ladder.len() < 4 {
        return Err(NlsError::Validation(format!(
            "ladder needs >= 4 entries, got {}",
            ladder.len()
        )));
    }
    if !ladder.windows(2).all(|w| w[0] > w[1]) || ladder.iter().any(|a| *a <= 0.0) {
        return Err(NlsError::Validation("ladder must be positive and strictly decreasing".into()));
    }
    if ladder[0] / ladder[ladder.len() - 1] < 100.0 {
        return Err(NlsError::Validation("ladder must span at least two decades".into()));
    }

    let results: Vec<(f64, Result<ExitRecord>)> = ladder
        .par_iter()
        .map(|&a| (a, run_exit_experiment(a, eta, sb, cfg)))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (a, res) in results {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(format!("a = {a:.3e}: {e}")),
        }
    }
    if records.len() < 4 {
        return Err(NlsError::Validation(format!(
            "only {} ladder entries succeeded; regression needs >= 4 ({})",
            records.len(),
            failures.join("; ")
        )));
    }
    records.sort_by(|x, y| y.eps.partial_cmp(&x.eps).unwrap());

    let t_pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.t_plus)).collect();
    let s_pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.s_accum)).collect();
    let slope_t = fit_log_slope(&t_pts)?;
    let slope_s = fit_log_slope(&s_pts)?;

    Ok(SweepReport {
        records,
        slope_t,
        slope_s,
        lambda1_ref: sb.lambda1,
        density_ref: sb.ctx.gs.observables.scattering_density,
        eta,
        partial: !failures.is_empty(),
        failures,
    })
}
