//! Pipeline CLI: ground-state | spectrum | evolve | exit-sweep | report.
//!
//! Each stage persists its outputs (NLSF snapshots, CSVs, JSON certificates
//! and manifests) so later stages can be re-run independently. Exit codes:
//! 0 success, 2 validation error, 3 certificate failure, 4 runtime abort.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use nlslab::config::Config;
use nlslab::error::{NlsError, Result};
use nlslab::experiments::{fit_log_slope, sweep, ExitConfig};
use nlslab::grid::make_grid;
use nlslab::ground_state::solve_ground_state;
use nlslab::linearized::{coercivity_probe, solve_spectrum, QuadFormContext, SpectralBundle};
use nlslab::manifest::RunManifest;
use nlslab::observables::observables;
use nlslab::propagator::SimState;
use nlslab::snapshot::{
    fmt_f64, read_snapshot, write_csv, write_modulation_csv, write_snapshot,
    write_trajectory_csv,
};

const CONFIG_HELP: &str = "Config keys (for --config files and --set overrides):
  dim      spatial dimension, 1 (Fourier line) or 3 (radial ball)  [1]
  p        nonlinearity exponent, intercritical for dim            [7]
  L        domain half-width (dim = 1) or ball radius (dim = 3)    [20]
  N        grid points; power of two for dim = 1                   [2048]
  dt       time step                                               [5e-4]
  tol      ground-state iteration tolerance                        [1e-13]
  eta      exit threshold on |alpha-|, in (0, 0.1]                 [0.05]
  ladder   comma-separated amplitudes, strictly decreasing
  seed     RNG seed for probe ensembles                            [42]
  t_max    exit-experiment time limit                              [30]
  stride   sampling stride for emitted series                      [10]
  threads  sweep worker threads; 0 = all cores                     [0]
See docs/configuration.md for details.";

#[derive(Parser)]
#[command(name = "nlslab", version, about = "Near-soliton NLS laboratory", long_about = None)]
#[command(after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file with `key = value` lines; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, repeatable: --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn build(&self) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for s in &self.sets {
            let (k, v) = s.split_once('=').ok_or_else(|| {
                NlsError::Validation(format!("--set expects key=value, got \"{s}\""))
            })?;
            cfg.apply(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground state Q and write an NLSF snapshot + certificate.
    GroundState {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<u32>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Output snapshot path; the certificate goes next to it as .json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the linearized spectrum from a ground-state snapshot.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Ground-state NLSF snapshot (from `ground-state`).
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Propagate an initial snapshot and write a trajectory CSV + snapshots.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        tend: f64,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the threshold-family exit-time sweep and the |log eps| fits.
    ExitSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<u32>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Comma-separated amplitudes, strictly decreasing.
        #[arg(long)]
        ladder: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a sweep report into plot-ready data files and a summary.
    Report {
        /// The sweep.json written by `exit-sweep`.
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GroundState { common, dim, p, l, n, tol, out } => {
            let mut cfg = common.build()?;
            override_opt(&mut cfg.dim, dim);
            override_opt(&mut cfg.p, p);
            override_opt(&mut cfg.l, l);
            override_opt(&mut cfg.n, n);
            override_opt(&mut cfg.tol, tol);
            cfg.validate()?;
            cmd_ground_state(&cfg, &out)
        }
        Command::Spectrum { common, init, p, out } => {
            let mut cfg = common.build()?;
            override_opt(&mut cfg.p, p);
            cmd_spectrum(&cfg, &init, &out)
        }
        Command::Evolve { common, init, p, dt, tend, stride, out } => {
            let mut cfg = common.build()?;
            override_opt(&mut cfg.p, p);
            override_opt(&mut cfg.dt, dt);
            override_opt(&mut cfg.stride, stride);
            cmd_evolve(&cfg, &init, tend, &out)
        }
        Command::ExitSweep { common, dim, p, eta, ladder, out } => {
            let mut cfg = common.build()?;
            override_opt(&mut cfg.dim, dim);
            override_opt(&mut cfg.p, p);
            override_opt(&mut cfg.eta, eta);
            if let Some(s) = ladder {
                cfg.apply("ladder", &s)?;
            }
            cfg.validate()?;
            cmd_exit_sweep(&cfg, &out)
        }
        Command::Report { sweep, out } => cmd_report(&sweep, &out),
    }
}

fn override_opt<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn cmd_ground_state(cfg: &Config, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("ground-state", cfg)?;
    let t0 = Instant::now();
    let grid = make_grid(cfg.dim, cfg.l, cfg.n)?;
    let gs = solve_ground_state(&grid, cfg.p, cfg.tol)?;
    manifest.add_timing("solve", t0.elapsed().as_secs_f64());

    write_snapshot(out, &gs.q)?;
    manifest.add_file(out)?;
    let cert_path = out.with_extension("json");
    let cert = serde_json::json!({
        "residual": gs.elliptic_residual,
        "mass": gs.observables.mass,
        "energy": gs.observables.energy,
        "virial_gap": gs.virial_gap,
    });
    std::fs::write(&cert_path, serde_json::to_string_pretty(&cert)? + "\n")?;
    manifest.add_file(&cert_path)?;
    manifest.add_certificate("ground_state", &cert)?;
    manifest.write(&out.with_extension("manifest.json"))?;
    println!(
        "ground state: residual {:.3e}, mass {}, energy {}",
        gs.elliptic_residual,
        fmt_f64(gs.observables.mass),
        fmt_f64(gs.observables.energy)
    );
    Ok(())
}

fn spectrum_from_snapshot(init: &Path, p: f64) -> Result<SpectralBundle> {
    let q = read_snapshot(init)?;
    let gs = nlslab::ground_state::certify_ground_state(&q, p)?;
    let ctx = QuadFormContext::new(Arc::new(gs))?;
    solve_spectrum(&ctx)
}

fn cmd_spectrum(cfg: &Config, init: &Path, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("spectrum", cfg)?;
    let t0 = Instant::now();
    let sb = spectrum_from_snapshot(init, cfg.p)?;
    manifest.add_timing("eigensolve", t0.elapsed().as_secs_f64());
    let t1 = Instant::now();
    let probe = coercivity_probe(&sb, 200, cfg.seed)?;
    manifest.add_timing("coercivity_probe", t1.elapsed().as_secs_f64());

    let ep_path = out_dir.join("e_plus.nlsf");
    let em_path = out_dir.join("e_minus.nlsf");
    write_snapshot(&ep_path, &sb.e_plus)?;
    write_snapshot(&em_path, &sb.e_minus)?;
    manifest.add_file(&ep_path)?;
    manifest.add_file(&em_path)?;

    let cert = serde_json::json!({
        "lambda1": sb.lambda1,
        "residuals": sb.residuals,
        "F_epem": sb.normalization,
        "c_min": probe.c_min,
    });
    let cert_path = out_dir.join("spectrum.json");
    std::fs::write(&cert_path, serde_json::to_string_pretty(&cert)? + "\n")?;
    manifest.add_file(&cert_path)?;
    manifest.add_certificate("spectrum", &cert)?;
    manifest.write(&out_dir.join("manifest.json"))?;
    println!("lambda1 = {}, c_min = {:.6e}", fmt_f64(sb.lambda1), probe.c_min);
    Ok(())
}

fn cmd_evolve(cfg: &Config, init: &Path, tend: f64, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new("evolve", cfg)?;
    let u0 = read_snapshot(init)?;
    let mut st = SimState::new(u0, cfg.p, cfg.dt)?;
    if (tend - st.t) / cfg.dt <= 0.0 {
        return Err(NlsError::Validation(format!(
            "tend = {tend} not reachable with dt = {}",
            cfg.dt
        )));
    }
    write_snapshot(&out_dir.join("u_initial.nlsf"), &st.u)?;
    manifest.add_file(&out_dir.join("u_initial.nlsf"))?;

    let steps = ((tend - st.t) / cfg.dt).round().max(1.0) as u64;
    let stride = cfg.stride.max(1) as u64;
    let mut samples = vec![sample_state(&st)?];
    let mut abort: Option<NlsError> = None;
    for i in 1..=steps {
        if let Err(e) = st.step() {
            abort = Some(e);
            break;
        }
        if i % stride == 0 || i == steps {
            samples.push(sample_state(&st)?);
        }
    }

    let csv_path = out_dir.join("trajectory.csv");
    write_trajectory_csv(&csv_path, &samples)?;
    manifest.add_file(&csv_path)?;
    let final_path = out_dir.join(if abort.is_some() { "u_abort.nlsf" } else { "u_final.nlsf" });
    write_snapshot(&final_path, &st.u)?;
    manifest.add_file(&final_path)?;

    if let Some(e) = abort {
        manifest.mark_aborted(&e.to_string());
        manifest.write(&out_dir.join("manifest.json"))?;
        return Err(e);
    }
    manifest.add_certificate(
        "conservation",
        serde_json::json!({"mass_drift": st.mass_drift, "energy_drift": st.energy_drift}),
    )?;
    manifest.write(&out_dir.join("manifest.json"))?;
    println!(
        "evolved to t = {}: mass drift {:.3e}, energy drift {:.3e}, S_accum {}",
        fmt_f64(st.t),
        st.mass_drift,
        st.energy_drift,
        fmt_f64(st.accumulated_scattering)
    );
    Ok(())
}

fn sample_state(st: &SimState) -> Result<nlslab::propagator::TrajectorySample> {
    let obs = observables(&st.u, st.p)?;
    Ok(nlslab::propagator::TrajectorySample {
        t: st.t,
        mass: obs.mass,
        energy: obs.energy,
        momentum: obs.momentum.first().copied().unwrap_or(0.0),
        scattering_density: obs.scattering_density,
        accumulated_scattering: st.accumulated_scattering,
    })
}

fn cmd_exit_sweep(cfg: &Config, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| NlsError::Validation(format!("thread pool: {e}")))?;
    }
    let mut manifest = RunManifest::new("exit-sweep", cfg)?;

    let t0 = Instant::now();
    let grid = make_grid(cfg.dim, cfg.l, cfg.n)?;
    let gs = solve_ground_state(&grid, cfg.p, cfg.tol)?;
    let ctx = QuadFormContext::new(Arc::new(gs))?;
    let sb = solve_spectrum(&ctx)?;
    manifest.add_timing("spectrum", t0.elapsed().as_secs_f64());
    manifest.add_certificate("spectrum", sb.certificate())?;

    let t1 = Instant::now();
    let exit_cfg = ExitConfig {
        dt: cfg.dt.abs(),
        t_max: cfg.t_max,
        stride: cfg.stride.max(1),
        backward: true,
        ..ExitConfig::default()
    };
    let mut report = sweep(&cfg.ladder, cfg.eta, &sb, &exit_cfg)?;
    manifest.add_timing("sweep", t1.elapsed().as_secs_f64());

    // Per-run modulation CSVs.
    for (i, rec) in report.records.iter_mut().enumerate() {
        let name = format!("run_{i:02}_a{:.3e}.csv", rec.a);
        let path = out_dir.join(&name);
        write_modulation_csv(&path, &rec.series)?;
        rec.series_ref = Some(name);
        manifest.add_file(&path)?;
    }

    // Sweep CSV: a, eps, T_plus, S_accum, rate, alpha_dot_exit.
    let rows: Vec<Vec<f64>> = report
        .records
        .iter()
        .map(|r| {
            vec![
                r.a,
                r.eps,
                r.t_plus,
                r.s_accum,
                r.rate_fit.as_ref().map(|g| g.rate).unwrap_or(f64::NAN),
                r.alpha_dot_at_exit,
            ]
        })
        .collect();
    let sweep_csv = out_dir.join("sweep.csv");
    write_csv(&sweep_csv, &["a", "eps", "T_plus", "S_accum", "rate", "alpha_dot_exit"], &rows)?;
    manifest.add_file(&sweep_csv)?;

    let json_path = out_dir.join("sweep.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
    manifest.add_file(&json_path)?;
    manifest.write(&out_dir.join("manifest.json"))?;
    println!(
        "sweep: slope_T = {} (1/lambda1 = {}), slope_S = {}",
        fmt_f64(report.slope_t.slope),
        fmt_f64(1.0 / report.lambda1_ref),
        fmt_f64(report.slope_s.slope)
    );
    Ok(())
}

fn cmd_report(sweep_json: &Path, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sweep_json)?)?;
    let records = v["records"]
        .as_array()
        .ok_or_else(|| NlsError::Snapshot("sweep.json: missing records".into()))?;
    let get = |r: &serde_json::Value, k: &str| -> Result<f64> {
        r[k].as_f64()
            .ok_or_else(|| NlsError::Snapshot(format!("sweep.json: record missing {k}")))
    };
    let lambda1 = v["lambda1_ref"]
        .as_f64()
        .ok_or_else(|| NlsError::Snapshot("sweep.json: missing lambda1_ref".into()))?;
    let density = v["density_ref"]
        .as_f64()
        .ok_or_else(|| NlsError::Snapshot("sweep.json: missing density_ref".into()))?;

    let mut t_rows = Vec::new();
    let mut s_rows = Vec::new();
    let mut s_two_sided = Vec::new();
    for r in records {
        let eps = get(r, "eps")?;
        let logeps = eps.ln().abs();
        let t_plus = get(r, "t_plus")?;
        let s_accum = get(r, "s_accum")?;
        t_rows.push(vec![logeps, t_plus]);
        s_rows.push(vec![logeps, s_accum]);
        let s_b = r["s_accum_backward"].as_f64().unwrap_or(s_accum);
        s_two_sided.push((eps, s_accum + s_b));
    }
    let t_path = out_dir.join("logeps_vs_Tplus.dat");
    let s_path = out_dir.join("logeps_vs_Saccum.dat");
    write_csv(&t_path, &["abs_log_eps", "T_plus"], &t_rows)?;
    write_csv(&s_path, &["abs_log_eps", "S_accum"], &s_rows)?;

    let slope_t = v["slope_t"]["slope"].as_f64().unwrap_or(f64::NAN);
    let slope_s = v["slope_s"]["slope"].as_f64().unwrap_or(f64::NAN);
    let two_sided = fit_log_slope(&s_two_sided).ok();

    let mut summary = String::new();
    summary.push_str(&format!("exit-time law:   slope_T = {}\n", fmt_f64(slope_t)));
    summary.push_str(&format!(
        "                 1/lambda1 = {} (ratio {:.4})\n",
        fmt_f64(1.0 / lambda1),
        slope_t * lambda1
    ));
    summary.push_str(&format!("scattering law:  slope_S (forward) = {}\n", fmt_f64(slope_s)));
    summary.push_str(&format!(
        "                 density/lambda1 = {} (ratio {:.4})\n",
        fmt_f64(density / lambda1),
        slope_s * lambda1 / density
    ));
    if let Some(ts) = &two_sided {
        summary.push_str(&format!(
            "two-sided:       slope_S(fwd+bwd) = {}\n                 2*density/lambda1 = {} (ratio {:.4})\n",
            fmt_f64(ts.slope),
            fmt_f64(2.0 * density / lambda1),
            ts.slope * lambda1 / (2.0 * density)
        ));
        summary.push_str(&format!(
            "note: against the bare 2/lambda1 = {} (no density factor) the ratio is {:.4};\n\
             the measured constant carries the density factor int Q^s dx = {}.\n",
            fmt_f64(2.0 / lambda1),
            ts.slope * lambda1 / 2.0,
            fmt_f64(density)
        ));
    }
    let sum_path = out_dir.join("summary.txt");
    std::fs::write(&sum_path, &summary)?;
    print!("{summary}");
    Ok(())
}
