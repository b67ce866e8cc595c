//! Sweep the threshold family over a ladder of amplitudes and fit the exit
//! law T+ ~ |log eps| / lambda1 and the accumulated scattering law
//! S(0, T+) ~ (|log eps| / lambda1) int Q^{(p-1)(d+2)/2} dx.

use std::sync::Arc;

use nlslab::experiments::{sweep, ExitConfig};
use nlslab::grid::make_grid;
use nlslab::ground_state::solve_ground_state;
use nlslab::linearized::{solve_spectrum, QuadFormContext};

fn main() -> nlslab::Result<()> {
    let grid = make_grid(1, 20.0, 1024)?;
    let gs = solve_ground_state(&grid, 7.0, 1e-13)?;
    let ctx = QuadFormContext::new(Arc::new(gs))?;
    let sb = solve_spectrum(&ctx)?;

    let ladder = [3e-3, 1e-3, 1e-4, 1e-5];
    let cfg = ExitConfig { stride: 10, ..ExitConfig::default() };
    let report = sweep(&ladder, 0.05, &sb, &cfg)?;

    println!("{:>10} {:>14} {:>10} {:>12}", "a", "eps", "T+", "S(0,T+)");
    for r in &report.records {
        println!("{:>10.1e} {:>14.6e} {:>10.5} {:>12.6}", r.a, r.eps, r.t_plus, r.s_accum);
    }
    println!();
    println!("slope of T+ vs |log eps|      {:.8} +- {:.1e}",
        report.slope_t.slope, report.slope_t.ci95);
    println!("1/lambda1                     {:.8}", 1.0 / report.lambda1_ref);
    println!("slope of S vs |log eps|       {:.8} +- {:.1e}",
        report.slope_s.slope, report.slope_s.ci95);
    println!("density/lambda1               {:.8}", report.density_ref / report.lambda1_ref);
    Ok(())
}
