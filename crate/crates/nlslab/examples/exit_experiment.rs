//! Run a single exit-time experiment: start at u0 = (1-b)Q - 2a Re e+, watch
//! |alpha-(t)| grow like e^{lambda1 t}, and record the exit time T+(eta).
//! The prediction is T+ ~ |log eps| / lambda1.

use std::sync::Arc;

use nlslab::experiments::{run_exit_experiment, ExitConfig};
use nlslab::grid::make_grid;
use nlslab::ground_state::solve_ground_state;
use nlslab::linearized::{solve_spectrum, QuadFormContext};

fn main() -> nlslab::Result<()> {
    let grid = make_grid(1, 20.0, 1024)?;
    let gs = solve_ground_state(&grid, 7.0, 1e-13)?;
    let ctx = QuadFormContext::new(Arc::new(gs))?;
    let sb = solve_spectrum(&ctx)?;

    let (a, eta) = (1e-3, 0.05);
    let cfg = ExitConfig { stride: 10, backward: true, ..ExitConfig::default() };
    let rec = run_exit_experiment(a, eta, &sb, &cfg)?;

    println!("a = {a:.1e}, eta = {eta}, eps = {:.6e}", rec.eps);
    println!("alpha-(0) = {:.6e}, alpha+(0) = {:.6e}", rec.alpha_minus_0, rec.alpha_plus_0);
    println!("T+(eta) = {:.6}", rec.t_plus);
    println!("|log eps| / lambda1 = {:.6}", rec.eps.ln().abs() / sb.lambda1);
    println!("linear prediction ln(eta/|alpha-(0)|)/lambda1 = {:.6}",
        (eta / rec.alpha_minus_0.abs()).ln() / sb.lambda1);
    if let Some(fit) = &rec.rate_fit {
        println!("measured growth rate {:.6} (lambda1 = {:.6})", fit.rate, sb.lambda1);
    }
    println!("|d alpha-/dt| at exit = {:.6} (0.9 lambda1 eta = {:.6})",
        rec.alpha_dot_at_exit.abs(), 0.9 * sb.lambda1 * eta);
    println!("T-(eta) = {:.6} (time symmetry: |T-| = T+)", rec.t_minus.unwrap());
    println!("S(0, T+) = {:.6}", rec.s_accum);
    Ok(())
}
