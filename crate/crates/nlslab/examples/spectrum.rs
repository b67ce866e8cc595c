//! Solve the linearized spectrum around Q: the unstable eigenvalue lambda1,
//! the eigenpair e+/e-, and the certificate residuals.

use std::sync::Arc;

use nlslab::grid::make_grid;
use nlslab::ground_state::solve_ground_state;
use nlslab::linearized::{solve_spectrum, QuadFormContext};

fn main() -> nlslab::Result<()> {
    let grid = make_grid(1, 20.0, 1024)?;
    let gs = solve_ground_state(&grid, 7.0, 1e-13)?;
    let ctx = QuadFormContext::new(Arc::new(gs))?;
    let sb = solve_spectrum(&ctx)?;

    println!("lambda1 = {:.15}", sb.lambda1);
    println!("normalization F(e+, e-) = {:.15}", sb.normalization);
    println!("residuals:");
    println!("  |(L + lambda1) e+|      {:.3e}", sb.residuals.eigen_plus);
    println!("  |(L - lambda1) e-|      {:.3e}", sb.residuals.eigen_minus);
    println!("  F(e+, e+)               {:.3e}", sb.residuals.f_epep);
    println!("  F(e-, e-)               {:.3e}", sb.residuals.f_emem);
    println!("  F(e+, iQ) kernel pair   {:.3e}", sb.residuals.kernel_iq);
    println!("  F(e+, dQ) kernel pair   {:.3e}", sb.residuals.kernel_dq);
    Ok(())
}
