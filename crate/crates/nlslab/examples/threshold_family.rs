//! Construct the threshold family u0 = (1-b)Q - 2a Re e+ on the mass shell
//! M(u0) = M(Q) and verify the section-4 invariants: eps^2 ~ 2a^2, kinetic
//! energy below the soliton's, and alpha+-(0) ~ -a (paper sign convention).

use std::sync::Arc;

use nlslab::experiments::{a_max, construct_threshold_data};
use nlslab::grid::make_grid;
use nlslab::ground_state::solve_ground_state;
use nlslab::linearized::{solve_spectrum, QuadFormContext};
use nlslab::modulation::{decompose, SymmetryFit};

fn main() -> nlslab::Result<()> {
    let grid = make_grid(1, 20.0, 1024)?;
    let gs = solve_ground_state(&grid, 7.0, 1e-13)?;
    let ctx = QuadFormContext::new(Arc::new(gs))?;
    let sb = solve_spectrum(&ctx)?;

    println!("admissible amplitudes a < a_max = {:.6e}", a_max(&sb));
    println!(
        "{:>10} {:>14} {:>12} {:>14} {:>14}",
        "a", "eps", "eps^2/2a^2", "alpha-(0)", "kinetic ratio"
    );
    for a in [1e-2, 1e-3, 1e-4, 1e-5] {
        let d = construct_threshold_data(a, &sb)?;
        let ms0 = decompose(&d.u0, 0.0, &SymmetryFit::identity(), &sb)?;
        let kin_ratio = d.diagnostics.kinetic_product / d.diagnostics.kinetic_threshold;
        println!(
            "{a:>10.1e} {:>14.6e} {:>12.6} {:>14.6e} {:>14.10}",
            d.eps,
            d.eps * d.eps / (2.0 * a * a),
            ms0.alpha_minus,
            kin_ratio
        );
        assert!(d.diagnostics.below_kinetic, "threshold data must sit below the soliton kinetic energy");
    }
    Ok(())
}
