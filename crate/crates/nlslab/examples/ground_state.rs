//! Solve the ground state Q for the 1-d septic equation and check it against
//! the closed-form soliton Q(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2).

use nlslab::grid::make_grid;
use nlslab::ground_state::solve_ground_state;
use nlslab::ComplexField;

fn main() -> nlslab::Result<()> {
    let (dim, p) = (1, 7.0);
    let grid = make_grid(dim, 20.0, 2048)?;
    let gs = solve_ground_state(&grid, p, 1e-13)?;

    let amp = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    let exact = ComplexField::from_real_fn(&grid, |x| {
        amp / ((p - 1.0) * x / 2.0).cosh().powf(2.0 / (p - 1.0))
    });
    let err = gs.q.linf_distance(&exact);

    println!("d = {dim}, p = {p}");
    println!("elliptic residual   {:.3e}", gs.elliptic_residual);
    println!("virial identity gap {:.3e}", gs.virial_gap);
    println!("L-inf vs closed form {err:.3e}");
    println!("M(Q) = {:.15}", gs.observables.mass);
    println!("E(Q) = {:.15}", gs.observables.energy);
    println!("E(Q)/M(Q) = {:.15} (exactly 1/10 for d=1, p=7)", gs.observables.energy / gs.observables.mass);
    Ok(())
}
