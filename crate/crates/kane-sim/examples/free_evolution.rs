//! Free dephasing of a single nuclear spin prepared in |+⟩.
//!
//! Prints `t,r,x,y,z` samples of the Bloch vector; the radius follows
//! r(t) = exp(-4 Γ_n t), so with T_2n = 1 s the radius reaches 1/e at t = 1 s.
//!
//!     cargo run --release --example free_evolution

use kane_sim::sweep::run_free_evolution;

fn main() -> kane_sim::Result<()> {
    let t2n = 1.0; // seconds
    let traj = run_free_evolution(t2n, 4.0, 16)?;
    print!("{}", traj.bloch_csv()?);

    let gamma = 1.0 / (4.0 * t2n);
    println!();
    println!("T_2n = {t2n} s  ->  Gamma_n = {gamma} 1/s");
    println!("expected radius at t = 1 s: {:.6}", (-4.0f64 * gamma).exp());
    Ok(())
}
