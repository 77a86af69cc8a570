//! Two-donor level structure with the exchange and hyperfine controls on:
//! the nuclear-subspace energies and the control rates derived from them.
//!
//!     cargo run --release --example level_structure

use kane_sim::calibrate::{interaction_energies, interaction_rates};
use kane_sim::hamiltonian::{DeviceParams, A_U, J_U};

fn main() -> kane_sim::Result<()> {
    let mut params = DeviceParams::preset("table1")?;
    params.a1 = A_U;
    params.a2 = A_U;
    params.j = J_U;

    let [e00, ep, em, e11] = interaction_energies(&params)?;
    println!("nuclear levels in the electron ground manifold (meV):");
    println!("  |00>        {e00:+.9e}");
    println!("  (01+10)/√2  {ep:+.9e}");
    println!("  (01-10)/√2  {em:+.9e}");
    println!("  |11>        {e11:+.9e}");

    let rates = interaction_rates(&params)?;
    println!("\nderived control rates (rad/s):");
    println!("  line shift     {:+.6e}", rates.omega_line);
    println!("  flip-flop Δ    {:+.6e}", rates.delta);
    println!("  conditional R  {:+.6e}", rates.r);
    println!(
        "\nfree flip-flop half-period π/Δ = {:.4e} s",
        std::f64::consts::PI / rates.delta
    );
    Ok(())
}
