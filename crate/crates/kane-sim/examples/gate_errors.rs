//! Error tables for all five native gates at the typical dephasing rates
//! (T_2e = 60 ms, T_2n = 1 s).
//!
//! Single-qubit rotations are calibrated on the fly; the two-donor gates use
//! the calibrated schedules bundled with the crate.
//!
//!     cargo run --release --example gate_errors

use std::f64::consts::PI;

use kane_sim::fidelity::{format_error_table, gate_error_suite};
use kane_sim::hamiltonian::DeviceParams;
use kane_sim::lindblad::DephasingRates;
use kane_sim::pulses::{x_rotation_sequence, z_rotation_sequence, Gate, GateSpec};
use kane_sim::sweep::bundled_sequence;

fn main() -> kane_sim::Result<()> {
    let params = DeviceParams::preset("table1")?;
    let rates = DephasingRates::typical();

    let sequences = vec![
        z_rotation_sequence(PI, &params)?,
        x_rotation_sequence(PI, &params)?,
        bundled_sequence(&GateSpec::new(Gate::Cnot, None)?, &params)?,
        bundled_sequence(&GateSpec::new(Gate::Swap, None)?, &params)?,
        bundled_sequence(&GateSpec::new(Gate::Cz, None)?, &params)?,
    ];

    for seq in sequences {
        let records = gate_error_suite(&seq, &params, &rates)?;
        println!(
            "{} ({:.4} us):",
            seq.gate,
            seq.total_duration() * 1e6
        );
        println!("{}", format_error_table(&records));
        println!();
    }
    Ok(())
}
