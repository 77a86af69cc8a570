//! Calibrates single-qubit rotations from the device parameters alone and
//! reports the schedule the optimizer settles on.
//!
//!     cargo run --release --example calibrate_rotation

use std::f64::consts::PI;

use kane_sim::calibrate::{calibrate, CalibrationOptions};
use kane_sim::hamiltonian::DeviceParams;
use kane_sim::pulses::{Gate, GateSpec};

fn main() -> kane_sim::Result<()> {
    let params = DeviceParams::preset("table1")?;

    for (gate, theta) in [
        (Gate::Z, PI),
        (Gate::Z, 0.5 * PI),
        (Gate::X, PI),
        (Gate::X, 0.5 * PI),
    ] {
        let opts = CalibrationOptions::for_gate(gate);
        let out = calibrate(GateSpec::new(gate, Some(theta))?, &params, &opts)?;
        println!(
            "{}({:.3}): {} segment(s), duration {:.4e} s, systematic error {:.2e} ({} evaluations)",
            gate.name(),
            theta,
            out.sequence.segments.len(),
            out.sequence.total_duration(),
            out.systematic_error,
            out.evaluations,
        );
    }

    // Schedules serialize to JSON so a calibration can be reused later.
    let opts = CalibrationOptions::for_gate(Gate::X);
    let out = calibrate(GateSpec::new(Gate::X, Some(PI))?, &params, &opts)?;
    println!("\nX(pi) schedule:\n{}", out.sequence.to_json()?);
    Ok(())
}
