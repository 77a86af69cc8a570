//! Sweeps a Z(π) gate over a small grid of electron and nuclear dephasing
//! rates and writes contour-ready CSV plus a JSON summary.
//!
//!     cargo run --release --example dephasing_sweep

use std::f64::consts::PI;

use kane_sim::sweep::{log_spaced, records_to_csv, run_sweep, summary_json, RunConfig, SweepGrid};

fn main() -> kane_sim::Result<()> {
    let mut gammas = vec![0.0];
    gammas.extend(log_spaced(1.0, 1.0e8, 5)?);
    let grid = SweepGrid {
        gate: "z".into(),
        theta: Some(PI),
        gamma_e_values: gammas.clone(),
        gamma_n_values: gammas,
        probes: vec!["+".into(), "0".into()],
    };
    let config = RunConfig::new("table1", grid);

    let records = run_sweep(&config)?;
    print!("{}", records_to_csv(&records));
    println!();
    println!("{}", summary_json(&records)?);
    Ok(())
}
