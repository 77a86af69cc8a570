//! Command-line interface: free-evolution runs, single-point gate error
//! suites, dephasing-rate grid sweeps, calibration and parameter inspection.
//!
//! Exit codes: 0 on success, 2 on bad flags (usage error), 1 on any runtime
//! failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use kane_sim::calibrate::{calibrate, CalibrationOptions};
use kane_sim::fidelity::gate_error_suite;
use kane_sim::hamiltonian::DeviceParams;
use kane_sim::lindblad::{t2_to_gamma, DephasingRates};
use kane_sim::pulses::{Gate, GateSpec, PulseSequence};
use kane_sim::sweep::{
    log_spaced, records_to_csv, run_free_evolution, run_sweep, summary_json,
    RunConfig, SweepGrid,
};

#[derive(Parser)]
#[command(
    name = "kane-sim",
    version,
    about = "Spin-system simulator for one- and two-donor silicon qubits under pure dephasing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free evolution of an isolated nuclear spin in |+⟩; writes t,r,x,y,z CSV.
    FreeEvolution {
        /// Nuclear dephasing time T_2n in seconds.
        #[arg(long, default_value_t = 1.0)]
        t2n: f64,
        /// Total evolution time in seconds.
        #[arg(long, default_value_t = 4.0)]
        duration: f64,
        /// Number of samples after t = 0.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Single-point error suite for one gate: systematic (zero-dephasing)
    /// and at the requested rates.
    Gate {
        #[command(flatten)]
        gate: GateArgs,
        #[command(flatten)]
        rates: RateArgs,
        /// Calibrated sequence file; defaults to the bundled schedule.
        #[arg(long)]
        sequence: Option<PathBuf>,
        #[arg(long, default_value = "table1")]
        preset: String,
    },
    /// Dephasing-rate grid sweep; writes contour-ready CSV.
    Sweep {
        #[command(flatten)]
        gate: GateArgs,
        /// Probe label to keep (repeatable); default keeps the full suite.
        #[arg(long = "probe")]
        probes: Vec<String>,
        /// Log-spaced grid LO HI N applied to both rate axes; default is the
        /// built-in grid (zero + 17 log points + the typical rate).
        #[arg(long = "grid-log", num_args = 3, value_names = ["LO", "HI", "N"])]
        grid_log: Option<Vec<String>>,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Optional JSON summary path (per-gate maxima).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Full run configuration from a JSON file; other flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Calibrated sequence file; defaults to the bundled schedule.
        #[arg(long)]
        sequence: Option<PathBuf>,
        #[arg(long, default_value = "table1")]
        preset: String,
        /// Worker count; default all cores (KANE_SIM_WORKERS overrides).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Calibrate a gate schedule and write it as JSON.
    Calibrate {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long, default_value = "table1")]
        preset: String,
        /// Worst-case probe error to reach; defaults per gate.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Output sequence path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Inspect built-in data.
    Params {
        #[command(subcommand)]
        command: ParamsCommand,
    },
}

#[derive(Subcommand)]
enum ParamsCommand {
    /// Print a device parameter preset as JSON.
    Show {
        #[arg(long, default_value = "table1")]
        preset: String,
    },
}

#[derive(Args)]
struct GateArgs {
    /// Gate name: z, x, cnot, swap, cz.
    #[arg(long = "name", alias = "gate")]
    name: String,
    /// Rotation angle in radians (z and x gates only; default π).
    #[arg(long)]
    theta: Option<f64>,
}

impl GateArgs {
    fn spec(&self) -> kane_sim::Result<GateSpec> {
        let gate = Gate::parse(&self.name)?;
        let theta = match (gate.takes_theta(), self.theta) {
            (true, None) => Some(std::f64::consts::PI),
            (true, t) => t,
            (false, t) => t,
        };
        GateSpec::new(gate, theta)
    }
}

#[derive(Args)]
struct RateArgs {
    /// Electron dephasing time T_2e in seconds.
    #[arg(long, conflicts_with = "gamma_e")]
    t2e: Option<f64>,
    /// Nuclear dephasing time T_2n in seconds.
    #[arg(long, conflicts_with = "gamma_n")]
    t2n: Option<f64>,
    /// Electron dephasing rate Γ_e in 1/s.
    #[arg(long)]
    gamma_e: Option<f64>,
    /// Nuclear dephasing rate Γ_n in 1/s.
    #[arg(long)]
    gamma_n: Option<f64>,
}

impl RateArgs {
    fn rates(&self) -> kane_sim::Result<DephasingRates> {
        let ge = match (self.gamma_e, self.t2e) {
            (Some(g), _) => g,
            (None, Some(t2)) => t2_to_gamma(t2)?,
            (None, None) => DephasingRates::typical().gamma_e,
        };
        let gn = match (self.gamma_n, self.t2n) {
            (Some(g), _) => g,
            (None, Some(t2)) => t2_to_gamma(t2)?,
            (None, None) => DephasingRates::typical().gamma_n,
        };
        DephasingRates::new(ge, gn)
    }
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> kane_sim::Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> kane_sim::Result<()> {
    match cli.command {
        Command::FreeEvolution {
            t2n,
            duration,
            samples,
            output,
        } => {
            let traj = run_free_evolution(t2n, duration, samples)?;
            write_or_print(&output, &traj.bloch_csv()?)
        }
        Command::Gate {
            gate,
            rates,
            sequence,
            preset,
        } => {
            let params = DeviceParams::preset(&preset)?;
            let spec = gate.spec()?;
            let seq = match sequence {
                Some(path) => PulseSequence::load(&path)?,
                None => kane_sim::sweep::bundled_sequence(&spec, &params)?,
            };
            let rates = rates.rates()?;
            let systematic = gate_error_suite(&seq, &params, &DephasingRates::zero())?;
            let typical = gate_error_suite(&seq, &params, &rates)?;
            println!(
                "gate: {}   duration: {:.5e} s   gamma_e: {:.5e} 1/s   gamma_n: {:.5e} 1/s",
                seq.gate,
                seq.total_duration(),
                rates.gamma_e,
                rates.gamma_n
            );
            println!("{:<10} {:>18} {:>18}", "state", "systematic error", "error at rates");
            for (s, t) in systematic.iter().zip(&typical) {
                println!("{:<10} {:>18.5e} {:>18.5e}", s.state, s.error, t.error);
            }
            Ok(())
        }
        Command::Sweep {
            gate,
            probes,
            grid_log,
            output,
            summary,
            config,
            sequence,
            preset,
            workers,
        } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
                None => {
                    let spec = gate.spec()?;
                    RunConfig::new(&preset, SweepGrid::default_for_gate(spec.gate, spec.theta))
                }
            };
            if !probes.is_empty() {
                cfg.grid.probes = probes;
            }
            if let Some(g) = grid_log {
                let lo: f64 = g[0].parse().map_err(|_| bad_number(&g[0]))?;
                let hi: f64 = g[1].parse().map_err(|_| bad_number(&g[1]))?;
                let n: usize = g[2].parse().map_err(|_| bad_number(&g[2]))?;
                let axis = log_spaced(lo, hi, n)?;
                cfg.grid.gamma_e_values = axis.clone();
                cfg.grid.gamma_n_values = axis;
            }
            if let Some(w) = workers {
                cfg.workers = Some(w);
            }
            if let Some(s) = sequence {
                cfg.sequence = Some(s.to_string_lossy().into_owned());
            }
            let records = run_sweep(&cfg)?;
            let csv_path = output.or(cfg.output.as_ref().map(PathBuf::from));
            write_or_print(&csv_path, &records_to_csv(&records))?;
            let summary_path = summary.or(cfg.summary.as_ref().map(PathBuf::from));
            if let Some(p) = summary_path {
                std::fs::write(p, summary_json(&records)?)?;
            }
            Ok(())
        }
        Command::Calibrate {
            gate,
            preset,
            tolerance,
            output,
        } => {
            let params = DeviceParams::preset(&preset)?;
            let spec = gate.spec()?;
            let mut opts = CalibrationOptions::for_gate(spec.gate);
            if let Some(t) = tolerance {
                opts.tolerance = t;
            }
            let outcome = calibrate(spec, &params, &opts)?;
            eprintln!(
                "calibrated {}: worst probe error {:.5e}, duration {:.5e} s, {} evaluations",
                outcome.sequence.gate,
                outcome.systematic_error,
                outcome.sequence.total_duration(),
                outcome.evaluations
            );
            write_or_print(&output, &(outcome.sequence.to_json()? + "\n"))
        }
        Command::Params { command } => match command {
            ParamsCommand::Show { preset } => {
                let params = DeviceParams::preset(&preset)?;
                println!("{}", serde_json::to_string_pretty(&params)?);
                Ok(())
            }
        },
    }
}

fn bad_number(s: &str) -> kane_sim::Error {
    kane_sim::Error::Domain(format!("not a number: {s}"))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
