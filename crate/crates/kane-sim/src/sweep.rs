//! Batch harness: dephasing-rate grid sweeps over calibrated gates,
//! free-evolution runs and deterministic CSV/JSON output.
//!
//! Grid points are independent pure computations; they are mapped over a
//! bounded worker pool and serialized in (γ_e, γ_n) order, so the emitted
//! CSV is byte-identical across runs regardless of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fidelity::{gate_error_suite, GateErrorRecord};
use crate::hamiltonian::DeviceParams;
use crate::lindblad::{
    evolve, t2_to_gamma, DephasingRates, EvolutionProblem, HamiltonianSource, Trajectory,
};
use crate::ode::OdeOptions;
use crate::pulses::{Gate, GateSpec, PulseSequence};
use crate::spin::{nuclear_ket, DensityMatrix, Layout, Operator, SpinLabel};
use crate::{Error, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "KANE_SIM_WORKERS";

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "log grid needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("log grid needs n >= 2, got {n}")));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// The default rate axis: zero, 17 log-spaced points over [1, 1e8] s⁻¹, and
/// the given typical rate, sorted. The typical point is included so tables
/// and contour sweeps share that sample.
pub fn default_gamma_values(typical: f64) -> Vec<f64> {
    let mut v = vec![0.0, typical];
    v.extend(log_spaced(1.0, 1e8, 17).expect("static bounds"));
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

/// A dephasing-rate grid for one gate, with an optional probe filter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub gate: String,
    #[serde(default)]
    pub theta: Option<f64>,
    pub gamma_e_values: Vec<f64>,
    pub gamma_n_values: Vec<f64>,
    /// Probe labels to keep; empty keeps the full suite plus the maximum.
    #[serde(default)]
    pub probes: Vec<String>,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain(format!("{name} axis is empty")));
    }
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Domain(format!(
                "{name} axis must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if values[0] < 0.0 {
        return Err(Error::Domain(format!(
            "{name} axis has negative rate {}",
            values[0]
        )));
    }
    Ok(())
}

impl SweepGrid {
    /// The default grid for a gate: both axes from [`default_gamma_values`]
    /// (anchored at the typical Γ_e and Γ_n respectively), all probes.
    pub fn default_for_gate(gate: Gate, theta: Option<f64>) -> Self {
        let typical = DephasingRates::typical();
        SweepGrid {
            gate: gate.name().into(),
            theta,
            gamma_e_values: default_gamma_values(typical.gamma_e),
            gamma_n_values: default_gamma_values(typical.gamma_n),
            probes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Gate::parse(&self.gate)?;
        check_axis("gamma_e", &self.gamma_e_values)?;
        check_axis("gamma_n", &self.gamma_n_values)
    }

    pub fn n_points(&self) -> usize {
        self.gamma_e_values.len() * self.gamma_n_values.len()
    }
}

/// A complete sweep job, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Device parameter preset name.
    pub preset: String,
    pub grid: SweepGrid,
    /// CSV output path; `None` means the caller prints to stdout.
    #[serde(default)]
    pub output: Option<String>,
    /// Optional JSON summary output path (per-gate maxima).
    #[serde(default)]
    pub summary: Option<String>,
    /// Path to a calibrated sequence file; defaults to the bundled schedule.
    #[serde(default)]
    pub sequence: Option<String>,
    /// Worker count; defaults to the available cores. The `KANE_SIM_WORKERS`
    /// environment variable overrides both.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(preset: &str, grid: SweepGrid) -> Self {
        RunConfig {
            preset: preset.into(),
            grid,
            output: None,
            summary: None,
            sequence: None,
            workers: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn validate(&self) -> Result<()> {
        DeviceParams::preset(&self.preset)?;
        if self.workers == Some(0) {
            return Err(Error::Domain("worker count must be >= 1".into()));
        }
        self.grid.validate()
    }

    /// Effective worker count: environment override, then the config field,
    /// then all available cores.
    pub fn worker_count(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&w| w >= 1)
            .or(self.workers)
            .unwrap_or_else(num_cpus)
            .max(1)
    }
}

fn num_cpus() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// The calibrated schedule for a gate: Z and X rotations are built
/// analytically on the fly; the two-donor gates come from schedules bundled
/// with the crate, calibrated once against the `table1` preset.
pub fn bundled_sequence(spec: &GateSpec, params: &DeviceParams) -> Result<PulseSequence> {
    match spec.gate {
        Gate::Z | Gate::X => {
            let opts = crate::calibrate::CalibrationOptions::for_gate(spec.gate);
            Ok(crate::calibrate::calibrate(*spec, params, &opts)?.sequence)
        }
        Gate::Cnot => PulseSequence::from_json(include_str!("../fixtures/cnot.json")),
        Gate::Swap => PulseSequence::from_json(include_str!("../fixtures/swap.json")),
        Gate::Cz => PulseSequence::from_json(include_str!("../fixtures/cz.json")),
    }
}

/// Resolves the sequence a config asks for: an explicit file when given,
/// otherwise the bundled schedule for the preset it was calibrated against.
pub fn resolve_sequence(config: &RunConfig, params: &DeviceParams) -> Result<PulseSequence> {
    let spec = GateSpec::new(Gate::parse(&config.grid.gate)?, config.grid.theta)?;
    let seq = match &config.sequence {
        Some(path) => PulseSequence::load(std::path::Path::new(path))?,
        None => bundled_sequence(&spec, params)?,
    };
    if seq.preset != config.preset {
        return Err(Error::Domain(format!(
            "sequence was calibrated for preset '{}' but the run uses '{}'; \
             run `calibrate` against the wanted preset first",
            seq.preset, config.preset
        )));
    }
    seq.validate()?;
    Ok(seq)
}

fn filter_probes(records: Vec<GateErrorRecord>, probes: &[String]) -> Vec<GateErrorRecord> {
    if probes.is_empty() {
        return records;
    }
    let mut kept: Vec<GateErrorRecord> = records
        .into_iter()
        .filter(|r| probes.iter().any(|p| *p == r.state))
        .collect();
    if kept.len() > 1 {
        let worst = kept
            .iter()
            .map(|r| r.error)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut max_rec = kept[0].clone();
        max_rec.state = "Maximum".into();
        max_rec.error = worst;
        max_rec.fidelity = 1.0 - worst;
        kept.push(max_rec);
    }
    kept
}

/// Runs the grid sweep: every (γ_e, γ_n) point of the grid is simulated with
/// the calibrated sequence and the probe suite of the gate. Records are
/// ordered by (γ_e, γ_n, suite order); the result is deterministic and
/// independent of the worker count.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<GateErrorRecord>> {
    config.validate()?;
    let params = DeviceParams::preset(&config.preset)?;
    let seq = resolve_sequence(config, &params)?;
    let grid = &config.grid;

    let mut points = Vec::with_capacity(grid.n_points());
    for &ge in &grid.gamma_e_values {
        for &gn in &grid.gamma_n_values {
            points.push((ge, gn));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    let per_point: Vec<Result<Vec<GateErrorRecord>>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(ge, gn)| {
                let rates = DephasingRates::new(ge, gn)?;
                let records = gate_error_suite(&seq, &params, &rates)?;
                Ok(filter_probes(records, &grid.probes))
            })
            .collect()
    });

    let mut out = Vec::new();
    for r in per_point {
        out.extend(r?);
    }
    Ok(out)
}

/// Serializes records with the fixed schema
/// `gate,state,gamma_e,gamma_n,fidelity,error` and 12-significant-digit
/// floats, so identical runs diff byte-identically.
pub fn records_to_csv(records: &[GateErrorRecord]) -> String {
    let mut out = String::from("gate,state,gamma_e,gamma_n,fidelity,error\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{:.11e},{:.11e},{:.11e},{:.11e}\n",
            r.gate, r.state, r.gamma_e, r.gamma_n, r.fidelity, r.error
        ));
    }
    out
}

/// JSON summary of a record set: the worst error per gate and the grid point
/// it occurs at. Gates are emitted in sorted order for determinism.
pub fn summary_json(records: &[GateErrorRecord]) -> Result<String> {
    let mut per_gate: std::collections::BTreeMap<String, &GateErrorRecord> =
        std::collections::BTreeMap::new();
    for r in records {
        let worse = per_gate.get(&r.gate).map_or(true, |b| r.error > b.error);
        if worse {
            per_gate.insert(r.gate.clone(), r);
        }
    }
    let summary: Vec<serde_json::Value> = per_gate
        .values()
        .map(|r| {
            serde_json::json!({
                "gate": r.gate,
                "max_error": r.error,
                "state": r.state,
                "gamma_e": r.gamma_e,
                "gamma_n": r.gamma_n,
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "per_gate_maxima": summary
    }))?)
}

/// Free evolution of an isolated nuclear spin prepared in |+⟩, in the frame
/// rotating at its Larmor frequency (where the coherent part vanishes and
/// only dephasing acts). The Bloch radius decays as exp(−4Γ_n t) with
/// Γ_n = 1/(4 T_2n).
pub fn run_free_evolution(t2n: f64, duration: f64, samples: usize) -> Result<Trajectory> {
    if duration <= 0.0 {
        return Err(Error::Domain(format!(
            "free evolution needs duration > 0, got {duration}"
        )));
    }
    let gamma_n = t2_to_gamma(t2n)?;
    let layout = Layout::new(vec![SpinLabel::nucleus(1)]);
    let initial = DensityMatrix::from_ket(&nuclear_ket("+", 1)?)?;
    let problem = EvolutionProblem {
        initial,
        hamiltonian: HamiltonianSource::Constant(Operator::zeros(2)),
        rates: DephasingRates::new(0.0, gamma_n)?,
        layout,
        hbar: DeviceParams::preset("table1")?.constants.hbar,
        duration,
        n_samples: samples,
        ode: OdeOptions::default(),
    };
    evolve(&problem)
}
