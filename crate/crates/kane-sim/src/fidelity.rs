//! Gate-error metrics: state fidelity against pure targets and the standard
//! probe suites used to report per-gate error tables.

use nalgebra::DVector;

use crate::hamiltonian::DeviceParams;
use crate::lindblad::DephasingRates;
use crate::pulses::{GateSpec, PulseSequence, SequencePropagator};
use crate::spin::{embed_nuclear_ket, nuclear_ket, DensityMatrix, C64, PURITY_TOL};
use crate::{Error, Result};

/// F = Tr(ρ ρ_target) for a pure target state. Errors if the target is not
/// pure, since the formula is a transfer fidelity only in that case.
pub fn fidelity(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::Domain(format!(
            "state dim {} vs target dim {}",
            rho.dim(),
            target.dim()
        )));
    }
    let p = target.purity();
    if (p - 1.0).abs() > PURITY_TOL {
        return Err(Error::Domain(format!(
            "target state purity {p} is not 1; fidelity needs a pure target"
        )));
    }
    let f: C64 = rho
        .matrix()
        .iter()
        .zip(target.matrix().iter())
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(f.re)
}

/// One input state of a probe suite together with its ideal output.
pub struct ProbeState {
    pub label: String,
    pub input: DensityMatrix,
    pub target: DensityMatrix,
}

/// Probe inputs for a gate, as nuclear-subspace kets with display labels.
/// Single-qubit gates use {0, 1, +, -}. CNOT uses the four basis states plus
/// the four superpositions (|0⟩±|1⟩)|0/1⟩/√2 whose ideal outputs are the Bell
/// states; those are labelled by the output ("00+11" etc.). Swap and
/// controlled-Z use the four basis states plus the four Bell states as
/// inputs.
pub fn probe_kets(spec: &GateSpec) -> Result<Vec<(String, DVector<C64>)>> {
    use crate::pulses::Gate;
    let mut probes = Vec::new();
    match spec.gate {
        Gate::Z | Gate::X => {
            for label in ["0", "1", "+", "-"] {
                probes.push((label.to_string(), nuclear_ket(label, 1)?));
            }
        }
        Gate::Cnot => {
            for label in ["00", "01", "10", "11"] {
                probes.push((label.to_string(), nuclear_ket(label, 2)?));
            }
            let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let o = C64::new(0.0, 0.0);
            let cases: [(&str, [C64; 4]); 4] = [
                ("00+11", [s, o, s, o]),
                ("00-11", [s, o, -s, o]),
                ("01+10", [o, s, o, s]),
                ("01-10", [o, s, o, -s]),
            ];
            for (label, amps) in cases {
                probes.push((label.to_string(), DVector::from_row_slice(&amps)));
            }
        }
        Gate::Swap | Gate::Cz => {
            for label in ["00", "01", "10", "11", "00+11", "00-11", "01+10", "01-10"] {
                probes.push((label.to_string(), nuclear_ket(label, 2)?));
            }
        }
    }
    Ok(probes)
}

/// Full-space probe states for a gate: nuclear probes embedded with electrons
/// spin-down, targets obtained by applying the ideal nuclear unitary.
pub fn probe_states(spec: &GateSpec) -> Result<Vec<ProbeState>> {
    let n_donors = spec.n_donors();
    let g = spec.matrix();
    let mut out = Vec::new();
    for (label, ket) in probe_kets(spec)? {
        let input = DensityMatrix::from_ket(&embed_nuclear_ket(&ket, n_donors)?)?;
        let target_nuc = &g * &ket;
        let target = DensityMatrix::from_ket(&embed_nuclear_ket(&target_nuc, n_donors)?)?;
        out.push(ProbeState {
            label,
            input,
            target,
        });
    }
    Ok(out)
}

/// One row of a gate-error table.
#[derive(Debug, Clone, PartialEq)]
pub struct GateErrorRecord {
    pub gate: String,
    pub state: String,
    pub gamma_e: f64,
    pub gamma_n: f64,
    pub fidelity: f64,
    pub error: f64,
}

/// Runs the probe suite of a calibrated sequence at the given rates. When the
/// suite has more than one probe, a final "Maximum" record carries the
/// worst-case error.
pub fn gate_error_suite(
    seq: &PulseSequence,
    base: &DeviceParams,
    rates: &DephasingRates,
) -> Result<Vec<GateErrorRecord>> {
    let spec = seq.gate_spec()?;
    let prop = SequencePropagator::new(seq, base, rates)?;
    let mut records = Vec::new();
    let mut max_error: f64 = 0.0;
    for probe in probe_states(&spec)? {
        let out = prop.apply(&probe.input)?;
        let f = fidelity(&out, &probe.target)?;
        let error = 1.0 - f;
        max_error = max_error.max(error);
        records.push(GateErrorRecord {
            gate: seq.gate.clone(),
            state: probe.label,
            gamma_e: rates.gamma_e,
            gamma_n: rates.gamma_n,
            fidelity: f,
            error,
        });
    }
    if records.len() > 1 {
        records.push(GateErrorRecord {
            gate: seq.gate.clone(),
            state: "Maximum".into(),
            gamma_e: rates.gamma_e,
            gamma_n: rates.gamma_n,
            fidelity: 1.0 - max_error,
            error: max_error,
        });
    }
    Ok(records)
}

/// Formats records as an aligned text table.
pub fn format_error_table(records: &[GateErrorRecord]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:<8} {:>12} {:>12} {:>18} {:>12}\n",
        "gate", "state", "gamma_e", "gamma_n", "fidelity", "error"
    ));
    for r in records {
        out.push_str(&format!(
            "{:<8} {:<8} {:>12.5e} {:>12.5e} {:>18.12} {:>12.5e}\n",
            r.gate, r.state, r.gamma_e, r.gamma_n, r.fidelity, r.error
        ));
    }
    out
}

/// Worst-case closed-system (coherent) probe error of a sequence; the
/// calibration objective.
pub fn systematic_error(seq: &PulseSequence, base: &DeviceParams) -> Result<f64> {
    let spec = seq.gate_spec()?;
    let unitary = crate::pulses::SequenceUnitary::new(seq, base)?;
    let mut worst: f64 = 0.0;
    for (_, ket) in probe_kets(&spec)? {
        let n = spec.n_donors();
        let input = embed_nuclear_ket(&ket, n)?;
        let target = embed_nuclear_ket(&(&spec.matrix() * &ket), n)?;
        let out = unitary.apply_ket(&input)?;
        let overlap: C64 = target.iter().zip(out.iter()).map(|(t, o)| t.conj() * o).sum();
        worst = worst.max(1.0 - overlap.norm_sqr());
    }
    Ok(worst)
}
