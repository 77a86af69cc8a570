//! Piecewise-constant control schedules and their propagation.
//!
//! A gate is a `PulseSequence`: an ordered list of segments, each holding the
//! device configuration (hyperfine strengths, exchange, drive amplitude,
//! frequency and phase) for its duration. Within a segment everything is
//! constant except the rotating drive, whose time dependence is removed
//! exactly by passing to the frame rotating at the drive frequency (the field
//! is circular, so there is no counter-rotating term). Segment time is local:
//! the drive phase at local time s is ω_ac·s + phase_ac.
//!
//! Gate targets are defined in the logical frame rotating at the idle nuclear
//! resonance (`frame_omega`): after applying all segments in the lab frame,
//! the final state is conjugated by exp(+i ω_L T ΣZ/2) with T the total
//! duration, so that an idle nuclear qubit is a fixed point.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{
    h_segment_frame, h_static, resonance_frequency, DeviceParams, A_UNPERTURBED, A_X, A_Z,
};
use crate::lindblad::{lindblad_propagator, DephasingRates, Propagator};
use crate::spin::{DensityMatrix, Layout, Operator, C64};
use crate::{Error, Result};

/// One constant-configuration interval of a control schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    /// Length of the segment, seconds.
    pub duration: f64,
    /// Hyperfine strength of donor 1, meV.
    #[serde(rename = "A1")]
    pub a1: f64,
    /// Hyperfine strength of donor 2, meV (ignored for one donor).
    #[serde(rename = "A2")]
    pub a2: f64,
    /// Exchange strength, meV.
    #[serde(rename = "J")]
    pub j: f64,
    /// Rotating field amplitude, T; zero turns the drive off.
    #[serde(rename = "B_ac_amplitude")]
    pub b_ac_amplitude: f64,
    /// Drive angular frequency, rad/s (signed).
    pub omega_ac: f64,
    /// Drive phase at the start of the segment, rad.
    pub phase_ac: f64,
}

impl PulseSegment {
    /// An undriven segment with both donors idle.
    pub fn idle(duration: f64) -> Self {
        PulseSegment {
            duration,
            a1: A_UNPERTURBED,
            a2: A_UNPERTURBED,
            j: 0.0,
            b_ac_amplitude: 0.0,
            omega_ac: 0.0,
            phase_ac: 0.0,
        }
    }

    /// Device parameters in force during this segment.
    pub fn params(&self, base: &DeviceParams) -> DeviceParams {
        DeviceParams {
            a1: self.a1,
            a2: self.a2,
            j: self.j,
            b_ac: self.b_ac_amplitude,
            omega_ac: self.omega_ac,
            phase_ac: self.phase_ac,
            ..*base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration < 0.0 || !self.duration.is_finite() {
            return Err(Error::Domain(format!(
                "segment duration {} must be >= 0",
                self.duration
            )));
        }
        if self.a1 < 0.0 || self.a2 < 0.0 || self.j < 0.0 || self.b_ac_amplitude < 0.0 {
            return Err(Error::Domain(
                "segment couplings and field amplitudes must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// The five supported gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Z,
    X,
    Cnot,
    Swap,
    Cz,
}

impl Gate {
    pub fn parse(name: &str) -> Result<Gate> {
        match name.to_ascii_lowercase().as_str() {
            "z" => Ok(Gate::Z),
            "x" => Ok(Gate::X),
            "cnot" => Ok(Gate::Cnot),
            "swap" => Ok(Gate::Swap),
            "cz" | "controlled-z" => Ok(Gate::Cz),
            other => Err(Error::Domain(format!("unknown gate {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Z => "z",
            Gate::X => "x",
            Gate::Cnot => "cnot",
            Gate::Swap => "swap",
            Gate::Cz => "cz",
        }
    }

    pub fn n_donors(&self) -> usize {
        match self {
            Gate::Z | Gate::X => 1,
            _ => 2,
        }
    }

    /// Whether the gate takes a rotation angle.
    pub fn takes_theta(&self) -> bool {
        matches!(self, Gate::Z | Gate::X)
    }
}

/// A gate together with its rotation angle where applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub gate: Gate,
    pub theta: Option<f64>,
}

impl GateSpec {
    pub fn new(gate: Gate, theta: Option<f64>) -> Result<Self> {
        match (gate.takes_theta(), theta) {
            (true, None) => Err(Error::Domain(format!(
                "gate {} needs a rotation angle",
                gate.name()
            ))),
            (false, Some(_)) => Err(Error::Domain(format!(
                "gate {} takes no rotation angle",
                gate.name()
            ))),
            _ => Ok(GateSpec { gate, theta }),
        }
    }

    pub fn n_donors(&self) -> usize {
        self.gate.n_donors()
    }

    /// Ideal unitary on the nuclear qubits (2×2 or 4×4).
    pub fn matrix(&self) -> DMatrix<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        match self.gate {
            Gate::Z => {
                let th = self.theta.unwrap() / 2.0;
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[C64::new(th.cos(), -th.sin()), o, o, C64::new(th.cos(), th.sin())],
                )
            }
            Gate::X => {
                let th = self.theta.unwrap() / 2.0;
                let c = C64::new(th.cos(), 0.0);
                let s = C64::new(0.0, -th.sin());
                DMatrix::from_row_slice(2, 2, &[c, s, s, c])
            }
            Gate::Cnot => DMatrix::from_row_slice(
                4,
                4,
                &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o],
            ),
            Gate::Swap => DMatrix::from_row_slice(
                4,
                4,
                &[l, o, o, o, o, o, l, o, o, l, o, o, o, o, o, l],
            ),
            Gate::Cz => DMatrix::from_row_slice(
                4,
                4,
                &[l, o, o, o, o, l, o, o, o, o, l, o, o, o, o, -l],
            ),
        }
    }
}

/// A calibrated control schedule for one gate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Gate name ("z", "x", "cnot", "swap", "cz").
    pub gate: String,
    /// Rotation angle for z/x gates.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    /// Device preset the sequence was calibrated against.
    pub preset: String,
    /// Logical-frame angular frequency, rad/s.
    pub frame_omega: f64,
    pub segments: Vec<PulseSegment>,
}

impl PulseSequence {
    pub fn gate_spec(&self) -> Result<GateSpec> {
        GateSpec::new(Gate::parse(&self.gate)?, self.theta)
    }

    pub fn n_donors(&self) -> Result<usize> {
        Ok(Gate::parse(&self.gate)?.n_donors())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.gate_spec()?;
        for seg in &self.segments {
            seg.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seq: PulseSequence = serde_json::from_str(text)?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        PulseSequence::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    t
}

/// Detuning rate of a Z rotation: the shift of the nuclear resonance when the
/// hyperfine strength is lowered from its idle value to `A_Z` (rad/s, > 0 for
/// these parameters).
pub fn z_detuning(params: &DeviceParams) -> Result<f64> {
    let idle = DeviceParams {
        a1: A_UNPERTURBED,
        a2: A_UNPERTURBED,
        j: 0.0,
        b_ac: 0.0,
        ..*params
    };
    let detuned = DeviceParams {
        a1: A_Z,
        ..idle
    };
    Ok(resonance_frequency(&detuned, 1)? - resonance_frequency(&idle, 1)?)
}

/// Idle logical-frame frequency (rad/s, signed).
pub fn logical_frame_omega(params: &DeviceParams) -> Result<f64> {
    let idle = DeviceParams {
        a1: A_UNPERTURBED,
        a2: A_UNPERTURBED,
        j: 0.0,
        b_ac: 0.0,
        ..*params
    };
    resonance_frequency(&idle, 1)
}

/// Exact Rabi frequency (rad/s) of the addressed nuclear transition when one
/// donor at hyperfine strength `a` is driven resonantly with field `b_ac`:
/// the dressed-state splitting of the rotating-frame Hamiltonian. It exceeds
/// the bare value 2 g_n μ_n B_ac / ħ because the electron component of the
/// drive also couples to the transition through the hyperfine mixing.
pub fn dressed_rabi(params: &DeviceParams, a: f64, b_ac: f64) -> Result<f64> {
    let mut p = DeviceParams {
        a1: a,
        a2: a,
        j: 0.0,
        b_ac,
        phase_ac: 0.0,
        ..*params
    };
    p.omega_ac = resonance_frequency(&p, 1)?;
    let hf = h_segment_frame(&p, 1)?;
    let eig = hf.0.clone().symmetric_eigen();
    // The two dressed levels living in span{|↓0⟩, |↓1⟩} (basis indices 2, 3).
    let mut pairs: Vec<(f64, f64)> = (0..4)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            (eig.eigenvalues[k], v[2].norm_sqr() + v[3].norm_sqr())
        })
        .collect();
    pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok((pairs[0].0 - pairs[1].0).abs() / params.constants.hbar)
}

/// Z(θ) schedule: one undriven segment with the target donor's hyperfine
/// strength lowered to `A_Z`, so its qubit detunes from the logical frame and
/// accumulates the phase. Exact up to the shared systematic error of the
/// model, so no calibration is required.
pub fn z_rotation_sequence(theta: f64, params: &DeviceParams) -> Result<PulseSequence> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("non-finite angle {theta}")));
    }
    let delta = z_detuning(params)?;
    // Detuning rate delta > 0 realizes Z(+θ); wrap θ into [0, 2π).
    let angle = wrap_angle(theta);
    let duration = angle / delta;
    let mut segments = Vec::new();
    if duration > 0.0 {
        segments.push(PulseSegment {
            duration,
            a1: A_Z,
            a2: A_UNPERTURBED,
            j: 0.0,
            b_ac_amplitude: 0.0,
            omega_ac: 0.0,
            phase_ac: 0.0,
        });
    }
    Ok(PulseSequence {
        gate: "z".into(),
        theta: Some(theta),
        preset: "table1".into(),
        frame_omega: logical_frame_omega(params)?,
        segments,
    })
}

/// X(θ) schedule: one resonantly driven segment with the target donor's
/// hyperfine strength lowered to `A_X`. The logical frame of this sequence is
/// the drive frequency itself, in which the rotation axis is fixed.
pub fn x_rotation_sequence(theta: f64, params: &DeviceParams) -> Result<PulseSequence> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("non-finite angle {theta}")));
    }
    let p = DeviceParams {
        a1: A_X,
        a2: A_X,
        j: 0.0,
        b_ac: params.b_ac,
        ..*params
    };
    let omega_x = resonance_frequency(&p, 1)?;
    let rabi = dressed_rabi(params, A_X, params.b_ac)?;
    let angle = wrap_angle(theta);
    let duration = angle / rabi;
    let mut segments = Vec::new();
    if duration > 0.0 {
        segments.push(PulseSegment {
            duration,
            a1: A_X,
            a2: A_UNPERTURBED,
            j: 0.0,
            b_ac_amplitude: params.b_ac,
            omega_ac: omega_x,
            phase_ac: X_PHASE,
        });
    }
    Ok(PulseSequence {
        gate: "x".into(),
        theta: Some(theta),
        preset: "table1".into(),
        frame_omega: omega_x,
        segments,
    })
}

/// Drive phase that turns the resonant pulse into a rotation about +x for
/// positive angles (the nuclear drive coefficient is negative, so the axis is
/// opposite the drive phase direction).
pub const X_PHASE: f64 = PI;

fn config_key(seg: &PulseSegment) -> (u64, u64, u64, u64, u64) {
    (
        seg.a1.to_bits(),
        seg.a2.to_bits(),
        seg.j.to_bits(),
        seg.b_ac_amplitude.to_bits(),
        seg.omega_ac.to_bits(),
    )
}

/// Multiplies ρ elementwise by exp(-i χ (z_a - z_b) / 2): the conjugation
/// ρ → U ρ U† with the diagonal U = exp(-i χ ΣZ/2).
fn apply_z_phases(rho: &mut DMatrix<C64>, layout: &Layout, chi: f64) {
    let dim = layout.dim();
    for b in 0..dim {
        for a in 0..dim {
            let dz = (layout.total_z(a) - layout.total_z(b)) as f64;
            let ph = -chi * dz / 2.0;
            rho[(a, b)] *= C64::new(ph.cos(), ph.sin());
        }
    }
}

struct OpenStep {
    prop_index: usize,
    driven: bool,
    phase: f64,
    exit: f64,
}

/// Open-system propagator of a pulse sequence at fixed dephasing rates: one
/// exact Lindblad map per segment, built in the segment's rotating frame and
/// shared between segments that differ only in drive phase (the phase enters
/// as a diagonal conjugation).
pub struct SequencePropagator {
    layout: Layout,
    props: Vec<Propagator>,
    steps: Vec<OpenStep>,
    frame_omega: f64,
    total_duration: f64,
}

impl SequencePropagator {
    pub fn new(
        seq: &PulseSequence,
        base: &DeviceParams,
        rates: &DephasingRates,
    ) -> Result<Self> {
        seq.validate()?;
        let n_donors = seq.n_donors()?;
        let layout = Layout::for_donors(n_donors)?;
        let hbar = base.constants.hbar;
        let mut props: Vec<Propagator> = Vec::new();
        let mut index: HashMap<(u64, u64, u64, u64, u64, u64), usize> = HashMap::new();
        let mut steps = Vec::new();
        for seg in &seq.segments {
            let driven = seg.b_ac_amplitude > 0.0;
            let mut p = seg.params(base);
            p.phase_ac = 0.0;
            let key = config_key(seg);
            let full_key = (key.0, key.1, key.2, key.3, key.4, seg.duration.to_bits());
            let prop_index = match index.get(&full_key) {
                Some(&i) => i,
                None => {
                    let h = if driven {
                        h_segment_frame(&p, n_donors)?
                    } else {
                        h_static(&p, n_donors)?
                    };
                    let prop = lindblad_propagator(&h, rates, &layout, hbar, seg.duration)?;
                    props.push(prop);
                    index.insert(full_key, props.len() - 1);
                    props.len() - 1
                }
            };
            steps.push(OpenStep {
                prop_index,
                driven,
                phase: seg.phase_ac,
                exit: seg.omega_ac * seg.duration,
            });
        }
        Ok(SequencePropagator {
            layout,
            props,
            steps,
            frame_omega: seq.frame_omega,
            total_duration: seq.total_duration(),
        })
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    /// Applies the full sequence, including the final logical-frame transform,
    /// and validates the output state.
    pub fn apply(&self, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        rho0.validate()?;
        if rho0.dim() != self.layout.dim() {
            return Err(Error::Domain(format!(
                "state dim {} does not match sequence dim {}",
                rho0.dim(),
                self.layout.dim()
            )));
        }
        let mut rho = rho0.matrix().clone();
        for step in &self.steps {
            if step.driven {
                // H_f(φ) = R(φ) H_f(0) R(φ)† with R = exp(-iφΣZ/2), so the
                // segment map is a phase conjugation around the φ = 0 map,
                // followed by the frame exit transform exp(-iωτΣZ/2).
                apply_z_phases(&mut rho, &self.layout, -step.phase);
                rho = self.props[step.prop_index].apply_matrix(&rho)?;
                apply_z_phases(&mut rho, &self.layout, step.phase + step.exit);
            } else {
                rho = self.props[step.prop_index].apply_matrix(&rho)?;
            }
        }
        // Logical frame at the final time.
        apply_z_phases(&mut rho, &self.layout, -self.frame_omega * self.total_duration);
        // The exact segment maps preserve Hermiticity and trace; the matrix
        // exponentials drift at the 1e-10 level over long schedules. Project
        // back onto the exact invariants before validating.
        let herm = rho.adjoint();
        rho = (rho + herm).scale(0.5);
        let tr: C64 = rho.diagonal().sum();
        if (tr.re - 1.0).abs() < 1e-6 && tr.re > 0.0 {
            rho /= C64::new(tr.re, 0.0);
        }
        let out = DensityMatrix::new(Operator(rho))?;
        Ok(out)
    }
}

struct UnitaryConfig {
    vectors: DMatrix<C64>,
    energies: Vec<f64>,
}

struct UnitaryStep {
    config_index: usize,
    driven: bool,
    duration: f64,
    phase: f64,
    exit: f64,
}

/// Closed-system (dephasing-free) propagator of a pulse sequence acting on
/// state vectors, used by calibration where only the coherent error matters.
/// Per distinct segment configuration one eigendecomposition is cached.
pub struct SequenceUnitary {
    layout: Layout,
    hbar: f64,
    configs: Vec<UnitaryConfig>,
    steps: Vec<UnitaryStep>,
    frame_omega: f64,
    total_duration: f64,
}

impl SequenceUnitary {
    pub fn new(seq: &PulseSequence, base: &DeviceParams) -> Result<Self> {
        seq.validate()?;
        let n_donors = seq.n_donors()?;
        let layout = Layout::for_donors(n_donors)?;
        let mut configs: Vec<UnitaryConfig> = Vec::new();
        let mut index: HashMap<(u64, u64, u64, u64, u64), usize> = HashMap::new();
        let mut steps = Vec::new();
        for seg in &seq.segments {
            let driven = seg.b_ac_amplitude > 0.0;
            let mut p = seg.params(base);
            p.phase_ac = 0.0;
            let key = config_key(seg);
            let config_index = match index.get(&key) {
                Some(&i) => i,
                None => {
                    let h = if driven {
                        h_segment_frame(&p, n_donors)?
                    } else {
                        h_static(&p, n_donors)?
                    };
                    let eig = h.0.symmetric_eigen();
                    configs.push(UnitaryConfig {
                        vectors: eig.eigenvectors,
                        energies: eig.eigenvalues.iter().copied().collect(),
                    });
                    index.insert(key, configs.len() - 1);
                    configs.len() - 1
                }
            };
            steps.push(UnitaryStep {
                config_index,
                driven,
                duration: seg.duration,
                phase: seg.phase_ac,
                exit: seg.omega_ac * seg.duration,
            });
        }
        Ok(SequenceUnitary {
            layout,
            hbar: base.constants.hbar,
            configs,
            steps,
            frame_omega: seq.frame_omega,
            total_duration: seq.total_duration(),
        })
    }

    fn apply_ket_phases(&self, ket: &mut DVector<C64>, chi: f64) {
        for (k, v) in ket.iter_mut().enumerate() {
            let ph = -chi * self.layout.total_z(k) as f64 / 2.0;
            *v *= C64::new(ph.cos(), ph.sin());
        }
    }

    /// Applies the sequence (with the final logical-frame transform) to a ket.
    pub fn apply_ket(&self, ket: &DVector<C64>) -> Result<DVector<C64>> {
        if ket.len() != self.layout.dim() {
            return Err(Error::Domain(format!(
                "ket dim {} does not match sequence dim {}",
                ket.len(),
                self.layout.dim()
            )));
        }
        let mut psi = ket.clone();
        for step in &self.steps {
            let cfg = &self.configs[step.config_index];
            if step.driven {
                self.apply_ket_phases(&mut psi, -step.phase);
            }
            // exp(-iHτ/ħ) via the cached eigendecomposition.
            let mut amps = cfg.vectors.adjoint() * &psi;
            for (k, a) in amps.iter_mut().enumerate() {
                let ph = -cfg.energies[k] * step.duration / self.hbar;
                *a *= C64::new(ph.cos(), ph.sin());
            }
            psi = &cfg.vectors * amps;
            if step.driven {
                self.apply_ket_phases(&mut psi, step.phase + step.exit);
            }
        }
        self.apply_ket_phases(&mut psi, -self.frame_omega * self.total_duration);
        Ok(psi)
    }

    /// The full sequence as a matrix on the layout's Hilbert space.
    pub fn matrix(&self) -> Result<DMatrix<C64>> {
        let dim = self.layout.dim();
        let mut u = DMatrix::<C64>::zeros(dim, dim);
        for col in 0..dim {
            let mut e = DVector::<C64>::zeros(dim);
            e[col] = C64::new(1.0, 0.0);
            let out = self.apply_ket(&e)?;
            u.set_column(col, &out);
        }
        Ok(u)
    }
}

/// Applies a calibrated sequence to a state under the given dephasing rates.
pub fn apply_sequence(
    rho0: &DensityMatrix,
    seq: &PulseSequence,
    base: &DeviceParams,
    rates: &DephasingRates,
) -> Result<DensityMatrix> {
    SequencePropagator::new(seq, base, rates)?.apply(rho0)
}
