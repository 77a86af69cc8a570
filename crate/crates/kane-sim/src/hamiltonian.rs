//! Assembly of the donor spin Hamiltonians from device parameters, in the lab
//! frame and in the frame rotating at the AC drive frequency.
//!
//! Terms, with Z/X/Y the Pauli matrices and all energies in meV:
//! - Zeeman (per donor):     -g_n μ_n B Z_n + μ_B B Z_e
//! - AC drive (per donor):   -g_n μ_n B_ac [X_n cos(ωt+φ) + Y_n sin(ωt+φ)]
//!                           + μ_B B_ac [X_e cos(ωt+φ) + Y_e sin(ωt+φ)]
//! - Hyperfine (per donor):  A σ_e·σ_n
//! - Exchange (two donors):  J σ_e1·σ_e2

use serde::{Deserialize, Serialize};

use crate::spin::{pauli, Axis, Layout, Operator, SpinLabel, C64};
use crate::{Error, Result};

/// Physical constants (CODATA values; g_n is the phosphorus-31 nuclear
/// g-factor used in the original Kane proposal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Bohr magneton, meV/T.
    #[serde(rename = "mu_B")]
    pub mu_b: f64,
    /// Nuclear magneton, meV/T.
    pub mu_n: f64,
    /// Phosphorus-31 nuclear g-factor, dimensionless.
    pub g_n: f64,
    /// Reduced Planck constant, meV·s.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            mu_b: 5.7883818060e-2,
            mu_n: 3.15245125844e-5,
            g_n: 2.26320,
            hbar: 6.582119569e-13,
        }
    }
}

/// Unperturbed hyperfine strength, meV.
pub const A_UNPERTURBED: f64 = 0.1211e-3;
/// Hyperfine strength during a Z rotation, meV.
pub const A_Z: f64 = 0.0606e-3;
/// Hyperfine strength during an X rotation, meV.
pub const A_X: f64 = 0.0606e-3;
/// Hyperfine strength during the two-donor interaction, meV.
pub const A_U: f64 = 0.1197e-3;
/// Exchange strength during the two-donor interaction, meV.
pub const J_U: f64 = 0.0423;
/// Static field, T.
pub const B_STATIC: f64 = 2.000;
/// Rotating field amplitude, T.
pub const B_AC: f64 = 0.0025;

/// All external knobs of the device plus the physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Static field, T.
    #[serde(rename = "B")]
    pub b: f64,
    /// Rotating field amplitude, T.
    #[serde(rename = "B_ac")]
    pub b_ac: f64,
    /// Drive angular frequency, rad/s (signed; see `resonance_frequency`).
    pub omega_ac: f64,
    /// Drive phase, rad.
    pub phase_ac: f64,
    /// Hyperfine strength of donor 1, meV.
    #[serde(rename = "A1")]
    pub a1: f64,
    /// Hyperfine strength of donor 2, meV.
    #[serde(rename = "A2")]
    pub a2: f64,
    /// Exchange strength, meV.
    #[serde(rename = "J")]
    pub j: f64,
    pub constants: PhysicalConstants,
}

impl DeviceParams {
    /// Named parameter presets. "table1" is the typical-parameter set used
    /// for all shipped gate calibrations (idle configuration: both donors at
    /// the unperturbed hyperfine strength, exchange off, drive off).
    pub fn preset(name: &str) -> Result<DeviceParams> {
        match name {
            "table1" => Ok(DeviceParams {
                b: B_STATIC,
                b_ac: B_AC,
                omega_ac: 0.0,
                phase_ac: 0.0,
                a1: A_UNPERTURBED,
                a2: A_UNPERTURBED,
                j: 0.0,
                constants: PhysicalConstants::default(),
            }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b <= 0.0 || self.b_ac < 0.0 || self.a1 < 0.0 || self.a2 < 0.0 || self.j < 0.0 {
            return Err(Error::Domain("negative field or coupling strength".into()));
        }
        Ok(())
    }

    pub fn hyperfine(&self, donor: u8) -> f64 {
        if donor == 1 {
            self.a1
        } else {
            self.a2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Zeeman,
    AcDrive,
    Hyperfine,
    Exchange,
}

/// One Hermitian term of the system Hamiltonian, in meV.
#[derive(Debug, Clone)]
pub struct HamiltonianTerm {
    pub kind: TermKind,
    pub operator: Operator,
    pub time_dependent: bool,
}

fn donor_labels(layout: &Layout, donor: u8) -> (SpinLabel, SpinLabel) {
    let _ = layout;
    (SpinLabel::electron(donor), SpinLabel::nucleus(donor))
}

/// Static Zeeman term of one donor.
pub fn h_zeeman(params: &DeviceParams, donor: u8, layout: &Layout) -> Result<HamiltonianTerm> {
    params.validate()?;
    let (e, n) = donor_labels(layout, donor);
    let c = &params.constants;
    let op = &(-c.g_n * c.mu_n * params.b * &pauli(Axis::Z, n, layout)?)
        + &(c.mu_b * params.b * &pauli(Axis::Z, e, layout)?);
    Ok(HamiltonianTerm {
        kind: TermKind::Zeeman,
        operator: op,
        time_dependent: false,
    })
}

/// Rotating-field drive term of one donor at time `t` (seconds).
pub fn h_ac(params: &DeviceParams, donor: u8, t: f64, layout: &Layout) -> Result<HamiltonianTerm> {
    let (hx, hy) = h_ac_quadratures(params, donor, layout)?;
    let th = params.omega_ac * t + params.phase_ac;
    let op = &(th.cos() * &hx) + &(th.sin() * &hy);
    Ok(HamiltonianTerm {
        kind: TermKind::AcDrive,
        operator: op,
        time_dependent: true,
    })
}

/// X and Y quadrature operators of the drive, so that
/// h_ac(t) = cos(ωt+φ)·hx + sin(ωt+φ)·hy.
pub fn h_ac_quadratures(
    params: &DeviceParams,
    donor: u8,
    layout: &Layout,
) -> Result<(Operator, Operator)> {
    let (e, n) = donor_labels(layout, donor);
    let c = &params.constants;
    let nuc = -c.g_n * c.mu_n * params.b_ac;
    let ele = c.mu_b * params.b_ac;
    let hx = &(nuc * &pauli(Axis::X, n, layout)?) + &(ele * &pauli(Axis::X, e, layout)?);
    let hy = &(nuc * &pauli(Axis::Y, n, layout)?) + &(ele * &pauli(Axis::Y, e, layout)?);
    Ok((hx, hy))
}

fn dot_coupling(a: SpinLabel, b: SpinLabel, strength: f64, layout: &Layout) -> Result<Operator> {
    let mut op = Operator::zeros(layout.dim());
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let pa = pauli(axis, a, layout)?;
        let pb = pauli(axis, b, layout)?;
        op = &op + &(strength * &(&pa * &pb));
    }
    Ok(op)
}

/// Hyperfine contact term A σ_e·σ_n of one donor.
pub fn h_hyperfine(params: &DeviceParams, donor: u8, layout: &Layout) -> Result<HamiltonianTerm> {
    let (e, n) = donor_labels(layout, donor);
    let op = dot_coupling(e, n, params.hyperfine(donor), layout)?;
    Ok(HamiltonianTerm {
        kind: TermKind::Hyperfine,
        operator: op,
        time_dependent: false,
    })
}

/// Exchange term J σ_e1·σ_e2 between the two donor electrons.
pub fn h_exchange(params: &DeviceParams, layout: &Layout) -> Result<HamiltonianTerm> {
    if layout.n_spins() < 4 {
        return Err(Error::Domain(
            "exchange term needs a two-donor system".into(),
        ));
    }
    let op = dot_coupling(
        SpinLabel::electron(1),
        SpinLabel::electron(2),
        params.j,
        layout,
    )?;
    Ok(HamiltonianTerm {
        kind: TermKind::Exchange,
        operator: op,
        time_dependent: false,
    })
}

/// Static part of the Hamiltonian (everything except the AC drive).
pub fn h_static(params: &DeviceParams, n_donors: usize) -> Result<Operator> {
    let layout = Layout::for_donors(n_donors)?;
    let mut h = Operator::zeros(layout.dim());
    for donor in 1..=n_donors as u8 {
        h = &h + &h_zeeman(params, donor, &layout)?.operator;
        h = &h + &h_hyperfine(params, donor, &layout)?.operator;
    }
    if n_donors == 2 {
        h = &h + &h_exchange(params, &layout)?.operator;
    }
    Ok(h)
}

/// Full lab-frame Hamiltonian at time `t`.
pub fn h_total(params: &DeviceParams, n_donors: usize, t: f64) -> Result<Operator> {
    let layout = Layout::for_donors(n_donors)?;
    let mut h = h_static(params, n_donors)?;
    if params.b_ac > 0.0 {
        for donor in 1..=n_donors as u8 {
            h = &h + &h_ac(params, donor, t, &layout)?.operator;
        }
    }
    Ok(h)
}

/// Sum of Z over every spin in the layout.
pub fn total_z_operator(layout: &Layout) -> Operator {
    let mut op = Operator::zeros(layout.dim());
    for &s in layout.spins() {
        op = &op + &pauli(Axis::Z, s, layout).expect("spin from layout");
    }
    op
}

/// Diagonal frame unitary U = exp(-i ω t ΣZ / 2).
pub fn frame_unitary(layout: &Layout, omega: f64, t: f64) -> Operator {
    let dim = layout.dim();
    let mut u = Operator::zeros(dim);
    for k in 0..dim {
        let z = layout.total_z(k) as f64;
        let phase = -omega * t * z / 2.0;
        u.0[(k, k)] = C64::new(phase.cos(), phase.sin());
    }
    u
}

/// U†HU - (ħω/2)ΣZ with U = exp(-iωt ΣZ/2): the Hamiltonian seen in the
/// frame rotating at ω. The rotating drive of `h_ac` becomes
/// time-independent under this transform at ω = ω_ac.
pub fn to_rotating_frame(
    h: &Operator,
    omega: f64,
    t: f64,
    layout: &Layout,
    hbar: f64,
) -> Operator {
    let u = frame_unitary(layout, omega, t);
    let rotated = &(&u.dagger() * h) * &u;
    let shift = 0.5 * hbar * omega * &total_z_operator(layout);
    &rotated - &shift
}

/// Constant rotating-frame Hamiltonian of a control segment: static part plus
/// the drive quadratures at the segment phase, minus the frame shift. Exact
/// for the rotating (not linearly polarized) field at any drive frequency.
pub fn h_segment_frame(params: &DeviceParams, n_donors: usize) -> Result<Operator> {
    let layout = Layout::for_donors(n_donors)?;
    let mut h = h_static(params, n_donors)?;
    if params.b_ac > 0.0 {
        for donor in 1..=n_donors as u8 {
            let (hx, hy) = h_ac_quadratures(params, donor, &layout)?;
            h = &h + &(params.phase_ac.cos() * &hx);
            h = &h + &(params.phase_ac.sin() * &hy);
        }
    }
    let shift = 0.5 * params.constants.hbar * params.omega_ac * &total_z_operator(&layout);
    Ok(&h - &shift)
}

/// Exact transition frequency of the addressed nuclear flip of one donor,
/// from diagonalizing the static single-donor Hamiltonian (drive off).
///
/// Returned as the signed value (E(|↓0⟩) - E(|↓1⟩))/ħ so that a coherence
/// between the two levels is stationary in the frame rotating at this
/// frequency; for these parameters it is negative.
pub fn resonance_frequency(params: &DeviceParams, donor: u8) -> Result<f64> {
    let single = DeviceParams {
        a1: params.hyperfine(donor),
        a2: params.hyperfine(donor),
        j: 0.0,
        b_ac: 0.0,
        ..*params
    };
    let h = h_static(&single, 1)?;
    let eig = h.0.clone().symmetric_eigen();
    // |↓0⟩ is basis index 2 (electron down, nucleus up), |↓1⟩ is index 3.
    let mut e_down0 = 0.0;
    let mut e_down1 = 0.0;
    let mut best0 = -1.0;
    let mut best1 = -1.0;
    for k in 0..4 {
        let v = eig.eigenvectors.column(k);
        let w0 = v[2].norm_sqr();
        let w1 = v[3].norm_sqr();
        if w0 > best0 {
            best0 = w0;
            e_down0 = eig.eigenvalues[k];
        }
        if w1 > best1 {
            best1 = w1;
            e_down1 = eig.eigenvalues[k];
        }
    }
    Ok((e_down0 - e_down1) / params.constants.hbar)
}
