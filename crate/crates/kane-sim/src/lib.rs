//! Density-matrix simulator for one- and two-donor spin systems of the Kane
//! silicon quantum computer under pure dephasing.
//!
//! The crate models each donor as an electron-nucleus spin pair coupled by a
//! hyperfine interaction, with neighbouring donor electrons coupled by
//! exchange. States evolve under a Lindblad master equation whose only noise
//! channel is Z dephasing on every spin. On top of that sit piecewise-constant
//! control schedules for the five gates (Z, X, CNOT, swap, controlled-Z),
//! a numerical calibration routine for their free parameters, state-probe
//! fidelity suites, and a batch harness for dephasing-rate grid sweeps.
//!
//! Conventions used throughout:
//! - Hilbert space ordering: e1 ⊗ n1 for one donor, e1 ⊗ n1 ⊗ e2 ⊗ n2 for two.
//! - Spin up maps to basis index 0; the nuclear qubit uses |0⟩ = up, |1⟩ = down,
//!   and electrons are written |↑⟩/|↓⟩.
//! - Energies in meV, times in seconds, angular frequencies in rad/s.

pub mod calibrate;
pub mod expm;
pub mod fidelity;
pub mod hamiltonian;
pub mod lindblad;
pub mod ode;
pub mod pulses;
pub mod spin;
pub mod sweep;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Precondition violation on an operation's inputs.
    #[error("domain error: {0}")]
    Domain(String),

    /// A density matrix failed its trace/Hermiticity/positivity invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The adaptive integrator could not continue (step size underflow).
    #[error("integration failed at t = {t_reached} s: {message}")]
    Integration { t_reached: f64, message: String },

    /// The calibration optimizer stalled above the requested tolerance.
    #[error("calibration stalled at error {best_error:.3e} (tolerance {tolerance:.3e})")]
    Calibration {
        best_error: f64,
        tolerance: f64,
        best_params: Vec<f64>,
    },

    /// A named preset or bundled fixture could not be resolved.
    #[error("unknown preset or fixture: {0}")]
    UnknownPreset(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
