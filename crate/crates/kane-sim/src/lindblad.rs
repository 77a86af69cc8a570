//! Pure-dephasing master equation
//!
//!   dρ/dt = -(i/ħ)[H, ρ] - Σ_s Γ_s [Z_s, [Z_s, ρ]]
//!
//! with one Z-dephasing channel per spin (rate Γ_e for electrons, Γ_n for
//! nuclei). Because every channel is diagonal, the double commutators act
//! elementwise: entry (a, b) is damped at Σ_s Γ_s (z_s(a) - z_s(b))², which is
//! what `damping_matrix` tabulates. A spin coherence therefore decays as
//! exp(-4Γt), i.e. T₂ = 1/(4Γ).
//!
//! Two propagation routes are provided: direct adaptive integration of the
//! master equation (`evolve`), and the exact exponential of the vectorized
//! generator (`lindblad_propagator` / `evolve_expm`) for piecewise-constant
//! Hamiltonians, with a block-diagonal fast path when H conserves total Z.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::expm::{expm, matmul};
use crate::hamiltonian::{h_ac_quadratures, h_static, DeviceParams};
use crate::ode::{Dop853, OdeOptions};
use crate::spin::{DensityMatrix, Layout, Operator, Species, C64};
use crate::{Error, Result};

/// Dephasing rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingRates {
    pub gamma_e: f64,
    pub gamma_n: f64,
}

/// Converts a transverse relaxation time T₂ (seconds) to the dephasing rate
/// Γ = 1/(4 T₂).
pub fn t2_to_gamma(t2: f64) -> Result<f64> {
    if t2 <= 0.0 || !t2.is_finite() {
        return Err(Error::Domain(format!("T2 must be positive, got {t2}")));
    }
    Ok(1.0 / (4.0 * t2))
}

impl DephasingRates {
    pub fn new(gamma_e: f64, gamma_n: f64) -> Result<Self> {
        if gamma_e < 0.0 || gamma_n < 0.0 {
            return Err(Error::Domain("dephasing rates must be >= 0".into()));
        }
        Ok(DephasingRates { gamma_e, gamma_n })
    }

    /// Rates from T₂ times via Γ = 1/(4 T₂).
    pub fn from_t2(t2_e: f64, t2_n: f64) -> Result<Self> {
        Ok(DephasingRates {
            gamma_e: t2_to_gamma(t2_e)?,
            gamma_n: t2_to_gamma(t2_n)?,
        })
    }

    /// Typical rates: electron T₂ = 60 ms, nuclear T₂ = 1 s.
    pub fn typical() -> Self {
        DephasingRates {
            gamma_e: 1.0 / (4.0 * 60e-3),
            gamma_n: 0.25,
        }
    }

    pub fn zero() -> Self {
        DephasingRates {
            gamma_e: 0.0,
            gamma_n: 0.0,
        }
    }

    fn rate_for(&self, species: Species) -> f64 {
        match species {
            Species::Electron => self.gamma_e,
            Species::Nucleus => self.gamma_n,
        }
    }
}

/// Matrix of elementwise damping rates: entry (a, b) multiplies -ρ_ab in the
/// master equation and equals Σ_s Γ_s (z_s(a) - z_s(b))².
pub fn damping_matrix(layout: &Layout, rates: &DephasingRates) -> DMatrix<f64> {
    let dim = layout.dim();
    let n = layout.n_spins();
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let mut sum = 0.0;
            for (k, spin) in layout.spins().iter().enumerate() {
                let shift = n - 1 - k;
                let za = 1.0 - 2.0 * ((a >> shift) & 1) as f64;
                let zb = 1.0 - 2.0 * ((b >> shift) & 1) as f64;
                sum += rates.rate_for(spin.species) * (za - zb) * (za - zb);
            }
            d[(a, b)] = sum;
        }
    }
    d
}

/// The dissipator L[ρ] = Σ_s Γ_s [Z_s, [Z_s, ρ]], evaluated elementwise.
pub fn dissipator(rho: &Operator, rates: &DephasingRates, layout: &Layout) -> Result<Operator> {
    if rho.dim() != layout.dim() {
        return Err(Error::Domain(format!(
            "state dim {} does not match layout dim {}",
            rho.dim(),
            layout.dim()
        )));
    }
    let d = damping_matrix(layout, rates);
    let mut out = rho.0.clone();
    for a in 0..rho.dim() {
        for b in 0..rho.dim() {
            out[(a, b)] *= C64::new(d[(a, b)], 0.0);
        }
    }
    Ok(Operator(out))
}

/// Closed-form single-spin dephasing: populations frozen, coherences damped
/// by exp(-4Γt). `rho0` must be 2×2.
pub fn analytic_single_spin(rho0: &DensityMatrix, gamma: f64, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != 2 {
        return Err(Error::Domain(format!(
            "analytic_single_spin needs a 2x2 state, got {}",
            rho0.dim()
        )));
    }
    let decay = (-4.0 * gamma * t).exp();
    let mut m = rho0.matrix().clone();
    m[(0, 1)] *= C64::new(decay, 0.0);
    m[(1, 0)] *= C64::new(decay, 0.0);
    DensityMatrix::new(Operator(m))
}

/// Vectorized generator S of the master equation under column-stacking, so
/// that d vec(ρ)/dt = S vec(ρ) with vec index a + dim·b for entry (a, b).
pub fn build_superoperator(
    h: &Operator,
    rates: &DephasingRates,
    layout: &Layout,
    hbar: f64,
) -> Result<DMatrix<C64>> {
    let dim = layout.dim();
    if h.dim() != dim {
        return Err(Error::Domain(format!(
            "hamiltonian dim {} does not match layout dim {}",
            h.dim(),
            dim
        )));
    }
    let d = damping_matrix(layout, rates);
    let mut s = DMatrix::<C64>::zeros(dim * dim, dim * dim);
    let minus_i_over_hbar = C64::new(0.0, -1.0 / hbar);
    for a in 0..dim {
        for b in 0..dim {
            let row = a + dim * b;
            // -(i/ħ)(Hρ): couples (a,b) to (a',b).
            for ap in 0..dim {
                s[(row, ap + dim * b)] += minus_i_over_hbar * h.0[(a, ap)];
            }
            // +(i/ħ)(ρH): couples (a,b) to (a,b').
            for bp in 0..dim {
                s[(row, a + dim * bp)] -= minus_i_over_hbar * h.0[(bp, b)];
            }
            s[(row, row)] -= C64::new(d[(a, b)], 0.0);
        }
    }
    Ok(s)
}

/// True when H has no matrix elements between different total-Z sectors, so
/// the vectorized generator is block diagonal over sector pairs.
pub fn conserves_total_z(h: &Operator, layout: &Layout, tol: f64) -> bool {
    let dim = layout.dim();
    for a in 0..dim {
        for b in 0..dim {
            if layout.total_z(a) != layout.total_z(b) && h.0[(a, b)].norm() > tol {
                return false;
            }
        }
    }
    true
}

enum PropagatorKind {
    /// exp(S t) on the full dim² space.
    Full(DMatrix<C64>),
    /// One exponential per (sector, sector) pair of total-Z eigenspaces,
    /// with the density-matrix entries each block touches.
    Blocked(Vec<(Vec<(usize, usize)>, DMatrix<C64>)>),
}

/// Exact time-t map of the master equation for a constant Hamiltonian.
pub struct Propagator {
    kind: PropagatorKind,
    dim: usize,
}

/// Builds the exact propagator exp(S t) of the master equation with constant
/// Hamiltonian `h`, using a total-Z block decomposition when available.
pub fn lindblad_propagator(
    h: &Operator,
    rates: &DephasingRates,
    layout: &Layout,
    hbar: f64,
    t: f64,
) -> Result<Propagator> {
    let dim = layout.dim();
    if h.dim() != dim {
        return Err(Error::Domain(format!(
            "hamiltonian dim {} does not match layout dim {}",
            h.dim(),
            dim
        )));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("negative duration {t}")));
    }
    let scale = h.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let kind = if conserves_total_z(h, layout, 1e-14 * scale.max(1.0)) {
        let d = damping_matrix(layout, rates);
        let minus_i_over_hbar = C64::new(0.0, -1.0 / hbar);
        // Group basis states by total-Z eigenvalue.
        let mut sectors: Vec<(i32, Vec<usize>)> = Vec::new();
        for k in 0..dim {
            let z = layout.total_z(k);
            match sectors.iter_mut().find(|(zz, _)| *zz == z) {
                Some((_, v)) => v.push(k),
                None => sectors.push((z, vec![k])),
            }
        }
        let mut blocks = Vec::new();
        for (_, sa) in &sectors {
            for (_, sb) in &sectors {
                let mut entries = Vec::with_capacity(sa.len() * sb.len());
                for &b in sb {
                    for &a in sa {
                        entries.push((a, b));
                    }
                }
                let m = entries.len();
                let mut s = DMatrix::<C64>::zeros(m, m);
                for (r, &(a, b)) in entries.iter().enumerate() {
                    for (c, &(ap, bp)) in entries.iter().enumerate() {
                        if b == bp {
                            s[(r, c)] += minus_i_over_hbar * h.0[(a, ap)];
                        }
                        if a == ap {
                            s[(r, c)] -= minus_i_over_hbar * h.0[(bp, b)];
                        }
                    }
                    s[(r, r)] -= C64::new(d[(a, b)], 0.0);
                }
                let st = s.map(|z| z * C64::new(t, 0.0));
                blocks.push((entries, expm(&st)));
            }
        }
        // The exact map sends Hermitian states to Hermitian states, which
        // makes block (i,j) the entrywise conjugate of block (j,i) under the
        // (a,b) -> (b,a) reindexing. Rounding in the scaled-and-squared
        // exponential breaks this at the 1e-10 level; project the computed
        // blocks back onto the exact symmetry.
        let nsec = sectors.len();
        for i in 0..nsec {
            for j in i..nsec {
                let bi = i * nsec + j;
                let bj = j * nsec + i;
                let na = sectors[i].1.len();
                let nb = sectors[j].1.len();
                let m = na * nb;
                let remap = |k: usize| (k % na) * nb + k / na;
                if bi == bj {
                    let p = blocks[bi].1.clone();
                    for k in 0..m {
                        for l in 0..m {
                            blocks[bi].1[(k, l)] =
                                (p[(k, l)] + p[(remap(k), remap(l))].conj()) * 0.5;
                        }
                    }
                } else {
                    let p_ij = blocks[bi].1.clone();
                    let p_ji = blocks[bj].1.clone();
                    for k in 0..m {
                        for l in 0..m {
                            let avg =
                                (p_ij[(k, l)] + p_ji[(remap(k), remap(l))].conj()) * 0.5;
                            blocks[bi].1[(k, l)] = avg;
                            blocks[bj].1[(remap(k), remap(l))] = avg.conj();
                        }
                    }
                }
            }
        }
        PropagatorKind::Blocked(blocks)
    } else {
        let s = build_superoperator(h, rates, layout, hbar)?;
        let st = s.map(|z| z * C64::new(t, 0.0));
        let mut p = expm(&st);
        // Same Hermiticity-preservation projection as above, with the vec
        // index a + dim*b pairing with b + dim*a.
        let remap = |k: usize| (k % dim) * dim + k / dim;
        let raw = p.clone();
        for k in 0..dim * dim {
            for l in 0..dim * dim {
                p[(k, l)] = (raw[(k, l)] + raw[(remap(k), remap(l))].conj()) * 0.5;
            }
        }
        PropagatorKind::Full(p)
    };
    Ok(Propagator { kind, dim })
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Applies the map to a density matrix without re-validating the result;
    /// callers validate at checkpoints.
    pub fn apply_matrix(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let dim = self.dim;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::Domain(format!(
                "state dim {} does not match propagator dim {}",
                rho.nrows(),
                dim
            )));
        }
        match &self.kind {
            PropagatorKind::Full(p) => {
                let vec = DMatrix::from_column_slice(dim * dim, 1, rho.as_slice());
                let out = matmul(p, &vec);
                Ok(DMatrix::from_column_slice(dim, dim, out.as_slice()))
            }
            PropagatorKind::Blocked(blocks) => {
                let mut out = DMatrix::<C64>::zeros(dim, dim);
                for (entries, p) in blocks {
                    let m = entries.len();
                    let mut v = DVector::<C64>::zeros(m);
                    for (k, &(a, b)) in entries.iter().enumerate() {
                        v[k] = rho[(a, b)];
                    }
                    let w = p * v;
                    for (k, &(a, b)) in entries.iter().enumerate() {
                        out[(a, b)] = w[k];
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::new_unchecked(Operator(
            self.apply_matrix(rho.matrix())?,
        )))
    }
}

/// Exact evolution under a constant Hamiltonian for time `t`, via the matrix
/// exponential of the vectorized generator. The result is validated.
pub fn evolve_expm(
    rho0: &DensityMatrix,
    h: &Operator,
    rates: &DephasingRates,
    layout: &Layout,
    hbar: f64,
    t: f64,
) -> Result<DensityMatrix> {
    let prop = lindblad_propagator(h, rates, layout, hbar, t)?;
    let out = prop.apply(rho0)?;
    out.validate()?;
    Ok(out)
}

/// Hamiltonian seen by the adaptive integrator.
pub enum HamiltonianSource {
    /// Time-independent H.
    Constant(Operator),
    /// Lab-frame rotating drive: H(t) = h0 + cos(ωt+φ)·hx + sin(ωt+φ)·hy.
    Drive {
        h0: Operator,
        hx: Operator,
        hy: Operator,
        omega: f64,
        phase: f64,
    },
}

impl HamiltonianSource {
    /// Lab-frame source for the given device parameters (static part plus
    /// drive quadratures when the AC field is on).
    pub fn from_params(params: &DeviceParams, n_donors: usize) -> Result<Self> {
        let layout = Layout::for_donors(n_donors)?;
        let h0 = h_static(params, n_donors)?;
        if params.b_ac > 0.0 {
            let mut hx = Operator::zeros(layout.dim());
            let mut hy = Operator::zeros(layout.dim());
            for donor in 1..=n_donors as u8 {
                let (qx, qy) = h_ac_quadratures(params, donor, &layout)?;
                hx = &hx + &qx;
                hy = &hy + &qy;
            }
            Ok(HamiltonianSource::Drive {
                h0,
                hx,
                hy,
                omega: params.omega_ac,
                phase: params.phase_ac,
            })
        } else {
            Ok(HamiltonianSource::Constant(h0))
        }
    }

    fn dim(&self) -> usize {
        match self {
            HamiltonianSource::Constant(h) => h.dim(),
            HamiltonianSource::Drive { h0, .. } => h0.dim(),
        }
    }

    fn eval_into(&self, t: f64, buf: &mut DMatrix<C64>) {
        match self {
            HamiltonianSource::Constant(h) => buf.copy_from(&h.0),
            HamiltonianSource::Drive {
                h0,
                hx,
                hy,
                omega,
                phase,
            } => {
                let th = omega * t + phase;
                let (c, s) = (th.cos(), th.sin());
                for (o, (&a, (&x, &y))) in buf
                    .iter_mut()
                    .zip(h0.0.iter().zip(hx.0.iter().zip(hy.0.iter())))
                {
                    *o = a + c * x + s * y;
                }
            }
        }
    }
}

/// An evolution to integrate: initial state, Hamiltonian, rates, duration and
/// sampling/tolerance settings.
pub struct EvolutionProblem {
    pub initial: DensityMatrix,
    pub hamiltonian: HamiltonianSource,
    pub rates: DephasingRates,
    pub layout: Layout,
    pub hbar: f64,
    pub duration: f64,
    pub n_samples: usize,
    pub ode: OdeOptions,
}

/// Sampled states along an evolution.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    /// CSV of Bloch-vector diagnostics for a single-spin trajectory:
    /// `t,r,x,y,z`.
    pub fn bloch_csv(&self) -> Result<String> {
        use crate::spin::{bloch_radius, expectation, pauli, Axis, SpinLabel};
        let layout = Layout::new(vec![SpinLabel::nucleus(1)]);
        let spin = SpinLabel::nucleus(1);
        let mut out = String::from("t,r,x,y,z\n");
        for (t, rho) in self.times.iter().zip(&self.states) {
            let x = expectation(&pauli(Axis::X, spin, &layout)?, rho)?;
            let y = expectation(&pauli(Axis::Y, spin, &layout)?, rho)?;
            let z = expectation(&pauli(Axis::Z, spin, &layout)?, rho)?;
            let r = bloch_radius(rho)?;
            out.push_str(&format!(
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
                t, r, x, y, z
            ));
        }
        Ok(out)
    }
}

/// Integrates the master equation with the adaptive stepper, sampling
/// `n_samples + 1` evenly spaced states (including t = 0). Every sampled
/// state is validated.
pub fn evolve(problem: &EvolutionProblem) -> Result<Trajectory> {
    let dim = problem.layout.dim();
    if problem.initial.dim() != dim || problem.hamiltonian.dim() != dim {
        return Err(Error::Domain(
            "state, hamiltonian and layout dimensions disagree".into(),
        ));
    }
    if problem.duration < 0.0 {
        return Err(Error::Domain(format!(
            "negative duration {}",
            problem.duration
        )));
    }
    problem.initial.validate()?;

    let d = damping_matrix(&problem.layout, &problem.rates);
    let hbar = problem.hbar;
    let source = &problem.hamiltonian;
    let mut hbuf = DMatrix::<C64>::zeros(dim, dim);
    let rhs = move |t: f64, y: &DVector<C64>| -> DVector<C64> {
        source.eval_into(t, &mut hbuf);
        let mut dy = DVector::<C64>::zeros(dim * dim);
        let minus_i_over_hbar = C64::new(0.0, -1.0 / hbar);
        for b in 0..dim {
            for a in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += hbuf[(a, k)] * y[k + dim * b] - y[a + dim * k] * hbuf[(k, b)];
                }
                dy[a + dim * b] =
                    minus_i_over_hbar * acc - C64::new(d[(a, b)], 0.0) * y[a + dim * b];
            }
        }
        dy
    };

    let y0 = DVector::from_column_slice(problem.initial.matrix().as_slice());
    let mut stepper = Dop853::new(rhs, 0.0, y0, problem.ode);

    let n = problem.n_samples.max(1);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(problem.initial.clone());
    for k in 1..=n {
        let t = problem.duration * k as f64 / n as f64;
        stepper.advance_to(t, |_, _| {})?;
        let m = DMatrix::from_column_slice(dim, dim, stepper.y.as_slice());
        let rho = DensityMatrix::new(Operator(m))?;
        times.push(t);
        states.push(rho);
    }
    Ok(Trajectory { times, states })
}
