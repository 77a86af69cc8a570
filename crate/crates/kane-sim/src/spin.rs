//! Operator algebra for multi-spin systems: Pauli embeddings, tensor
//! products, expectation values, state constructors and Bloch diagnostics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Tolerance used by `bloch_radius`-based purity checks.
pub const PURITY_TOL: f64 = 1e-8;

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Spin species on a donor site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Electron,
    Nucleus,
}

/// One spin in the system: donor index (1 or 2) plus species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinLabel {
    pub site: u8,
    pub species: Species,
}

impl SpinLabel {
    pub fn electron(site: u8) -> Self {
        SpinLabel {
            site,
            species: Species::Electron,
        }
    }

    pub fn nucleus(site: u8) -> Self {
        SpinLabel {
            site,
            species: Species::Nucleus,
        }
    }
}

/// Ordered list of the spins spanning the Hilbert space. The first label is
/// the most significant factor of the tensor product; spin up maps to basis
/// index 0 within each factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    spins: Vec<SpinLabel>,
}

impl Layout {
    pub fn new(spins: Vec<SpinLabel>) -> Self {
        Layout { spins }
    }

    /// One donor: e1 ⊗ n1.
    pub fn single_donor() -> Self {
        Layout::new(vec![SpinLabel::electron(1), SpinLabel::nucleus(1)])
    }

    /// Two donors: e1 ⊗ n1 ⊗ e2 ⊗ n2.
    pub fn two_donor() -> Self {
        Layout::new(vec![
            SpinLabel::electron(1),
            SpinLabel::nucleus(1),
            SpinLabel::electron(2),
            SpinLabel::nucleus(2),
        ])
    }

    pub fn for_donors(n_donors: usize) -> Result<Self> {
        match n_donors {
            1 => Ok(Layout::single_donor()),
            2 => Ok(Layout::two_donor()),
            n => Err(Error::Domain(format!("unsupported donor count {n}"))),
        }
    }

    pub fn spins(&self) -> &[SpinLabel] {
        &self.spins
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.spins.len()
    }

    pub fn position(&self, label: SpinLabel) -> Result<usize> {
        self.spins
            .iter()
            .position(|&s| s == label)
            .ok_or_else(|| Error::Domain(format!("spin {label:?} not in layout")))
    }

    /// Total-Z eigenvalue (sum of ±1 over all spins) of a basis state.
    pub fn total_z(&self, basis_index: usize) -> i32 {
        let n = self.n_spins();
        (0..n)
            .map(|k| {
                let bit = (basis_index >> (n - 1 - k)) & 1;
                if bit == 0 {
                    1
                } else {
                    -1
                }
            })
            .sum()
    }

    /// Basis index of a product state given one bit per spin (0 = up).
    pub fn basis_index(&self, bits: &[u8]) -> usize {
        assert_eq!(bits.len(), self.n_spins());
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }
}

/// Dense complex square matrix over the spin Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(pub DMatrix<C64>);

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dagger(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.0.adjoint();
        (&self.0 - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let dim = self.dim();
        let prod = &self.0 * self.0.adjoint();
        let id = DMatrix::<C64>::identity(dim, dim);
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max) < tol
    }

    /// Largest elementwise difference to another operator.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl std::ops::Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(rhs.0.map(|z| self * z))
    }
}

impl std::ops::Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(rhs.0.map(|z| self * z))
    }
}

/// Trace-one positive-semidefinite operator representing the system state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Wraps an operator after checking the state invariants.
    pub fn new(op: Operator) -> Result<Self> {
        let rho = DensityMatrix { op };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps without validation; for internal steps whose output is checked
    /// later.
    pub fn new_unchecked(op: Operator) -> Self {
        DensityMatrix { op }
    }

    /// Pure state from a normalized ket.
    pub fn from_ket(ket: &DVector<C64>) -> Result<Self> {
        let norm = ket.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("ket norm {norm} is not 1")));
        }
        let mat = ket * ket.adjoint();
        DensityMatrix::new(Operator(mat))
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.op.0
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
        }
        let defect = self.op.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity defect {defect:.3e}"
            )));
        }
        let min_eig = self
            .op
            .hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.op.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn sigma(axis: Axis) -> DMatrix<C64> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Single-site Pauli embedded by tensor product with identity elsewhere.
pub fn pauli(axis: Axis, target: SpinLabel, layout: &Layout) -> Result<Operator> {
    let pos = layout.position(target)?;
    let mut out = DMatrix::<C64>::identity(1, 1);
    for (k, _) in layout.spins().iter().enumerate() {
        let factor = if k == pos {
            sigma(axis)
        } else {
            DMatrix::identity(2, 2)
        };
        out = out.kronecker(&factor);
    }
    Ok(Operator(out))
}

/// Kronecker product of two operators.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator(a.0.kronecker(&b.0))
}

/// Tr{obs·ρ} for a Hermitian observable.
pub fn expectation(obs: &Operator, rho: &DensityMatrix) -> Result<f64> {
    if obs.dim() != rho.dim() {
        return Err(Error::Domain(format!(
            "dimension mismatch: observable {} vs state {}",
            obs.dim(),
            rho.dim()
        )));
    }
    let val = (&obs.0 * rho.matrix()).trace();
    if val.im.abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "expectation has imaginary residue {:.3e}",
            val.im
        )));
    }
    Ok(val.re)
}

/// Bloch vector length of a single-spin state.
pub fn bloch_radius(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::Domain(format!(
            "bloch_radius needs a 2x2 state, got dim {}",
            rho.dim()
        )));
    }
    let layout = Layout::new(vec![SpinLabel::nucleus(1)]);
    let spin = SpinLabel::nucleus(1);
    let mut sum = 0.0;
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let v = expectation(&pauli(axis, spin, &layout)?, rho)?;
        sum += v * v;
    }
    Ok(sum.sqrt())
}

/// Reduced state of one spin, tracing out all others.
pub fn partial_trace(rho: &DensityMatrix, keep: SpinLabel, layout: &Layout) -> Result<DensityMatrix> {
    let pos = layout.position(keep)?;
    let n = layout.n_spins();
    let dim = layout.dim();
    if rho.dim() != dim {
        return Err(Error::Domain(format!(
            "state dim {} does not match layout dim {}",
            rho.dim(),
            dim
        )));
    }
    let shift = n - 1 - pos;
    let mut out = DMatrix::<C64>::zeros(2, 2);
    for a in 0..dim {
        for b in 0..dim {
            // Indices must agree on every traced-out spin.
            let mask = !(1usize << shift) & (dim - 1);
            if a & mask != b & mask {
                continue;
            }
            let sa = (a >> shift) & 1;
            let sb = (b >> shift) & 1;
            out[(sa, sb)] += rho.matrix()[(a, b)];
        }
    }
    DensityMatrix::new(Operator(out))
}

fn nuclear_ket_1q(label: &str) -> Result<DVector<C64>> {
    let l = C64::new(1.0, 0.0);
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ket = match label {
        "0" => DVector::from_vec(vec![l, C64::new(0.0, 0.0)]),
        "1" => DVector::from_vec(vec![C64::new(0.0, 0.0), l]),
        "+" => DVector::from_vec(vec![s, s]),
        "-" => DVector::from_vec(vec![s, -s]),
        _ => return Err(Error::Domain(format!("unknown 1-qubit label {label:?}"))),
    };
    Ok(ket)
}

fn nuclear_ket_2q(label: &str) -> Result<DVector<C64>> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ket = match label {
        "00" => vec![l, o, o, o],
        "01" => vec![o, l, o, o],
        "10" => vec![o, o, l, o],
        "11" => vec![o, o, o, l],
        "Φ+" | "phi+" | "00+11" => vec![s, o, o, s],
        "Φ-" | "phi-" | "00-11" => vec![s, o, o, -s],
        "Ψ+" | "psi+" | "01+10" => vec![o, s, s, o],
        "Ψ-" | "psi-" | "01-10" => vec![o, s, -s, o],
        _ => return Err(Error::Domain(format!("unknown 2-qubit label {label:?}"))),
    };
    Ok(DVector::from_vec(ket))
}

/// Ket for a nuclear-subspace state label ("0", "1", "+", "-" for one donor;
/// "00".."11", "Φ±"/"Ψ±" or "00+11"-style sum labels for two donors).
pub fn nuclear_ket(label: &str, n_donors: usize) -> Result<DVector<C64>> {
    match n_donors {
        1 => nuclear_ket_1q(label),
        2 => nuclear_ket_2q(label),
        n => Err(Error::Domain(format!("unsupported donor count {n}"))),
    }
}

/// Embeds a nuclear ket into the full space with every electron polarized
/// spin-down.
pub fn embed_nuclear_ket(nuclear: &DVector<C64>, n_donors: usize) -> Result<DVector<C64>> {
    let layout = Layout::for_donors(n_donors)?;
    let dim = layout.dim();
    let n_nuc = 1 << n_donors;
    if nuclear.len() != n_nuc {
        return Err(Error::Domain(format!(
            "nuclear ket length {} for {} donors",
            nuclear.len(),
            n_donors
        )));
    }
    let mut full = DVector::<C64>::zeros(dim);
    for idx in 0..n_nuc {
        // Interleave electron-down bits with the nuclear bits.
        let mut bits = Vec::with_capacity(2 * n_donors);
        for d in 0..n_donors {
            bits.push(1u8);
            bits.push(((idx >> (n_donors - 1 - d)) & 1) as u8);
        }
        full[layout.basis_index(&bits)] = nuclear[idx];
    }
    Ok(full)
}

/// Pure state with electrons |↓…↓⟩ and the nuclear part as labeled.
pub fn make_state(nuclear_spec: &str, n_donors: usize) -> Result<DensityMatrix> {
    let nuc = nuclear_ket(nuclear_spec, n_donors)?;
    let full = embed_nuclear_ket(&nuc, n_donors)?;
    DensityMatrix::from_ket(&full)
}
