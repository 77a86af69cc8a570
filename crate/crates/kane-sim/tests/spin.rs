//! Operator algebra, state construction and reduction tests.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use kane_sim::spin::{
    bloch_radius, embed_nuclear_ket, expectation, make_state, nuclear_ket, partial_trace, pauli,
    tensor, Axis, DensityMatrix, Layout, Operator, SpinLabel, C64,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn single_spin_pauli_matrices() {
    let layout = Layout::new(vec![SpinLabel::nucleus(1)]);
    let z = pauli(Axis::Z, SpinLabel::nucleus(1), &layout).unwrap();
    assert_eq!(z.matrix()[(0, 0)], c(1.0, 0.0));
    assert_eq!(z.matrix()[(1, 1)], c(-1.0, 0.0));
    assert_eq!(z.matrix()[(0, 1)], c(0.0, 0.0));

    let x = pauli(Axis::X, SpinLabel::nucleus(1), &layout).unwrap();
    assert_eq!(x.matrix()[(0, 1)], c(1.0, 0.0));
    assert_eq!(x.matrix()[(1, 0)], c(1.0, 0.0));

    let y = pauli(Axis::Y, SpinLabel::nucleus(1), &layout).unwrap();
    assert_eq!(y.matrix()[(0, 1)], c(0.0, -1.0));
    assert_eq!(y.matrix()[(1, 0)], c(0.0, 1.0));
}

#[test]
fn pauli_embedding_in_two_spin_layout() {
    // Layout [e1, n1]: an n1 operator acts on the second tensor factor.
    let layout = Layout::single_donor();
    let xn = pauli(Axis::X, SpinLabel::nucleus(1), &layout).unwrap();
    let expected = tensor(
        &Operator::identity(2),
        &pauli(
            Axis::X,
            SpinLabel::nucleus(1),
            &Layout::new(vec![SpinLabel::nucleus(1)]),
        )
        .unwrap(),
    );
    assert!(xn.max_abs_diff(&expected) < 1e-15);

    let xe = pauli(Axis::X, SpinLabel::electron(1), &layout).unwrap();
    let expected = tensor(
        &pauli(
            Axis::X,
            SpinLabel::electron(1),
            &Layout::new(vec![SpinLabel::electron(1)]),
        )
        .unwrap(),
        &Operator::identity(2),
    );
    assert!(xe.max_abs_diff(&expected) < 1e-15);
}

#[test]
fn su2_algebra_on_every_site() {
    // [X, Y] = 2iZ and X² = I for each spin of the two-donor layout.
    let layout = Layout::two_donor();
    for &spin in layout.spins() {
        let x = pauli(Axis::X, spin, &layout).unwrap();
        let y = pauli(Axis::Y, spin, &layout).unwrap();
        let z = pauli(Axis::Z, spin, &layout).unwrap();
        let comm = Operator(x.matrix() * y.matrix() - y.matrix() * x.matrix());
        let two_i_z = Operator(z.matrix().scale(2.0) * c(0.0, 1.0));
        assert!(comm.max_abs_diff(&two_i_z) < 1e-14);
        let xx = Operator(x.matrix() * x.matrix());
        assert!(xx.max_abs_diff(&Operator::identity(layout.dim())) < 1e-14);
    }
}

#[test]
fn paulis_on_distinct_sites_commute() {
    let layout = Layout::two_donor();
    let spins = layout.spins().to_vec();
    for (i, &a) in spins.iter().enumerate() {
        for &b in &spins[i + 1..] {
            let xa = pauli(Axis::X, a, &layout).unwrap();
            let yb = pauli(Axis::Y, b, &layout).unwrap();
            let comm = Operator(xa.matrix() * yb.matrix() - yb.matrix() * xa.matrix());
            assert!(comm.max_abs_diff(&Operator::zeros(layout.dim())) < 1e-15);
        }
    }
}

#[test]
fn tensor_of_pauli_products() {
    // σz ⊗ σz is diagonal (1, -1, -1, 1).
    let single = Layout::new(vec![SpinLabel::nucleus(1)]);
    let z = pauli(Axis::Z, SpinLabel::nucleus(1), &single).unwrap();
    let zz = tensor(&z, &z);
    for (i, want) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
        assert_eq!(zz.matrix()[(i, i)], c(*want, 0.0));
    }

    // XX + YY + ZZ has eigenvalues {-3, 1, 1, 1} (singlet/triplet split).
    let x = pauli(Axis::X, SpinLabel::nucleus(1), &single).unwrap();
    let y = pauli(Axis::Y, SpinLabel::nucleus(1), &single).unwrap();
    let heisenberg = Operator(
        tensor(&x, &x).matrix() + tensor(&y, &y).matrix() + tensor(&z, &z).matrix(),
    );
    let mut eig = heisenberg.hermitian_eigenvalues();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expected = [-3.0, 1.0, 1.0, 1.0];
    for (got, want) in eig.iter().zip(expected) {
        assert_relative_eq!(*got, want, epsilon = 1e-12);
    }
}

#[test]
fn tensor_is_associative_and_multiplicative() {
    let a = Operator(DMatrix::from_row_slice(2, 2, &[
        c(0.3, 0.1), c(-0.2, 0.7), c(1.1, 0.0), c(0.4, -0.5),
    ]));
    let b = Operator(DMatrix::from_row_slice(2, 2, &[
        c(0.9, -0.3), c(0.0, 0.2), c(-0.6, 0.1), c(0.8, 0.0),
    ]));
    let d = Operator(DMatrix::from_row_slice(2, 2, &[
        c(0.1, 0.0), c(0.5, 0.5), c(-0.4, 0.2), c(0.0, -0.9),
    ]));
    let left = tensor(&tensor(&a, &b), &d);
    let right = tensor(&a, &tensor(&b, &d));
    assert!(left.max_abs_diff(&right) < 1e-14);

    // (A ⊗ B)(A ⊗ B) = A² ⊗ B².
    let ab = tensor(&a, &b);
    let prod = Operator(ab.matrix() * ab.matrix());
    let sq = tensor(
        &Operator(a.matrix() * a.matrix()),
        &Operator(b.matrix() * b.matrix()),
    );
    assert!(prod.max_abs_diff(&sq) < 1e-13);
}

#[test]
fn layout_indexing_and_total_z() {
    let layout = Layout::two_donor();
    assert_eq!(layout.dim(), 16);
    assert_eq!(layout.n_spins(), 4);
    // Basis index of all-up is 0; all-down is dim - 1.
    assert_eq!(layout.basis_index(&[0, 0, 0, 0]), 0);
    assert_eq!(layout.basis_index(&[1, 1, 1, 1]), 15);
    assert_eq!(layout.total_z(0), 4);
    assert_eq!(layout.total_z(15), -4);
    // One spin flipped from all-up has total Z = 2.
    assert_eq!(layout.total_z(layout.basis_index(&[0, 1, 0, 0])), 2);
    // Spin order is e1, n1, e2, n2.
    assert_eq!(layout.position(SpinLabel::electron(1)).unwrap(), 0);
    assert_eq!(layout.position(SpinLabel::nucleus(2)).unwrap(), 3);
}

#[test]
fn expectation_values_of_named_states() {
    let layout = Layout::new(vec![SpinLabel::nucleus(1)]);
    let z = pauli(Axis::Z, SpinLabel::nucleus(1), &layout).unwrap();
    let x = pauli(Axis::X, SpinLabel::nucleus(1), &layout).unwrap();

    let zero = DensityMatrix::from_ket(&nuclear_ket("0", 1).unwrap()).unwrap();
    assert_relative_eq!(expectation(&z, &zero).unwrap(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(expectation(&x, &zero).unwrap(), 0.0, epsilon = 1e-14);

    let plus = DensityMatrix::from_ket(&nuclear_ket("+", 1).unwrap()).unwrap();
    assert_relative_eq!(expectation(&x, &plus).unwrap(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(expectation(&z, &plus).unwrap(), 0.0, epsilon = 1e-14);
}

#[test]
fn expectation_rejects_dimension_mismatch() {
    let layout = Layout::single_donor();
    let z = pauli(Axis::Z, SpinLabel::nucleus(1), &layout).unwrap();
    let small = DensityMatrix::from_ket(&nuclear_ket("0", 1).unwrap()).unwrap();
    assert!(expectation(&z, &small).is_err());
}

#[test]
fn bloch_radius_pure_and_mixed() {
    let plus = DensityMatrix::from_ket(&nuclear_ket("+", 1).unwrap()).unwrap();
    assert_relative_eq!(bloch_radius(&plus).unwrap(), 1.0, epsilon = 1e-12);

    let mixed = DensityMatrix::new(Operator(DMatrix::from_diagonal(
        &DVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]),
    )))
    .unwrap();
    assert_relative_eq!(bloch_radius(&mixed).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn partial_trace_recovers_product_factors() {
    // |+⟩ ⊗ |0⟩ over [n1, n2]: tracing out either factor returns the other.
    let layout = Layout::new(vec![SpinLabel::nucleus(1), SpinLabel::nucleus(2)]);
    let plus = nuclear_ket("+", 1).unwrap();
    let zero = nuclear_ket("0", 1).unwrap();
    let mut ket = DVector::<C64>::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            ket[2 * i + j] = plus[i] * zero[j];
        }
    }
    let rho = DensityMatrix::from_ket(&ket).unwrap();
    let r1 = partial_trace(&rho, SpinLabel::nucleus(1), &layout).unwrap();
    let r2 = partial_trace(&rho, SpinLabel::nucleus(2), &layout).unwrap();
    let plus_rho = DensityMatrix::from_ket(&plus).unwrap();
    let zero_rho = DensityMatrix::from_ket(&zero).unwrap();
    assert!(r1.op().max_abs_diff(plus_rho.op()) < 1e-14);
    assert!(r2.op().max_abs_diff(zero_rho.op()) < 1e-14);
}

#[test]
fn partial_trace_of_bell_state_is_maximally_mixed() {
    let layout = Layout::new(vec![SpinLabel::nucleus(1), SpinLabel::nucleus(2)]);
    let bell = DensityMatrix::from_ket(&nuclear_ket("00+11", 2).unwrap()).unwrap();
    let reduced = partial_trace(&bell, SpinLabel::nucleus(1), &layout).unwrap();
    let mixed = Operator(DMatrix::from_diagonal(&DVector::from_vec(vec![
        c(0.5, 0.0),
        c(0.5, 0.0),
    ])));
    assert!(reduced.op().max_abs_diff(&mixed) < 1e-14);
    assert!(reduced.purity() < 0.5 + 1e-12);
}

#[test]
fn density_matrix_invariants_are_enforced() {
    // Non-unit trace.
    let bad = Operator(DMatrix::from_diagonal(&DVector::from_vec(vec![
        c(0.7, 0.0),
        c(0.7, 0.0),
    ])));
    assert!(DensityMatrix::new(bad).is_err());

    // Non-Hermitian.
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(0, 0)] = c(1.0, 0.0);
    m[(0, 1)] = c(0.3, 0.0);
    assert!(DensityMatrix::new(Operator(m)).is_err());

    // Negative eigenvalue (valid trace and Hermiticity).
    let mut m = DMatrix::<C64>::zeros(2, 2);
    m[(0, 0)] = c(1.2, 0.0);
    m[(1, 1)] = c(-0.2, 0.0);
    assert!(DensityMatrix::new(Operator(m)).is_err());

    // Unnormalized ket.
    let ket = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
    assert!(DensityMatrix::from_ket(&ket).is_err());
}

#[test]
fn make_state_embeds_electrons_down() {
    // Single donor "0": electron down, nucleus up -> basis bits [1, 0].
    let rho = make_state("0", 1).unwrap();
    let layout = Layout::single_donor();
    let idx = layout.basis_index(&[1, 0]);
    assert_relative_eq!(rho.matrix()[(idx, idx)].re, 1.0, epsilon = 1e-14);
    assert_relative_eq!(rho.purity(), 1.0, epsilon = 1e-12);

    // Two donors "01": bits [1, 0, 1, 1].
    let rho = make_state("01", 2).unwrap();
    let layout = Layout::two_donor();
    let idx = layout.basis_index(&[1, 0, 1, 1]);
    assert_relative_eq!(rho.matrix()[(idx, idx)].re, 1.0, epsilon = 1e-14);
}

#[test]
fn nuclear_ket_accepts_bell_aliases() {
    let a = nuclear_ket("Φ+", 2).unwrap();
    let b = nuclear_ket("phi+", 2).unwrap();
    let d = nuclear_ket("00+11", 2).unwrap();
    assert!((&a - &b).norm() < 1e-15);
    assert!((&a - &d).norm() < 1e-15);
    assert!(nuclear_ket("bogus", 2).is_err());
    assert!(nuclear_ket("0", 3).is_err());
}

#[test]
fn embed_nuclear_ket_rejects_wrong_length() {
    let ket = nuclear_ket("0", 1).unwrap();
    assert!(embed_nuclear_ket(&ket, 2).is_err());
}

proptest! {
    #[test]
    fn random_kets_have_unit_bloch_radius(re0 in -1.0f64..1.0, im0 in -1.0f64..1.0,
                                          re1 in -1.0f64..1.0, im1 in -1.0f64..1.0) {
        let mut ket = DVector::from_vec(vec![c(re0, im0), c(re1, im1)]);
        let n = ket.norm();
        prop_assume!(n > 1e-3);
        ket /= c(n, 0.0);
        let rho = DensityMatrix::from_ket(&ket).unwrap();
        let r = bloch_radius(&rho).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-10);
        prop_assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn convex_mixtures_stay_valid_and_lose_purity(w in 0.0f64..1.0) {
        let a = make_state("0", 1).unwrap();
        let b = make_state("+", 1).unwrap();
        let m = Operator(a.matrix().scale(w) + b.matrix().scale(1.0 - w));
        let rho = DensityMatrix::new(m).unwrap();
        prop_assert!(rho.validate().is_ok());
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
    }
}
