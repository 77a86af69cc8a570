//! Hamiltonian term construction, frame transforms and device parameters.

use approx::assert_relative_eq;
use proptest::prelude::*;

use kane_sim::hamiltonian::{
    h_ac, h_exchange, h_hyperfine, h_segment_frame, h_static, h_total, h_zeeman,
    resonance_frequency, to_rotating_frame, total_z_operator, DeviceParams, A_UNPERTURBED, A_X,
    A_Z, B_STATIC,
};
use kane_sim::spin::{Layout, Operator};

fn table1() -> DeviceParams {
    DeviceParams::preset("table1").unwrap()
}

#[test]
fn electron_zeeman_splitting_matches_reference_value() {
    // 2 μ_B B = 0.23153527 meV at B = 2 T.
    let layout = Layout::single_donor();
    let h = h_zeeman(&table1(), 1, &layout).unwrap().operator;
    // |↑0⟩ is index 0, |↓0⟩ is index 2.
    let split = (h.matrix()[(0, 0)] - h.matrix()[(2, 2)]).re;
    assert_relative_eq!(split, 0.23153527, epsilon = 1e-8);
    assert_relative_eq!(split, 2.0 * table1().constants.mu_b * B_STATIC, epsilon = 1e-15);
}

#[test]
fn nuclear_zeeman_sign_is_opposite() {
    // The nuclear term enters as -g_n μ_n B Z: nucleus-up is the lower
    // Zeeman level, opposite to the electron.
    let layout = Layout::single_donor();
    let h = h_zeeman(&table1(), 1, &layout).unwrap().operator;
    let p = table1();
    // |↑0⟩ vs |↑1⟩ differ only in the nuclear term.
    let split = (h.matrix()[(0, 0)] - h.matrix()[(1, 1)]).re;
    assert_relative_eq!(
        split,
        -2.0 * p.constants.g_n * p.constants.mu_n * p.b,
        epsilon = 1e-15
    );
}

#[test]
fn ac_drive_vanishes_with_zero_amplitude() {
    let mut p = table1();
    p.b_ac = 0.0;
    let layout = Layout::single_donor();
    let h = h_ac(&p, 1, 0.3, &layout).unwrap().operator;
    assert!(h.max_abs_diff(&Operator::zeros(4)) < 1e-18);
    // And h_total reduces to the static part.
    let total = h_total(&p, 1, 0.7).unwrap();
    let stat = h_static(&p, 1).unwrap();
    assert!(total.max_abs_diff(&stat) < 1e-18);
}

#[test]
fn ac_drive_norm_is_time_independent() {
    // A rotating (circularly polarized) field only changes direction.
    let mut p = table1();
    p.omega_ac = -8.0e8;
    p.phase_ac = 0.4;
    let layout = Layout::single_donor();
    let h0 = h_ac(&p, 1, 0.0, &layout).unwrap().operator;
    let norm0: f64 = h0.matrix().iter().map(|z| z.norm_sqr()).sum();
    for k in 1..8 {
        let t = k as f64 * 0.731e-9;
        let h = h_ac(&p, 1, t, &layout).unwrap().operator;
        let norm: f64 = h.matrix().iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(norm, norm0, max_relative = 1e-12);
    }
}

#[test]
fn hyperfine_eigenvalues_are_singlet_triplet_split() {
    // A σ_e·σ_n has eigenvalues {A, A, A, -3A}.
    let layout = Layout::single_donor();
    let p = table1();
    let h = h_hyperfine(&p, 1, &layout).unwrap().operator;
    let mut eig = h.hermitian_eigenvalues();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let a = A_UNPERTURBED;
    let expected = [-3.0 * a, a, a, a];
    for (got, want) in eig.iter().zip(expected) {
        assert_relative_eq!(*got, want, max_relative = 1e-12);
    }
}

#[test]
fn exchange_eigenvalues_and_donor_count_guard() {
    let layout = Layout::two_donor();
    let p = table1();
    let mut p2 = p;
    p2.j = 0.0423;
    let h = h_exchange(&p2, &layout).unwrap().operator;
    let mut eig = h.hermitian_eigenvalues();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Each eigenvalue appears with multiplicity 4 from the nuclear factor.
    assert_relative_eq!(eig[0], -3.0 * p2.j, max_relative = 1e-12);
    assert_relative_eq!(eig[4], p2.j, max_relative = 1e-12);
    assert_relative_eq!(eig[15], p2.j, max_relative = 1e-12);

    assert!(h_exchange(&p2, &Layout::single_donor()).is_err());
}

#[test]
fn static_hamiltonian_conserves_total_z() {
    for n_donors in [1usize, 2] {
        let layout = Layout::for_donors(n_donors).unwrap();
        let h = h_static(&table1(), n_donors).unwrap();
        let z = total_z_operator(&layout);
        let comm = Operator(h.matrix() * z.matrix() - z.matrix() * h.matrix());
        assert!(comm.max_abs_diff(&Operator::zeros(layout.dim())) < 1e-16);
    }
}

#[test]
fn total_hamiltonian_is_hermitian() {
    let mut p = table1();
    p.omega_ac = -8.0e8;
    p.phase_ac = 1.1;
    for n_donors in [1usize, 2] {
        for t in [0.0, 1.3e-9, 2.7e-6] {
            let h = h_total(&p, n_donors, t).unwrap();
            assert!(h.is_hermitian(1e-15));
        }
    }
}

#[test]
fn ground_state_has_electrons_down() {
    // At B = 2 T the Zeeman term dominates: the lowest eigenvector lives in
    // the electron-down sector.
    let h = h_static(&table1(), 1).unwrap();
    let eig = h.0.clone().symmetric_eigen();
    let mut lowest = 0;
    for k in 1..4 {
        if eig.eigenvalues[k] < eig.eigenvalues[lowest] {
            lowest = k;
        }
    }
    let v = eig.eigenvectors.column(lowest);
    // Indices 2, 3 are electron-down.
    let down_weight = v[2].norm_sqr() + v[3].norm_sqr();
    assert!(down_weight > 0.999);
}

#[test]
fn rotating_frame_of_zero_hamiltonian_is_pure_shift() {
    let layout = Layout::single_donor();
    let p = table1();
    let omega = 5.0e8;
    let h = Operator::zeros(4);
    let rot = to_rotating_frame(&h, omega, 0.37e-9, &layout, p.constants.hbar);
    let shift = Operator(
        total_z_operator(&layout)
            .matrix()
            .scale(-0.5 * p.constants.hbar * omega),
    );
    assert!(rot.max_abs_diff(&shift) < 1e-18);
}

#[test]
fn rotating_frame_makes_resonant_drive_static() {
    // In the frame at ω_ac the driven Hamiltonian loses its t dependence.
    let mut p = table1();
    p.omega_ac = -8.01927321e8;
    p.phase_ac = 0.0;
    let layout = Layout::single_donor();
    let hbar = p.constants.hbar;
    let h0 = to_rotating_frame(&h_total(&p, 1, 0.0).unwrap(), p.omega_ac, 0.0, &layout, hbar);
    for t in [0.83e-9, 3.1e-9, 1.9e-8] {
        let ht = to_rotating_frame(&h_total(&p, 1, t).unwrap(), p.omega_ac, t, &layout, hbar);
        assert!(ht.max_abs_diff(&h0) < 1e-15);
    }
    // And it matches the segment-frame constructor.
    let seg = h_segment_frame(&p, 1).unwrap();
    assert!(seg.max_abs_diff(&h0) < 1e-15);
}

#[test]
fn frame_at_nuclear_precession_cancels_nuclear_diagonal() {
    // Pure Zeeman Hamiltonian: rotating at the nuclear precession frequency
    // zeroes the nuclear diagonal contribution.
    let mut p = table1();
    p.a1 = 0.0;
    p.a2 = 0.0;
    p.b_ac = 0.0;
    let layout = Layout::single_donor();
    let h = h_static(&p, 1).unwrap();
    let c = &p.constants;
    let omega_n = -2.0 * c.g_n * c.mu_n * p.b / c.hbar;
    let rot = to_rotating_frame(&h, omega_n, 0.0, &layout, c.hbar);
    // In the rotated frame the |↑0⟩ / |↑1⟩ gap (pure nuclear flip) is zero.
    let gap = (rot.matrix()[(0, 0)] - rot.matrix()[(1, 1)]).re;
    // Cancellation of two ~1e-4 meV terms leaves only rounding residue.
    assert!(gap.abs() < 1e-15);
}

#[test]
fn resonance_frequency_shifts_with_hyperfine() {
    // The addressed nuclear transition moves when A changes; the detuning
    // between the idle and Z-configuration values is the Z rotation rate.
    let p = table1();
    let f_idle = resonance_frequency(&p, 1).unwrap();
    let mut pz = p;
    pz.a1 = A_Z;
    let f_z = resonance_frequency(&pz, 1).unwrap();
    assert!(f_idle < 0.0);
    let delta = f_z - f_idle;
    assert_relative_eq!(delta, 1.84119533e8, max_relative = 1e-6);
}

#[test]
fn preset_serialization_uses_device_field_names() {
    let p = table1();
    let json = serde_json::to_string(&p).unwrap();
    for key in ["\"B\"", "\"B_ac\"", "\"A1\"", "\"A2\"", "\"J\"", "\"mu_B\""] {
        assert!(json.contains(key), "missing {key} in {json}");
    }
    let back: DeviceParams = serde_json::from_str(&json).unwrap();
    assert_eq!(back, p);

    assert!(DeviceParams::preset("no-such-preset").is_err());
    assert_eq!(p.b, B_STATIC);
    assert_eq!(p.a1, A_UNPERTURBED);
    assert_eq!(A_X, A_Z);
}

#[test]
fn validate_rejects_nonphysical_parameters() {
    let mut p = table1();
    p.b = 0.0;
    assert!(p.validate().is_err());
    let mut p = table1();
    p.j = -0.1;
    assert!(p.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lab_hamiltonian_is_hermitian_for_random_drives(
        omega in -1.0e9f64..1.0e9,
        phase in 0.0f64..6.283,
        t in 0.0f64..1.0e-6,
    ) {
        let mut p = table1();
        p.omega_ac = omega;
        p.phase_ac = phase;
        let h = h_total(&p, 2, t).unwrap();
        prop_assert!(h.is_hermitian(1e-15));
    }

    #[test]
    fn frame_transform_preserves_eigenvalues_at_fixed_time(
        omega in -1.0e9f64..1.0e9,
        t in 0.0f64..1.0e-7,
    ) {
        // U†HU is a similarity transform: eigenvalues shift only by the
        // diagonal -ħω/2 ΣZ term, which commutes with the static H here.
        let p = table1();
        let layout = Layout::single_donor();
        let h = h_static(&p, 1).unwrap();
        let rot = to_rotating_frame(&h, omega, t, &layout, p.constants.hbar);
        let z = total_z_operator(&layout);
        let undone = Operator(rot.matrix() + z.matrix().scale(0.5 * p.constants.hbar * omega));
        let mut a = h.hermitian_eigenvalues();
        let mut b = undone.hermitian_eigenvalues();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12 * x.abs().max(1e-6));
        }
    }
}
