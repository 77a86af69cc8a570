//! Gate definitions, pulse schedules and their closed-system action.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use kane_sim::fidelity::fidelity;
use kane_sim::hamiltonian::{DeviceParams, A_X, B_AC};
use kane_sim::lindblad::DephasingRates;
use kane_sim::pulses::{
    apply_sequence, dressed_rabi, wrap_angle, x_rotation_sequence, z_detuning,
    z_rotation_sequence, Gate, GateSpec, PulseSegment, PulseSequence, SequencePropagator,
    SequenceUnitary,
};
use kane_sim::spin::{
    expectation, make_state, partial_trace, pauli, Axis, Layout, Operator, SpinLabel, C64,
};

fn table1() -> DeviceParams {
    DeviceParams::preset("table1").unwrap()
}

fn is_unitary(m: &DMatrix<C64>, tol: f64) -> bool {
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    (m.adjoint() * m - id).iter().all(|z| z.norm() < tol)
}

#[test]
fn gate_names_and_arities() {
    assert_eq!(Gate::parse("z").unwrap(), Gate::Z);
    assert_eq!(Gate::parse("cnot").unwrap(), Gate::Cnot);
    assert_eq!(Gate::parse("cz").unwrap(), Gate::Cz);
    assert_eq!(Gate::parse("controlled-z").unwrap(), Gate::Cz);
    assert!(Gate::parse("hadamard").is_err());

    assert_eq!(Gate::Z.n_donors(), 1);
    assert_eq!(Gate::Swap.n_donors(), 2);
    assert!(Gate::X.takes_theta());
    assert!(!Gate::Cnot.takes_theta());

    // Rotation gates need an angle; fixed gates refuse one.
    assert!(GateSpec::new(Gate::Z, None).is_err());
    assert!(GateSpec::new(Gate::Cnot, Some(1.0)).is_err());
    assert!(GateSpec::new(Gate::X, Some(PI)).is_ok());
}

#[test]
fn ideal_gate_matrices_are_unitary_involutions() {
    for gate in [Gate::Cnot, Gate::Swap, Gate::Cz] {
        let m = GateSpec::new(gate, None).unwrap().matrix();
        assert!(is_unitary(&m, 1e-15));
        let sq = &m * &m;
        let id = DMatrix::<C64>::identity(4, 4);
        assert!((sq - id).iter().all(|z| z.norm() < 1e-15));
    }
    // CNOT fixes |00⟩, |01⟩ and exchanges |10⟩, |11⟩.
    let cnot = GateSpec::new(Gate::Cnot, None).unwrap().matrix();
    assert_eq!(cnot[(0, 0)], C64::new(1.0, 0.0));
    assert_eq!(cnot[(3, 2)], C64::new(1.0, 0.0));
    assert_eq!(cnot[(2, 3)], C64::new(1.0, 0.0));
    // CZ flips only the |11⟩ sign.
    let cz = GateSpec::new(Gate::Cz, None).unwrap().matrix();
    assert_eq!(cz[(3, 3)], C64::new(-1.0, 0.0));
}

#[test]
fn rotation_matrices_compose_additively() {
    let a = GateSpec::new(Gate::Z, Some(0.7)).unwrap().matrix();
    let b = GateSpec::new(Gate::Z, Some(1.9)).unwrap().matrix();
    let ab = GateSpec::new(Gate::Z, Some(2.6)).unwrap().matrix();
    assert!((a * b - ab).iter().all(|z| z.norm() < 1e-14));

    // X(π) exchanges the basis states up to the global -i.
    let x = GateSpec::new(Gate::X, Some(PI)).unwrap().matrix();
    assert!((x[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-15);
    assert!(x[(0, 0)].norm() < 1e-15);
}

#[test]
fn wrap_angle_maps_into_standard_interval() {
    assert_relative_eq!(wrap_angle(-0.5), 2.0 * PI - 0.5, epsilon = 1e-12);
    assert_relative_eq!(wrap_angle(2.0 * PI + 0.25), 0.25, epsilon = 1e-12);
    assert_eq!(wrap_angle(0.0), 0.0);
}

#[test]
fn zero_angle_rotation_is_an_empty_schedule() {
    let params = table1();
    let seq = z_rotation_sequence(0.0, &params).unwrap();
    assert!(seq.segments.is_empty());
    assert_eq!(seq.total_duration(), 0.0);
    let rho = make_state("+", 1).unwrap();
    let out = apply_sequence(&rho, &seq, &params, &DephasingRates::zero()).unwrap();
    assert!(out.op().max_abs_diff(rho.op()) < 1e-12);
}

#[test]
fn z_pi_duration_and_action() {
    let params = table1();
    let seq = z_rotation_sequence(PI, &params).unwrap();
    // Duration is π over the hyperfine detuning rate: ~17 ns, on the
    // 0.02 µs scale of the reference schedule.
    let expected = PI / z_detuning(&params).unwrap();
    assert_relative_eq!(seq.total_duration(), expected, max_relative = 1e-12);
    assert!(seq.total_duration() > 1.2e-8 && seq.total_duration() < 2.5e-8);

    // Z(π) sends |+⟩ to |-⟩: the nuclear ⟨X⟩ flips sign.
    let layout = Layout::single_donor();
    let rho = make_state("+", 1).unwrap();
    let out = apply_sequence(&rho, &seq, &params, &DephasingRates::zero()).unwrap();
    let nuc = partial_trace(&out, SpinLabel::nucleus(1), &layout).unwrap();
    let x1 = pauli(
        Axis::X,
        SpinLabel::nucleus(1),
        &Layout::new(vec![SpinLabel::nucleus(1)]),
    )
    .unwrap();
    assert!(expectation(&x1, &nuc).unwrap() < -0.999);
}

#[test]
fn x_pi_duration_tracks_dressed_rabi() {
    let params = table1();
    let seq = x_rotation_sequence(PI, &params).unwrap();
    let rabi = dressed_rabi(&params, A_X, B_AC).unwrap();
    assert_relative_eq!(seq.total_duration(), PI / rabi, max_relative = 1e-2);

    // X(π) exchanges the nuclear populations.
    let rho = make_state("0", 1).unwrap();
    let out = apply_sequence(&rho, &seq, &params, &DephasingRates::zero()).unwrap();
    let target = make_state("1", 1).unwrap();
    assert!(fidelity(&out, &target).unwrap() > 1.0 - 1e-5);
}

#[test]
fn two_half_rotations_compose_into_one() {
    // X(π/2) applied twice equals X(π) within a small multiple of the
    // single-sequence systematic error.
    let params = table1();
    let half = x_rotation_sequence(0.5 * PI, &params).unwrap();
    let full = x_rotation_sequence(PI, &params).unwrap();
    let rates = DephasingRates::zero();
    for label in ["0", "+", "-"] {
        let rho = make_state(label, 1).unwrap();
        let once = apply_sequence(&rho, &half, &params, &rates).unwrap();
        let twice = apply_sequence(&once, &half, &params, &rates).unwrap();
        let direct = apply_sequence(&rho, &full, &params, &rates).unwrap();
        assert!(fidelity(&twice, &direct).unwrap() > 1.0 - 2e-5);
    }
}

#[test]
fn sequence_json_uses_schedule_field_names() {
    let params = table1();
    let seq = x_rotation_sequence(PI, &params).unwrap();
    let json = seq.to_json().unwrap();
    for key in [
        "\"gate\"",
        "\"preset\"",
        "\"frame_omega\"",
        "\"segments\"",
        "\"duration\"",
        "\"A1\"",
        "\"A2\"",
        "\"J\"",
        "\"B_ac_amplitude\"",
        "\"omega_ac\"",
        "\"phase_ac\"",
    ] {
        assert!(json.contains(key), "missing {key}");
    }
    let back = PulseSequence::from_json(&json).unwrap();
    assert_eq!(back.gate, seq.gate);
    assert_eq!(back.segments.len(), seq.segments.len());
    assert_eq!(back.total_duration(), seq.total_duration());
}

#[test]
fn sequence_save_and_load_roundtrip() {
    let params = table1();
    let seq = z_rotation_sequence(1.2, &params).unwrap();
    let dir = std::env::temp_dir().join("kane-sim-test-seq.json");
    seq.save(&dir).unwrap();
    let back = PulseSequence::load(&dir).unwrap();
    assert_eq!(back.total_duration(), seq.total_duration());
    std::fs::remove_file(&dir).ok();
}

#[test]
fn sequence_validation_rejects_bad_schedules() {
    let params = table1();
    let mut seq = z_rotation_sequence(PI, &params).unwrap();
    seq.segments[0].duration = -1.0;
    assert!(seq.validate().is_err());

    let mut seq = z_rotation_sequence(PI, &params).unwrap();
    seq.gate = "bogus".into();
    assert!(seq.gate_spec().is_err());
}

#[test]
fn segment_idle_has_device_defaults() {
    let seg = PulseSegment::idle(1.0e-6);
    assert_eq!(seg.duration, 1.0e-6);
    assert_eq!(seg.b_ac_amplitude, 0.0);
    assert_eq!(seg.j, 0.0);
    let p = seg.params(&table1());
    assert_eq!(p.a1, table1().a1);
    assert!(seg.validate().is_ok());
}

#[test]
fn closed_system_paths_agree() {
    // SequencePropagator at zero rates equals the SequenceUnitary action.
    let params = table1();
    let seq = x_rotation_sequence(0.5 * PI, &params).unwrap();
    let rho = make_state("0", 1).unwrap();
    let prop = SequencePropagator::new(&seq, &params, &DephasingRates::zero()).unwrap();
    let via_prop = prop.apply(&rho).unwrap();

    let uni = SequenceUnitary::new(&seq, &params).unwrap();
    let u = uni.matrix().unwrap();
    assert!(is_unitary(&u, 1e-9));
    let via_uni = &u * rho.matrix() * u.adjoint();
    assert!(via_prop.op().max_abs_diff(&Operator(via_uni)) < 1e-8);
    assert_relative_eq!(via_prop.purity(), 1.0, epsilon = 1e-9);
}

#[test]
fn bundled_two_donor_schedules_validate() {
    let params = table1();
    for gate in [Gate::Cnot, Gate::Swap, Gate::Cz] {
        let spec = GateSpec::new(gate, None).unwrap();
        let seq = kane_sim::sweep::bundled_sequence(&spec, &params).unwrap();
        assert_eq!(seq.gate, gate.name());
        seq.validate().unwrap();
        assert!(seq.total_duration() > 1.0e-5 && seq.total_duration() < 3.0e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wrap_angle_stays_in_range(theta in -100.0f64..100.0) {
        let w = wrap_angle(theta);
        prop_assert!((0.0..2.0 * PI).contains(&w));
        // Wrapping preserves the angle modulo 2π.
        prop_assert!(((w - theta) / (2.0 * PI)).rem_euclid(1.0) < 1e-9
            || ((w - theta) / (2.0 * PI)).rem_euclid(1.0) > 1.0 - 1e-9);
    }

    #[test]
    fn rotation_specs_are_unitary(theta in -10.0f64..10.0) {
        for gate in [Gate::Z, Gate::X] {
            let m = GateSpec::new(gate, Some(theta)).unwrap().matrix();
            prop_assert!(is_unitary(&m, 1e-13));
        }
    }
}
