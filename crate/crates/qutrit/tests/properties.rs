mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use qutrit::noise::*;
use qutrit::qudit::*;
use qutrit::scrambling::*;
use qutrit::synthesis::*;
use qutrit::tomography::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn single_pauli(a: u8, b: u8) -> CMatrix {
    weyl_pauli(&PauliLabel::single(a, b)).into_matrix()
}

#[test]
fn weyl_commutation_is_exhaustive() {
    for n in 1..=2 {
        let labels = PauliLabel::all(n);
        for p in &labels {
            for q in &labels {
                let (pm, qm) = (weyl_pauli(p), weyl_pauli(q));
                let w = omega(3).powi(p.symplectic(q) as i32);
                assert!((&pm * &qm).approx_eq(&(&qm * &pm).scale(w), 1e-12), "{p} {q}");
            }
        }
    }
}

#[test]
fn two_qutrit_paulis_are_trace_orthogonal() {
    let labels = PauliLabel::all(2);
    for p in &labels {
        for q in &labels {
            let t = (weyl_pauli(p).matrix().adjoint() * weyl_pauli(q).matrix()).trace();
            let want = if p == q { 9.0 } else { 0.0 };
            assert!((t - C64::from(want)).norm() < 1e-12);
        }
    }
}

#[test]
fn csum_identities() {
    let h = qudit_hadamard(3);
    let id = QuditOperator::identity(3, 1);
    let cphi = controlled_phase();
    let csum = controlled_sum();
    assert!((&(&id.kron(&h.dagger()) * &cphi) * &id.kron(&h)).approx_eq(&csum, 1e-12));
    let minus = &(&id.kron(&h) * &cphi) * &id.kron(&h.dagger());
    assert!(minus.approx_eq(&csum.dagger(), 1e-12));
    // Conjugating on the first site swaps control and target.
    let swapped = &(&h.dagger().kron(&id) * &cphi) * &h.kron(&id);
    let swap = QuditOperator::from_fn(3, 2, |r, c| if r == 3 * (c % 3) + c / 3 { ONE } else { ZERO });
    assert!(swapped.approx_eq(&(&(&swap * &csum) * &swap), 1e-12));
}

#[test]
fn sensing_map_is_complete_on_two_qutrits() {
    assert_eq!(StateTomographer::full(2).settings().len(), 16);
    let partial: Vec<MeasurementSetting> = MeasurementSetting::all(2).into_iter().take(15).collect();
    assert!(StateTomographer::new(2, partial).is_err());
}

#[test]
fn tomography_error_shrinks_with_shots() {
    let t = StateTomographer::full(2);
    let mut r = rng(40);
    let rho = common::random_density(&mut r, 9);
    let ident = [ConfusionMatrix::identity(); 2];
    let medians: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&shots| {
            let mut errs: Vec<f64> = (0..20)
                .map(|seed| {
                    let recs = simulate_records(&rho, t.settings(), &ident, shots, seed, 0).unwrap();
                    let est = t.reconstruct_records(&recs, &ident).unwrap();
                    common::trace_distance(est.matrix(), &rho)
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            (errs[9] + errs[10]) / 2.0
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn otoc_is_bounded_for_haar_unitaries() {
    let mut r = rng(7);
    for _ in 0..200 {
        let v = average_otoc(&common::haar_operator(&mut r, 2)).unwrap();
        assert!((1.0 / 9.0 - 1e-10..=1.0 + 1e-10).contains(&v), "{v}");
    }
}

/// Teleported output from ideal gates: EPR pairs on (1,2) and (3,4),
/// `U ⊗ U*` on (0,1) and (3,2), projection of (1,2) onto the EPR state.
fn analytic_teleport(u: &CMatrix, psi: &CVector) -> (f64, CMatrix) {
    let epr = PureState::epr();
    let mut state = PureState::new(3, 1, psi.clone()).unwrap().kron(&epr).kron(&epr);
    let uop = QuditOperator::qutrits(u.clone()).unwrap();
    let w = &embed(&uop, &[0, 1], 5).unwrap() * &embed(&uop.conj(), &[3, 2], 5).unwrap();
    state = w.apply(&state).unwrap();
    let proj = embed(&QuditOperator::qutrits(epr.projector()).unwrap(), &[1, 2], 5).unwrap();
    let v = proj.matrix() * state.amplitudes();
    let rho = &v * v.adjoint();
    let p = rho.trace().re;
    let out = partial_trace_matrix(&rho, QuditIndexing::qutrits(5), &[4]) / C64::from(p);
    (p, out)
}

#[test]
fn noiseless_teleport_matches_analytic_channel() {
    let t = Teleporter::new(TeleportSetup::noiseless(ScramblerSpec::MaximallyScrambling)).unwrap();
    let mut r = rng(5);
    for k in 0..4 {
        let v = common::haar_unitary(&mut r, 3).column(0).into_owned();
        let psi = PureState::new(3, 1, v.clone()).unwrap();
        let got = t.run(&format!("haar{k}"), &psi, &Statistics::Exact, 0).unwrap();
        let (p, out) = analytic_teleport(scrambler_unitary().matrix(), &v);
        let f = (v.adjoint() * &out * &v)[(0, 0)].re;
        assert!((got.herald_prob - p).abs() < 1e-10);
        assert!((got.herald_prob - 1.0 / 9.0).abs() < 1e-10);
        assert!((got.fidelity - f).abs() < 1e-10);
        assert!((&got.rho_out - &out).norm() < 1e-10);
    }
}

fn arb_rotation() -> impl Strategy<Value = SubspaceRotation> {
    (0usize..2, 0usize..3, -2.0 * PI..2.0 * PI, -PI..PI).prop_map(|(s, a, angle, phase)| {
        let subspace = if s == 0 { Subspace::S01 } else { Subspace::S12 };
        let axis = [Axis::X, Axis::Y, Axis::Z][a];
        let r = SubspaceRotation::new(subspace, axis, angle);
        if axis == Axis::Z { r } else { r.with_phase(phase) }
    })
}

fn arb_local_op() -> impl Strategy<Value = LocalOp> {
    prop_oneof![
        4 => arb_rotation().prop_map(LocalOp::Rotation),
        1 => Just(LocalOp::Pi01),
        1 => Just(LocalOp::Pi12),
        1 => Just(LocalOp::Shift),
        1 => Just(LocalOp::ShiftInv),
    ]
}

fn coeff() -> impl Strategy<Value = f64> {
    prop_oneof![(-1500.0..-30.0f64), (30.0..1500.0f64)]
}

fn arb_coeffs() -> impl Strategy<Value = CrossKerrCoeffs> {
    (coeff(), coeff(), coeff(), coeff()).prop_map(|(a, b, c, d)| CrossKerrCoeffs::from_khz(a, b, c, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn embed_is_a_homomorphism(s1 in 0u64..1000, s2 in 0u64..1000, site in 0usize..3) {
        let a = QuditOperator::qutrits(common::haar_unitary(&mut rng(s1), 3)).unwrap();
        let b = QuditOperator::qutrits(common::haar_unitary(&mut rng(s2), 3)).unwrap();
        let lhs = embed(&(&a * &b), &[site], 3).unwrap();
        let rhs = &embed(&a, &[site], 3).unwrap() * &embed(&b, &[site], 3).unwrap();
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn fidelity_ignores_global_phase(seed in 0u64..1000, phase in -PI..PI) {
        let mut r = rng(seed);
        let rho = DensityState::new(3, 2, common::random_density(&mut r, 9)).unwrap();
        let v = common::haar_unitary(&mut r, 9).column(0).into_owned();
        let psi = PureState::new(3, 2, v.clone()).unwrap();
        let rotated = PureState::new(3, 2, v * C64::from_polar(1.0, phase)).unwrap();
        let f = state_fidelity(&rho, &psi).unwrap();
        prop_assert!((f - state_fidelity(&rho, &rotated).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rotations_are_unitary_and_local(r in arb_rotation()) {
        let u = rotation_unitary(&r);
        prop_assert!(u.is_unitary(1e-12));
        let (j, k) = r.subspace.levels();
        let spectator = 3 - j - k;
        for l in 0..3 {
            let want = if l == spectator { ONE } else { ZERO };
            prop_assert!((u.matrix()[(spectator, l)] - want).norm() < 1e-12);
            prop_assert!((u.matrix()[(l, spectator)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn virtual_z_matches_physical_z(ops in prop::collection::vec(arb_local_op(), 0..=20)) {
        let mut physical = QuditOperator::identity(3, 1);
        let mut emitted = QuditOperator::identity(3, 1);
        let mut frame = VirtualPhaseFrame::new(1);
        for op in &ops {
            physical = &op.unitary() * &physical;
            if let Some(e) = frame.push(0, op).unwrap() {
                emitted = &e.unitary() * &emitted;
            }
        }
        let virtual_total = &frame.diagonal(0) * &emitted;
        prop_assert!(virtual_total.eq_up_to_phase(&physical, 1e-10));
    }

    #[test]
    fn channels_are_valid(t in 0.0..200e-6f64, t1 in 5e-6..200e-6f64, ratio in 0.2..1.0f64, t2s in (1e-6..200e-6f64, 1e-6..200e-6f64, 1e-6..200e-6f64)) {
        let ad = amplitude_damping_channel(t, t1, t1 * ratio).unwrap();
        prop_assert!(ad.completeness_error() < 1e-10);
        prop_assert!(ad.choi_min_eigenvalue() > -1e-9);
        match dephasing_channel(t, t2s.0, t2s.1, t2s.2) {
            Ok(ch) => {
                prop_assert!(ch.completeness_error() < 1e-10);
                prop_assert!(ch.choi_min_eigenvalue() > -1e-9);
            }
            Err(e) => {
                let ok = matches!(e, qutrit::Error::NotCpRealizable { .. });
                prop_assert!(ok);
            }
        }
    }

    #[test]
    fn amplitude_damping_is_a_semigroup(a in 0.0..400e-6f64, b in 0.0..400e-6f64, t1 in 5e-6..200e-6f64, t21 in 5e-6..200e-6f64) {
        let ab = amplitude_damping_channel(a, t1, t21).unwrap().after(&amplitude_damping_channel(b, t1, t21).unwrap()).unwrap();
        let direct = amplitude_damping_channel(a + b, t1, t21).unwrap();
        prop_assert!((ab.choi() - direct.choi()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn channel_application_preserves_trace_and_hermiticity(seed in 0u64..1000, t in 0.0..50e-6f64, site in 0usize..2) {
        let rho = DensityState::new(3, 2, common::random_density(&mut rng(seed), 9)).unwrap();
        let model = DeviceConfig::paper().noise_model(1.0).unwrap().unwrap();
        let out = apply_channel(&model.channel(site, t * 1e9).unwrap(), &rho, &[site]).unwrap();
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        prop_assert!((out.matrix() - out.matrix().adjoint()).norm() < 1e-14);
    }

    #[test]
    fn readout_correction_inverts_expectation(p in prop::collection::vec(0.01..1.0f64, 9), f in prop::collection::vec(0.8..0.999f64, 6)) {
        let total: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / total).collect();
        let m = [ConfusionMatrix::from_fidelities([f[0], f[1], f[2]]), ConfusionMatrix::from_fidelities([f[3], f[4], f[5]])];
        let back = correct_frequencies(&measured_probabilities(&p, &m).unwrap(), &m).unwrap();
        for (x, y) in back.iter().zip(&p) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_projection_is_idempotent(seed in 0u64..1000, shift in 0.0..0.3f64) {
        let mut r = rng(seed);
        let m = common::random_density(&mut r, 9) - CMatrix::identity(9, 9) * C64::from(shift / 9.0);
        let p = project_psd(&m).unwrap();
        prop_assert!((p.trace().re - 1.0).abs() < 1e-12);
        prop_assert!((project_psd(&p).unwrap() - &p).norm() < 1e-10);
        prop_assert!(hermitian_eigenvalues(&p).iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn unitary_ptm_columns_have_unit_norm(seed in 0u64..1000) {
        let u = common::haar_operator(&mut rng(seed), 2);
        let p = ProcessMatrix::from_unitary(&u).unwrap();
        for j in 0..81 {
            prop_assert!((p.ptm().column(j).norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn otoc_is_pauli_frame_invariant(a in 0usize..81, b in 0usize..81) {
        let u = scrambler_unitary();
        let pa = weyl_pauli(&PauliLabel::from_index(2, a));
        let pb = weyl_pauli(&PauliLabel::from_index(2, b));
        let dressed = &(&pa * &u) * &pb;
        prop_assert!((average_otoc(&dressed).unwrap() - average_otoc(&u).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn otoc_bound_is_decreasing(f in 0.2501..0.999f64, df in 1e-4..0.1f64) {
        let g = (f + df).min(1.0);
        prop_assert!(otoc_bound_from_fidelity(g).unwrap() < otoc_bound_from_fidelity(f).unwrap());
    }

    #[test]
    fn idle_decoupling_has_product_unitary(c in arb_coeffs(), t in 10.0..2000.0f64) {
        let s = idle_decoupling_schedule(t);
        let u = s.unitary(&ChainCouplings::chain(&[c])).unwrap();
        prop_assert_eq!(operator_schmidt_rank(&u, &[0], 1e-8).unwrap(), 1);
    }

    #[test]
    fn herald_probability_is_one_ninth(seed in 0u64..1000) {
        let v = common::haar_unitary(&mut rng(seed), 3).column(0).into_owned();
        let (p, out) = analytic_teleport(scrambler_unitary().matrix(), &v);
        prop_assert!((p - 1.0 / 9.0).abs() < 1e-10);
        prop_assert!(((v.adjoint() * out * &v)[(0, 0)].re - 1.0).abs() < 1e-10);
    }
}

fn arb_item() -> impl Strategy<Value = ScheduleItem> {
    prop_oneof![
        (0.0..5000.0f64, any::<bool>()).prop_map(|(t, coupled)| ScheduleItem::Evolve {
            pairs: if coupled { vec![(0, 1), (1, 2)] } else { vec![] },
            duration_ns: t,
        }),
        (0usize..3, arb_local_op()).prop_map(|(site, op)| ScheduleItem::Pulse { site, op }),
        (0usize..2).prop_map(|c| ScheduleItem::ConditionalPi { control: c, target: c + 1 }),
        (0usize..3).prop_map(|k| ScheduleItem::Entangler {
            sites: (0, 2),
            kind: [EntanglerKind::CPhase, EntanglerKind::CPhaseInv, EntanglerKind::Identity][k],
        }),
    ]
}

proptest! {
    #[test]
    fn schedule_json_round_trips(items in prop::collection::vec(arb_item(), 0..30)) {
        let mut s = PulseSchedule::new(3);
        for it in items {
            s.push(it);
        }
        prop_assert_eq!(PulseSchedule::from_json(&s.to_json()).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn four_segment_round_trip(c in arb_coeffs(), target in prop::array::uniform4(-PI..PI)) {
        if let Ok(sol) = solve_four_segment(&c, target) {
            let u = sol.schedule().unitary(&ChainCouplings::chain(&[c])).unwrap();
            prop_assert!(diagonal_phase_residual(&u, target) < 1e-9);
            prop_assert!(sol.times_ns.iter().all(|&t| t >= 0.0));
        }
    }
}

#[test]
fn single_pauli_helper_matches_clock() {
    assert!((single_pauli(0, 1) - clock_z(3).into_matrix()).norm() < 1e-15);
}
