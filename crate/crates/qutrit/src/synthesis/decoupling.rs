//! Dynamical decoupling: parallel controlled-phase pairs, idling qutrits,
//! and simultaneous EPR preparation on a five-qutrit chain.

use crate::synthesis::entangling::{append_epr_prep, CPI_GATE_NS};
use crate::synthesis::rotation::{diagonal_phase_rotations, LocalOp, SubspaceRotation};
use crate::synthesis::schedule::{ChainCouplings, PulseSchedule};

/// Six-segment controlled-phase sequences on pairs `(0,1)` and `(2,3)` of a
/// four-qutrit line, run simultaneously with the middle coupling `(1,2)`
/// always on. With `reversed`, pair B swaps the order of its π12 and π01
/// pulses.
pub fn parallel_pair_schedule(t_ns: f64, reversed: bool) -> PulseSchedule {
    let pairs = [(0, 1), (1, 2), (2, 3)];
    let (first_b, second_b) = if reversed { (LocalOp::Pi12, LocalOp::Pi01) } else { (LocalOp::Pi01, LocalOp::Pi12) };
    let mut s = PulseSchedule::new(4);
    for _ in 0..3 {
        s.pulse(0, LocalOp::Pi01)
            .pulse(1, LocalOp::Pi01)
            .pulse(2, first_b)
            .pulse(3, first_b)
            .evolve(&pairs, t_ns)
            .pulse(0, LocalOp::Pi12)
            .pulse(1, LocalOp::Pi12)
            .pulse(2, second_b)
            .pulse(3, second_b)
            .evolve(&pairs, t_ns);
    }
    s
}

/// `Evolve(T/3)·X·Evolve(T/3)·X·Evolve(T/3)·X` on the pair `(0,1)`, with the
/// X gates on site 1. Site 1 visits every level for one third of the time,
/// so the coupling reduces to a phase on site 0.
pub fn idle_decoupling_schedule(t_ns: f64) -> PulseSchedule {
    let mut s = PulseSchedule::new(2);
    for _ in 0..3 {
        s.evolve(&[(0, 1)], t_ns / 3.0).pulse(1, LocalOp::Shift);
    }
    s
}

/// Phases `φ_i = (T/3)(α_i1 + α_i2)` picked up by site 0 in
/// [`idle_decoupling_schedule`], in radians.
pub fn idle_decoupling_phases(c: &crate::synthesis::schedule::CrossKerrCoeffs, t_ns: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| t_ns * 1e-9 / 3.0 * (c.alpha(i, 1) + c.alpha(i, 2)))
}

/// Control and target sites of the two EPR pairs on the five-qutrit chain.
pub const EPR_PAIR_A: (usize, usize) = (2, 1);
pub const EPR_PAIR_B: (usize, usize) = (3, 4);

/// EPR pairs on sites `(1,2)` and `(3,4)` of a five-qutrit chain.
///
/// Pair B is prepared first while sites 0..=2 are still in `|0⟩`. During
/// both conditional-π windows of pair A, site 3 receives an X gate every
/// third of the window, which turns its couplings to sites 2 and 4 into
/// single-qutrit phases; those are removed with z rotations.
pub fn dd_epr_prep_schedule(couplings: &ChainCouplings) -> PulseSchedule {
    simultaneous_epr_prep(couplings, true)
}

/// The same preparation without the X gates on site 3. Only the phase of the
/// pair-B coupling, which is diagonal on the EPR state, is corrected.
pub fn undecoupled_epr_prep_schedule(couplings: &ChainCouplings) -> PulseSchedule {
    simultaneous_epr_prep(couplings, false)
}

fn simultaneous_epr_prep(couplings: &ChainCouplings, decouple: bool) -> PulseSchedule {
    let (ca, ta) = EPR_PAIR_A;
    let (cb, tb) = EPR_PAIR_B;
    let mut s = PulseSchedule::new(5);
    append_epr_prep(&mut s, cb, tb, &[(0, 1), (1, 2), (2, 3)]);

    let theta = 2.0 * (1.0 / 3f64.sqrt()).acos();
    s.rotation(ca, SubspaceRotation::y01(theta));
    window_a(&mut s, couplings, decouple);
    s.rotation(ca, SubspaceRotation::y12(std::f64::consts::FRAC_PI_2))
        .pulse(ca, LocalOp::Pi12)
        .pulse(ta, LocalOp::ShiftInv);
    window_a(&mut s, couplings, decouple);
    s.pulse(ta, LocalOp::Shift).pulse(ta, LocalOp::Pi12);

    let c34 = couplings.get(cb, tb).unwrap_or_default();
    let t = 2.0 * CPI_GATE_NS * 1e-9;
    let phases = if decouple {
        [0, 1, 2].map(|z| -t / 3.0 * (0..3).map(|y| c34.alpha(y, z)).sum::<f64>())
    } else {
        [0, 1, 2].map(|j| -t * c34.alpha(j, j))
    };
    append_phases(&mut s, tb, phases);
    s
}

fn window_a(s: &mut PulseSchedule, couplings: &ChainCouplings, decouple: bool) {
    let (ca, ta) = EPR_PAIR_A;
    let pairs = [(0, 1), (2, 3), (3, 4)];
    let w = CPI_GATE_NS;
    if !decouple {
        s.evolve(&pairs, w / 2.0).cpi(ca, ta).evolve(&pairs, w / 2.0);
        return;
    }
    s.pulse(3, LocalOp::Shift)
        .evolve(&pairs, w / 3.0)
        .pulse(3, LocalOp::Shift)
        .evolve(&pairs, w / 6.0)
        .cpi(ca, ta)
        .evolve(&pairs, w / 6.0)
        .pulse(3, LocalOp::Shift)
        .evolve(&pairs, w / 3.0);
    let c23 = couplings.get(ca, 3).unwrap_or_default();
    let phases = [0, 1, 2].map(|x| -w * 1e-9 / 3.0 * (0..3).map(|y| c23.alpha(x, y)).sum::<f64>());
    append_phases(s, ca, phases);
}

fn append_phases(s: &mut PulseSchedule, site: usize, phases: [f64; 3]) {
    for r in diagonal_phase_rotations(phases) {
        s.rotation(site, r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{operator_schmidt_rank, PureState, C64};
    use crate::synthesis::entangling::{controlled_phase, local_diagonal_distance};
    use crate::synthesis::schedule::CrossKerrCoeffs;

    fn table() -> [CrossKerrCoeffs; 4] {
        [
            CrossKerrCoeffs::from_khz(-279.0, 160.0, -528.0, -743.0),
            CrossKerrCoeffs::from_khz(-138.0, 158.0, -335.0, -342.0),
            CrossKerrCoeffs::from_khz(-276.0, -631.0, 243.0, -748.0),
            CrossKerrCoeffs::from_khz(-262.0, -495.0, -528.0, -708.0),
        ]
    }

    #[test]
    fn idle_phases_match_formula() {
        let c = table()[1];
        let u = idle_decoupling_schedule(375.0).unitary(&ChainCouplings::chain(&[c])).unwrap();
        assert_eq!(operator_schmidt_rank(&u, &[0], 1e-8).unwrap(), 1);
        let phi = idle_decoupling_phases(&c, 375.0);
        for i in 0..3 {
            for j in 0..3 {
                let z = u.matrix()[(3 * i + j, 3 * i + j)];
                assert!((z - C64::from_polar(1.0, phi[i])).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn uncoupled_middle_factorizes() {
        let t = table();
        let mut cc = ChainCouplings::new();
        cc.insert(0, 1, t[0]);
        cc.insert(2, 3, t[2]);
        let u = parallel_pair_schedule(199.0, true).unitary(&cc).unwrap();
        assert_eq!(operator_schmidt_rank(&u, &[0, 1], 1e-8).unwrap(), 1);
        let a = crate::synthesis::six_segment_schedule(199.0).unitary(&ChainCouplings::chain(&[t[0]])).unwrap();
        assert!(local_diagonal_distance(&a, &controlled_phase()) < 0.01);
    }

    #[test]
    fn no_reversal_entangles_the_middle() {
        let u = parallel_pair_schedule(199.0, false).unitary(&ChainCouplings::chain(&table()[..3])).unwrap();
        assert!(operator_schmidt_rank(&u, &[0, 1], 1e-8).unwrap() > 1);
    }

    fn pair_fidelities(s: &PulseSchedule, cc: &ChainCouplings) -> (f64, f64) {
        let psi = s.apply_to_state(cc, &PureState::basis(3, 5, 0)).unwrap();
        let rho = psi.density();
        let epr = PureState::epr();
        let fa = crate::qudit::state_fidelity(&rho.partial_trace(&[1, 2]).unwrap(), &epr).unwrap();
        let fb = crate::qudit::state_fidelity(&rho.partial_trace(&[3, 4]).unwrap(), &epr).unwrap();
        (fa, fb)
    }

    #[test]
    fn simultaneous_epr_pairs() {
        let cc = ChainCouplings::chain(&table());
        let (fa, fb) = pair_fidelities(&dd_epr_prep_schedule(&cc), &cc);
        assert!(fa > 1.0 - 1e-10 && fb > 1.0 - 1e-10, "{fa} {fb}");
        let (ga, gb) = pair_fidelities(&undecoupled_epr_prep_schedule(&cc), &cc);
        assert!(ga < fa && gb < fb, "{ga} {gb}");
        let none = ChainCouplings::new();
        let (za, zb) = pair_fidelities(&dd_epr_prep_schedule(&none), &none);
        assert!(za > 1.0 - 1e-12 && zb > 1.0 - 1e-12);
    }
}
