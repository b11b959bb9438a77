//! Entangling gates: conditional-π from the cross-resonance interaction and
//! controlled-phase from timed cross-Kerr evolution.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::qudit::{expm_hermitian, omega_pow, transition_generator, Axis, CMatrix, QuditOperator, C64, D, ONE, ZERO};
use crate::synthesis::rotation::{rotation_unitary, LocalOp, SubspaceRotation};
use crate::synthesis::schedule::{ChainCouplings, CrossKerrCoeffs, PulseSchedule};

/// Gate time of the calibrated conditional-π gate.
pub const CPI_GATE_NS: f64 = 125.0;

/// `|m,n⟩ → |m,n⟩` except the target's `|0⟩,|1⟩` are exchanged when the
/// control is `|1⟩`.
pub fn conditional_pi() -> QuditOperator {
    QuditOperator::from_fn(D, 2, |r, c| {
        let (cm, cn) = (c / D, c % D);
        let tn = if cm == 1 && cn < 2 { 1 - cn } else { cn };
        if r == cm * D + tn {
            ONE
        } else {
            ZERO
        }
    })
}

/// `diag(ω^{mn})`.
pub fn controlled_phase() -> QuditOperator {
    QuditOperator::from_fn(D, 2, |r, c| if r == c { omega_pow(3, ((r / D) * (r % D)) as i64) } else { ZERO })
}

/// `|m,n⟩ → |m,n+m⟩`.
pub fn controlled_sum() -> QuditOperator {
    QuditOperator::from_fn(D, 2, |r, c| {
        let (m, n) = (c / D, c % D);
        if r == m * D + (n + m) % D {
            ONE
        } else {
            ZERO
        }
    })
}

/// Rabi frequencies of the target's 01 transition for each control level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossResonanceParams {
    /// rad/s
    pub omega: [f64; 3],
    pub gate_time_s: f64,
}

impl CrossResonanceParams {
    pub fn new(omega: [f64; 3], gate_time_s: f64) -> Result<Self> {
        if !omega.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidArgument("Rabi frequencies must be finite".into()));
        }
        if !(gate_time_s > 0.0 && gate_time_s.is_finite()) {
            return Err(Error::InvalidArgument(format!("gate time {gate_time_s} s must be positive")));
        }
        Ok(Self { omega, gate_time_s })
    }

    /// `ω_0 = ω_2` with `t_g |ω_0 - ω_1| = π`.
    pub fn calibrated(omega0: f64, gate_time_s: f64) -> Result<Self> {
        Self::new([omega0, omega0 - PI / gate_time_s, omega0], gate_time_s)
    }

    /// Target drive that undoes the rotation seen with the control in `|0⟩`.
    pub fn compensating_drive(&self) -> SubspaceRotation {
        SubspaceRotation::x01(-self.omega[0] * self.gate_time_s)
    }
}

/// `exp(-i H t_g)` with `H = Σ_c (ω_c/2) |c⟩⟨c| ⊗ s_x^{01}`, followed by an
/// optional target rotation.
pub fn cross_resonance_unitary(p: &CrossResonanceParams, target_drive: Option<SubspaceRotation>) -> QuditOperator {
    let sx = transition_generator(0, 1, Axis::X);
    let mut h = CMatrix::zeros(9, 9);
    for c in 0..D {
        let mut proj = CMatrix::zeros(D, D);
        proj[(c, c)] = C64::from(p.omega[c] / 2.0);
        h += proj.kronecker(sx.matrix());
    }
    let u = QuditOperator::new(D, 2, expm_hermitian(&h, p.gate_time_s)).unwrap();
    match target_drive {
        Some(r) => &QuditOperator::identity(D, 1).kron(&rotation_unitary(&r)) * &u,
        None => u,
    }
}

/// Whether `a = b·Δ` for a diagonal unitary `Δ`.
pub fn equal_up_to_diagonal(a: &QuditOperator, b: &QuditOperator, tol: f64) -> bool {
    if a.indexing() != b.indexing() {
        return false;
    }
    let m = b.matrix().adjoint() * a.matrix();
    (0..m.nrows()).all(|r| {
        (0..m.ncols()).all(|c| if r == c { (m[(r, c)].norm() - 1.0).abs() <= tol } else { m[(r, c)].norm() <= tol })
    })
}

/// Two-qutrit EPR preparation from `|00⟩` using native rotations and two
/// conditional-π gates.
pub fn epr_prep_schedule() -> PulseSchedule {
    let mut s = PulseSchedule::new(2);
    append_epr_prep(&mut s, 0, 1, &[]);
    s
}

/// Appends the EPR preparation on `(control, target)`. Each conditional-π
/// sits at the midpoint of a gate window of free evolution under `pairs`.
pub fn append_epr_prep(s: &mut PulseSchedule, control: usize, target: usize, pairs: &[(usize, usize)]) {
    let theta = 2.0 * (1.0 / 3f64.sqrt()).acos();
    s.rotation(control, SubspaceRotation::y01(theta));
    append_cpi_window(s, control, target, pairs);
    s.rotation(control, SubspaceRotation::y12(PI / 2.0))
        .pulse(control, LocalOp::Pi12)
        .pulse(target, LocalOp::ShiftInv);
    append_cpi_window(s, control, target, pairs);
    s.pulse(target, LocalOp::Shift).pulse(target, LocalOp::Pi12);
}

pub(crate) fn append_cpi_window(s: &mut PulseSchedule, control: usize, target: usize, pairs: &[(usize, usize)]) {
    s.evolve(pairs, CPI_GATE_NS / 2.0).cpi(control, target).evolve(pairs, CPI_GATE_NS / 2.0);
}

/// Segment times of the four-segment controlled-phase construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourSegmentSolution {
    /// `T_A, T_B, T_C, T_D` in ns.
    pub times_ns: [f64; 4],
    /// 2π offsets applied to the targets of `|11⟩,|12⟩,|21⟩,|22⟩`.
    pub branch: [i32; 4],
}

impl FourSegmentSolution {
    pub fn total_ns(&self) -> f64 {
        self.times_ns.iter().sum()
    }

    /// `ZZ_A·π12_0·ZZ_B·π12_1·ZZ_C·π12_0·ZZ_D·π12_1`, rightmost first.
    pub fn schedule(&self) -> PulseSchedule {
        let [ta, tb, tc, td] = self.times_ns;
        let mut s = PulseSchedule::new(2);
        s.pulse(1, LocalOp::Pi12)
            .evolve(&[(0, 1)], td)
            .pulse(0, LocalOp::Pi12)
            .evolve(&[(0, 1)], tc)
            .pulse(1, LocalOp::Pi12)
            .evolve(&[(0, 1)], tb)
            .pulse(0, LocalOp::Pi12)
            .evolve(&[(0, 1)], ta);
        s
    }
}

/// Phase-rate matrix: row per state `|11⟩,|12⟩,|21⟩,|22⟩`, column per segment.
fn transfer_matrix(c: &CrossKerrCoeffs) -> Matrix4<f64> {
    let flip = |x: usize| 3 - x;
    let mut m = Matrix4::zeros();
    for (row, (i, j)) in [(1, 1), (1, 2), (2, 1), (2, 2)].into_iter().enumerate() {
        m[(row, 0)] = c.alpha(i, j);
        m[(row, 1)] = c.alpha(flip(i), j);
        m[(row, 2)] = c.alpha(flip(i), flip(j));
        m[(row, 3)] = c.alpha(i, flip(j));
    }
    m
}

/// Target phases of `diag(ω^{mn})` on `|11⟩,|12⟩,|21⟩,|22⟩`.
pub fn controlled_phase_targets() -> [f64; 4] {
    let t = 2.0 * PI / 3.0;
    [t, -t, -t, t]
}

/// Shortest nonnegative segment times realizing `target` phases (radians) on
/// `|11⟩,|12⟩,|21⟩,|22⟩`, searching 2π offsets in `-3..=3` per phase.
pub fn solve_four_segment(c: &CrossKerrCoeffs, target: [f64; 4]) -> Result<FourSegmentSolution> {
    if !c.is_finite() || !target.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coefficients or targets".into()));
    }
    let m = transfer_matrix(c);
    let sv = m.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smax == 0.0 || smin / smax < 1e-12 {
        return Err(Error::Singular { condition: if smin == 0.0 { f64::INFINITY } else { smax / smin } });
    }
    let inv = m.try_inverse().ok_or(Error::Singular { condition: smax / smin })?;
    let mut best: Option<FourSegmentSolution> = None;
    let tol = 1e-12;
    for code in 0..7usize.pow(4) {
        let branch = [0, 1, 2, 3].map(|k| ((code / 7usize.pow(3 - k)) % 7) as i32 - 3);
        let rhs = Vector4::from_fn(|r, _| target[r] + 2.0 * PI * branch[r] as f64);
        let t = inv * rhs;
        let times_s = [t[0], t[1], t[2], t[3]];
        let scale = times_s.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if times_s.iter().any(|&x| x < -tol * scale.max(1e-9)) {
            continue;
        }
        let times_ns = times_s.map(|x| x.max(0.0) * 1e9);
        let cand = FourSegmentSolution { times_ns, branch };
        if best.as_ref().is_none_or(|b| cand.total_ns() < b.total_ns() * (1.0 - 1e-12)) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::NoSolution("no nonnegative segment times in the searched 2π branches".into()))
}

/// Largest deviation, mod 2π, between the diagonal phases of `u` (relative
/// to `|00⟩`) and `target` on `|11⟩,|12⟩,|21⟩,|22⟩` with zero elsewhere.
/// Off-diagonal weight counts as a deviation of its magnitude.
pub fn diagonal_phase_residual(u: &QuditOperator, target: [f64; 4]) -> f64 {
    let m = u.matrix();
    let ref_phase = m[(0, 0)].arg();
    let mut worst: f64 = 0.0;
    for r in 0..9 {
        for c in 0..9 {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
        let want = match (r / 3, r % 3) {
            (1, 1) => target[0],
            (1, 2) => target[1],
            (2, 1) => target[2],
            (2, 2) => target[3],
            _ => 0.0,
        };
        let diff = C64::from_polar(1.0, m[(r, r)].arg() - ref_phase - want).arg().abs();
        worst = worst.max(diff).max((m[(r, r)].norm() - 1.0).abs());
    }
    worst
}

/// Three repetitions of `ZZ_T·(π12⊗π12)·ZZ_T·(π01⊗π01)`, rightmost first.
pub fn six_segment_schedule(t_ns: f64) -> PulseSchedule {
    let mut s = PulseSchedule::new(2);
    for _ in 0..3 {
        s.pulse(0, LocalOp::Pi01)
            .pulse(1, LocalOp::Pi01)
            .evolve(&[(0, 1)], t_ns)
            .pulse(0, LocalOp::Pi12)
            .pulse(1, LocalOp::Pi12)
            .evolve(&[(0, 1)], t_ns);
    }
    s
}

/// `min ‖U - e^{iγ}(A⊗B)V‖_F / √N` over diagonal single-qutrit unitaries
/// `A`, `B` and a global phase, for two-qutrit operators.
pub fn local_diagonal_distance(u: &QuditOperator, v: &QuditOperator) -> f64 {
    let w = u.matrix() * v.matrix().adjoint();
    let n = w.nrows() as f64;
    let diag: Vec<C64> = (0..9).map(|k| w[(k, k)]).collect();
    let score = |a: &[C64; 3], b: &[C64; 3]| -> f64 {
        (0..9).map(|k| (a[k / 3] * b[k % 3]).conj() * diag[k]).sum::<C64>().norm()
    };
    let mut best = 0.0f64;
    let starts: [[C64; 3]; 2] = [[ONE; 3], [0, 1, 2].map(|n| unit(diag[n]))];
    for start in starts {
        let mut b = start;
        let mut a = [ONE; 3];
        let mut last = -1.0;
        for _ in 0..200 {
            for (m, am) in a.iter_mut().enumerate() {
                *am = unit((0..3).map(|k| b[k].conj() * diag[m * 3 + k]).sum());
            }
            for (k, bk) in b.iter_mut().enumerate() {
                *bk = unit((0..3).map(|m| a[m].conj() * diag[m * 3 + k]).sum());
            }
            let s = score(&a, &b);
            if s - last < 1e-15 {
                break;
            }
            last = s;
        }
        best = best.max(score(&a, &b));
    }
    ((2.0 * n - 2.0 * best).max(0.0) / n).sqrt()
}

fn unit(z: C64) -> C64 {
    if z.norm() == 0.0 {
        ONE
    } else {
        z / z.norm()
    }
}

/// Six-segment distance to the controlled-phase gate at delay `t_ns`.
pub fn six_segment_distance(c: &CrossKerrCoeffs, t_ns: f64) -> f64 {
    let u = six_segment_schedule(t_ns).unitary(&ChainCouplings::chain(&[*c])).expect("valid schedule");
    local_diagonal_distance(&u, &controlled_phase())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelaySearch {
    pub t_ns: f64,
    pub distance: f64,
}

/// Grid search over `[0, 1000]` ns in 1 ns steps, then golden-section
/// refinement around the best grid point. Ties go to the smaller delay.
pub fn optimal_six_segment_delay(c: &CrossKerrCoeffs) -> DelaySearch {
    let mut best = DelaySearch { t_ns: 0.0, distance: f64::INFINITY };
    for k in 0..=1000 {
        let t = k as f64;
        let d = six_segment_distance(c, t);
        if d < best.distance {
            best = DelaySearch { t_ns: t, distance: d };
        }
    }
    let (mut lo, mut hi) = ((best.t_ns - 1.0).max(0.0), best.t_ns + 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| six_segment_distance(c, t);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let t = 0.5 * (lo + hi);
    let d = f(t);
    if d < best.distance {
        best = DelaySearch { t_ns: t, distance: d };
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{qudit_hadamard, PureState};

    fn q1q2() -> CrossKerrCoeffs {
        CrossKerrCoeffs::from_khz(-279.0, 160.0, -528.0, -743.0)
    }

    #[test]
    fn conditional_pi_action() {
        let u = conditional_pi();
        assert!(u.is_unitary(1e-15));
        assert_eq!(u.matrix()[(4, 3)], ONE);
        for j in 0..3 {
            assert_eq!(u.matrix()[(j, j)], ONE);
            assert_eq!(u.matrix()[(6 + j, 6 + j)], ONE);
        }
        assert!((&u * &u).approx_eq(&QuditOperator::identity(3, 2), 0.0));
    }

    #[test]
    fn hadamard_maps_cphase_to_csum() {
        let h = QuditOperator::identity(3, 1).kron(&qudit_hadamard(3));
        let got = &(&h.dagger() * &controlled_phase()) * &h;
        assert!(got.approx_eq(&controlled_sum(), 1e-14));
        let minus = &(&h * &controlled_phase()) * &h.dagger();
        assert!(minus.approx_eq(&controlled_sum().dagger(), 1e-14));
    }

    #[test]
    fn cross_resonance_gives_conditional_pi() {
        let tg = 125e-9;
        let bare = CrossResonanceParams::new([0.0, PI / tg, 0.0], tg).unwrap();
        assert!(equal_up_to_diagonal(&cross_resonance_unitary(&bare, None), &conditional_pi(), 1e-12));
        let op = CrossResonanceParams::calibrated(2.0 * PI * 11e6, tg).unwrap();
        assert!((op.omega[0] - op.omega[1]).abs() * tg - PI < 1e-12);
        let u = cross_resonance_unitary(&op, Some(op.compensating_drive()));
        assert!(equal_up_to_diagonal(&u, &conditional_pi(), 1e-12));
        assert!(!equal_up_to_diagonal(&cross_resonance_unitary(&op, None), &conditional_pi(), 1e-6));
    }

    #[test]
    fn cross_resonance_blocks() {
        let p = CrossResonanceParams::new([1.3e7, -4.1e6, 2.2e7], 90e-9).unwrap();
        let u = cross_resonance_unitary(&p, None);
        for c in 0..3 {
            let block = rotation_unitary(&SubspaceRotation::x01(p.omega[c] * p.gate_time_s));
            for r in 0..3 {
                for k in 0..3 {
                    assert!((u.matrix()[(3 * c + r, 3 * c + k)] - block.matrix()[(r, k)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn epr_schedule_prepares_and_unprepares() {
        let s = epr_prep_schedule();
        let none = ChainCouplings::new();
        let out = s.apply_to_state(&none, &PureState::basis(3, 2, 0)).unwrap();
        assert!((out.inner(&PureState::epr()).norm() - 1.0).abs() < 1e-12);
        let back = s.inverse().unwrap().apply_to_state(&none, &PureState::epr()).unwrap();
        assert!((back.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.total_duration_ns(), 2.0 * CPI_GATE_NS);
    }

    #[test]
    fn four_segment_paper_pair() {
        let sol = solve_four_segment(&q1q2(), controlled_phase_targets()).unwrap();
        assert!(sol.total_ns() > 500.0 && sol.total_ns() < 3000.0);
        assert!((sol.total_ns() - 1438.85).abs() < 0.5, "{}", sol.total_ns());
        let u = sol.schedule().unitary(&ChainCouplings::chain(&[q1q2()])).unwrap();
        assert!(diagonal_phase_residual(&u, controlled_phase_targets()) < 1e-9);
        assert!(local_diagonal_distance(&u, &controlled_phase()) < 1e-9);
    }

    #[test]
    fn four_segment_zero_and_failures() {
        let sol = solve_four_segment(&q1q2(), [0.0; 4]).unwrap();
        assert_eq!(sol.times_ns, [0.0; 4]);
        let flat = CrossKerrCoeffs::from_khz(100.0, 100.0, 100.0, 100.0);
        assert!(matches!(solve_four_segment(&flat, [0.1; 4]), Err(Error::Singular { .. })));
        let q4q5 = CrossKerrCoeffs::from_khz(-262.0, -495.0, -528.0, -708.0);
        assert!(matches!(solve_four_segment(&q4q5, controlled_phase_targets()), Err(Error::NoSolution(_))));
    }

    #[test]
    fn six_segment_properties() {
        let s = six_segment_schedule(150.0);
        assert_eq!(s.local_permutation(0), Some([0, 1, 2]));
        assert_eq!(s.local_permutation(1), Some([0, 1, 2]));
        let u0 = six_segment_schedule(0.0).unitary(&ChainCouplings::chain(&[q1q2()])).unwrap();
        assert!(u0.eq_up_to_phase(&QuditOperator::identity(3, 2), 1e-14));
        assert!(six_segment_distance(&q1q2(), 192.0) < 0.15);
    }

    #[test]
    fn local_distance_ignores_local_phases() {
        let a = QuditOperator::from_fn(3, 1, |r, c| if r == c { C64::from_polar(1.0, 0.3 * r as f64) } else { ZERO });
        let b = QuditOperator::from_fn(3, 1, |r, c| if r == c { C64::from_polar(1.0, -1.1 * r as f64 + 0.2) } else { ZERO });
        let v = controlled_phase();
        let u = (&a.kron(&b) * &v).scale(C64::from_polar(1.0, 0.7));
        assert!(local_diagonal_distance(&u, &v) < 1e-12);
        assert!(local_diagonal_distance(&QuditOperator::identity(3, 2), &v) > 0.5);
    }
}
