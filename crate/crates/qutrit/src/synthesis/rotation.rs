//! Native single-qutrit operations and virtual-Z frame bookkeeping.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::qudit::{qudit_hadamard, shift_x, transition_generator, Axis, CMatrix, QuditOperator, C64, D, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subspace {
    S01,
    S12,
}

impl Subspace {
    pub fn levels(self) -> (usize, usize) {
        match self {
            Subspace::S01 => (0, 1),
            Subspace::S12 => (1, 2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subspace::S01 => "01",
            Subspace::S12 => "12",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "01" => Some(Subspace::S01),
            "12" => Some(Subspace::S12),
            _ => None,
        }
    }
}

pub(crate) fn axis_str(a: Axis) -> &'static str {
    match a {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

pub(crate) fn parse_axis(s: &str) -> Option<Axis> {
    match s {
        "x" => Some(Axis::X),
        "y" => Some(Axis::Y),
        "z" => Some(Axis::Z),
        _ => None,
    }
}

/// `exp(-i θ/2 s)` in one two-level subspace. For x/y rotations `phase`
/// shifts the drive axis in the xy plane, as a virtual-Z frame does.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceRotation {
    pub subspace: Subspace,
    pub axis: Axis,
    pub angle: f64,
    pub phase: f64,
}

impl SubspaceRotation {
    pub fn new(subspace: Subspace, axis: Axis, angle: f64) -> Self {
        Self { subspace, axis, angle, phase: 0.0 }
    }
    pub fn x01(angle: f64) -> Self {
        Self::new(Subspace::S01, Axis::X, angle)
    }
    pub fn y01(angle: f64) -> Self {
        Self::new(Subspace::S01, Axis::Y, angle)
    }
    pub fn z01(angle: f64) -> Self {
        Self::new(Subspace::S01, Axis::Z, angle)
    }
    pub fn x12(angle: f64) -> Self {
        Self::new(Subspace::S12, Axis::X, angle)
    }
    pub fn y12(angle: f64) -> Self {
        Self::new(Subspace::S12, Axis::Y, angle)
    }
    pub fn z12(angle: f64) -> Self {
        Self::new(Subspace::S12, Axis::Z, angle)
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn inverse(self) -> Self {
        Self { angle: -self.angle, ..self }
    }

    /// Entrywise complex conjugate of the generated unitary.
    pub fn conj(self) -> Self {
        match self.axis {
            Axis::Z => Self { angle: -self.angle, ..self },
            Axis::X => Self { angle: -self.angle, phase: -self.phase, ..self },
            // s_y* = -s_y, so the conjugate has axis angle -(φ + π/2) = (-φ - π) + π/2.
            Axis::Y => Self { angle: -self.angle, phase: -self.phase - PI, ..self },
        }
    }
}

pub fn rotation_unitary(r: &SubspaceRotation) -> QuditOperator {
    let (j, k) = r.subspace.levels();
    let gen = match r.axis {
        Axis::Z => transition_generator(j, k, Axis::Z).into_matrix(),
        Axis::X | Axis::Y => {
            let base = if r.axis == Axis::Y { FRAC_PI_2 } else { 0.0 };
            let phi = base + r.phase;
            transition_generator(j, k, Axis::X).into_matrix() * C64::from(phi.cos())
                + transition_generator(j, k, Axis::Y).into_matrix() * C64::from(phi.sin())
        }
    };
    let mut proj = CMatrix::zeros(D, D);
    proj[(j, j)] = ONE;
    proj[(k, k)] = ONE;
    let (s, c) = (r.angle / 2.0).sin_cos();
    let m = CMatrix::identity(D, D) - &proj + proj * C64::from(c) - gen * (I * s);
    QuditOperator::new(D, 1, m).unwrap()
}

/// `exp(-i θ/2 s^{02}_axis)` from three native pulses: an inner 01 rotation
/// conjugated by π rotations in the 12 subspace.
///
/// Conjugation by `exp(-iπ/2 s_x^{12})` maps `s_y^{01}` to `s_x^{02}` and
/// `s_x^{01}` to `-s_y^{02}`, so the inner pulse axis is chosen accordingly.
pub fn compose_s02(theta: f64, axis: Axis) -> QuditOperator {
    let inner = match axis {
        Axis::X => SubspaceRotation::y01(theta),
        Axis::Y => SubspaceRotation::x01(-theta),
        Axis::Z => panic!("compose_s02 takes an x or y axis"),
    };
    three_pulse_s02(inner)
}

pub(crate) fn three_pulse_s02(inner: SubspaceRotation) -> QuditOperator {
    let outer = rotation_unitary(&SubspaceRotation::x12(PI));
    let back = rotation_unitary(&SubspaceRotation::x12(-PI));
    &(&outer * &rotation_unitary(&inner)) * &back
}

/// Instantaneous single-qutrit operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalOp {
    Rotation(SubspaceRotation),
    /// Exchange of `|0⟩` and `|1⟩`.
    Pi01,
    /// Exchange of `|1⟩` and `|2⟩`.
    Pi12,
    /// Cyclic shift `X`.
    Shift,
    ShiftInv,
    Hadamard,
    HadamardInv,
}

impl LocalOp {
    pub fn unitary(&self) -> QuditOperator {
        match self {
            LocalOp::Rotation(r) => rotation_unitary(r),
            LocalOp::Pi01 => permutation(&[1, 0, 2]),
            LocalOp::Pi12 => permutation(&[0, 2, 1]),
            LocalOp::Shift => shift_x(D),
            LocalOp::ShiftInv => shift_x(D).dagger(),
            LocalOp::Hadamard => qudit_hadamard(D),
            LocalOp::HadamardInv => qudit_hadamard(D).dagger(),
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            LocalOp::Rotation(r) => LocalOp::Rotation(r.inverse()),
            LocalOp::Shift => LocalOp::ShiftInv,
            LocalOp::ShiftInv => LocalOp::Shift,
            LocalOp::Hadamard => LocalOp::HadamardInv,
            LocalOp::HadamardInv => LocalOp::Hadamard,
            other => other,
        }
    }

    pub fn conj(&self) -> Self {
        match *self {
            LocalOp::Rotation(r) => LocalOp::Rotation(r.conj()),
            LocalOp::Hadamard => LocalOp::HadamardInv,
            LocalOp::HadamardInv => LocalOp::Hadamard,
            other => other,
        }
    }

    /// Level permutation for the permutation gates, `None` otherwise.
    pub fn level_map(&self) -> Option<[usize; 3]> {
        match self {
            LocalOp::Pi01 => Some([1, 0, 2]),
            LocalOp::Pi12 => Some([0, 2, 1]),
            LocalOp::Shift => Some([1, 2, 0]),
            LocalOp::ShiftInv => Some([2, 0, 1]),
            _ => None,
        }
    }

    pub(crate) fn gate_name(&self) -> Option<&'static str> {
        match self {
            LocalOp::Rotation(_) => None,
            LocalOp::Pi01 => Some("pi01"),
            LocalOp::Pi12 => Some("pi12"),
            LocalOp::Shift => Some("x"),
            LocalOp::ShiftInv => Some("x_inv"),
            LocalOp::Hadamard => Some("h"),
            LocalOp::HadamardInv => Some("h_inv"),
        }
    }

    pub(crate) fn from_gate_name(s: &str) -> Option<Self> {
        Some(match s {
            "pi01" => LocalOp::Pi01,
            "pi12" => LocalOp::Pi12,
            "x" => LocalOp::Shift,
            "x_inv" => LocalOp::ShiftInv,
            "h" => LocalOp::Hadamard,
            "h_inv" => LocalOp::HadamardInv,
            _ => return None,
        })
    }
}

/// Unitary sending `|j⟩` to `|map[j]⟩`.
pub fn permutation(map: &[usize; 3]) -> QuditOperator {
    QuditOperator::from_fn(D, 1, |r, c| if map[c] == r { ONE } else { ZERO })
}

/// Native z rotations realizing `diag(e^{iφ_0}, e^{iφ_1}, e^{iφ_2})` up to a
/// global phase.
pub fn diagonal_phase_rotations(phases: [f64; 3]) -> [SubspaceRotation; 2] {
    let a = phases[1] - phases[0];
    let b = phases[2] - phases[0];
    [SubspaceRotation::z01(2.0 * (a + b) / 3.0), SubspaceRotation::z12((4.0 * b - 2.0 * a) / 3.0)]
}

/// Per-qutrit software phase frame. The frame `diag(e^{iφ_0}, e^{iφ_1},
/// e^{iφ_2})` stands for a diagonal gate that has been commuted past every
/// later pulse; pulses are re-phased so the physical sequence followed by
/// the frame equals the original sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualPhaseFrame {
    phases: Vec<[f64; 3]>,
}

impl VirtualPhaseFrame {
    pub fn new(n: usize) -> Self {
        Self { phases: vec![[0.0; 3]; n] }
    }

    pub fn phases(&self, site: usize) -> [f64; 3] {
        self.phases[site]
    }

    pub fn n_sites(&self) -> usize {
        self.phases.len()
    }

    /// Records a z rotation on `site` without emitting a pulse.
    pub fn rotate_z(&mut self, site: usize, subspace: Subspace, angle: f64) {
        let (j, k) = subspace.levels();
        self.phases[site][j] -= angle / 2.0;
        self.phases[site][k] += angle / 2.0;
    }

    /// Folds the idle-state phase `e^{iφ}|2⟩` picked up while driving the 01
    /// transition into the frame, so that it is undone in software.
    pub fn correct_idle_phase(&mut self, site: usize, phi: f64) {
        self.phases[site][2] -= phi;
    }

    pub fn inverse(&self) -> Self {
        Self { phases: self.phases.iter().map(|p| [-p[0], -p[1], -p[2]]).collect() }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.phases.iter().all(|p| {
            let z = [0, 1, 2].map(|k| C64::from_polar(1.0, p[k] - p[0]));
            z.iter().all(|w| (w - ONE).norm() <= tol)
        })
    }

    /// Rewrites a pulse that acts after the frame so that it acts before it.
    pub fn rephase(&self, site: usize, op: &LocalOp) -> LocalOp {
        match op {
            LocalOp::Rotation(r) if r.axis != Axis::Z => {
                let (j, k) = r.subspace.levels();
                let p = self.phases[site];
                LocalOp::Rotation(SubspaceRotation { phase: r.phase + p[j] - p[k], ..*r })
            }
            other => *other,
        }
    }

    /// Moves `op`, applied after the frame, to before it. Z rotations are
    /// absorbed and return `None`; other rotations are re-phased and
    /// permutation gates carry the frame along. Hadamards do not preserve
    /// diagonal frames and are rejected.
    pub fn push(&mut self, site: usize, op: &LocalOp) -> Result<Option<LocalOp>> {
        match op {
            LocalOp::Rotation(r) if r.axis == Axis::Z => {
                self.rotate_z(site, r.subspace, r.angle);
                Ok(None)
            }
            LocalOp::Rotation(_) => Ok(Some(self.rephase(site, op))),
            LocalOp::Hadamard | LocalOp::HadamardInv => {
                Err(Error::InvalidArgument("a Hadamard cannot be moved through a phase frame".into()))
            }
            _ => {
                self.permute(site, op.level_map().expect("permutation gate"));
                Ok(Some(*op))
            }
        }
    }

    /// Pushes the frame through a permutation gate on `site`.
    fn permute(&mut self, site: usize, map: [usize; 3]) {
        let old = self.phases[site];
        let mut new = [0.0; 3];
        for j in 0..3 {
            new[map[j]] = old[j];
        }
        self.phases[site] = new;
    }

    pub fn diagonal(&self, site: usize) -> QuditOperator {
        let p = self.phases[site];
        QuditOperator::from_fn(D, 1, |r, c| if r == c { C64::from_polar(1.0, p[r]) } else { ZERO })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::gell_mann;

    fn direct(gen: &QuditOperator, theta: f64) -> QuditOperator {
        let m = (gen.matrix() * C64::new(0.0, -theta / 2.0)).exp();
        QuditOperator::new(D, 1, m).unwrap()
    }

    #[test]
    fn x01_pi_is_swap_times_minus_i() {
        let u = rotation_unitary(&SubspaceRotation::x01(PI));
        assert!((u.matrix()[(0, 1)] + I).norm() < 1e-15);
        assert!((u.matrix()[(1, 0)] + I).norm() < 1e-15);
        assert!((u.matrix()[(2, 2)] - ONE).norm() < 1e-15);
        assert!(u.matrix()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn full_turn_and_zero() {
        let u = rotation_unitary(&SubspaceRotation::x01(2.0 * PI));
        let expect = permutation(&[0, 1, 2]);
        let diag = QuditOperator::from_fn(3, 1, |r, c| {
            if r != c {
                ZERO
            } else if r < 2 {
                -ONE
            } else {
                ONE
            }
        });
        assert!(u.approx_eq(&diag, 1e-15));
        assert!(rotation_unitary(&SubspaceRotation::y12(0.0)).approx_eq(&expect, 0.0));
    }

    #[test]
    fn rotations_match_exponentials() {
        let cases = [
            (SubspaceRotation::x01(0.3), 1),
            (SubspaceRotation::y01(1.1), 2),
            (SubspaceRotation::z01(-0.8), 3),
            (SubspaceRotation::x12(2.2), 6),
            (SubspaceRotation::y12(-0.4), 7),
        ];
        for (r, k) in cases {
            let gen = gell_mann(k).unwrap();
            assert!(rotation_unitary(&r).approx_eq(&direct(&gen, r.angle), 1e-13));
        }
        let sz12 = transition_generator(1, 2, Axis::Z);
        assert!(rotation_unitary(&SubspaceRotation::z12(0.9)).approx_eq(&direct(&sz12, 0.9), 1e-13));
    }

    #[test]
    fn s02_construction() {
        for theta in [0.0, 0.4, PI / 2.0, PI, 2.5] {
            let x = compose_s02(theta, Axis::X);
            assert!(x.approx_eq(&direct(&gell_mann(4).unwrap(), theta), 1e-12));
            let y = compose_s02(theta, Axis::Y);
            assert!(y.approx_eq(&direct(&gell_mann(5).unwrap(), theta), 1e-12));
        }
        let swap = compose_s02(PI, Axis::X);
        assert!((swap.matrix()[(2, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((swap.matrix()[(0, 2)].norm() - 1.0).abs() < 1e-14);
        assert!((swap.matrix()[(1, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn printed_x_construction_generates_s_y() {
        let printed = three_pulse_s02(SubspaceRotation::x01(0.7));
        assert!(printed.approx_eq(&direct(&gell_mann(5).unwrap(), -0.7), 1e-12));
    }

    #[test]
    fn conj_matches_entrywise_conjugate() {
        for r in [
            SubspaceRotation::x01(0.3).with_phase(0.2),
            SubspaceRotation::y12(1.3).with_phase(-0.7),
            SubspaceRotation::z12(0.5),
        ] {
            let lhs = rotation_unitary(&r.conj());
            assert!(lhs.approx_eq(&rotation_unitary(&r).conj(), 1e-14));
        }
        assert!(LocalOp::Hadamard.conj().unitary().approx_eq(&qudit_hadamard(3).conj(), 1e-15));
    }

    #[test]
    fn diagonal_phase_rotations_reach_target() {
        let target = [0.3, -1.2, 2.0];
        let [a, b] = diagonal_phase_rotations(target);
        let u = &rotation_unitary(&b) * &rotation_unitary(&a);
        let want = QuditOperator::from_fn(3, 1, |r, c| if r == c { C64::from_polar(1.0, target[r]) } else { ZERO });
        assert!(u.eq_up_to_phase(&want, 1e-13));
    }

    #[test]
    fn frame_inverse_round_trip() {
        let mut f = VirtualPhaseFrame::new(1);
        f.rotate_z(0, Subspace::S01, 0.7);
        f.rotate_z(0, Subspace::S12, -1.9);
        f.correct_idle_phase(0, 0.3);
        let op = LocalOp::Rotation(SubspaceRotation::x12(0.4));
        let there = f.rephase(0, &op);
        let back = f.inverse().rephase(0, &there);
        assert_eq!(back, op);
        assert!(!f.is_identity(1e-12));
    }
}
