//! The maximally scrambling two-qutrit Clifford, its Pauli conjugation
//! table, and averaged out-of-time-order correlators.
//!
//! The OTOC average runs over all 9 Paulis on each side, identity included.
//! For a Clifford `U`, each term is the character `ω^s` of the commutation
//! phase between `U†BU` and `D`, so the sum over `D` is 9 when `U†BU` acts
//! trivially on the second qutrit and 0 otherwise. A non-entangling `U` thus
//! gives 1, and `U_s`, which spreads every non-identity `B` onto both
//! qutrits, keeps only `B = I` and gives `9/81 = 1/9`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::qudit::{weyl_pauli, CMatrix, PauliLabel, PureState, QuditOperator, C64, D, ONE, ZERO};
use crate::synthesis::rotation::LocalOp;
use crate::synthesis::schedule::{EntanglerKind, PulseSchedule};
use crate::tomography::state::{mub_bases, BASIS_NAMES};

/// `U_s|m, n⟩ = |2m + n, m + n⟩` with indices mod 3.
pub fn scrambler_unitary() -> QuditOperator {
    let mut m = CMatrix::zeros(9, 9);
    for a in 0..3 {
        for b in 0..3 {
            m[(3 * ((2 * a + b) % 3) + (a + b) % 3, 3 * a + b)] = ONE;
        }
    }
    QuditOperator::qutrits(m).expect("9x9")
}

/// Entrywise conjugate in the computational basis.
pub fn conjugate_unitary(u: &QuditOperator) -> QuditOperator {
    u.conj()
}

/// Which two-qutrit operation the scrambling slot implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScramblerSpec {
    MaximallyScrambling,
    IdentityControl,
}

impl ScramblerSpec {
    pub fn as_str(self) -> &'static str {
        match self {
            ScramblerSpec::MaximallyScrambling => "maximally_scrambling",
            ScramblerSpec::IdentityControl => "identity_control",
        }
    }

    pub fn ideal_unitary(self) -> QuditOperator {
        match self {
            ScramblerSpec::MaximallyScrambling => scrambler_unitary(),
            ScramblerSpec::IdentityControl => QuditOperator::identity(D, 2),
        }
    }

    fn entangler(self) -> EntanglerKind {
        match self {
            ScramblerSpec::MaximallyScrambling => EntanglerKind::CPhase,
            ScramblerSpec::IdentityControl => EntanglerKind::Identity,
        }
    }
}

/// Two controlled-SUM gates, control and target swapped, each a
/// controlled-phase dressed by Hadamards. Each controlled-phase occupies a
/// six-segment window of `6·t_ns` with the ideal gate at its midpoint. The
/// identity control keeps every pulse and idle period.
pub fn scrambler_schedule(spec: ScramblerSpec, t_ns: f64) -> PulseSchedule {
    let kind = spec.entangler();
    let mut s = PulseSchedule::new(2);
    s.pulse(1, LocalOp::Hadamard)
        .evolve(&[], 3.0 * t_ns)
        .entangler(0, 1, kind)
        .evolve(&[], 3.0 * t_ns)
        .pulse(0, LocalOp::Hadamard)
        .pulse(1, LocalOp::HadamardInv)
        .evolve(&[], 3.0 * t_ns)
        .entangler(0, 1, kind)
        .evolve(&[], 3.0 * t_ns)
        .pulse(0, LocalOp::HadamardInv);
    s
}

/// Image `U P U† = phase · Q` of every Pauli label.
pub type CliffordTable = BTreeMap<PauliLabel, (PauliLabel, C64)>;

/// Conjugation table of `U`; errors on the first Pauli whose image is not a
/// single Pauli up to phase.
pub fn clifford_conjugation_table(u: &QuditOperator) -> Result<CliffordTable> {
    if u.d() != D || !u.is_unitary(1e-9) {
        return Err(Error::InvalidArgument("qutrit unitary required".into()));
    }
    let n = u.n();
    let dim = u.dim() as f64;
    let labels = PauliLabel::all(n);
    let paulis: Vec<CMatrix> = labels.iter().map(|l| weyl_pauli(l).into_matrix()).collect();
    let m = u.matrix();
    let mut table = CliffordTable::new();
    for (l, p) in labels.iter().zip(&paulis) {
        let image = m * p * m.adjoint();
        let (k, c) = paulis
            .iter()
            .enumerate()
            .map(|(k, q)| (k, (q.adjoint() * &image).trace() / dim))
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("non-empty basis");
        let residual = (&image - &paulis[k] * c).norm();
        if residual > 1e-9 {
            return Err(Error::NonClifford { label: l.to_string(), residual });
        }
        table.insert(l.clone(), (labels[k].clone(), c));
    }
    Ok(table)
}

/// `(1/81) Σ_{B,D} (1/9) Tr[U†B†U · D† · U†BU · D]`, with `B` on the first
/// qutrit and `D` on the second.
pub fn average_otoc(u: &QuditOperator) -> Result<f64> {
    if u.d() != D || u.n() != 2 {
        return Err(Error::Dimension("average OTOC is defined on two qutrits".into()));
    }
    let m = u.matrix();
    let singles = PauliLabel::all(1);
    let id = PauliLabel::identity(1);
    let mut total = ZERO;
    for b in &singles {
        let bm = weyl_pauli(&b.kron(&id)).into_matrix();
        let bt = m.adjoint() * &bm * m;
        let bt_dag = bt.adjoint();
        for d in &singles {
            let dm = weyl_pauli(&id.kron(d)).into_matrix();
            total += (&bt_dag * dm.adjoint() * &bt * &dm).trace() / 9.0;
        }
    }
    let avg = total / 81.0;
    debug_assert!(avg.im.abs() < 1e-10, "imaginary OTOC part {}", avg.im);
    Ok(avg.re)
}

/// `(4F − 1)^{-2}`, defined for `F > 1/4`.
pub fn otoc_bound_from_fidelity(f: f64) -> Result<f64> {
    if !(f > 0.25) || f > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("OTOC bound needs 1/4 < F ≤ 1, got {f}")));
    }
    Ok((4.0 * f - 1.0).powi(-2))
}

/// The 12 eigenstates of `Z`, `X`, `XZ`, `XZ²` with labels such as `XZ2_1`.
pub fn design_states() -> Vec<(String, PureState)> {
    let bases = mub_bases(D).expect("qutrit bases");
    let mut out = Vec::with_capacity(12);
    for (b, v) in bases.iter().enumerate() {
        for j in 0..D {
            let psi = PureState::new(D, 1, v.column(j).into_owned()).expect("normalized column");
            out.push((format!("{}_{j}", BASIS_NAMES[b]), psi));
        }
    }
    out
}

pub fn design_state_labels() -> Vec<String> {
    design_states().into_iter().map(|(l, _)| l).collect()
}
