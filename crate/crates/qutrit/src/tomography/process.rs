//! Process tomography, Pauli transfer matrices and fidelity metrics.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::noise::readout::ConfusionMatrix;
use crate::qudit::{weyl_pauli, CMatrix, CVector, PauliLabel, PureState, QuditOperator, C64, D};
use crate::tomography::state::{simulate_records, StateTomographer};

/// The nine single-qutrit inputs: basis states and the `+` and `-i`
/// superpositions of each level pair.
pub fn process_input_states() -> Vec<PureState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let one = C64::from(1.0);
    let pair = |a: usize, b: usize, phase: C64| {
        let mut v = CVector::zeros(D);
        v[a] = one * s;
        v[b] = phase * s;
        PureState::new(D, 1, v).expect("normalized")
    };
    let mut out: Vec<PureState> = (0..D).map(|j| PureState::basis(D, 1, j)).collect();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        out.push(pair(a, b, one));
        out.push(pair(a, b, C64::new(0.0, -1.0)));
    }
    out
}

/// Product inputs over `n` qutrits, site 0 most significant.
pub fn product_inputs(n: usize) -> Vec<CMatrix> {
    let single: Vec<CMatrix> = process_input_states().iter().map(|p| p.projector()).collect();
    let mut out = vec![CMatrix::identity(1, 1)];
    for _ in 0..n {
        out = out.iter().flat_map(|a| single.iter().map(move |b| a.kronecker(b))).collect();
    }
    out
}

/// Pauli transfer matrix `R_ij = (1/d) Tr[P_i† Λ(P_j)]` over the Weyl basis
/// in [`PauliLabel::all`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    n: usize,
    ptm: CMatrix,
}

/// Columns `vec(P_j)`, column-major vectorization.
fn pauli_basis(n: usize) -> CMatrix {
    let labels = PauliLabel::all(n);
    let dim = 3usize.pow(n as u32);
    let mut b = CMatrix::zeros(dim * dim, labels.len());
    for (j, l) in labels.iter().enumerate() {
        for (k, z) in weyl_pauli(l).matrix().iter().enumerate() {
            b[(k, j)] = *z;
        }
    }
    b
}

impl ProcessMatrix {
    pub fn from_ptm(n: usize, ptm: CMatrix) -> Result<Self> {
        let n2 = 9usize.pow(n as u32);
        if ptm.nrows() != n2 || ptm.ncols() != n2 {
            return Err(Error::Dimension(format!("PTM for {n} qutrits must be {n2}x{n2}")));
        }
        Ok(Self { n, ptm })
    }

    /// From the superoperator acting on column-major `vec(ρ)`.
    pub fn from_superoperator(n: usize, s: &CMatrix) -> Result<Self> {
        let b = pauli_basis(n);
        if s.nrows() != b.nrows() || s.ncols() != b.nrows() {
            return Err(Error::Dimension("superoperator size".into()));
        }
        let d = 3f64.powi(n as i32);
        Self::from_ptm(n, b.adjoint() * s * b / C64::from(d))
    }

    /// Conjugation map `ρ ↦ UρU†`.
    pub fn from_unitary(u: &QuditOperator) -> Result<Self> {
        if u.d() != D {
            return Err(Error::Dimension("qutrit operators only".into()));
        }
        let m = u.matrix();
        Self::from_superoperator(u.n(), &m.conjugate().kronecker(m))
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn ptm(&self) -> &CMatrix {
        &self.ptm
    }

    pub fn superoperator(&self) -> CMatrix {
        let b = pauli_basis(self.n);
        let d = 3f64.powi(self.n as i32);
        &b * &self.ptm * b.adjoint() / C64::from(d)
    }

    pub fn entry(&self, row: &PauliLabel, col: &PauliLabel) -> C64 {
        self.ptm[(row.index(), col.index())]
    }

    /// Deviation of the identity row from `e_I`; zero exactly for
    /// trace-preserving maps.
    pub fn trace_preservation_error(&self) -> f64 {
        (0..self.ptm.ncols())
            .map(|j| (self.ptm[(0, j)] - if j == 0 { C64::from(1.0) } else { C64::from(0.0) }).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation of the identity column from `e_I`; zero exactly for unital
    /// maps.
    pub fn unitality_error(&self) -> f64 {
        (0..self.ptm.nrows())
            .map(|i| (self.ptm[(i, 0)] - if i == 0 { C64::from(1.0) } else { C64::from(0.0) }).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let labels: Vec<String> = PauliLabel::all(self.n).iter().map(|l| l.to_string()).collect();
        json!({ "labels": labels, "ptm": matrix_json(&self.ptm) })
    }
}

/// Rows of `[re, im]` pairs.
pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

/// Statistics used for each output-state reconstruction.
#[derive(Clone, Debug)]
pub enum Statistics {
    Exact,
    Shots { shots: u64, seed: u64, confusions: Vec<ConfusionMatrix> },
}

/// Estimates the PTM of `channel` on `n` qutrits from the `9^n` product
/// inputs, reconstructing each output by state tomography.
pub fn process_tomography<F>(n: usize, mut channel: F, stats: &Statistics) -> Result<ProcessMatrix>
where
    F: FnMut(&CMatrix) -> Result<CMatrix>,
{
    let inputs = product_inputs(n);
    let n2 = inputs.len();
    let vec_of = |m: &CMatrix| CVector::from_column_slice(m.as_slice());
    let in_mat = CMatrix::from_columns(&inputs.iter().map(vec_of).collect::<Vec<_>>());
    let sv = in_mat.singular_values();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * sv.max()).count();
    if rank < n2 {
        return Err(Error::InvalidArgument(format!("input states span rank {rank} < {n2}")));
    }
    let tomo = StateTomographer::full(n);
    let mut outs = Vec::with_capacity(n2);
    for (k, rho) in inputs.iter().enumerate() {
        let out = channel(rho)?;
        let est = match stats {
            Statistics::Exact => tomo.reconstruct_exact(&out)?,
            Statistics::Shots { shots, seed, confusions } => {
                let base = (k * tomo.settings().len()) as u64;
                let recs = simulate_records(&out, tomo.settings(), confusions, *shots, *seed, base)?;
                tomo.reconstruct_records(&recs, confusions)?
            }
        };
        outs.push(vec_of(est.matrix()));
    }
    let out_mat = CMatrix::from_columns(&outs);
    let inv = in_mat.try_inverse().ok_or(Error::Singular { condition: sv.max() / sv.min() })?;
    ProcessMatrix::from_superoperator(n, &(out_mat * inv))
}

/// Columns restricted to non-identity single-site Paulis, rows to all
/// non-identity Paulis.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedPtm {
    pub rows: Vec<PauliLabel>,
    pub cols: Vec<PauliLabel>,
    pub block: CMatrix,
}

impl RestrictedPtm {
    /// Squared weight of column `j` on rows acting on two or more sites.
    pub fn multi_site_weight(&self, j: usize) -> f64 {
        self.rows.iter().enumerate().filter(|(_, l)| l.weight() > 1).map(|(i, _)| self.block[(i, j)].norm_sqr()).sum()
    }

    pub fn single_site_weight(&self, j: usize) -> f64 {
        self.rows.iter().enumerate().filter(|(_, l)| l.weight() == 1).map(|(i, _)| self.block[(i, j)].norm_sqr()).sum()
    }
}

/// Single-site columns ordered by site, then lexicographically in `(a, b)`.
pub fn ptm_restriction(p: &ProcessMatrix) -> RestrictedPtm {
    let all = PauliLabel::all(p.n);
    let rows: Vec<PauliLabel> = all.iter().filter(|l| !l.is_identity()).cloned().collect();
    let mut cols = Vec::new();
    for site in 0..p.n {
        for l in &all {
            if l.weight() == 1 && l.exps()[site] != (0, 0) {
                cols.push(l.clone());
            }
        }
    }
    let block = CMatrix::from_fn(rows.len(), cols.len(), |r, c| p.entry(&rows[r], &cols[c]));
    RestrictedPtm { rows, cols, block }
}

/// Entanglement fidelity `Tr(R_U† R_Λ)/d²` against `ρ ↦ UρU†`.
pub fn process_fidelity(p: &ProcessMatrix, u_ideal: &QuditOperator) -> Result<f64> {
    if u_ideal.d() != D || u_ideal.n() != p.n {
        return Err(Error::Dimension("ideal unitary does not match the process".into()));
    }
    let r_u = ProcessMatrix::from_unitary(u_ideal)?;
    let d2 = 9f64.powi(p.n as i32);
    Ok(r_u.ptm.iter().zip(p.ptm.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re / d2)
}

/// `(d F_e + 1)/(d + 1)`.
pub fn average_gate_fidelity(entanglement_fidelity: f64, d: usize) -> f64 {
    (d as f64 * entanglement_fidelity + 1.0) / (d as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::entangling::controlled_sum;

    fn conj_oracle(u: &CMatrix, n: usize) -> CMatrix {
        let labels = PauliLabel::all(n);
        let d = 3f64.powi(n as i32);
        CMatrix::from_fn(labels.len(), labels.len(), |i, j| {
            let pi = weyl_pauli(&labels[i]).into_matrix();
            let pj = weyl_pauli(&labels[j]).into_matrix();
            (pi.adjoint() * u * pj * u.adjoint()).trace() / d
        })
    }

    #[test]
    fn inputs_are_complete() {
        let ins = product_inputs(1);
        let m = CMatrix::from_columns(&ins.iter().map(|r| CVector::from_column_slice(r.as_slice())).collect::<Vec<_>>());
        assert_eq!(m.rank(1e-10), 9);
    }

    #[test]
    fn identity_channel() {
        let p = process_tomography(1, |r| Ok(r.clone()), &Statistics::Exact).unwrap();
        assert!((p.ptm() - CMatrix::identity(9, 9)).norm() < 1e-9);
        assert!(p.trace_preservation_error() < 1e-9);
    }

    #[test]
    fn csum_matches_conjugation_oracle() {
        let u = controlled_sum();
        let p = ProcessMatrix::from_unitary(&u).unwrap();
        assert!((p.ptm() - conj_oracle(u.matrix(), 2)).norm() < 1e-10);
        let r = ptm_restriction(&p);
        let fixed: Vec<String> = (0..r.cols.len()).filter(|&j| r.multi_site_weight(j) < 1e-12).map(|j| r.cols[j].to_string()).collect();
        assert_eq!(fixed, ["Z.I", "Z2.I", "I.X", "I.X2"]);
    }

    #[test]
    fn depolarizing_fidelity() {
        let p = ProcessMatrix::from_ptm(2, CMatrix::from_fn(81, 81, |r, c| C64::from(if r == 0 && c == 0 { 1.0 } else { 0.0 }))).unwrap();
        let f = process_fidelity(&p, &controlled_sum()).unwrap();
        assert!((f - 1.0 / 81.0).abs() < 1e-12);
        assert!((average_gate_fidelity(1.0, 9) - 1.0).abs() < 1e-15);
    }
}
