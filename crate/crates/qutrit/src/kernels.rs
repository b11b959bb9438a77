//! In-place application of few-site operators to register vectors and
//! density matrices without forming the full embedded matrix.

use crate::qudit::{CMatrix, CVector, QuditIndexing, C64, ZERO};

/// Label offsets of every local basis state and the base labels of the
/// complementary sites.
pub(crate) struct SiteTable {
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl SiteTable {
    pub(crate) fn new(idx: QuditIndexing, sites: &[usize]) -> Self {
        let local = QuditIndexing::new(idx.d, sites.len());
        let offsets = (0..local.dim())
            .map(|l| sites.iter().enumerate().map(|(p, &s)| local.digit(l, p) * idx.stride(s)).sum())
            .collect();
        let bases = (0..idx.dim()).filter(|&label| sites.iter().all(|&s| idx.digit(label, s) == 0)).collect();
        Self { offsets, bases }
    }
}

fn apply_to_slice(data: &mut [C64], table: &SiteTable, op: &CMatrix, buf: &mut Vec<C64>) {
    let k = table.offsets.len();
    buf.resize(k, ZERO);
    for &b in &table.bases {
        for (l, &o) in table.offsets.iter().enumerate() {
            buf[l] = data[b + o];
        }
        for (r, &o) in table.offsets.iter().enumerate() {
            let mut acc = ZERO;
            for c in 0..k {
                acc += op[(r, c)] * buf[c];
            }
            data[b + o] = acc;
        }
    }
}

pub(crate) fn apply_vec(v: &mut CVector, idx: QuditIndexing, sites: &[usize], op: &CMatrix) {
    let table = SiteTable::new(idx, sites);
    let mut buf = Vec::new();
    apply_to_slice(v.as_mut_slice(), &table, op, &mut buf);
}

/// `m ← embed(op) · m`.
pub(crate) fn apply_left(m: &mut CMatrix, idx: QuditIndexing, table: &SiteTable, op: &CMatrix) {
    let dim = idx.dim();
    let mut buf = Vec::new();
    for col in m.as_mut_slice().chunks_mut(dim) {
        apply_to_slice(col, table, op, &mut buf);
    }
}

/// `ρ ← U ρ U†` with `U` acting on `sites`.
pub(crate) fn conjugate(rho: &mut CMatrix, idx: QuditIndexing, sites: &[usize], u: &CMatrix) {
    let table = SiteTable::new(idx, sites);
    apply_left(rho, idx, &table, u);
    let mut t = rho.adjoint();
    apply_left(&mut t, idx, &table, u);
    *rho = t.adjoint();
}

/// `ρ ← Σ_k K_k ρ K_k†` with the Kraus operators acting on `sites`.
pub(crate) fn kraus(rho: &CMatrix, idx: QuditIndexing, sites: &[usize], ops: &[CMatrix]) -> CMatrix {
    let table = SiteTable::new(idx, sites);
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for k in ops {
        let mut t = rho.clone();
        apply_left(&mut t, idx, &table, k);
        let mut t = t.adjoint();
        apply_left(&mut t, idx, &table, k);
        out += t.adjoint();
    }
    out
}

pub(crate) fn diag_vec(v: &mut CVector, phases: &[C64]) {
    for (x, p) in v.iter_mut().zip(phases) {
        *x *= p;
    }
}

/// `ρ ← D ρ D†` for diagonal `D`.
pub(crate) fn diag_conjugate(rho: &mut CMatrix, phases: &[C64]) {
    let dim = phases.len();
    for c in 0..dim {
        let pc = phases[c].conj();
        for r in 0..dim {
            rho[(r, c)] *= phases[r] * pc;
        }
    }
}


/// Nonzero entries `(out, in, value)` of the single-qutrit map
/// `B ↦ Σ_k K B K†` on row-major 3x3 blocks.
pub(crate) fn site_superoperator(ops: &[CMatrix]) -> Vec<(usize, usize, C64)> {
    let d = 3;
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v: C64 = ops.iter().map(|m| m[(i, k)] * m[(j, l)].conj()).sum();
                    if v.norm() > 0.0 {
                        out.push((i * d + j, k * d + l, v));
                    }
                }
            }
        }
    }
    out
}

/// Applies a [`site_superoperator`] to qutrit `site` of `rho` in place.
pub(crate) fn apply_site_superoperator(rho: &mut CMatrix, idx: QuditIndexing, site: usize, sop: &[(usize, usize, C64)]) {
    let table = SiteTable::new(idx, &[site]);
    let mut block = [ZERO; 9];
    let mut out = [ZERO; 9];
    for &bc in &table.bases {
        for &br in &table.bases {
            for (k, o) in table.offsets.iter().enumerate() {
                for (l, p) in table.offsets.iter().enumerate() {
                    block[k * 3 + l] = rho[(br + o, bc + p)];
                }
            }
            out.iter_mut().for_each(|z| *z = ZERO);
            for &(o, i, v) in sop {
                out[o] += v * block[i];
            }
            for (k, o) in table.offsets.iter().enumerate() {
                for (l, p) in table.offsets.iter().enumerate() {
                    rho[(br + o, bc + p)] = out[k * 3 + l];
                }
            }
        }
    }
}
