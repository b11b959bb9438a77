//! Dense linear algebra on registers of qudits.
//!
//! Basis labels follow a big-endian convention: site 0 is the most
//! significant base-`d` digit, so `|m,n⟩` has label `m*d + n`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Qutrit local dimension.
pub const D: usize = 3;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Primitive root of unity `e^{2πi/d}`.
pub fn omega(d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI / d as f64)
}

pub(crate) fn omega_pow(d: usize, k: i64) -> C64 {
    let k = k.rem_euclid(d as i64);
    C64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuditIndexing {
    pub d: usize,
    pub n: usize,
}

impl QuditIndexing {
    pub fn new(d: usize, n: usize) -> Self {
        Self { d, n }
    }

    pub fn qutrits(n: usize) -> Self {
        Self { d: D, n }
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn stride(&self, site: usize) -> usize {
        self.d.pow((self.n - 1 - site) as u32)
    }

    pub fn digit(&self, label: usize, site: usize) -> usize {
        (label / self.stride(site)) % self.d
    }

    pub fn digits(&self, label: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        let mut rest = label;
        for site in (0..self.n).rev() {
            out[site] = rest % self.d;
            rest /= self.d;
        }
        out
    }

    pub fn label(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.d + x)
    }

    /// Base-`d` string of a label, e.g. `"012"`.
    pub fn label_string(&self, label: usize) -> String {
        self.digits(label)
            .iter()
            .map(|x| char::from_digit(*x as u32, 36).unwrap())
            .collect()
    }
}

fn check_sites(n: usize, sites: &[usize]) -> Result<()> {
    for (i, &s) in sites.iter().enumerate() {
        if s >= n {
            return Err(Error::InvalidArgument(format!("site {s} out of range for {n} sites")));
        }
        if sites[..i].contains(&s) {
            return Err(Error::InvalidArgument(format!("duplicate site {s}")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuditOperator {
    idx: QuditIndexing,
    mat: CMatrix,
}

impl QuditOperator {
    pub fn new(d: usize, n: usize, mat: CMatrix) -> Result<Self> {
        let idx = QuditIndexing::new(d, n);
        if mat.nrows() != idx.dim() || mat.ncols() != idx.dim() {
            return Err(Error::Dimension(format!(
                "expected {0}x{0} matrix, got {1}x{2}",
                idx.dim(),
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { idx, mat })
    }

    /// Wraps a square qutrit-register matrix, inferring the number of sites.
    pub fn qutrits(mat: CMatrix) -> Result<Self> {
        let mut n = 0;
        let mut dim = 1;
        while dim < mat.nrows() {
            dim *= D;
            n += 1;
        }
        Self::new(D, n, mat)
    }

    pub fn identity(d: usize, n: usize) -> Self {
        let idx = QuditIndexing::new(d, n);
        Self { idx, mat: CMatrix::identity(idx.dim(), idx.dim()) }
    }

    pub fn from_fn(d: usize, n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        let idx = QuditIndexing::new(d, n);
        Self { idx, mat: CMatrix::from_fn(idx.dim(), idx.dim(), f) }
    }

    pub fn indexing(&self) -> QuditIndexing {
        self.idx
    }
    pub fn d(&self) -> usize {
        self.idx.d
    }
    pub fn n(&self) -> usize {
        self.idx.n
    }
    pub fn dim(&self) -> usize {
        self.idx.dim()
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }
    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dagger(&self) -> Self {
        Self { idx: self.idx, mat: self.mat.adjoint() }
    }

    pub fn conj(&self) -> Self {
        Self { idx: self.idx, mat: self.mat.map(|z| z.conj()) }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { idx: self.idx, mat: &self.mat * c }
    }

    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.idx != rhs.idx {
            return Err(Error::Dimension("operator registers differ".into()));
        }
        Ok(Self { idx: self.idx, mat: &self.mat * &rhs.mat })
    }

    /// Tensor product with `self` on the leading sites.
    pub fn kron(&self, rhs: &Self) -> Self {
        assert_eq!(self.d(), rhs.d(), "local dimensions differ");
        Self {
            idx: QuditIndexing::new(self.d(), self.n() + rhs.n()),
            mat: self.mat.kronecker(&rhs.mat),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.d(), self.n());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.idx, other.idx);
        (&self.mat - &other.mat).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.idx == other.idx && self.max_abs_diff(other) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.mat.adjoint() * &self.mat;
        (p - CMatrix::identity(self.dim(), self.dim())).iter().all(|z| z.norm() <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.mat - self.mat.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    /// Frobenius distance after removing the relative global phase, fixed by
    /// the phase of `other`'s largest-magnitude entry.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        assert_eq!(self.idx, other.idx);
        let (k, _) = other
            .mat
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (k, z)| if z.norm() > best.1 { (k, z.norm()) } else { best });
        let a = self.mat.as_slice()[k];
        let b = other.mat.as_slice()[k];
        let phase = if a.norm() > 0.0 && b.norm() > 0.0 {
            let r = a / b;
            r / r.norm()
        } else {
            ONE
        };
        (&self.mat - &other.mat * phase).norm()
    }

    pub fn eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.idx == other.idx && self.distance_up_to_phase(other) <= tol
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        if self.idx != psi.idx {
            return Err(Error::Dimension("operator and state registers differ".into()));
        }
        PureState::normalized(self.d(), self.n(), &self.mat * &psi.amps)
    }
}

impl Mul for &QuditOperator {
    type Output = QuditOperator;

    /// Panics if the registers differ; use [`QuditOperator::compose`] for a
    /// checked product.
    fn mul(self, rhs: &QuditOperator) -> QuditOperator {
        self.compose(rhs).expect("operator product on mismatched registers")
    }
}

impl Mul for QuditOperator {
    type Output = QuditOperator;
    fn mul(self, rhs: QuditOperator) -> QuditOperator {
        &self * &rhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    idx: QuditIndexing,
    amps: CVector,
}

impl PureState {
    pub fn new(d: usize, n: usize, amps: CVector) -> Result<Self> {
        let idx = QuditIndexing::new(d, n);
        if amps.len() != idx.dim() {
            return Err(Error::Dimension(format!("expected {} amplitudes, got {}", idx.dim(), amps.len())));
        }
        if (amps.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("norm {} is not 1", amps.norm())));
        }
        Ok(Self { idx, amps })
    }

    pub fn normalized(d: usize, n: usize, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(d, n, amps / C64::from(norm))
    }

    pub fn basis(d: usize, n: usize, label: usize) -> Self {
        let idx = QuditIndexing::new(d, n);
        let mut amps = CVector::zeros(idx.dim());
        amps[label] = ONE;
        Self { idx, amps }
    }

    pub fn from_digits(d: usize, digits: &[usize]) -> Self {
        let idx = QuditIndexing::new(d, digits.len());
        Self::basis(d, digits.len(), idx.label(digits))
    }

    /// `(|00⟩ + |11⟩ + |22⟩)/√3`.
    pub fn epr() -> Self {
        let mut amps = CVector::zeros(9);
        for j in 0..D {
            amps[j * D + j] = C64::from(1.0 / 3f64.sqrt());
        }
        Self { idx: QuditIndexing::qutrits(2), amps }
    }

    pub fn indexing(&self) -> QuditIndexing {
        self.idx
    }
    pub fn n(&self) -> usize {
        self.idx.n
    }
    pub fn d(&self) -> usize {
        self.idx.d
    }
    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn kron(&self, other: &Self) -> Self {
        assert_eq!(self.d(), other.d());
        Self {
            idx: QuditIndexing::new(self.d(), self.n() + other.n()),
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn density(&self) -> DensityState {
        DensityState { idx: self.idx, mat: self.projector() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    idx: QuditIndexing,
    mat: CMatrix,
}

impl DensityState {
    pub fn new(d: usize, n: usize, mat: CMatrix) -> Result<Self> {
        let s = Self::unchecked(d, n, mat)?;
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn unchecked(d: usize, n: usize, mat: CMatrix) -> Result<Self> {
        let idx = QuditIndexing::new(d, n);
        if mat.nrows() != idx.dim() || mat.ncols() != idx.dim() {
            return Err(Error::Dimension(format!("expected {0}x{0} density matrix", idx.dim())));
        }
        Ok(Self { idx, mat })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.mat - self.mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.2e})")));
        }
        let tr = self.mat.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(&self.mat).iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn maximally_mixed(d: usize, n: usize) -> Self {
        let idx = QuditIndexing::new(d, n);
        let k = idx.dim();
        Self { idx, mat: CMatrix::identity(k, k) / C64::from(k as f64) }
    }

    pub fn indexing(&self) -> QuditIndexing {
        self.idx
    }
    pub fn n(&self) -> usize {
        self.idx.n
    }
    pub fn d(&self) -> usize {
        self.idx.d
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }
    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.idx.dim()).map(|k| self.mat[(k, k)].re).collect()
    }

    pub fn expectation(&self, op: &QuditOperator) -> C64 {
        (&self.mat * op.matrix()).trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn evolve(&self, u: &QuditOperator) -> Result<Self> {
        if u.indexing() != self.idx {
            return Err(Error::Dimension("operator and state registers differ".into()));
        }
        Ok(Self { idx: self.idx, mat: u.matrix() * &self.mat * u.matrix().adjoint() })
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        check_sites(self.n(), keep)?;
        let mat = partial_trace_matrix(&self.mat, self.idx, keep);
        Ok(Self { idx: QuditIndexing::new(self.d(), keep.len()), mat })
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.idx, other.idx);
        0.5 * hermitian_eigenvalues(&(&self.mat - &other.mat)).iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// Partial trace of an arbitrary (not necessarily normalized) operator.
pub fn partial_trace_matrix(mat: &CMatrix, idx: QuditIndexing, keep: &[usize]) -> CMatrix {
    let traced: Vec<usize> = (0..idx.n).filter(|s| !keep.contains(s)).collect();
    let kdim = idx.d.pow(keep.len() as u32);
    let tdim = idx.d.pow(traced.len() as u32);
    let kidx = QuditIndexing::new(idx.d, keep.len());
    let tidx = QuditIndexing::new(idx.d, traced.len());
    let full = |k: usize, t: usize| -> usize {
        let mut label = 0;
        for (pos, &s) in keep.iter().enumerate() {
            label += kidx.digit(k, pos) * idx.stride(s);
        }
        for (pos, &s) in traced.iter().enumerate() {
            label += tidx.digit(t, pos) * idx.stride(s);
        }
        label
    };
    let mut out = CMatrix::zeros(kdim, kdim);
    for t in 0..tdim {
        let rows: Vec<usize> = (0..kdim).map(|k| full(k, t)).collect();
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in rows.iter().enumerate() {
                out[(i, j)] += mat[(r, c)];
            }
        }
    }
    out
}

pub fn hermitian_eigenvalues(mat: &CMatrix) -> Vec<f64> {
    let h = (mat + mat.adjoint()) * C64::from(0.5);
    h.symmetric_eigenvalues().iter().cloned().collect()
}

/// `exp(-i H t)` for Hermitian `H`, by eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let herm = (h + h.adjoint()) * C64::from(0.5);
    let eig = herm.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)),
    ));
    v * phases * v.adjoint()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliLabel {
    exps: Vec<(u8, u8)>,
}

impl PauliLabel {
    pub fn new(exps: Vec<(u8, u8)>) -> Self {
        Self { exps: exps.into_iter().map(|(a, b)| (a % 3, b % 3)).collect() }
    }

    pub fn single(a: u8, b: u8) -> Self {
        Self::new(vec![(a, b)])
    }

    pub fn identity(n: usize) -> Self {
        Self { exps: vec![(0, 0); n] }
    }

    pub fn n_sites(&self) -> usize {
        self.exps.len()
    }

    pub fn exps(&self) -> &[(u8, u8)] {
        &self.exps
    }

    pub fn is_identity(&self) -> bool {
        self.exps.iter().all(|&e| e == (0, 0))
    }

    /// Number of sites carrying a non-identity factor.
    pub fn weight(&self) -> usize {
        self.exps.iter().filter(|&&e| e != (0, 0)).count()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        exps.extend_from_slice(&other.exps);
        Self { exps }
    }

    /// Lexicographic index in the `(a, b)` exponents, site 0 most significant.
    pub fn index(&self) -> usize {
        self.exps.iter().fold(0, |acc, &(a, b)| acc * 9 + 3 * a as usize + b as usize)
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        let mut exps = vec![(0, 0); n];
        let mut rest = index;
        for site in (0..n).rev() {
            let p = rest % 9;
            exps[site] = ((p / 3) as u8, (p % 3) as u8);
            rest /= 9;
        }
        Self { exps }
    }

    pub fn all(n: usize) -> Vec<Self> {
        (0..9usize.pow(n as u32)).map(|k| Self::from_index(n, k)).collect()
    }

    /// Exponent `s` in `P Q = ω^s Q P`.
    pub fn symplectic(&self, other: &Self) -> u8 {
        assert_eq!(self.n_sites(), other.n_sites());
        let s: i64 = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(&(a, b), &(c, e))| b as i64 * c as i64 - a as i64 * e as i64)
            .sum();
        s.rem_euclid(3) as u8
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .exps
            .iter()
            .map(|&(a, b)| {
                let mut s = String::new();
                match a {
                    1 => s.push('X'),
                    2 => s.push_str("X2"),
                    _ => {}
                }
                match b {
                    1 => s.push('Z'),
                    2 => s.push_str("Z2"),
                    _ => {}
                }
                if s.is_empty() {
                    s.push('I');
                }
                s
            })
            .collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Cyclic shift `X|j⟩ = |j+1 mod d⟩`.
pub fn shift_x(d: usize) -> QuditOperator {
    QuditOperator::from_fn(d, 1, |i, j| if i == (j + 1) % d { ONE } else { ZERO })
}

/// Clock `Z|j⟩ = ω^j |j⟩`.
pub fn clock_z(d: usize) -> QuditOperator {
    QuditOperator::from_fn(d, 1, |i, j| if i == j { omega_pow(d, i as i64) } else { ZERO })
}

/// `X^a Z^b` on each site, tensored in site order.
pub fn weyl_pauli(label: &PauliLabel) -> QuditOperator {
    let x = shift_x(D);
    let z = clock_z(D);
    let mut out = QuditOperator::identity(D, 0);
    for &(a, b) in label.exps() {
        out = out.kron(&(&x.pow(a as u32) * &z.pow(b as u32)));
    }
    out
}

/// `H = (1/√d) Σ ω^{ij} |i⟩⟨j|`.
pub fn qudit_hadamard(d: usize) -> QuditOperator {
    let s = 1.0 / (d as f64).sqrt();
    QuditOperator::from_fn(d, 1, |i, j| omega_pow(d, (i * j) as i64) * s)
}

/// Transition generator between levels `j < k` of a qutrit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `s_x = |j⟩⟨k| + |k⟩⟨j|`, `s_y = -i|j⟩⟨k| + i|k⟩⟨j|`, `s_z = |j⟩⟨j| - |k⟩⟨k|`.
pub fn transition_generator(j: usize, k: usize, axis: Axis) -> QuditOperator {
    let mut m = CMatrix::zeros(D, D);
    match axis {
        Axis::X => {
            m[(j, k)] = ONE;
            m[(k, j)] = ONE;
        }
        Axis::Y => {
            m[(j, k)] = -I;
            m[(k, j)] = I;
        }
        Axis::Z => {
            m[(j, j)] = ONE;
            m[(k, k)] = -ONE;
        }
    }
    QuditOperator::new(D, 1, m).unwrap()
}

/// Gell-Mann matrix `λ_k`, `k` in `1..=8`.
pub fn gell_mann(k: usize) -> Result<QuditOperator> {
    Ok(match k {
        1 => transition_generator(0, 1, Axis::X),
        2 => transition_generator(0, 1, Axis::Y),
        3 => transition_generator(0, 1, Axis::Z),
        4 => transition_generator(0, 2, Axis::X),
        5 => transition_generator(0, 2, Axis::Y),
        6 => transition_generator(1, 2, Axis::X),
        7 => transition_generator(1, 2, Axis::Y),
        8 => {
            let s = 1.0 / 3f64.sqrt();
            let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
                C64::from(s),
                C64::from(s),
                C64::from(-2.0 * s),
            ]));
            QuditOperator::new(D, 1, m).unwrap()
        }
        _ => return Err(Error::InvalidArgument(format!("Gell-Mann index {k} not in 1..=8"))),
    })
}

/// Acts as `op` on `sites` (in the given order) and as identity elsewhere.
pub fn embed(op: &QuditOperator, sites: &[usize], n: usize) -> Result<QuditOperator> {
    if op.n() != sites.len() {
        return Err(Error::Dimension(format!(
            "operator on {} sites embedded on {} sites",
            op.n(),
            sites.len()
        )));
    }
    check_sites(n, sites)?;
    let d = op.d();
    let full = QuditIndexing::new(d, n);
    let local = op.indexing();
    let local_of = |label: usize| -> usize {
        sites.iter().fold(0, |acc, &s| acc * d + full.digit(label, s))
    };
    let base_of = |label: usize| -> usize {
        label - sites.iter().map(|&s| full.digit(label, s) * full.stride(s)).sum::<usize>()
    };
    let mut mat = CMatrix::zeros(full.dim(), full.dim());
    for col in 0..full.dim() {
        let base = base_of(col);
        let lc = local_of(col);
        for lr in 0..local.dim() {
            let v = op.matrix()[(lr, lc)];
            if v == ZERO {
                continue;
            }
            let digits = local.digits(lr);
            let row = base + sites.iter().zip(&digits).map(|(&s, &x)| x * full.stride(s)).sum::<usize>();
            mat[(row, col)] = v;
        }
    }
    QuditOperator::new(d, n, mat)
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn state_fidelity(rho: &DensityState, psi: &PureState) -> Result<f64> {
    if rho.indexing() != psi.indexing() {
        return Err(Error::Dimension("state registers differ".into()));
    }
    let a = psi.amplitudes();
    let f = a.dotc(&(rho.matrix() * a)).re;
    Ok(f.clamp(0.0, 1.0))
}

/// Singular values of the operator reshuffled across the bipartition
/// `part_a | rest`, normalized by the Frobenius norm.
pub fn operator_schmidt_coefficients(op: &QuditOperator, part_a: &[usize]) -> Result<Vec<f64>> {
    let n = op.n();
    check_sites(n, part_a)?;
    if part_a.is_empty() || part_a.len() == n {
        return Err(Error::InvalidArgument("cut must leave both parts non-empty".into()));
    }
    let part_b: Vec<usize> = (0..n).filter(|s| !part_a.contains(s)).collect();
    let idx = op.indexing();
    let d = op.d();
    let da = d.pow(part_a.len() as u32);
    let db = d.pow(part_b.len() as u32);
    let ia = QuditIndexing::new(d, part_a.len());
    let ib = QuditIndexing::new(d, part_b.len());
    let join = |a: usize, b: usize| -> usize {
        let mut label = 0;
        for (pos, &s) in part_a.iter().enumerate() {
            label += ia.digit(a, pos) * idx.stride(s);
        }
        for (pos, &s) in part_b.iter().enumerate() {
            label += ib.digit(b, pos) * idx.stride(s);
        }
        label
    };
    let mut r = CMatrix::zeros(da * da, db * db);
    for ra in 0..da {
        for ca in 0..da {
            for rb in 0..db {
                for cb in 0..db {
                    r[(ra * da + ca, rb * db + cb)] = op.matrix()[(join(ra, rb), join(ca, cb))];
                }
            }
        }
    }
    let norm = op.matrix().norm();
    if norm == 0.0 {
        return Ok(vec![]);
    }
    let mut sv: Vec<f64> = r.singular_values().iter().map(|s| s / norm).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

pub fn operator_schmidt_rank(op: &QuditOperator, part_a: &[usize], tol: f64) -> Result<usize> {
    Ok(operator_schmidt_coefficients(op, part_a)?.into_iter().filter(|&s| s > tol).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap2() -> QuditOperator {
        QuditOperator::from_fn(D, 2, |r, c| if r == (c % 3) * 3 + c / 3 { ONE } else { ZERO })
    }

    fn cphase() -> QuditOperator {
        QuditOperator::from_fn(D, 2, |r, c| if r == c { omega_pow(3, ((r / 3) * (r % 3)) as i64) } else { ZERO })
    }

    #[test]
    fn gell_mann_first_matrix() {
        let g = gell_mann(1).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let expect = if (r, c) == (0, 1) || (r, c) == (1, 0) { ONE } else { ZERO };
                assert_eq!(g.matrix()[(r, c)], expect);
            }
        }
        assert!(gell_mann(0).is_err());
        assert!(gell_mann(9).is_err());
    }

    #[test]
    fn gell_mann_orthogonality() {
        for j in 1..=8 {
            let gj = gell_mann(j).unwrap();
            assert!(gj.trace().norm() < 1e-14);
            assert!(gj.is_hermitian(0.0));
            for k in 1..=8 {
                let gk = gell_mann(k).unwrap();
                let t = (&gj * &gk).trace();
                let expect = if j == k { 2.0 } else { 0.0 };
                assert!((t - C64::from(expect)).norm() < 1e-14, "({j},{k}) -> {t}");
            }
        }
    }

    #[test]
    fn shift_and_commutation() {
        let x = weyl_pauli(&PauliLabel::single(1, 0));
        for j in 0..3 {
            assert_eq!(x.matrix()[((j + 1) % 3, j)], ONE);
        }
        assert!(weyl_pauli(&PauliLabel::identity(2)).approx_eq(&QuditOperator::identity(3, 2), 0.0));
        let z = clock_z(3);
        let lhs = &z * &x;
        let rhs = (&x * &z).scale(omega(3));
        assert!(lhs.approx_eq(&rhs, 1e-15));
    }

    #[test]
    fn hadamard_conjugations() {
        let h = qudit_hadamard(3);
        let x = shift_x(3);
        let z = clock_z(3);
        assert!(h.is_unitary(1e-14));
        // H†ZH = X and HXH† = Z exactly; H†XH is Z², not Z.
        assert!((&(&h.dagger() * &z) * &h).approx_eq(&x, 1e-14));
        assert!((&(&h * &x) * &h.dagger()).approx_eq(&z, 1e-14));
        assert!((&(&h.dagger() * &x) * &h).approx_eq(&z.pow(2), 1e-14));
        assert!(h.pow(4).approx_eq(&QuditOperator::identity(3, 1), 1e-14));
        let h2 = qudit_hadamard(2);
        let s = 1.0 / 2f64.sqrt();
        assert!((h2.matrix()[(1, 1)] - C64::from(-s)).norm() < 1e-15);
    }

    #[test]
    fn embed_conventions() {
        let x = shift_x(3);
        let psi = PureState::basis(3, 2, 0);
        let a = embed(&x, &[0], 2).unwrap().apply(&psi).unwrap();
        assert_eq!(a.amplitudes()[3], ONE);
        let b = embed(&x, &[1], 2).unwrap().apply(&psi).unwrap();
        assert_eq!(b.amplitudes()[1], ONE);
        let h = qudit_hadamard(3);
        let prod = &embed(&h, &[0], 2).unwrap() * &embed(&x, &[1], 2).unwrap();
        assert!(prod.approx_eq(&h.kron(&x), 1e-15));
        assert!(embed(&x, &[1, 1], 2).is_err());
        assert!(embed(&x, &[0, 1], 2).is_err());
    }

    #[test]
    fn embed_two_site_reordered() {
        // An operator on sites [2, 0] must see site 2 as its leading digit.
        let c = cphase();
        let x = shift_x(3);
        let u = &QuditOperator::identity(3, 2) * &(x.kron(&QuditOperator::identity(3, 1)));
        let e = embed(&u, &[2, 0], 3).unwrap();
        let direct = embed(&x, &[2], 3).unwrap();
        assert!(e.approx_eq(&direct, 0.0));
        let e1 = embed(&c, &[0, 2], 3).unwrap();
        let e2 = embed(&c, &[2, 0], 3).unwrap();
        assert!(e1.approx_eq(&e2, 1e-15));
    }

    #[test]
    fn fidelity_examples() {
        let psi = PureState::basis(3, 1, 2);
        assert!((state_fidelity(&psi.density(), &psi).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityState::maximally_mixed(3, 1);
        assert!((state_fidelity(&mixed, &psi).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let epr = PureState::epr();
        let f = state_fidelity(&epr.density(), &PureState::basis(3, 2, 0)).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn schmidt_rank_examples() {
        let a = qudit_hadamard(3);
        let b = shift_x(3);
        assert_eq!(operator_schmidt_rank(&a.kron(&b), &[0], 1e-8).unwrap(), 1);
        assert_eq!(operator_schmidt_rank(&cphase(), &[0], 1e-8).unwrap(), 3);
        assert_eq!(operator_schmidt_rank(&swap2(), &[0], 1e-8).unwrap(), 9);
        assert!(operator_schmidt_rank(&swap2(), &[0, 1], 1e-8).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = PureState::basis(3, 1, 1);
        let b = PureState::normalized(3, 1, CVector::from_vec(vec![ONE, I, ZERO])).unwrap();
        let rho = a.kron(&b).density();
        let rb = rho.partial_trace(&[1]).unwrap();
        assert!((rb.matrix() - b.projector()).norm() < 1e-15);
        let swapped = rho.partial_trace(&[1, 0]).unwrap();
        assert!((swapped.matrix() - b.kron(&a).projector()).norm() < 1e-15);
    }

    #[test]
    fn labels_round_trip() {
        let idx = QuditIndexing::qutrits(4);
        for label in 0..idx.dim() {
            assert_eq!(idx.label(&idx.digits(label)), label);
        }
        assert_eq!(idx.label_string(5), "0012");
        for k in 0..81 {
            assert_eq!(PauliLabel::from_index(2, k).index(), k);
        }
        assert_eq!(PauliLabel::new(vec![(0, 1), (0, 2)]).to_string(), "Z.Z2");
    }

    #[test]
    fn expm_matches_pade() {
        let h = gell_mann(2).unwrap().matrix() * C64::from(0.7) + gell_mann(8).unwrap().matrix();
        let direct = (h.clone() * C64::new(0.0, -1.3)).exp();
        assert!((expm_hermitian(&h, 1.3) - direct).norm() < 1e-12);
    }
}
