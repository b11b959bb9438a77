//! Kraus-form quantum channels.

use crate::error::{Error, Result};
use crate::kernels;
use crate::qudit::{hermitian_eigenvalues, CMatrix, DensityState, QuditIndexing, C64, D, ONE, ZERO};

/// Completely positive trace-preserving map `ρ ↦ Σ K ρ K†` on `n` qutrits.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    n: usize,
    kraus: Vec<CMatrix>,
    duration_s: Option<f64>,
}

impl QuantumChannel {
    /// Checks Kraus completeness within 1e-10 and Choi positivity within -1e-9.
    pub fn new(n: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        let dim = D.pow(n as u32);
        if kraus.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one Kraus operator".into()));
        }
        if kraus.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::Dimension(format!("Kraus operators must be {dim}x{dim}")));
        }
        let ch = Self { n, kraus, duration_s: None };
        let err = ch.completeness_error();
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!("Kraus completeness violated by {err:e}")));
        }
        let ev = ch.choi_min_eigenvalue();
        if ev < -1e-9 {
            return Err(Error::NotCpRealizable { eigenvalue: ev });
        }
        Ok(ch)
    }

    pub fn identity(n: usize) -> Self {
        let dim = D.pow(n as u32);
        Self { n, kraus: vec![CMatrix::identity(dim, dim)], duration_s: None }
    }

    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = Some(duration_s);
        self
    }

    pub fn duration_s(&self) -> Option<f64> {
        self.duration_s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        D.pow(self.n as u32)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `‖Σ K†K - I‖_max`.
    pub fn completeness_error(&self) -> f64 {
        let dim = self.dim();
        let mut s = CMatrix::zeros(dim, dim);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        (s - CMatrix::identity(dim, dim)).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim * dim, dim * dim);
        for k in &self.kraus {
            let v = CMatrix::from_fn(dim * dim, 1, |r, _| k[(r % dim, r / dim)]);
            out += &v * v.adjoint();
        }
        out
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi()).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `Λ(ρ)` for any operator `ρ`, not necessarily a state.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Self) -> Result<Self> {
        if self.n != first.n {
            return Err(Error::Dimension("composed channels act on different registers".into()));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                let k = a * b;
                if k.iter().any(|z| z.norm() > 0.0) {
                    kraus.push(k);
                }
            }
        }
        let duration_s = match (self.duration_s, first.duration_s) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Ok(Self { n: self.n, kraus, duration_s })
    }
}

fn check_time(name: &str, t: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { t >= 0.0 } else { t > 0.0 };
    if !ok || t.is_nan() {
        return Err(Error::InvalidArgument(format!("{name} = {t} is out of range")));
    }
    Ok(())
}

/// Cascaded energy relaxation `|2⟩ → |1⟩ → |0⟩` for a duration `t_s`.
///
/// Exact solution of the cascade, so the family is a semigroup in `t_s`:
/// of the population leaving `|2⟩`, the share `q` sits in `|1⟩` and the rest
/// has already relaxed on to `|0⟩`.
pub fn amplitude_damping_channel(t_s: f64, t1_10_s: f64, t1_21_s: f64) -> Result<QuantumChannel> {
    check_time("t", t_s, true)?;
    check_time("T1_10", t1_10_s, false)?;
    check_time("T1_21", t1_21_s, false)?;
    let (r1, r2) = (1.0 / t1_10_s, 1.0 / t1_21_s);
    let g1 = -(-t_s * r1).exp_m1();
    let g2 = -(-t_s * r2).exp_m1();
    // q = r2 t e^{-r1 t} (1 - e^{-x})/x with x = (r2 - r1) t.
    let x = (r2 - r1) * t_s;
    let shape = if x.abs() < 1e-12 { 1.0 - x / 2.0 } else { -(-x).exp_m1() / x };
    let q = r2 * t_s * (-r1 * t_s).exp() * shape;
    let q = q.clamp(0.0, g2);
    let mut k0 = CMatrix::zeros(D, D);
    k0[(0, 0)] = ONE;
    k0[(1, 1)] = C64::from((-0.5 * r1 * t_s).exp());
    k0[(2, 2)] = C64::from((-0.5 * r2 * t_s).exp());
    let mut k1 = CMatrix::zeros(D, D);
    k1[(0, 1)] = C64::from(g1.sqrt());
    let mut k2 = CMatrix::zeros(D, D);
    k2[(1, 2)] = C64::from(q.sqrt());
    let mut k3 = CMatrix::zeros(D, D);
    k3[(0, 2)] = C64::from((g2 - q).sqrt());
    Ok(QuantumChannel::new(1, vec![k0, k1, k2, k3])?.with_duration(t_s))
}

/// Coherence decay `ρ_ij → e^{-t/T2_ij} ρ_ij` with populations fixed.
pub fn dephasing_channel(t_s: f64, t2_01_s: f64, t2_12_s: f64, t2_02_s: f64) -> Result<QuantumChannel> {
    check_time("t", t_s, true)?;
    for (name, t2) in [("T2_01", t2_01_s), ("T2_12", t2_12_s), ("T2_02", t2_02_s)] {
        check_time(name, t2, false)?;
    }
    let f = |t2: f64| (-t_s / t2).exp();
    Ok(dephasing_from_factors(f(t2_01_s), f(t2_12_s), f(t2_02_s))?.with_duration(t_s))
}

/// Diagonal-Kraus channel multiplying `ρ_01, ρ_12, ρ_02` by the given
/// factors. Errors if no channel realizes them.
pub fn dephasing_from_factors(f01: f64, f12: f64, f02: f64) -> Result<QuantumChannel> {
    let (vals, vecs) = gram_eigen(f01, f12, f02)?;
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-12 {
        return Err(Error::NotCpRealizable { eigenvalue: min });
    }
    Ok(diagonal_kraus(&vals, &vecs))
}

/// As [`dephasing_from_factors`], but a non-realizable triple is replaced by
/// the nearest valid one: negative Gram eigenvalues are clipped and the
/// diagonal rescaled to one.
pub fn dephasing_channel_projected(f01: f64, f12: f64, f02: f64) -> Result<QuantumChannel> {
    let (vals, vecs) = gram_eigen(f01, f12, f02)?;
    let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let mut g = nalgebra::Matrix3::<f64>::zeros();
    for k in 0..3 {
        let v = vecs.column(k);
        g += v * v.transpose() * clipped[k];
    }
    let s = [g[(0, 0)].sqrt(), g[(1, 1)].sqrt(), g[(2, 2)].sqrt()];
    dephasing_from_factors(g[(0, 1)] / (s[0] * s[1]), g[(1, 2)] / (s[1] * s[2]), g[(0, 2)] / (s[0] * s[2]))
}

fn gram_eigen(f01: f64, f12: f64, f02: f64) -> Result<(Vec<f64>, nalgebra::Matrix3<f64>)> {
    for f in [f01, f12, f02] {
        if !(-1.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!("coherence factor {f} outside [-1, 1]")));
        }
    }
    let g = nalgebra::Matrix3::new(1.0, f01, f02, f01, 1.0, f12, f02, f12, 1.0);
    let eig = g.symmetric_eigen();
    Ok((eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors))
}

fn diagonal_kraus(vals: &[f64], vecs: &nalgebra::Matrix3<f64>) -> QuantumChannel {
    let kraus = (0..3)
        .filter(|&k| vals[k] > 0.0)
        .map(|k| {
            let s = vals[k].sqrt();
            CMatrix::from_fn(D, D, |r, c| if r == c { C64::from(s * vecs[(r, k)]) } else { ZERO })
        })
        .collect();
    QuantumChannel { n: 1, kraus, duration_s: None }
}

/// Applies `ch` to the qutrits `sites` of `rho`.
pub fn apply_channel(ch: &QuantumChannel, rho: &DensityState, sites: &[usize]) -> Result<DensityState> {
    if ch.n() != sites.len() {
        return Err(Error::Dimension(format!("{}-qutrit channel on {} sites", ch.n(), sites.len())));
    }
    if rho.d() != D {
        return Err(Error::Dimension("channels act on qutrits".into()));
    }
    for (i, &s) in sites.iter().enumerate() {
        if s >= rho.n() || sites[..i].contains(&s) {
            return Err(Error::InvalidArgument(format!("invalid site {s}")));
        }
    }
    let out = apply_channel_matrix(ch, rho.matrix(), rho.indexing(), sites);
    DensityState::unchecked(D, rho.n(), out)
}

pub(crate) fn apply_channel_matrix(ch: &QuantumChannel, rho: &CMatrix, idx: QuditIndexing, sites: &[usize]) -> CMatrix {
    kernels::kraus(rho, idx, sites, ch.kraus())
}
