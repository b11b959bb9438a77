//! Mutually unbiased measurement bases and linear-inversion state tomography.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels;
use crate::noise::readout::{correct_frequencies, frequencies, measured_probabilities, sample_counts, ConfusionMatrix, Counts};
use crate::qudit::{omega_pow, CMatrix, DensityState, QuditIndexing, C64, D, ZERO};

/// Number of mutually unbiased bases of a qutrit.
pub const N_BASES: usize = 4;

/// Basis names in index order: eigenbases of `Z`, `X`, `XZ`, `XZ²`.
pub const BASIS_NAMES: [&str; N_BASES] = ["Z", "X", "XZ", "XZ2"];

/// The four MUBs as unitaries whose columns are the basis vectors. Column
/// `j` of basis `1 + k` is the eigenvector of `XZ^k` with eigenvalue `ω^{-j}`.
pub fn mub_bases(d: usize) -> Result<Vec<CMatrix>> {
    if d != D {
        return Err(Error::InvalidArgument(format!("mutually unbiased bases implemented for d = 3, not {d}")));
    }
    let s = 1.0 / (D as f64).sqrt();
    let mut out = vec![CMatrix::identity(D, D)];
    for k in 0..3i64 {
        out.push(CMatrix::from_fn(D, D, |i, j| {
            let (i, j) = (i as i64, j as i64);
            omega_pow(D, i * j + k * i * (i - 1) / 2) * s
        }));
    }
    Ok(out)
}

/// Per-site basis choice; site `k` is rotated by `V_{b_k}†` before
/// computational readout.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementSetting(pub Vec<u8>);

impl MeasurementSetting {
    pub fn new(bases: Vec<u8>) -> Result<Self> {
        if let Some(b) = bases.iter().find(|&&b| b as usize >= N_BASES) {
            return Err(Error::InvalidArgument(format!("basis index {b} out of range")));
        }
        Ok(Self(bases))
    }

    pub fn n_sites(&self) -> usize {
        self.0.len()
    }

    /// All `4^n` settings, site 0 most significant.
    pub fn all(n: usize) -> Vec<Self> {
        (0..N_BASES.pow(n as u32))
            .map(|k| {
                let mut b = vec![0u8; n];
                let mut rest = k;
                for site in (0..n).rev() {
                    b[site] = (rest % N_BASES) as u8;
                    rest /= N_BASES;
                }
                Self(b)
            })
            .collect()
    }

    pub fn pre_rotations(&self) -> Vec<CMatrix> {
        let bases = mub_bases(D).expect("qutrit bases");
        self.0.iter().map(|&b| bases[b as usize].adjoint()).collect()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|&b| BASIS_NAMES[b as usize]).collect::<Vec<_>>().join(".")
    }
}

/// Counts recorded under one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub setting: MeasurementSetting,
    pub counts: Counts,
    pub shots: u64,
    pub seed: u64,
}

impl TomographyRecord {
    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.values().sum();
        if total != self.shots {
            return Err(Error::InvalidArgument(format!("counts sum to {total}, expected {} shots", self.shots)));
        }
        Ok(())
    }
}

pub fn records_to_jsonl(records: &[TomographyRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

pub fn records_from_jsonl(s: &str) -> Result<Vec<TomographyRecord>> {
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let r: TomographyRecord =
                serde_json::from_str(l).map_err(|e| Error::InvalidArgument(format!("record {i}: {e}")))?;
            r.validate()?;
            Ok(r)
        })
        .collect()
}

/// Computational-basis probabilities after the setting's pre-rotations.
pub fn exact_probabilities(rho: &CMatrix, setting: &MeasurementSetting) -> Result<Vec<f64>> {
    let idx = QuditIndexing::qutrits(setting.n_sites());
    if rho.nrows() != idx.dim() || rho.ncols() != idx.dim() {
        return Err(Error::Dimension("state does not match setting".into()));
    }
    let mut r = rho.clone();
    for (site, v) in setting.pre_rotations().iter().enumerate() {
        kernels::conjugate(&mut r, idx, &[site], v);
    }
    Ok((0..idx.dim()).map(|k| r[(k, k)].re).collect())
}

/// Samples one record per setting through the confusion matrices. Setting
/// `k` draws from stream `stream_base + k`.
pub fn simulate_records(
    rho: &CMatrix,
    settings: &[MeasurementSetting],
    confusions: &[ConfusionMatrix],
    shots: u64,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<TomographyRecord>> {
    settings
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = measured_probabilities(&exact_probabilities(rho, s)?, confusions)?;
            let counts = sample_counts(&p, s.n_sites(), shots, seed, stream_base + k as u64)?;
            Ok(TomographyRecord { setting: s.clone(), counts, shots, seed })
        })
        .collect()
}

/// Hermitian part with negative eigenvalues clipped and trace renormalized
/// to 1.
pub fn project_psd(m: &CMatrix) -> Result<CMatrix> {
    let h = (m + m.adjoint()) * C64::from(0.5);
    let eig = h.symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = vals.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidState("no positive spectrum to project onto".into()));
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| C64::from(l / total)),
    ));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Linear-inversion estimator for a fixed setting set.
#[derive(Clone, Debug)]
pub struct StateTomographer {
    n: usize,
    settings: Vec<MeasurementSetting>,
    pinv: CMatrix,
}

impl StateTomographer {
    /// Errors if the settings are not informationally complete.
    pub fn new(n: usize, settings: Vec<MeasurementSetting>) -> Result<Self> {
        if settings.iter().any(|s| s.n_sites() != n) {
            return Err(Error::Dimension(format!("settings must cover {n} sites")));
        }
        let a = sensing_matrix(n, &settings);
        let dim2 = 9usize.pow(n as u32);
        let svd = a.svd(true, true);
        let max = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * max).count();
        if rank < dim2 {
            return Err(Error::InvalidArgument(format!(
                "measurement settings are informationally incomplete: sensing rank {rank} < {dim2}"
            )));
        }
        let pinv = svd.pseudo_inverse(1e-10 * max).map_err(|e| Error::InvalidArgument(e.into()))?;
        Ok(Self { n, settings, pinv })
    }

    pub fn full(n: usize) -> Self {
        Self::new(n, MeasurementSetting::all(n)).expect("full MUB set is complete")
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    /// Unprojected linear-inversion estimate from one probability vector per
    /// setting.
    pub fn invert(&self, probs: &[Vec<f64>]) -> Result<CMatrix> {
        let dim = 3usize.pow(self.n as u32);
        if probs.len() != self.settings.len() || probs.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("one probability vector per setting required".into()));
        }
        let p = nalgebra::DVector::from_iterator(probs.len() * dim, probs.iter().flatten().map(|&x| C64::from(x)));
        let v = &self.pinv * p;
        let m = CMatrix::from_column_slice(dim, dim, v.as_slice());
        Ok((&m + m.adjoint()) * C64::from(0.5))
    }

    pub fn reconstruct(&self, probs: &[Vec<f64>]) -> Result<DensityState> {
        DensityState::unchecked(D, self.n, project_psd(&self.invert(probs)?)?)
    }

    /// Exact-statistics round trip of `rho`.
    pub fn reconstruct_exact(&self, rho: &CMatrix) -> Result<DensityState> {
        let probs: Vec<Vec<f64>> = self.settings.iter().map(|s| exact_probabilities(rho, s)).collect::<Result<_>>()?;
        self.reconstruct(&probs)
    }

    /// Readout-corrected reconstruction from records ordered as the settings.
    pub fn reconstruct_records(&self, records: &[TomographyRecord], confusions: &[ConfusionMatrix]) -> Result<DensityState> {
        if records.len() != self.settings.len() || records.iter().zip(&self.settings).any(|(r, s)| &r.setting != s) {
            return Err(Error::InvalidArgument("records do not match the tomographer settings".into()));
        }
        let probs: Vec<Vec<f64>> = records
            .iter()
            .map(|r| correct_frequencies(&frequencies(&r.counts, self.n)?, confusions))
            .collect::<Result<_>>()?;
        self.reconstruct(&probs)
    }
}

/// Rows `vec(Π)†` for every (setting, outcome) projector.
fn sensing_matrix(n: usize, settings: &[MeasurementSetting]) -> CMatrix {
    let bases = mub_bases(D).expect("qutrit bases");
    let idx = QuditIndexing::qutrits(n);
    let dim = idx.dim();
    let mut a = CMatrix::from_element(settings.len() * dim, dim * dim, ZERO);
    for (s, setting) in settings.iter().enumerate() {
        for outcome in 0..dim {
            let mut v = CMatrix::from_element(1, 1, C64::from(1.0));
            for (site, &b) in setting.0.iter().enumerate() {
                let col = bases[b as usize].column(idx.digit(outcome, site)).into_owned();
                v = v.kronecker(&col);
            }
            let proj = &v * v.adjoint();
            for (k, z) in proj.iter().enumerate() {
                a[(s * dim + outcome, k)] = z.conj();
            }
        }
    }
    a
}

/// Reconstructs from records with arbitrary setting order.
pub fn state_tomography(records: &[TomographyRecord], confusions: &[ConfusionMatrix], n: usize) -> Result<DensityState> {
    if confusions.len() != n {
        return Err(Error::Dimension(format!("{} confusion matrices for {n} sites", confusions.len())));
    }
    for r in records {
        r.validate()?;
    }
    let t = StateTomographer::new(n, records.iter().map(|r| r.setting.clone()).collect())?;
    t.reconstruct_records(records, confusions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{clock_z, shift_x, PureState};

    #[test]
    fn bases_are_unbiased_eigenbases() {
        let b = mub_bases(3).unwrap();
        let x = shift_x(3).into_matrix();
        let z = clock_z(3).into_matrix();
        let ops = [z.clone(), x.clone(), &x * &z, &x * &z * &z];
        for (k, v) in b.iter().enumerate() {
            assert!((v.adjoint() * v - CMatrix::identity(3, 3)).norm() < 1e-12);
            let d = v.adjoint() * &ops[k] * v;
            for r in 0..3 {
                for c in 0..3 {
                    if r != c {
                        assert!(d[(r, c)].norm() < 1e-12);
                    }
                }
            }
            for (l, w) in b.iter().enumerate() {
                if l != k {
                    for z in (v.adjoint() * w).iter() {
                        assert!((z.norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
                    }
                }
            }
        }
        assert!(mub_bases(2).is_err());
    }

    #[test]
    fn x_basis_is_hadamard() {
        let h = crate::qudit::qudit_hadamard(3).into_matrix();
        assert!((&mub_bases(3).unwrap()[1] - h).norm() < 1e-12);
    }

    #[test]
    fn round_trip_epr() {
        let t = StateTomographer::full(2);
        let psi = PureState::epr();
        let out = t.reconstruct_exact(&psi.projector()).unwrap();
        assert!((crate::qudit::state_fidelity(&out, &psi).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn incomplete_settings_rejected() {
        let only_z = vec![MeasurementSetting::new(vec![0, 0]).unwrap()];
        assert!(StateTomographer::new(2, only_z).is_err());
        assert!(MeasurementSetting::new(vec![4]).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let h = crate::qudit::qudit_hadamard(3).into_matrix();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::from(0.7), C64::from(0.5), C64::from(-0.2)]));
        let m = &h * d * h.adjoint();
        let p = project_psd(&m).unwrap();
        let ev = crate::qudit::hermitian_eigenvalues(&p);
        assert!(ev.iter().all(|&l| l > -1e-12));
        let q = project_psd(&p).unwrap();
        assert!((&p - &q).norm() < 1e-12);
        assert!((p.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn records_jsonl_round_trip() {
        let rho = PureState::basis(3, 1, 1).projector();
        let recs = simulate_records(&rho, &MeasurementSetting::all(1), &[ConfusionMatrix::identity()], 50, 9, 0).unwrap();
        let text = records_to_jsonl(&recs);
        assert!(text.starts_with("{\"setting\":[0],\"counts\":{\"1\":50}"));
        assert_eq!(records_from_jsonl(&text).unwrap(), recs);
        let est = state_tomography(&recs, &[ConfusionMatrix::identity()], 1).unwrap();
        assert!(est.matrix()[(1, 1)].re > 0.8);
    }
}
