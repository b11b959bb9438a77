//! Readout confusion, shot sampling and ensemble correction.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qudit::{DensityState, QuditIndexing};

/// Outcome counts keyed by base-3 strings, site 0 first.
pub type Counts = BTreeMap<String, u64>;

/// Column-stochastic `M[i][j] = P(read i | state j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfusionMatrix([[f64; 3]; 3]);

impl ConfusionMatrix {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let p = Self::problems(&m);
        if p.is_empty() {
            Ok(Self(m))
        } else {
            Err(Error::InvalidArgument(p.join("; ")))
        }
    }

    pub(crate) fn problems(m: &[[f64; 3]; 3]) -> Vec<String> {
        let mut out = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(v) {
                    out.push(format!("entry [{i}][{j}] = {v} outside [0, 1]"));
                }
            }
        }
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| m[i][j]).sum();
            if (s - 1.0).abs() > 1e-9 {
                out.push(format!("column {j} sums to {s}"));
            }
        }
        out
    }

    pub fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Diagonal from the assignment fidelities, the remainder of each column
    /// split equally between the two wrong outcomes.
    pub fn from_fidelities(f: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for j in 0..3 {
            for (i, row) in m.iter_mut().enumerate() {
                row[j] = if i == j { f[j] } else { (1.0 - f[j]) / 2.0 };
            }
        }
        Self(m)
    }

    pub fn entries(&self) -> [[f64; 3]; 3] {
        self.0
    }

    pub fn inverse(&self) -> Result<[[f64; 3]; 3]> {
        let m = Matrix3::from_fn(|i, j| self.0[i][j]);
        let sv = m.singular_values();
        let condition = sv.max() / sv.min();
        if !(condition < 1e12) {
            return Err(Error::Singular { condition });
        }
        let inv = m.try_inverse().ok_or(Error::Singular { condition })?;
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
    }
}

/// `(⊗_k m_k)·v` over a register of `m.len()` qutrits.
fn apply_local(v: &[f64], m: &[[[f64; 3]; 3]]) -> Vec<f64> {
    let idx = QuditIndexing::qutrits(m.len());
    let mut cur = v.to_vec();
    for (site, mk) in m.iter().enumerate() {
        let stride = idx.stride(site);
        let mut next = vec![0.0; cur.len()];
        for (label, out) in next.iter_mut().enumerate() {
            let i = idx.digit(label, site);
            let base = label - i * stride;
            *out = (0..3).map(|j| mk[i][j] * cur[base + j * stride]).sum();
        }
        cur = next;
    }
    cur
}

/// Outcome distribution `(⊗M)·diag(ρ)`.
pub fn measured_probabilities(populations: &[f64], m: &[ConfusionMatrix]) -> Result<Vec<f64>> {
    if populations.len() != 3usize.pow(m.len() as u32) {
        return Err(Error::Dimension(format!("{} populations for {} confusion matrices", populations.len(), m.len())));
    }
    let ms: Vec<_> = m.iter().map(|c| c.0).collect();
    Ok(apply_local(populations, &ms))
}

/// Multinomial sample of `shots` outcomes from `probs`. The generator is
/// keyed by `(seed, stream)` so independent batches are reproducible.
pub fn sample_counts(probs: &[f64], n_sites: usize, shots: u64, seed: u64, stream: u64) -> Result<Counts> {
    let idx = QuditIndexing::qutrits(n_sites);
    if probs.len() != idx.dim() {
        return Err(Error::Dimension("probability vector length".into()));
    }
    let mut counts = Counts::new();
    if shots == 0 {
        return Ok(counts);
    }
    let weights: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(format!("bad distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..shots {
        tally[dist.sample(&mut rng)] += 1;
    }
    for (label, &c) in tally.iter().enumerate() {
        if c > 0 {
            counts.insert(idx.label_string(label), c);
        }
    }
    Ok(counts)
}

/// Samples computational-basis readout of `rho` through the confusion
/// matrices.
pub fn readout_sample(rho: &DensityState, m: &[ConfusionMatrix], shots: u64, seed: u64) -> Result<Counts> {
    if m.len() != rho.n() {
        return Err(Error::Dimension("one confusion matrix per qutrit required".into()));
    }
    let p = measured_probabilities(&rho.populations(), m)?;
    sample_counts(&p, rho.n(), shots, seed, 0)
}

/// Frequency vector of `counts` over all `3^n` outcomes.
pub fn frequencies(counts: &Counts, n_sites: usize) -> Result<Vec<f64>> {
    let idx = QuditIndexing::qutrits(n_sites);
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("no shots recorded".into()));
    }
    let mut f = vec![0.0; idx.dim()];
    for (key, &c) in counts {
        let digits: Option<Vec<usize>> = key.chars().map(|ch| ch.to_digit(3).map(|d| d as usize)).collect();
        match digits {
            Some(d) if d.len() == n_sites => f[idx.label(&d)] += c as f64 / total as f64,
            _ => return Err(Error::InvalidArgument(format!("bad outcome key {key:?}"))),
        }
    }
    Ok(f)
}

/// Quasi-probabilities `(⊗M)⁻¹·f`; entries may be slightly negative.
pub fn readout_correct(counts: &Counts, m: &[ConfusionMatrix]) -> Result<Vec<f64>> {
    correct_frequencies(&frequencies(counts, m.len())?, m)
}

pub fn correct_frequencies(f: &[f64], m: &[ConfusionMatrix]) -> Result<Vec<f64>> {
    if f.len() != 3usize.pow(m.len() as u32) {
        return Err(Error::Dimension("frequency vector length".into()));
    }
    let inv: Vec<_> = m.iter().map(|c| c.inverse()).collect::<Result<_>>()?;
    Ok(apply_local(f, &inv))
}
