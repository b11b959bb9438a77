//! Device description: per-qutrit frequencies, lifetimes and readout, and
//! per-pair cross-Kerr coefficients, in the units of the lab tables.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::channel::{amplitude_damping_channel, dephasing_from_factors, QuantumChannel};
use crate::noise::readout::ConfusionMatrix;
use crate::synthesis::{ChainCouplings, CrossKerrCoeffs};

const PAPER_DEVICE: &str = include_str!("../../data/device_paper.json");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T2Source {
    #[default]
    Ramsey,
    Echo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QutritProps {
    pub name: String,
    pub omega01_ghz: f64,
    pub omega12_ghz: f64,
    pub readout_ghz: f64,
    pub t1_10_us: f64,
    pub t1_21_us: f64,
    pub t2s_01_us: f64,
    pub t2s_12_us: f64,
    pub t2s_02_us: f64,
    pub t2e_01_us: f64,
    pub t2e_12_us: f64,
    pub t2e_02_us: f64,
    /// Probability of reading `j` given `|j⟩`.
    pub readout_fidelity: [f64; 3],
    /// Full confusion matrix `M[i][j] = P(read i | state j)`; when absent the
    /// misassignment mass is split equally between the two wrong outcomes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clifford_error_01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clifford_error_12: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaKhz {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairProps {
    pub qutrits: [String; 2],
    pub alpha_khz: AlphaKhz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub schema: u32,
    #[serde(default)]
    pub t2_source: T2Source,
    pub qutrits: Vec<QutritProps>,
    pub pairs: Vec<PairProps>,
}

impl DeviceConfig {
    /// The bundled five-qutrit device.
    pub fn paper() -> Self {
        Self::from_json_str(PAPER_DEVICE).expect("bundled device config is valid")
    }

    pub fn paper_json() -> &'static str {
        PAPER_DEVICE
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    /// Every invariant violation, each prefixed by its field path.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema != 1 {
            out.push(format!("schema: unsupported version {}", self.schema));
        }
        if self.qutrits.is_empty() {
            out.push("qutrits: empty".into());
        }
        let mut names = BTreeSet::new();
        for (k, q) in self.qutrits.iter().enumerate() {
            let p = format!("qutrits[{k}]");
            if !names.insert(q.name.as_str()) {
                out.push(format!("{p}.name: duplicate name {:?}", q.name));
            }
            for (field, v) in [
                ("omega01_ghz", q.omega01_ghz),
                ("omega12_ghz", q.omega12_ghz),
                ("readout_ghz", q.readout_ghz),
                ("t1_10_us", q.t1_10_us),
                ("t1_21_us", q.t1_21_us),
                ("t2s_01_us", q.t2s_01_us),
                ("t2s_12_us", q.t2s_12_us),
                ("t2s_02_us", q.t2s_02_us),
                ("t2e_01_us", q.t2e_01_us),
                ("t2e_12_us", q.t2e_12_us),
                ("t2e_02_us", q.t2e_02_us),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    out.push(format!("{p}.{field}: must be positive and finite, got {v}"));
                }
            }
            for (j, f) in q.readout_fidelity.iter().enumerate() {
                if !(0.0..=1.0).contains(f) {
                    out.push(format!("{p}.readout_fidelity[{j}]: {f} outside [0, 1]"));
                }
            }
            if let Some(m) = &q.confusion {
                for e in ConfusionMatrix::problems(m) {
                    out.push(format!("{p}.confusion: {e}"));
                }
            }
            for (field, v) in [("clifford_error_01", q.clifford_error_01), ("clifford_error_12", q.clifford_error_12)] {
                if let Some(v) = v {
                    if !(0.0..=1.0).contains(&v) {
                        out.push(format!("{p}.{field}: {v} outside [0, 1]"));
                    }
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (k, pair) in self.pairs.iter().enumerate() {
            let p = format!("pairs[{k}]");
            let idx: Vec<Option<usize>> = pair.qutrits.iter().map(|n| self.index_of(n)).collect();
            for (j, (name, i)) in pair.qutrits.iter().zip(&idx).enumerate() {
                if i.is_none() {
                    out.push(format!("{p}.qutrits[{j}]: unknown qutrit {name:?}"));
                }
            }
            if let (Some(a), Some(b)) = (idx[0], idx[1]) {
                if a.abs_diff(b) != 1 {
                    out.push(format!("{p}.qutrits: {}/{} are not nearest neighbours", pair.qutrits[0], pair.qutrits[1]));
                } else if !seen.insert(a.min(b)) {
                    out.push(format!("{p}.qutrits: duplicate pair {}/{}", pair.qutrits[0], pair.qutrits[1]));
                }
            }
            let a = pair.alpha_khz;
            for (field, v) in [("a11", a.a11), ("a12", a.a12), ("a21", a.a21), ("a22", a.a22)] {
                if !v.is_finite() {
                    out.push(format!("{p}.alpha_khz.{field}: not finite"));
                }
            }
        }
        for k in 0..self.qutrits.len().saturating_sub(1) {
            if !seen.contains(&k) {
                out.push(format!(
                    "pairs: missing coefficients for {}/{}",
                    self.qutrits[k].name,
                    self.qutrits[k + 1].name
                ));
            }
        }
        out
    }

    pub fn n_qutrits(&self) -> usize {
        self.qutrits.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.qutrits.iter().position(|q| q.name == name)
    }

    /// Coefficients for the pair named `a`/`b`, oriented with `a` first.
    pub fn pair_coeffs(&self, a: &str, b: &str) -> Option<CrossKerrCoeffs> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        self.couplings().get(ia, ib)
    }

    pub fn couplings(&self) -> ChainCouplings {
        let mut c = ChainCouplings::new();
        for p in &self.pairs {
            if let (Some(a), Some(b)) = (self.index_of(&p.qutrits[0]), self.index_of(&p.qutrits[1])) {
                let k = p.alpha_khz;
                c.insert(a, b, CrossKerrCoeffs::from_khz(k.a11, k.a12, k.a21, k.a22));
            }
        }
        c
    }

    pub fn confusion(&self, site: usize) -> ConfusionMatrix {
        let q = &self.qutrits[site];
        match &q.confusion {
            Some(m) => ConfusionMatrix::new(*m).expect("validated confusion matrix"),
            None => ConfusionMatrix::from_fidelities(q.readout_fidelity),
        }
    }

    pub fn confusions(&self) -> Vec<ConfusionMatrix> {
        (0..self.n_qutrits()).map(|k| self.confusion(k)).collect()
    }

    /// Decoherence model with all relaxation and dephasing rates multiplied
    /// by `scale`; `None` when `scale` is zero.
    pub fn noise_model(&self, scale: f64) -> Result<Option<NoiseModel>> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise scale {scale} must be nonnegative")));
        }
        if scale == 0.0 {
            return Ok(None);
        }
        let us = 1e-6 / scale;
        let sites = self
            .qutrits
            .iter()
            .map(|q| {
                let (a, b, c) = match self.t2_source {
                    T2Source::Ramsey => (q.t2s_01_us, q.t2s_12_us, q.t2s_02_us),
                    T2Source::Echo => (q.t2e_01_us, q.t2e_12_us, q.t2e_02_us),
                };
                SiteNoise {
                    t1_10_s: q.t1_10_us * us,
                    t1_21_s: q.t1_21_us * us,
                    t2_01_s: a * us,
                    t2_12_s: b * us,
                    t2_02_s: c * us,
                }
            })
            .collect();
        Ok(Some(NoiseModel { sites }))
    }
}

/// Lifetimes of one qutrit, in seconds. The T2 values are total coherence
/// times including the contribution of energy relaxation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteNoise {
    pub t1_10_s: f64,
    pub t1_21_s: f64,
    pub t2_01_s: f64,
    pub t2_12_s: f64,
    pub t2_02_s: f64,
}

impl SiteNoise {
    /// Pure-dephasing rates left after subtracting the coherence decay
    /// already caused by relaxation, clamped at zero.
    pub fn pure_dephasing_rates(&self) -> [f64; 3] {
        let (r1, r2) = (1.0 / self.t1_10_s, 1.0 / self.t1_21_s);
        [
            (1.0 / self.t2_01_s - r1 / 2.0).max(0.0),
            (1.0 / self.t2_12_s - (r1 + r2) / 2.0).max(0.0),
            (1.0 / self.t2_02_s - r2 / 2.0).max(0.0),
        ]
    }

    /// Relaxation followed by pure dephasing over `t_s`.
    pub fn channel(&self, t_s: f64) -> Result<QuantumChannel> {
        let ad = amplitude_damping_channel(t_s, self.t1_10_s, self.t1_21_s)?;
        let [g01, g12, g02] = self.pure_dephasing_rates();
        let dp = dephasing_from_factors((-g01 * t_s).exp(), (-g12 * t_s).exp(), (-g02 * t_s).exp())?;
        Ok(dp.after(&ad)?.with_duration(t_s))
    }
}

/// Per-qutrit decoherence applied after every free-evolution segment.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub sites: Vec<SiteNoise>,
}

impl NoiseModel {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn channel(&self, site: usize, duration_ns: f64) -> Result<QuantumChannel> {
        self.sites[site].channel(duration_ns * 1e-9)
    }
}
