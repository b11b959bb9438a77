//! Pulse schedules: timed cross-Kerr evolution interleaved with instantaneous
//! gates, their JSON form, and noiseless simulation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels;
use crate::qudit::{omega_pow, CMatrix, PureState, QuditIndexing, QuditOperator, C64, D, ONE, ZERO};
use crate::synthesis::entangling::conditional_pi;
use crate::synthesis::rotation::{axis_str, parse_axis, LocalOp, Subspace, SubspaceRotation};

/// Cross-Kerr phase rates of one ordered pair, in rad/s: while idling, `|mn⟩`
/// accumulates the phase `e^{+i α_mn t}`, with `m` on the first qutrit.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossKerrCoeffs {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl CrossKerrCoeffs {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    /// From ordinary frequencies in kHz.
    pub fn from_khz(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        let k = 2.0 * PI * 1e3;
        Self::new(a11 * k, a12 * k, a21 * k, a22 * k)
    }

    pub fn to_khz(&self) -> [f64; 4] {
        let k = 2.0 * PI * 1e3;
        [self.a11 / k, self.a12 / k, self.a21 / k, self.a22 / k]
    }

    pub fn alpha(&self, m: usize, n: usize) -> f64 {
        match (m, n) {
            (1, 1) => self.a11,
            (1, 2) => self.a12,
            (2, 1) => self.a21,
            (2, 2) => self.a22,
            _ => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22].iter().all(|x| x.is_finite())
    }

    /// Two-qutrit idle evolution `diag(e^{i α_mn t})`.
    pub fn evolution(&self, duration_ns: f64) -> QuditOperator {
        QuditOperator::from_fn(D, 2, |r, c| {
            if r == c {
                C64::from_polar(1.0, self.alpha(r / D, r % D) * duration_ns * 1e-9)
            } else {
                ZERO
            }
        })
    }
}

/// Always-on couplings of a register, keyed by site pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainCouplings {
    map: BTreeMap<(usize, usize), CrossKerrCoeffs>,
}

impl ChainCouplings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Couplings `(k, k+1)` from a list ordered along the chain.
    pub fn chain(coeffs: &[CrossKerrCoeffs]) -> Self {
        let mut c = Self::new();
        for (k, x) in coeffs.iter().enumerate() {
            c.insert(k, k + 1, *x);
        }
        c
    }

    pub fn insert(&mut self, i: usize, j: usize, c: CrossKerrCoeffs) {
        if i < j {
            self.map.insert((i, j), c);
        } else {
            self.map.insert((j, i), c.transpose());
        }
    }

    /// Coefficients with `i` as the first qutrit.
    pub fn get(&self, i: usize, j: usize) -> Option<CrossKerrCoeffs> {
        if i < j {
            self.map.get(&(i, j)).copied()
        } else {
            self.map.get(&(j, i)).map(|c| c.transpose())
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.map.keys().copied().collect()
    }

    pub fn without(&self, i: usize, j: usize) -> Self {
        let mut c = self.clone();
        c.map.remove(&(i.min(j), i.max(j)));
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntanglerKind {
    CPhase,
    CPhaseInv,
    Identity,
}

impl EntanglerKind {
    fn as_str(self) -> &'static str {
        match self {
            EntanglerKind::CPhase => "cphase",
            EntanglerKind::CPhaseInv => "cphase_inv",
            EntanglerKind::Identity => "identity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "cphase" => Some(EntanglerKind::CPhase),
            "cphase_inv" => Some(EntanglerKind::CPhaseInv),
            "identity" => Some(EntanglerKind::Identity),
            _ => None,
        }
    }

    fn inverse(self) -> Self {
        match self {
            EntanglerKind::CPhase => EntanglerKind::CPhaseInv,
            EntanglerKind::CPhaseInv => EntanglerKind::CPhase,
            EntanglerKind::Identity => EntanglerKind::Identity,
        }
    }

    pub(crate) fn diagonal(self) -> [C64; 9] {
        let mut out = [ONE; 9];
        for (k, x) in out.iter_mut().enumerate() {
            let e = ((k / 3) * (k % 3)) as i64;
            *x = match self {
                EntanglerKind::CPhase => omega_pow(3, e),
                EntanglerKind::CPhaseInv => omega_pow(3, -e),
                EntanglerKind::Identity => ONE,
            };
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleItem {
    /// Free evolution for `duration_ns` under the cross-Kerr terms of `pairs`.
    /// An empty pair list is an idle period.
    Evolve { pairs: Vec<(usize, usize)>, duration_ns: f64 },
    Pulse { site: usize, op: LocalOp },
    /// Calibrated conditional-π gate, applied as an instantaneous unitary.
    /// Its duration is carried by the surrounding evolution segments.
    ConditionalPi { control: usize, target: usize },
    /// Calibrated two-qutrit diagonal gate, used by gate-level schedules.
    Entangler { sites: (usize, usize), kind: EntanglerKind },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    n_sites: usize,
    items: Vec<ScheduleItem>,
}

impl PulseSchedule {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, items: Vec::new() }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn items(&self) -> &[ScheduleItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: ScheduleItem) -> &mut Self {
        self.items.push(item);
        self
    }

    pub fn evolve(&mut self, pairs: &[(usize, usize)], duration_ns: f64) -> &mut Self {
        self.push(ScheduleItem::Evolve { pairs: pairs.to_vec(), duration_ns })
    }

    pub fn pulse(&mut self, site: usize, op: LocalOp) -> &mut Self {
        self.push(ScheduleItem::Pulse { site, op })
    }

    pub fn rotation(&mut self, site: usize, r: SubspaceRotation) -> &mut Self {
        self.pulse(site, LocalOp::Rotation(r))
    }

    pub fn cpi(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(ScheduleItem::ConditionalPi { control, target })
    }

    pub fn entangler(&mut self, a: usize, b: usize, kind: EntanglerKind) -> &mut Self {
        self.push(ScheduleItem::Entangler { sites: (a, b), kind })
    }

    pub fn append(&mut self, other: &PulseSchedule) -> &mut Self {
        assert_eq!(self.n_sites, other.n_sites, "schedules act on different registers");
        self.items.extend(other.items.iter().cloned());
        self
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.items
            .iter()
            .map(|it| match it {
                ScheduleItem::Evolve { duration_ns, .. } => *duration_ns,
                _ => 0.0,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let site_ok = |s: usize| -> Result<()> {
            if s >= self.n_sites {
                Err(Error::Schedule(format!("site {s} outside register of {}", self.n_sites)))
            } else {
                Ok(())
            }
        };
        let pair_ok = |a: usize, b: usize| -> Result<()> {
            site_ok(a)?;
            site_ok(b)?;
            if a == b {
                return Err(Error::Schedule(format!("pair ({a},{b}) repeats a site")));
            }
            Ok(())
        };
        for it in &self.items {
            match it {
                ScheduleItem::Evolve { pairs, duration_ns } => {
                    if !duration_ns.is_finite() || *duration_ns < 0.0 {
                        return Err(Error::Schedule(format!("invalid duration {duration_ns} ns")));
                    }
                    for &(a, b) in pairs {
                        pair_ok(a, b)?;
                    }
                }
                ScheduleItem::Pulse { site, op } => {
                    site_ok(*site)?;
                    if let LocalOp::Rotation(r) = op {
                        if !r.angle.is_finite() || !r.phase.is_finite() {
                            return Err(Error::Schedule("non-finite rotation angle".into()));
                        }
                    }
                }
                ScheduleItem::ConditionalPi { control, target } => pair_ok(*control, *target)?,
                ScheduleItem::Entangler { sites, .. } => pair_ok(sites.0, sites.1)?,
            }
        }
        Ok(())
    }

    /// Reverses the gate content. Free evolution under cross-Kerr couplings
    /// cannot be reversed in time and is rejected; idle periods are kept.
    pub fn inverse(&self) -> Result<Self> {
        let mut out = Self::new(self.n_sites);
        for it in self.items.iter().rev() {
            out.items.push(match it {
                ScheduleItem::Evolve { pairs, .. } if !pairs.is_empty() => {
                    return Err(Error::Schedule("cross-Kerr evolution has no time-reversed form".into()))
                }
                ScheduleItem::Pulse { site, op } => ScheduleItem::Pulse { site: *site, op: op.inverse() },
                ScheduleItem::Entangler { sites, kind } => ScheduleItem::Entangler { sites: *sites, kind: kind.inverse() },
                other => other.clone(),
            });
        }
        Ok(out)
    }

    /// Schedule whose every element is entrywise conjugated.
    pub fn conj(&self) -> Result<Self> {
        let mut out = Self::new(self.n_sites);
        for it in &self.items {
            out.items.push(match it {
                ScheduleItem::Evolve { pairs, .. } if !pairs.is_empty() => {
                    return Err(Error::Schedule("conjugate cross-Kerr evolution needs re-synthesized segments".into()))
                }
                ScheduleItem::Pulse { site, op } => ScheduleItem::Pulse { site: *site, op: op.conj() },
                ScheduleItem::Entangler { sites, kind } => ScheduleItem::Entangler { sites: *sites, kind: kind.inverse() },
                other => other.clone(),
            });
        }
        Ok(out)
    }

    /// Relabels site `k` as `map[k]` on a register of `n_sites`.
    pub fn remap(&self, n_sites: usize, map: &[usize]) -> Result<Self> {
        if map.len() != self.n_sites {
            return Err(Error::Schedule("site map length differs from register size".into()));
        }
        let m = |s: usize| map[s];
        let items = self
            .items
            .iter()
            .map(|it| match it {
                ScheduleItem::Evolve { pairs, duration_ns } => ScheduleItem::Evolve {
                    pairs: pairs.iter().map(|&(a, b)| (m(a), m(b))).collect(),
                    duration_ns: *duration_ns,
                },
                ScheduleItem::Pulse { site, op } => ScheduleItem::Pulse { site: m(*site), op: *op },
                ScheduleItem::ConditionalPi { control, target } => {
                    ScheduleItem::ConditionalPi { control: m(*control), target: m(*target) }
                }
                ScheduleItem::Entangler { sites, kind } => {
                    ScheduleItem::Entangler { sites: (m(sites.0), m(sites.1)), kind: *kind }
                }
            })
            .collect();
        let out = Self { n_sites, items };
        out.validate()?;
        Ok(out)
    }

    /// Net level permutation of the permutation pulses on `site`, or `None`
    /// if the site also receives non-permutation operations.
    pub fn local_permutation(&self, site: usize) -> Option<[usize; 3]> {
        let mut map = [0, 1, 2];
        for it in &self.items {
            match it {
                ScheduleItem::Pulse { site: s, op } if *s == site => {
                    let p = op.level_map()?;
                    map = [p[map[0]], p[map[1]], p[map[2]]];
                }
                ScheduleItem::ConditionalPi { control, target } if *control == site || *target == site => return None,
                ScheduleItem::Entangler { sites, .. } if sites.0 == site || sites.1 == site => return None,
                _ => {}
            }
        }
        Some(map)
    }

    /// Noiseless unitary of the whole schedule.
    pub fn unitary(&self, couplings: &ChainCouplings) -> Result<QuditOperator> {
        self.validate()?;
        let idx = QuditIndexing::qutrits(self.n_sites);
        let mut m = CMatrix::identity(idx.dim(), idx.dim());
        for it in &self.items {
            apply_item_left(&mut m, idx, it, couplings);
        }
        QuditOperator::new(D, self.n_sites, m)
    }

    pub fn apply_to_state(&self, couplings: &ChainCouplings, psi: &PureState) -> Result<PureState> {
        self.validate()?;
        if psi.n() != self.n_sites || psi.d() != D {
            return Err(Error::Dimension("state does not match schedule register".into()));
        }
        let idx = psi.indexing();
        let mut v = psi.amplitudes().clone();
        for it in &self.items {
            match it {
                ScheduleItem::Evolve { pairs, duration_ns } => {
                    kernels::diag_vec(&mut v, &evolve_phases(idx, pairs, *duration_ns, couplings))
                }
                ScheduleItem::Entangler { sites, kind } => {
                    kernels::diag_vec(&mut v, &entangler_phases(idx, *sites, *kind))
                }
                other => {
                    let (sites, op) = item_operator(other);
                    kernels::apply_vec(&mut v, idx, &sites, &op);
                }
            }
        }
        PureState::normalized(D, self.n_sites, v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("schedule serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: WireSchedule =
            serde_json::from_str(s).map_err(|e| Error::Schedule(format!("schedule JSON: {e}")))?;
        Self::from_wire(wire)
    }

    pub(crate) fn to_wire(&self) -> WireSchedule {
        let items = self
            .items
            .iter()
            .map(|it| match it {
                ScheduleItem::Evolve { pairs, duration_ns } => WireItem::Evolve {
                    pairs: pairs.iter().map(|&(a, b)| [a, b]).collect(),
                    duration_ns: *duration_ns,
                },
                ScheduleItem::Pulse { site, op: LocalOp::Rotation(r) } => WireItem::Pulse {
                    site: *site,
                    subspace: r.subspace.as_str().into(),
                    axis: axis_str(r.axis).into(),
                    angle_rad: r.angle,
                    phase_rad: r.phase,
                },
                ScheduleItem::Pulse { site, op } => {
                    WireItem::Gate { site: *site, name: op.gate_name().unwrap().into() }
                }
                ScheduleItem::ConditionalPi { control, target } => {
                    WireItem::Cpi { control: *control, target: *target }
                }
                ScheduleItem::Entangler { sites, kind } => {
                    WireItem::Entangler { sites: [sites.0, sites.1], kind: kind.as_str().into() }
                }
            })
            .collect();
        WireSchedule { schema: 1, n_sites: self.n_sites, items }
    }

    pub(crate) fn from_wire(w: WireSchedule) -> Result<Self> {
        if w.schema != 1 {
            return Err(Error::Schedule(format!("unsupported schedule schema {}", w.schema)));
        }
        let mut out = Self::new(w.n_sites);
        for it in w.items {
            out.items.push(match it {
                WireItem::Evolve { pairs, duration_ns } => ScheduleItem::Evolve {
                    pairs: pairs.into_iter().map(|[a, b]| (a, b)).collect(),
                    duration_ns,
                },
                WireItem::Pulse { site, subspace, axis, angle_rad, phase_rad } => {
                    let sub = Subspace::parse(&subspace)
                        .ok_or_else(|| Error::Schedule(format!("unknown subspace {subspace:?}")))?;
                    let ax = parse_axis(&axis).ok_or_else(|| Error::Schedule(format!("unknown axis {axis:?}")))?;
                    ScheduleItem::Pulse {
                        site,
                        op: LocalOp::Rotation(SubspaceRotation { subspace: sub, axis: ax, angle: angle_rad, phase: phase_rad }),
                    }
                }
                WireItem::Gate { site, name } => ScheduleItem::Pulse {
                    site,
                    op: LocalOp::from_gate_name(&name).ok_or_else(|| Error::Schedule(format!("unknown gate {name:?}")))?,
                },
                WireItem::Cpi { control, target } => ScheduleItem::ConditionalPi { control, target },
                WireItem::Entangler { sites, kind } => ScheduleItem::Entangler {
                    sites: (sites[0], sites[1]),
                    kind: EntanglerKind::parse(&kind)
                        .ok_or_else(|| Error::Schedule(format!("unknown entangler {kind:?}")))?,
                },
            });
        }
        out.validate()?;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct WireSchedule {
    pub schema: u32,
    pub n_sites: usize,
    pub items: Vec<WireItem>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub(crate) enum WireItem {
    Evolve {
        pairs: Vec<[usize; 2]>,
        duration_ns: f64,
    },
    Pulse {
        site: usize,
        subspace: String,
        axis: String,
        angle_rad: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        phase_rad: f64,
    },
    Gate {
        site: usize,
        name: String,
    },
    Cpi {
        control: usize,
        target: usize,
    },
    Entangler {
        sites: [usize; 2],
        kind: String,
    },
}

pub(crate) fn evolve_phases(
    idx: QuditIndexing,
    pairs: &[(usize, usize)],
    duration_ns: f64,
    couplings: &ChainCouplings,
) -> Vec<C64> {
    let coeffs: Vec<(usize, usize, CrossKerrCoeffs)> =
        pairs.iter().filter_map(|&(a, b)| couplings.get(a, b).map(|c| (a, b, c))).collect();
    let t = duration_ns * 1e-9;
    (0..idx.dim())
        .map(|label| {
            let phase: f64 = coeffs
                .iter()
                .map(|(a, b, c)| c.alpha(idx.digit(label, *a), idx.digit(label, *b)))
                .sum();
            C64::from_polar(1.0, phase * t)
        })
        .collect()
}

pub(crate) fn entangler_phases(idx: QuditIndexing, sites: (usize, usize), kind: EntanglerKind) -> Vec<C64> {
    let diag = kind.diagonal();
    (0..idx.dim())
        .map(|label| diag[idx.digit(label, sites.0) * 3 + idx.digit(label, sites.1)])
        .collect()
}

/// Sites and local matrix of a pulse or conditional-π item.
pub(crate) fn item_operator(it: &ScheduleItem) -> (Vec<usize>, CMatrix) {
    match it {
        ScheduleItem::Pulse { site, op } => (vec![*site], op.unitary().into_matrix()),
        ScheduleItem::ConditionalPi { control, target } => (vec![*control, *target], conditional_pi().into_matrix()),
        _ => unreachable!("diagonal items are applied elementwise"),
    }
}

fn apply_item_left(m: &mut CMatrix, idx: QuditIndexing, it: &ScheduleItem, couplings: &ChainCouplings) {
    let diag = match it {
        ScheduleItem::Evolve { pairs, duration_ns } => Some(evolve_phases(idx, pairs, *duration_ns, couplings)),
        ScheduleItem::Entangler { sites, kind } => Some(entangler_phases(idx, *sites, *kind)),
        _ => None,
    };
    match diag {
        Some(p) => {
            for c in 0..m.ncols() {
                for r in 0..m.nrows() {
                    m[(r, c)] *= p[r];
                }
            }
        }
        None => {
            let (sites, op) = item_operator(it);
            let table = kernels::SiteTable::new(idx, &sites);
            kernels::apply_left(m, idx, &table, &op);
        }
    }
}
