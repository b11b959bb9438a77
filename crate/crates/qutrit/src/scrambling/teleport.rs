//! Five-qutrit teleportation through a scrambler and its conjugate.
//!
//! Sites 1-2 and 3-4 hold EPR pairs. The input goes on site 0, `U` acts on
//! `(0, 1)` while `U*` acts on `(3, 2)`, and the pair-A preparation is run
//! backwards so that the `00` outcome on sites 1-2 heralds an EPR projection.
//! The teleported state appears on site 4.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kernels;
use crate::noise::device::{DeviceConfig, NoiseModel};
use crate::noise::readout::{measured_probabilities, sample_counts, ConfusionMatrix, Counts};
use crate::qudit::{gell_mann, partial_trace_matrix, CMatrix, PureState, QuditIndexing, C64, D};
use crate::scrambling::otoc::{design_state_labels, design_states, scrambler_schedule, ScramblerSpec};
use crate::sim::simulate_density;
use crate::synthesis::decoupling::{dd_epr_prep_schedule, EPR_PAIR_A};
use crate::synthesis::entangling::{append_epr_prep, optimal_six_segment_delay};
use crate::synthesis::schedule::{ChainCouplings, PulseSchedule, ScheduleItem};
use crate::tomography::process::{matrix_json, process_input_states, Statistics};
use crate::tomography::state::{mub_bases, state_tomography, MeasurementSetting, TomographyRecord, N_BASES};

pub const N_SITES: usize = 5;
pub const INPUT_SITE: usize = 0;
pub const OUTPUT_SITE: usize = 4;
pub const HERALD_SITES: [usize; 2] = [1, 2];

/// Everything that fixes the simulated experiment.
#[derive(Clone, Debug)]
pub struct TeleportSetup {
    pub scrambler: ScramblerSpec,
    pub couplings: ChainCouplings,
    pub noise: Option<NoiseModel>,
    pub confusions: Vec<ConfusionMatrix>,
    /// Six-segment delay of the scrambler's controlled-phase gates.
    pub delay_ns: f64,
}

impl TeleportSetup {
    /// Couplings, noise and readout of `cfg`; the delay is the larger of the
    /// optimal six-segment delays of the two scrambled pairs.
    pub fn from_device(scrambler: ScramblerSpec, cfg: &DeviceConfig, noise_scale: f64) -> Result<Self> {
        cfg.validate()?;
        if cfg.n_qutrits() != N_SITES {
            return Err(Error::Config(format!("teleportation needs {N_SITES} qutrits, config has {}", cfg.n_qutrits())));
        }
        let couplings = cfg.couplings();
        let delay_ns = [(0, 1), (2, 3)]
            .iter()
            .map(|&(a, b)| {
                couplings
                    .get(a, b)
                    .map(|c| optimal_six_segment_delay(&c).t_ns)
                    .ok_or_else(|| Error::Config(format!("missing coupling for sites {a}-{b}")))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Self {
            scrambler,
            couplings,
            noise: cfg.noise_model(noise_scale)?,
            confusions: cfg.confusions(),
            delay_ns,
        })
    }

    /// Bundled device couplings without decoherence.
    pub fn noiseless(scrambler: ScramblerSpec) -> Self {
        Self::from_device(scrambler, &DeviceConfig::paper(), 0.0).expect("bundled config is valid")
    }

    pub fn prep_schedule(&self) -> PulseSchedule {
        dd_epr_prep_schedule(&self.couplings)
    }

    /// Scrambler, conjugate scrambler and the reversed pair-A preparation.
    pub fn protocol_schedule(&self) -> Result<PulseSchedule> {
        let u = scrambler_schedule(self.scrambler, self.delay_ns);
        let a = u.remap(N_SITES, &[0, 1])?;
        let b = u.conj()?.remap(N_SITES, &[3, 2])?;
        let mut s = merge_parallel(&a, &b)?;
        let mut prep_a = PulseSchedule::new(N_SITES);
        append_epr_prep(&mut prep_a, EPR_PAIR_A.0, EPR_PAIR_A.1, &[]);
        s.append(&prep_a.inverse()?);
        Ok(s)
    }

    /// Register after the EPR preparation, restricted to sites 1..5; site 0
    /// is untouched and still in `|0⟩`.
    fn prepared_pairs(&self) -> Result<CMatrix> {
        let idx = QuditIndexing::qutrits(N_SITES);
        let mut rho0 = CMatrix::zeros(idx.dim(), idx.dim());
        rho0[(0, 0)] = C64::from(1.0);
        let rho = simulate_density(&self.prep_schedule(), &self.couplings, self.noise.as_ref(), &rho0)?;
        let rest = 3usize.pow(N_SITES as u32 - 1);
        Ok(rho.view((0, 0), (rest, rest)).into_owned())
    }
}

/// Runs two schedules side by side. Free-evolution items must line up and
/// are merged to the longer duration.
pub fn merge_parallel(a: &PulseSchedule, b: &PulseSchedule) -> Result<PulseSchedule> {
    if a.n_sites() != b.n_sites() || a.len() != b.len() {
        return Err(Error::Schedule("parallel schedules differ in shape".into()));
    }
    let mut s = PulseSchedule::new(a.n_sites());
    for (x, y) in a.items().iter().zip(b.items()) {
        match (x, y) {
            (ScheduleItem::Evolve { pairs: p, duration_ns: t }, ScheduleItem::Evolve { pairs: q, duration_ns: u }) => {
                let mut pairs = p.clone();
                pairs.extend(q.iter().filter(|e| !p.contains(e)));
                s.evolve(&pairs, t.max(*u));
            }
            (ScheduleItem::Evolve { .. }, _) | (_, ScheduleItem::Evolve { .. }) => {
                return Err(Error::Schedule("free-evolution segments do not line up".into()))
            }
            _ => {
                s.push(x.clone()).push(y.clone());
            }
        }
    }
    s.validate()?;
    Ok(s)
}

/// A compiled experiment ready to run many inputs.
#[derive(Clone, Debug)]
pub struct Teleporter {
    setup: TeleportSetup,
    pairs: CMatrix,
    protocol: PulseSchedule,
}

/// Result for one input state.
#[derive(Clone, Debug, PartialEq)]
pub struct TeleportationOutcome {
    pub label: String,
    pub herald_prob: f64,
    pub rho_out: CMatrix,
    pub fidelity: f64,
}

impl TeleportationOutcome {
    pub fn to_json(&self) -> Value {
        json!({
            "label": self.label,
            "herald_prob": self.herald_prob,
            "F_psi": self.fidelity,
            "rho_out": matrix_json(&self.rho_out),
            "gell_mann": gell_mann_coefficients(&self.rho_out).to_vec(),
        })
    }
}

impl Teleporter {
    pub fn new(setup: TeleportSetup) -> Result<Self> {
        if let Some(m) = &setup.noise {
            if m.n_sites() != N_SITES {
                return Err(Error::Dimension("noise model must cover five qutrits".into()));
            }
        }
        let pairs = setup.prepared_pairs()?;
        let protocol = setup.protocol_schedule()?;
        Ok(Self { setup, pairs, protocol })
    }

    pub fn setup(&self) -> &TeleportSetup {
        &self.setup
    }

    /// Full register before readout for the single-qutrit input `rho_in`.
    pub fn final_register(&self, rho_in: &CMatrix) -> Result<CMatrix> {
        if rho_in.nrows() != D || rho_in.ncols() != D {
            return Err(Error::Dimension("input must be a single-qutrit operator".into()));
        }
        let rho = rho_in.kronecker(&self.pairs);
        simulate_density(&self.protocol, &self.setup.couplings, self.setup.noise.as_ref(), &rho)
    }

    /// Unnormalized heralded output `Tr_{0..3}[Π₀₀ ρ Π₀₀]` on site 4.
    pub fn heralded_output(&self, rho_in: &CMatrix) -> Result<CMatrix> {
        let idx = QuditIndexing::qutrits(N_SITES);
        let mut rho = self.final_register(rho_in)?;
        herald_project(&mut rho, idx);
        Ok(partial_trace_matrix(&rho, idx, &[OUTPUT_SITE]))
    }

    /// Exact run, or shot-mode run with tomography of site 4. Shot mode
    /// draws setting `b` from stream `stream_base + b`.
    pub fn run(&self, label: &str, input: &PureState, stats: &Statistics, stream_base: u64) -> Result<TeleportationOutcome> {
        if input.n() != 1 || input.d() != D {
            return Err(Error::InvalidState("input must be a single-qutrit pure state".into()));
        }
        let rho_in = input.projector();
        let (herald_prob, rho_out) = match stats {
            Statistics::Exact => {
                let out = self.heralded_output(&rho_in)?;
                let p = out.trace().re;
                if !(p > 1e-14) {
                    return Err(Error::InvalidState("herald outcome has zero probability".into()));
                }
                (p, out / C64::from(p))
            }
            Statistics::Shots { shots, seed, confusions } => {
                self.shot_run(&rho_in, *shots, *seed, confusions, stream_base)?
            }
        };
        let psi = input.amplitudes();
        let fidelity = (psi.adjoint() * &rho_out * psi)[(0, 0)].re;
        Ok(TeleportationOutcome { label: label.to_string(), herald_prob, rho_out, fidelity })
    }

    fn shot_run(
        &self,
        rho_in: &CMatrix,
        shots: u64,
        seed: u64,
        confusions: &[ConfusionMatrix],
        stream_base: u64,
    ) -> Result<(f64, CMatrix)> {
        if confusions.len() != N_SITES {
            return Err(Error::Dimension("shot mode needs one confusion matrix per qutrit".into()));
        }
        let idx = QuditIndexing::qutrits(N_SITES);
        let rho = self.final_register(rho_in)?;
        let bases = mub_bases(D)?;
        let mut records = Vec::with_capacity(N_BASES);
        let (mut heralded, mut total) = (0u64, 0u64);
        for (b, v) in bases.iter().enumerate() {
            let mut r = rho.clone();
            kernels::conjugate(&mut r, idx, &[OUTPUT_SITE], &v.adjoint());
            let pops: Vec<f64> = (0..idx.dim()).map(|k| r[(k, k)].re).collect();
            let p = measured_probabilities(&pops, confusions)?;
            let counts = sample_counts(&p, N_SITES, shots, seed, stream_base + b as u64)?;
            let mut kept = Counts::new();
            for (key, &c) in &counts {
                let d: Vec<char> = key.chars().collect();
                if HERALD_SITES.iter().all(|&s| d[s] == '0') {
                    *kept.entry(d[OUTPUT_SITE].to_string()).or_insert(0) += c;
                    heralded += c;
                }
            }
            total += shots;
            let n_kept = kept.values().sum();
            records.push(TomographyRecord { setting: MeasurementSetting(vec![b as u8]), counts: kept, shots: n_kept, seed });
        }
        if records.iter().any(|r| r.shots == 0) {
            return Err(Error::InvalidState("no heralded shots in some measurement setting".into()));
        }
        let est = state_tomography(&records, &confusions[OUTPUT_SITE..=OUTPUT_SITE], 1)?;
        Ok((heralded as f64 / total as f64, est.into_matrix()))
    }

    /// Runs all 12 design states; state `k` uses streams from `4k`.
    pub fn run_design(&self, stats: &Statistics) -> Result<Vec<TeleportationOutcome>> {
        design_states()
            .iter()
            .enumerate()
            .map(|(k, (label, psi))| self.run(label, psi, stats, (N_BASES * k) as u64))
            .collect()
    }

    /// Superoperator of the unnormalized heralded map on column-major
    /// `vec(ρ)`, from the nine process-tomography inputs.
    pub fn heralded_superoperator(&self) -> Result<CMatrix> {
        let inputs: Vec<CMatrix> = process_input_states().iter().map(|p| p.projector()).collect();
        let col = |m: &CMatrix| nalgebra::DVector::from_column_slice(m.as_slice());
        let ins = CMatrix::from_columns(&inputs.iter().map(col).collect::<Vec<_>>());
        let outs = inputs.iter().map(|r| self.heralded_output(r).map(|o| col(&o))).collect::<Result<Vec<_>>>()?;
        let inv = ins.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
        Ok(CMatrix::from_columns(&outs) * inv)
    }
}

fn herald_project(rho: &mut CMatrix, idx: QuditIndexing) {
    let keep: Vec<bool> = (0..idx.dim()).map(|l| HERALD_SITES.iter().all(|&s| idx.digit(l, s) == 0)).collect();
    for c in 0..idx.dim() {
        for r in 0..idx.dim() {
            if !(keep[r] && keep[c]) {
                rho[(r, c)] = C64::from(0.0);
            }
        }
    }
}

/// Unweighted mean over exactly the 12 design states.
pub fn average_teleportation_fidelity(outcomes: &[TeleportationOutcome]) -> Result<f64> {
    let mut got: Vec<&str> = outcomes.iter().map(|o| o.label.as_str()).collect();
    got.sort_unstable();
    let mut want = design_state_labels();
    want.sort_unstable();
    if got != want {
        return Err(Error::InvalidArgument("average fidelity needs the 12 design states, once each".into()));
    }
    Ok(outcomes.iter().map(|o| o.fidelity).sum::<f64>() / outcomes.len() as f64)
}

/// `∫dψ ⟨ψ|E(ψ)|ψ⟩ = (Tr S + Tr E(I)) / (d(d+1))` for a linear map with
/// superoperator `S`.
pub fn haar_average_fidelity(s: &CMatrix) -> f64 {
    let d = (s.nrows() as f64).sqrt().round() as usize;
    let id = CMatrix::identity(d, d);
    let e_id = s * nalgebra::DVector::from_column_slice(id.as_slice());
    let tr_e_id: C64 = (0..d).map(|k| e_id[k * d + k]).sum();
    ((s.trace() + tr_e_id) / C64::from((d * (d + 1)) as f64)).re
}

/// Coefficients on the orthonormal basis `I/√3, λ_1/√2, …, λ_8/√2`.
pub fn gell_mann_coefficients(rho: &CMatrix) -> [f64; 9] {
    let mut out = [0.0; 9];
    out[0] = rho.trace().re / 3f64.sqrt();
    for (k, c) in out.iter_mut().enumerate().skip(1) {
        let l = gell_mann(k).expect("index in range").into_matrix();
        *c = (rho * l).trace().re / 2f64.sqrt();
    }
    out
}
