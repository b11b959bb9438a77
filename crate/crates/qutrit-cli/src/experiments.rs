//! The experiments behind each subcommand. Every payload is a JSON value
//! built from ordered maps, so equal requests give identical bytes.

use std::path::Path;

use qutrit::noise::{charge_dispersion, relative_anharmonicity, ConfusionMatrix, DeviceConfig, NoiseModel, TransmonParams};
use qutrit::qudit::{operator_schmidt_coefficients, operator_schmidt_rank, state_fidelity, DensityState, PureState, QuditOperator, D};
use qutrit::scrambling::{
    average_otoc, average_teleportation_fidelity, clifford_conjugation_table, otoc_bound_from_fidelity, scrambler_schedule,
    scrambler_unitary, ScramblerSpec, TeleportSetup, Teleporter,
};
use qutrit::sim::{run_schedule, simulate_density};
use qutrit::synthesis::{
    controlled_phase, controlled_phase_targets, controlled_sum, diagonal_phase_residual, dd_epr_prep_schedule,
    epr_prep_schedule, idle_decoupling_phases, idle_decoupling_schedule, optimal_six_segment_delay, parallel_pair_schedule,
    solve_four_segment, undecoupled_epr_prep_schedule, ChainCouplings, CrossKerrCoeffs, PulseSchedule,
};
use qutrit::tomography::{
    average_gate_fidelity, process_fidelity, process_tomography, ptm_restriction, simulate_records, Statistics,
    StateTomographer,
};
use serde_json::{json, Value};

use crate::envelope::Request;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Idle time used by the decoupling demonstration.
const IDLE_DEMO_NS: f64 = 600.0;

pub fn scrambler_name(s: ScramblerSpec) -> String {
    match s {
        ScramblerSpec::MaximallyScrambling => "us".into(),
        ScramblerSpec::IdentityControl => "identity".into(),
    }
}

fn parse_scrambler(req: &Request) -> Result<ScramblerSpec> {
    match req.options.get("scrambler").map(String::as_str) {
        Some("us") | None => Ok(ScramblerSpec::MaximallyScrambling),
        Some("identity") => Ok(ScramblerSpec::IdentityControl),
        Some(other) => Err(CliError::Validation(format!("unknown scrambler {other:?}"))),
    }
}

pub fn load_config(path: Option<&Path>) -> Result<DeviceConfig> {
    match path {
        Some(p) => Ok(DeviceConfig::load(p)?),
        None => Ok(DeviceConfig::paper()),
    }
}

fn statistics(req: &Request, confusions: &[ConfusionMatrix]) -> Statistics {
    match req.shots {
        Some(shots) => Statistics::Shots { shots, seed: req.seed, confusions: confusions.to_vec() },
        None => Statistics::Exact,
    }
}

pub fn execute(req: &Request) -> Result<Value> {
    let cfg = load_config(req.config.as_deref().map(Path::new))?;
    match req.command.as_str() {
        "epr" => epr(&cfg, req),
        "scramble-qpt" => scramble_qpt(&cfg, req),
        "teleport" => teleport(&cfg, req),
        "otoc" => otoc(req),
        "synth-cphase" => synth_cphase(&cfg, req),
        "decouple-demo" => decouple_demo(&cfg),
        "transmon-calc" => transmon_calc(req),
        other => Err(CliError::Validation(format!("unknown command {other:?}"))),
    }
}

fn noise_for(cfg: &DeviceConfig, req: &Request, sites: &[usize]) -> Result<Option<NoiseModel>> {
    Ok(cfg.noise_model(req.noise_scale)?.map(|m| NoiseModel { sites: sites.iter().map(|&s| m.sites[s]).collect() }))
}

fn require_sites(cfg: &DeviceConfig, n: usize, what: &str) -> Result<()> {
    if cfg.n_qutrits() < n {
        return Err(CliError::Validation(format!("{what} needs {n} qutrits, config has {}", cfg.n_qutrits())));
    }
    Ok(())
}

/// Fidelity of a two-qutrit state with the EPR state, estimated from shots
/// when requested.
fn pair_fidelity(rho: &DensityState, req: &Request, confusions: &[ConfusionMatrix], stream_base: u64) -> Result<f64> {
    let epr = PureState::epr();
    let est = match req.shots {
        None => rho.clone(),
        Some(shots) => {
            let tomo = StateTomographer::full(2);
            let recs = simulate_records(rho.matrix(), tomo.settings(), confusions, shots, req.seed, stream_base)?;
            tomo.reconstruct_records(&recs, confusions)?
        }
    };
    Ok(state_fidelity(&est, &epr)?)
}

fn epr(cfg: &DeviceConfig, req: &Request) -> Result<Value> {
    require_sites(cfg, 5, "epr")?;
    let couplings = cfg.couplings();
    let confusions = cfg.confusions();
    let single = epr_prep_schedule();
    let two = run_schedule(&single, &couplings, noise_for(cfg, req, &[0, 1])?.as_ref(), &PureState::basis(D, 2, 0).density())?;
    let f_single = pair_fidelity(&two, req, &confusions[0..2], 0)?;

    let noise = noise_for(cfg, req, &[0, 1, 2, 3, 4])?;
    let start = PureState::basis(D, 5, 0).density();
    let mut variants = serde_json::Map::new();
    for (k, (name, sched)) in
        [("decoupled", dd_epr_prep_schedule(&couplings)), ("undecoupled", undecoupled_epr_prep_schedule(&couplings))]
            .into_iter()
            .enumerate()
    {
        let rho = run_schedule(&sched, &couplings, noise.as_ref(), &start)?;
        let mut pairs = Vec::new();
        for (j, sites) in [[1usize, 2], [3, 4]].into_iter().enumerate() {
            let base = 16 * (1 + 2 * k + j) as u64;
            let f = pair_fidelity(&rho.partial_trace(&sites)?, req, &confusions[sites[0]..=sites[1]], base)?;
            pairs.push(json!({ "sites": sites, "fidelity": f }));
        }
        variants.insert(name.into(), json!({ "duration_ns": sched.total_duration_ns(), "pairs": pairs }));
    }
    Ok(json!({
        "single_pair": { "sites": [0, 1], "duration_ns": single.total_duration_ns(), "fidelity": f_single },
        "simultaneous": Value::Object(variants),
    }))
}

fn scramble_qpt(cfg: &DeviceConfig, req: &Request) -> Result<Value> {
    require_sites(cfg, 2, "scramble-qpt")?;
    let spec = parse_scrambler(req)?;
    let couplings = cfg.couplings();
    let c = couplings
        .get(0, 1)
        .ok_or_else(|| CliError::Validation("config has no coupling between the first two qutrits".into()))?;
    let delay = optimal_six_segment_delay(&c).t_ns;
    let sched = scrambler_schedule(spec, delay);
    let noise = noise_for(cfg, req, &[0, 1])?;
    let confusions = cfg.confusions();
    let channel = |rho: &qutrit::qudit::CMatrix| simulate_density(&sched, &couplings, noise.as_ref(), rho);
    let ptm = process_tomography(2, channel, &statistics(req, &confusions[0..2]))?;
    let f_e = process_fidelity(&ptm, &spec.ideal_unitary())?;
    let r = ptm_restriction(&ptm);
    let modulus: Vec<Vec<f64>> = (0..r.rows.len()).map(|i| (0..r.cols.len()).map(|j| r.block[(i, j)].norm()).collect()).collect();
    Ok(json!({
        "scrambler": scrambler_name(spec),
        "delay_ns": delay,
        "duration_ns": sched.total_duration_ns(),
        "process_fidelity": f_e,
        "average_gate_fidelity": average_gate_fidelity(f_e, 9),
        "trace_preservation_error": ptm.trace_preservation_error(),
        "ptm": ptm.to_json(),
        "restriction": {
            "rows": r.rows.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "cols": r.cols.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "modulus": modulus,
        },
    }))
}

fn teleport(cfg: &DeviceConfig, req: &Request) -> Result<Value> {
    let spec = parse_scrambler(req)?;
    let setup = TeleportSetup::from_device(spec, cfg, req.noise_scale)?;
    let stats = statistics(req, &setup.confusions);
    let delay = setup.delay_ns;
    let outcomes = Teleporter::new(setup)?.run_design(&stats)?;
    let f_avg = average_teleportation_fidelity(&outcomes)?;
    let herald = outcomes.iter().map(|o| o.herald_prob).sum::<f64>() / outcomes.len() as f64;
    Ok(json!({
        "scrambler": scrambler_name(spec),
        "delay_ns": delay,
        "F_avg": f_avg,
        "herald_prob_avg": herald,
        "otoc_bound": otoc_bound_from_fidelity(f_avg).ok(),
        "outcomes": outcomes.iter().map(|o| o.to_json()).collect::<Vec<_>>(),
    }))
}

fn otoc(req: &Request) -> Result<Value> {
    let name = req.options.get("unitary").map(String::as_str).unwrap_or("us");
    let u = match name {
        "us" => scrambler_unitary(),
        "csum" => controlled_sum(),
        "cphase" => controlled_phase(),
        "identity" => QuditOperator::identity(D, 2),
        other => return Err(CliError::Validation(format!("unknown unitary {other:?}"))),
    };
    Ok(json!({
        "unitary": name,
        "average_otoc": average_otoc(&u)?,
        "floor": 1.0 / 9.0,
        "clifford": clifford_conjugation_table(&u).is_ok(),
    }))
}

/// Resolves `q1q2` style names against the configured pairs.
fn resolve_pair(cfg: &DeviceConfig, arg: &str) -> Result<(String, String, CrossKerrCoeffs)> {
    let want = arg.to_lowercase();
    for p in &cfg.pairs {
        let [a, b] = &p.qutrits;
        for (x, y) in [(a, b), (b, a)] {
            if format!("{x}{y}").to_lowercase() == want {
                let c = cfg.pair_coeffs(x, y).expect("configured pair");
                return Ok((x.clone(), y.clone(), c));
            }
        }
    }
    let known: Vec<String> = cfg.pairs.iter().map(|p| format!("{}{}", p.qutrits[0], p.qutrits[1]).to_lowercase()).collect();
    Err(CliError::Validation(format!("unknown pair {arg:?}; configured pairs are {known:?}")))
}

fn synth_cphase(cfg: &DeviceConfig, req: &Request) -> Result<Value> {
    let (a, b, c) = resolve_pair(cfg, req.options.get("pair").map(String::as_str).unwrap_or("q1q2"))?;
    let targets = controlled_phase_targets();
    let sol = solve_four_segment(&c, targets)?;
    let sched = sol.schedule();
    let u = sched.unitary(&ChainCouplings::chain(&[c]))?;
    let six = optimal_six_segment_delay(&c);
    let schedule: Value = serde_json::from_str(&sched.to_json()).expect("schedule JSON");
    Ok(json!({
        "pair": [a, b],
        "alpha_khz": c.to_khz(),
        "four_segment": {
            "times_ns": sol.times_ns,
            "branch": sol.branch,
            "total_ns": sol.total_ns(),
            "phase_residual": diagonal_phase_residual(&u, targets),
            "schedule": schedule,
        },
        "six_segment": { "t_ns": six.t_ns, "local_diagonal_distance": six.distance },
    }))
}

fn decouple_demo(cfg: &DeviceConfig) -> Result<Value> {
    let couplings = cfg.couplings();
    let mut idle = Vec::new();
    for p in &cfg.pairs {
        let c = cfg.pair_coeffs(&p.qutrits[0], &p.qutrits[1]).expect("configured pair");
        let u = idle_decoupling_schedule(IDLE_DEMO_NS).unitary(&ChainCouplings::chain(&[c]))?;
        idle.push(json!({
            "pair": p.qutrits,
            "t_ns": IDLE_DEMO_NS,
            "schmidt_rank": operator_schmidt_rank(&u, &[0], 1e-8)?,
            "site0_phases_rad": idle_decoupling_phases(&c, IDLE_DEMO_NS),
        }));
    }
    let chain: Option<Vec<CrossKerrCoeffs>> = (0..3).map(|i| couplings.get(i, i + 1)).collect();
    let parallel = match chain {
        Some(c) => {
            let t = optimal_six_segment_delay(&c[0]).t_ns;
            let four = ChainCouplings::chain(&c);
            let rank = |s: PulseSchedule| -> Result<(usize, Vec<f64>)> {
                let u = s.unitary(&four)?;
                Ok((operator_schmidt_rank(&u, &[0, 1], 1e-8)?, operator_schmidt_coefficients(&u, &[0, 1])?))
            };
            let (rev_rank, rev_coeffs) = rank(parallel_pair_schedule(t, true))?;
            let (fwd_rank, _) = rank(parallel_pair_schedule(t, false))?;
            json!({
                "t_ns": t,
                "reversed_rank": rev_rank,
                "reversed_schmidt_coefficients": rev_coeffs,
                "forward_rank": fwd_rank,
            })
        }
        None => Value::Null,
    };
    Ok(json!({ "idle": idle, "parallel_pairs": parallel }))
}

fn transmon_calc(req: &Request) -> Result<Value> {
    let parse = |k: &str| -> Result<Option<f64>> {
        req.options
            .get(k)
            .map(|v| v.parse::<f64>().map_err(|e| CliError::Validation(format!("{k}: {e}"))))
            .transpose()
    };
    let ratio = parse("ej_ec")?.unwrap_or(73.0);
    let ec_mhz = parse("ec_mhz")?;
    let p = TransmonParams::from_ratio(ratio, ec_mhz.unwrap_or(1.0))?;
    let eps: Vec<f64> = (0..=3).map(|m| charge_dispersion(m, &p)).collect();
    let mut out = json!({
        "ej_ec": ratio,
        "eps2_over_eps1": (eps[2] / eps[1]).abs(),
        "relative_anharmonicity": relative_anharmonicity(&p),
    });
    match ec_mhz {
        Some(_) => out["charge_dispersion_khz"] = json!(eps.iter().map(|e| e * 1e3).collect::<Vec<_>>()),
        None => out["charge_dispersion_over_ec"] = json!(eps),
    }
    Ok(out)
}

/// Prints a report for `path` (the bundled device when absent). An invalid
/// file is a validation error listing every violation.
pub fn validate_config(path: Option<&Path>) -> Result<()> {
    let (label, text) = match path {
        Some(p) => (
            p.display().to_string(),
            std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => ("bundled".to_string(), DeviceConfig::paper_json().to_string()),
    };
    let cfg: DeviceConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{label}: parse error: {e}")))?;
    let violations = cfg.violations();
    let report = json!({
        "config": label,
        "valid": violations.is_empty(),
        "qutrits": cfg.qutrits.iter().map(|q| q.name.clone()).collect::<Vec<_>>(),
        "pairs": cfg.pairs.iter().map(|p| p.qutrits.clone()).collect::<Vec<_>>(),
        "violations": violations,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialization"));
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{label}: {}", violations.join("; "))))
    }
}
