mod envelope;
mod error;
mod experiments;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::envelope::{write_atomic, Envelope, Request};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "qutrit", version, about = "Simulated experiments on a five-qutrit transmon processor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Device configuration JSON; the bundled device when absent.
    #[arg(long, env = "QUTRIT_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Finite-shot sampling with this many shots per measurement setting.
    #[arg(long, conflicts_with = "exact", global = true)]
    shots: Option<u64>,
    /// Exact probabilities (the default).
    #[arg(long, global = true)]
    exact: bool,
    /// Result envelope path; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Multiplier on every relaxation and dephasing rate; 0 is noiseless.
    #[arg(long, default_value_t = 0.0, global = true)]
    noise_scale: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// EPR preparation fidelities, with and without decoupling.
    Epr(Flags),
    /// Process tomography of the compiled scrambler.
    ScrambleQpt(ScramblerFlags),
    /// Teleportation of the 12 design states.
    Teleport(ScramblerFlags),
    /// Pauli-averaged OTOC of a two-qutrit unitary.
    Otoc(OtocFlags),
    /// Four-segment controlled-phase synthesis for one coupled pair.
    SynthCphase(PairFlags),
    /// Operator Schmidt ranks of the decoupling sequences.
    DecoupleDemo(Flags),
    /// Charge dispersion and anharmonicity of a transmon.
    TransmonCalc(TransmonFlags),
    /// Check a device configuration and list every violation.
    ValidateConfig(ValidateFlags),
    /// Export plot data from a result envelope as CSV.
    Plot(PlotFlags),
}

#[derive(Args, Debug)]
struct Flags {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ScramblerFlags {
    #[arg(long, value_enum, default_value_t = ScramblerArg::Us)]
    scrambler: ScramblerArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScramblerArg {
    Us,
    Identity,
}

#[derive(Args, Debug)]
struct OtocFlags {
    #[arg(long, value_enum, default_value_t = UnitaryArg::Us)]
    unitary: UnitaryArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UnitaryArg {
    Us,
    Csum,
    Identity,
    Cphase,
}

#[derive(Args, Debug)]
struct PairFlags {
    /// Coupled pair such as `q1q2`.
    #[arg(long, default_value = "q1q2")]
    pair: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TransmonFlags {
    #[arg(long, default_value_t = 73.0)]
    ej_ec: f64,
    /// Charging energy; when given, dispersions are also reported in kHz.
    #[arg(long)]
    ec_mhz: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ValidateFlags {
    /// Configuration to check; falls back to --config, then the bundled device.
    path: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PlotFlags {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: plot::PlotKind,
    #[arg(long)]
    out: PathBuf,
}

fn scrambler(a: ScramblerArg) -> qutrit::scrambling::ScramblerSpec {
    match a {
        ScramblerArg::Us => qutrit::scrambling::ScramblerSpec::MaximallyScrambling,
        ScramblerArg::Identity => qutrit::scrambling::ScramblerSpec::IdentityControl,
    }
}

fn request(name: &str, c: &Common, options: &[(&str, String)]) -> Request {
    Request {
        command: name.to_string(),
        config: c.config.as_ref().map(|p| p.display().to_string()),
        seed: c.seed,
        shots: c.shots,
        exact: c.shots.is_none(),
        output: c.output.as_ref().map(|p| p.display().to_string()),
        noise_scale: c.noise_scale,
        options: options.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (req, common) = match &cli.command {
        Command::Plot(p) => return plot::emit(&p.input, p.kind, &p.out),
        Command::ValidateConfig(v) => return experiments::validate_config(v.path.as_deref().or(v.common.config.as_deref())),
        Command::Epr(f) => (request("epr", &f.common, &[]), &f.common),
        Command::ScrambleQpt(f) => {
            (request("scramble-qpt", &f.common, &[("scrambler", experiments::scrambler_name(scrambler(f.scrambler)))]), &f.common)
        }
        Command::Teleport(f) => {
            (request("teleport", &f.common, &[("scrambler", experiments::scrambler_name(scrambler(f.scrambler)))]), &f.common)
        }
        Command::Otoc(f) => {
            let name = format!("{:?}", f.unitary).to_lowercase();
            (request("otoc", &f.common, &[("unitary", name)]), &f.common)
        }
        Command::SynthCphase(f) => (request("synth-cphase", &f.common, &[("pair", f.pair.to_lowercase())]), &f.common),
        Command::DecoupleDemo(f) => (request("decouple-demo", &f.common, &[]), &f.common),
        Command::TransmonCalc(f) => {
            let mut opts = vec![("ej_ec", f.ej_ec.to_string())];
            if let Some(e) = f.ec_mhz {
                opts.push(("ec_mhz", e.to_string()));
            }
            (request("transmon-calc", &f.common, &opts), &f.common)
        }
    };
    if !(common.noise_scale >= 0.0 && common.noise_scale.is_finite()) {
        return Err(CliError::Validation(format!("--noise-scale must be finite and nonnegative, got {}", common.noise_scale)));
    }
    if common.shots == Some(0) {
        return Err(CliError::Validation("--shots must be positive".into()));
    }
    let start = Instant::now();
    let payload = experiments::execute(&req)?;
    let env = Envelope::new(req, start.elapsed().as_secs_f64(), payload);
    let text = env.to_json();
    match &common.output {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
