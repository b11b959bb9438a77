//! CSV plot data from result envelopes.

use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::envelope::{write_atomic, Envelope};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Teleportation fidelity per design state.
    #[value(name = "fig5b-bars")]
    Fig5bBars,
    /// Gell-Mann coefficients of each teleported state.
    #[value(name = "fig5c-gellmann")]
    Fig5cGellmann,
    /// Moduli of the PTM columns for single-qutrit Paulis.
    #[value(name = "fig3-ptm")]
    Fig3Ptm,
}

impl PlotKind {
    fn source_command(self) -> &'static str {
        match self {
            PlotKind::Fig5bBars | PlotKind::Fig5cGellmann => "teleport",
            PlotKind::Fig3Ptm => "scramble-qpt",
        }
    }
}

fn mismatch(what: &str) -> CliError {
    CliError::Validation(format!("payload does not match plot kind: {what}"))
}

fn outcomes(payload: &Value) -> Result<&Vec<Value>, CliError> {
    payload["outcomes"].as_array().ok_or_else(|| mismatch("missing outcomes"))
}

fn label(o: &Value) -> Result<&str, CliError> {
    o["label"].as_str().ok_or_else(|| mismatch("outcome without label"))
}

fn number(v: &Value, what: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| mismatch(what))
}

pub fn rows(env: &Envelope, kind: PlotKind) -> Result<(Vec<&'static str>, Vec<Vec<String>>), CliError> {
    if env.request.command != kind.source_command() {
        return Err(mismatch(&format!("{} needs a {} envelope, got {}", kind_name(kind), kind.source_command(), env.request.command)));
    }
    let p = &env.payload;
    match kind {
        PlotKind::Fig5bBars => {
            let rows = outcomes(p)?
                .iter()
                .map(|o| Ok(vec![label(o)?.to_string(), number(&o["F_psi"], "F_psi")?.to_string()]))
                .collect::<Result<_, CliError>>()?;
            Ok((vec!["state", "F_psi"], rows))
        }
        PlotKind::Fig5cGellmann => {
            let mut rows = Vec::new();
            for o in outcomes(p)? {
                let coeffs = o["gell_mann"].as_array().ok_or_else(|| mismatch("missing gell_mann"))?;
                for (k, c) in coeffs.iter().enumerate() {
                    rows.push(vec![label(o)?.to_string(), k.to_string(), number(c, "gell_mann entry")?.to_string()]);
                }
            }
            Ok((vec!["state", "lambda", "coefficient"], rows))
        }
        PlotKind::Fig3Ptm => {
            let r = &p["restriction"];
            let names = |k: &str| -> Result<Vec<String>, CliError> {
                r[k].as_array()
                    .ok_or_else(|| mismatch("missing restriction"))?
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).ok_or_else(|| mismatch("restriction label")))
                    .collect()
            };
            let (row_names, col_names) = (names("rows")?, names("cols")?);
            let modulus = r["modulus"].as_array().ok_or_else(|| mismatch("missing modulus"))?;
            let mut rows = Vec::new();
            for (i, rn) in row_names.iter().enumerate() {
                let line = modulus.get(i).and_then(Value::as_array).ok_or_else(|| mismatch("modulus shape"))?;
                for (j, cn) in col_names.iter().enumerate() {
                    let m = number(line.get(j).ok_or_else(|| mismatch("modulus shape"))?, "modulus entry")?;
                    rows.push(vec![rn.clone(), cn.clone(), m.to_string()]);
                }
            }
            Ok((vec!["row_pauli", "col_pauli", "modulus"], rows))
        }
    }
}

fn kind_name(kind: PlotKind) -> String {
    kind.to_possible_value().expect("named variant").get_name().to_string()
}

pub fn emit(input: &Path, kind: PlotKind, out: &Path) -> Result<(), CliError> {
    let env = Envelope::load(input)?;
    let (header, rows) = rows(&env, kind)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Validation(format!("CSV encoding: {e}"));
    w.write_record(&header).map_err(fail)?;
    for r in &rows {
        w.write_record(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(format!("CSV encoding: {e}")))?;
    write_atomic(out, &bytes)
}
