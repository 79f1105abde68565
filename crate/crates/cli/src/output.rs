//! CSV and JSON writers. Floats are written with 17 significant digits so
//! that every value round-trips exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adiabatic_duality::diagnostics::{NuCheck, ScenarioReport};
use adiabatic_duality::PropagatorTrace;

use crate::scenario::{ResidualRow, ScenarioOutput};
use crate::CliError;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.display().to_string(), source: e.into() }
}

fn write_csv<I, R>(path: &Path, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// `t, re_U_00, im_U_00, re_U_01, …` in row-major order.
pub fn trace_header(dim: usize) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    for i in 0..dim {
        for j in 0..dim {
            header.push(format!("re_U_{i}{j}"));
            header.push(format!("im_U_{i}{j}"));
        }
    }
    header
}

pub fn write_trace_csv(path: &Path, trace: &PropagatorTrace) -> Result<(), CliError> {
    let rows = trace.u.iter().enumerate().map(|(k, u)| {
        std::iter::once(fmt_f64(trace.grid.time(k)))
            .chain(u.as_slice().iter().flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)]))
            .collect::<Vec<_>>()
    });
    write_csv(path, &trace_header(trace.dim()), rows)
}

pub const FIDELITY_HEADER: [&str; 3] = ["t", "fidelity_h", "fidelity_dual"];
pub const RESIDUAL_HEADER: [&str; 4] = ["t", "unitarity", "duality", "equivalence"];
pub const SUMMARY_HEADER: [&str; 7] =
    ["axis_value", "min_fid_h", "min_fid_dual", "verdict_h", "verdict_dual", "nu_measured", "nu_predicted"];
pub const NU_HEADER: [&str; 3] = ["nu_measured", "nu_predicted", "pass"];

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn write_fidelity_csv(path: &Path, report: &ScenarioReport) -> Result<(), CliError> {
    let rows = report.fidelity.iter().map(|p| vec![fmt_f64(p.t), fmt_opt(p.h), fmt_opt(p.dual)]);
    write_csv(path, &header(&FIDELITY_HEADER), rows)
}

pub fn write_residual_csv(path: &Path, residuals: &[ResidualRow]) -> Result<(), CliError> {
    let rows =
        residuals.iter().map(|r| vec![fmt_f64(r.t), fmt_f64(r.unitarity), fmt_opt(r.duality), fmt_opt(r.equivalence)]);
    write_csv(path, &header(&RESIDUAL_HEADER), rows)
}

/// Values for the `nu_measured,nu_predicted,pass` line.
pub fn nu_fields(nu: &NuCheck) -> [String; 3] {
    let pass = match (nu.dc_only, nu.pass) {
        (true, _) => "dc_only".to_string(),
        (false, Some(p)) => p.to_string(),
        (false, None) => String::new(),
    };
    [fmt_f64(nu.measured), fmt_opt(nu.predicted), pass]
}

pub fn write_report_json(path: &Path, report: &ScenarioReport) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize");
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))?;
    file.write_all(b"\n").map_err(io_err(path))
}

pub fn read_report_json(path: &Path) -> Result<ScenarioReport, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Writes `trace.csv`, `residuals.csv`, `report.json` and, when present,
/// `fidelity.csv` and `nu.csv` into `dir`. Returns the paths written.
pub fn write_scenario(dir: &Path, out: &ScenarioOutput) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let path = dir.join("trace.csv");
    write_trace_csv(&path, &out.trace)?;
    written.push(path);
    let path = dir.join("residuals.csv");
    write_residual_csv(&path, &out.residuals)?;
    written.push(path);
    if !out.report.fidelity.is_empty() {
        let path = dir.join("fidelity.csv");
        write_fidelity_csv(&path, &out.report)?;
        written.push(path);
    }
    if let Some(nu) = &out.report.nu {
        let path = dir.join("nu.csv");
        write_csv(&path, &header(&NU_HEADER), [nu_fields(nu)])?;
        written.push(path);
    }
    let path = dir.join("report.json");
    write_report_json(&path, &out.report)?;
    written.push(path);
    Ok(written)
}
