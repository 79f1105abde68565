//! Parameter sweeps over the rotating model.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{ConfigFile, ScenarioConfig};
use crate::output::{fmt_f64, fmt_opt, SUMMARY_HEADER};
use crate::scenario::run_scenario;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Theta,
    Omega,
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "theta" => Ok(Axis::Theta),
            "omega" => Ok(Axis::Omega),
            other => Err(CliError::Config(format!("sweep axis must be theta or omega, got {other:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Theta => "theta",
            Axis::Omega => "omega",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub min_fid_h: Option<f64>,
    pub min_fid_dual: Option<f64>,
    pub verdict_h: Option<String>,
    pub verdict_dual: Option<String>,
    pub nu_measured: Option<f64>,
    pub nu_predicted: Option<f64>,
}

impl SweepRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.axis_value),
            fmt_opt(self.min_fid_h),
            fmt_opt(self.min_fid_dual),
            self.verdict_h.clone().unwrap_or_default(),
            self.verdict_dual.clone().unwrap_or_default(),
            fmt_opt(self.nu_measured),
            fmt_opt(self.nu_predicted),
        ]
    }
}

/// Runs one scenario per value, in parallel; rows come back in input order.
pub fn sweep(base: &ConfigFile, axis: Axis, values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if base.model.as_deref().is_some_and(|m| m != "rotating") {
        return Err(CliError::Config("sweeps vary the rotating model; model must be rotating".into()));
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut raw = base.clone();
            match axis {
                Axis::Theta => raw.theta = Some(v),
                Axis::Omega => raw.omega = Some(v),
            }
            ScenarioConfig::resolve(raw)
        })
        .collect::<Result<Vec<_>, _>>()?;
    configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(config, &axis_value)| {
            let report = run_scenario(config)?.report;
            Ok(SweepRow {
                axis_value,
                min_fid_h: report.min_fidelity_h,
                min_fid_dual: report.min_fidelity_dual,
                verdict_h: report.resonance_h.as_ref().map(|r| r.verdict.to_string()),
                verdict_dual: report.resonance_dual.as_ref().map(|r| r.verdict.to_string()),
                nu_measured: report.nu.as_ref().filter(|n| !n.dc_only).map(|n| n.measured),
                nu_predicted: report.nu.as_ref().and_then(|n| n.predicted),
            })
        })
        .collect()
}

pub fn write_summary_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let to_io = |e: csv::Error| CliError::Io { path: path.display().to_string(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record(SUMMARY_HEADER).map_err(to_io)?;
    for row in rows {
        w.write_record(row.fields()).map_err(to_io)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(analyses: &[&str]) -> ConfigFile {
        ConfigFile {
            omega: Some(0.01),
            t_end: Some(2.0 * std::f64::consts::PI / 0.01),
            dt: Some(0.05),
            analyses: Some(analyses.iter().map(|s| s.to_string()).collect()),
            ..Default::default()
        }
    }

    #[test]
    fn theta_sweep_dual_fidelity_decreases_and_order_is_kept() {
        let values = [0.01, 0.1, 0.5, 1.0];
        let rows = sweep(&base(&["adiabatic_dual"]), Axis::Theta, &values).unwrap();
        assert_eq!(rows.iter().map(|r| r.axis_value).collect::<Vec<_>>(), values);
        let fids: Vec<f64> = rows.iter().map(|r| r.min_fid_dual.unwrap()).collect();
        assert!(fids.windows(2).all(|w| w[0] > w[1]), "{fids:?}");
    }

    #[test]
    fn uncoupled_omega_sweep_keeps_dual_fidelity_at_one() {
        let mut raw = base(&["adiabatic_dual"]);
        raw.theta = Some(0.0);
        raw.t_end = Some(200.0);
        let rows = sweep(&raw, Axis::Omega, &[0.01, 0.05, 0.2]).unwrap();
        for r in rows {
            assert!((r.min_fid_dual.unwrap() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn rejects_empty_and_sampled() {
        assert!(sweep(&base(&["nu"]), Axis::Theta, &[]).is_err());
        let mut raw = base(&["nu"]);
        raw.model = Some("sampled".into());
        assert!(sweep(&raw, Axis::Theta, &[0.1]).is_err());
        assert!("phi".parse::<Axis>().is_err());
    }
}
