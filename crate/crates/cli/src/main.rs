use std::path::PathBuf;
use std::process::ExitCode;

use adiabatic_duality_cli::output::{nu_fields, read_report_json, write_scenario, NU_HEADER};
use adiabatic_duality_cli::sweep::{sweep, write_summary_csv, Axis};
use adiabatic_duality_cli::verify::{run_checks, Level};
use adiabatic_duality_cli::{run_scenario, CliError, ConfigFile, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adlab", version, about = "Propagate, compare adiabatic frames and check invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV traces plus report.json.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Vary theta or omega of the rotating model and write summary.csv.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the invariant suite; exits 1 if any check fails.
    Verify {
        #[arg(long, conflicts_with = "full")]
        fast: bool,
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-render a saved report.json as text.
    Report { path: PathBuf },
}

#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// rotating or sampled
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// JSON samples for the sampled model.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// midpoint2 or magnus4
    #[arg(long)]
    method: Option<String>,
    /// plus, minus or custom:re,im;re,im
    #[arg(long, allow_hyphen_values = true)]
    initial_state: Option<String>,
    /// Comma-separated subset of duality, adiabatic_h, adiabatic_dual,
    /// inconsistency, resonance, nu.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    analyses: Option<Vec<String>>,
    #[arg(long)]
    ratio_threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn config_file(&self) -> Result<ConfigFile, CliError> {
        let base = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            model: self.model.clone(),
            omega0: self.omega0,
            omega: self.omega,
            theta: self.theta,
            samples_path: self.samples.clone(),
            t_end: self.t_end,
            dt: self.dt,
            method: self.method.clone(),
            initial_state: self.initial_state.clone(),
            analyses: self.analyses.clone(),
            ratio_threshold: self.ratio_threshold,
            seed: self.seed,
        };
        Ok(base.overlay(flags))
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { scenario, out } => {
            let config = ScenarioConfig::resolve(scenario.config_file()?)?;
            let result = run_scenario(&config)?;
            for path in write_scenario(&out, &result)? {
                eprintln!("wrote {}", path.display());
            }
            if let Some(nu) = &result.report.nu {
                println!("{}", NU_HEADER.join(","));
                println!("{}", nu_fields(nu).join(","));
            }
            Ok(())
        }
        Command::Sweep { scenario, axis, values, out } => {
            let rows = sweep(&scenario.config_file()?, axis, &values)?;
            std::fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.display().to_string(), source })?;
            let path = out.join("summary.csv");
            write_summary_csv(&path, &rows)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Verify { fast: _, full, seed } => {
            let level = if full { Level::Full } else { Level::Fast };
            let checks = run_checks(level, seed);
            for check in &checks {
                println!("{check}");
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} of {} checks failed", checks.len())));
            }
            Ok(())
        }
        Command::Report { path } => {
            print!("{}", read_report_json(&path)?.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
