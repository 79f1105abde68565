//! One scenario run: propagate, build the frames the analyses need, measure.

use adiabatic_duality::diagnostics::{
    fidelity_trace, nu_check, resonance_report, FidelityPoint, FrameMode, ResidualSummary, ScenarioReport, Thresholds,
};
use adiabatic_duality::duality::{equivalence_residual, inconsistency_operator, v_dagger, w_dagger};
use adiabatic_duality::linalg::eig_hermitian;
use adiabatic_duality::models::rotating_hamiltonian;
use adiabatic_duality::propagation::{dual_source, propagate};
use adiabatic_duality::spectral_flow::{adiabatic_propagator, build_eigenframe, EigenFrame};
use adiabatic_duality::{ComplexMatrix, ComplexVector, HamiltonianSource, PropagatorTrace};

use crate::config::{Analysis, InitialState, ModelSpec, ScenarioConfig};
use crate::CliError;

/// Bound on `‖U†U − I‖` at every node of a run.
pub const UNITARITY_BOUND: f64 = 1e-12;

/// Per-node residuals; `None` where the analysis was not requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub unitarity: f64,
    pub duality: Option<f64>,
    pub equivalence: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: ScenarioReport,
    pub trace: PropagatorTrace,
    pub residuals: Vec<ResidualRow>,
}

pub fn source_of(model: &ModelSpec) -> Result<Box<dyn HamiltonianSource>, CliError> {
    Ok(match model {
        ModelSpec::Rotating(p) => Box::new(rotating_hamiltonian(*p)?),
        ModelSpec::Sampled { source, .. } => Box::new(source.clone()),
    })
}

fn initial_vector(state: &InitialState, h0: &ComplexMatrix) -> Result<ComplexVector, CliError> {
    let eig = eig_hermitian(h0)?;
    match state {
        InitialState::Plus => Ok(eig.vectors[0].clone()),
        InitialState::Minus => Ok(eig.vectors[eig.dim() - 1].clone()),
        InitialState::Custom(amplitudes) => {
            if amplitudes.len() != h0.dim() {
                return Err(CliError::Config(format!(
                    "initial_state has {} amplitudes, the Hamiltonian has dimension {}",
                    amplitudes.len(),
                    h0.dim()
                )));
            }
            let v = ComplexVector::new(amplitudes.clone());
            if v.norm().is_nan() || v.norm() <= 1e-12 {
                return Err(CliError::Config("initial_state must be non-zero".into()));
            }
            Ok(v.normalized())
        }
    }
}

fn min_of(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::min)
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    let src = source_of(&config.model)?;
    let grid = config.grid;
    let mut trace = propagate(&src, grid, config.method)?;
    let psi0 = initial_vector(&config.initial_state, &src.evaluate(grid.t_start)?)?;

    let frame: Option<EigenFrame> = if config.analyses.iter().any(|a| a.needs_frame()) {
        let frame = build_eigenframe(&src, grid)?;
        trace.attach_phase_integrals(frame.phase_integrals.clone())?;
        Some(frame)
    } else {
        None
    };

    let duality: Option<Vec<f64>> = if config.wants(Analysis::Duality) {
        let dual = propagate(&dual_source(&src, &trace), grid, config.method)?;
        Some(dual.u.iter().zip(&trace.u).map(|(d, u)| (d - &u.adjoint()).frobenius_norm()).collect())
    } else {
        None
    };
    let equivalence: Option<Vec<f64>> = match &frame {
        Some(f) => Some((0..grid.len()).map(|k| equivalence_residual(&trace, f, k)).collect::<Result<_, _>>()?),
        None => None,
    };

    let fidelity_h: Option<Vec<f64>> = match (&frame, config.wants(Analysis::AdiabaticH)) {
        (Some(f), true) => {
            Some(fidelity_trace(&trace, |k| adiabatic_propagator(f, k), &psi0)?.into_iter().map(|(_, x)| x).collect())
        }
        _ => None,
    };
    let fidelity_dual: Option<Vec<f64>> = match (&frame, config.wants(Analysis::AdiabaticDual)) {
        (Some(f), true) => Some(
            fidelity_trace(&trace.adjoint_trace(), |k| w_dagger(&trace, f, k), &psi0)?
                .into_iter()
                .map(|(_, x)| x)
                .collect(),
        ),
        _ => None,
    };

    let last = grid.steps;
    let identity = ComplexMatrix::identity(trace.dim());
    let (mut inconsistency_distance, mut v_dagger_distance, mut w_dagger_distance) = (None, None, None);
    if let (Some(f), true) = (&frame, config.wants(Analysis::Inconsistency)) {
        inconsistency_distance = Some((&inconsistency_operator(f, last)? - &identity).frobenius_norm());
        let u_adia = adiabatic_propagator(f, last)?;
        v_dagger_distance = Some((&v_dagger(f, last)? - &u_adia.adjoint()).frobenius_norm());
        w_dagger_distance = Some((&w_dagger(&trace, f, last)? - &trace.u[last].adjoint()).frobenius_norm());
    }

    let thresholds = Thresholds { ratio: config.ratio_threshold };
    let (mut resonance_h, mut resonance_dual) = (None, None);
    if let (Some(f), true) = (&frame, config.wants(Analysis::Resonance)) {
        resonance_h = Some(resonance_report(f, FrameMode::HFrame, thresholds)?);
        resonance_dual = Some(resonance_report(f, FrameMode::DualFrame, thresholds)?);
    }

    let nu =
        if config.wants(Analysis::Nu) { Some(nu_check(&src, &trace, (0, 0), config.model.rotating())?) } else { None };

    let residuals: Vec<ResidualRow> = (0..grid.len())
        .map(|k| ResidualRow {
            t: grid.time(k),
            unitarity: trace.u[k].unitarity_residual(),
            duality: duality.as_ref().map(|d| d[k]),
            equivalence: equivalence.as_ref().map(|e| e[k]),
        })
        .collect();
    let max_unitarity = residuals.iter().map(|r| r.unitarity).fold(0.0, f64::max);
    if max_unitarity > UNITARITY_BOUND {
        return Err(CliError::Invariant {
            invariant: "unitarity".into(),
            value: max_unitarity,
            bound: UNITARITY_BOUND,
        });
    }

    let fidelity: Vec<FidelityPoint> = if fidelity_h.is_some() || fidelity_dual.is_some() {
        (0..grid.len())
            .map(|k| FidelityPoint {
                t: grid.time(k),
                h: fidelity_h.as_ref().map(|f| f[k]),
                dual: fidelity_dual.as_ref().map(|f| f[k]),
            })
            .collect()
    } else {
        Vec::new()
    };

    let report = ScenarioReport {
        model: config.model.label(),
        rotating: config.model.rotating().copied(),
        grid,
        method: config.method,
        analyses: config.analyses.iter().map(|a| a.name().to_string()).collect(),
        min_fidelity_h: fidelity_h.as_deref().and_then(min_of),
        min_fidelity_dual: fidelity_dual.as_deref().and_then(min_of),
        fidelity,
        residuals: ResidualSummary {
            unitarity: max_unitarity,
            duality: duality.as_deref().map(|d| d.iter().copied().fold(0.0, f64::max)),
            equivalence: equivalence.as_deref().map(|e| e.iter().copied().fold(0.0, f64::max)),
        },
        inconsistency_distance,
        v_dagger_distance,
        w_dagger_distance,
        resonance_h,
        resonance_dual,
        nu,
    };
    report.validate().map_err(|e| CliError::Invariant {
        invariant: format!("report ranges ({e})"),
        value: f64::NAN,
        bound: 0.0,
    })?;
    Ok(ScenarioOutput { report, trace, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;
    use adiabatic_duality::diagnostics::Verdict;

    fn config(omega: f64, theta: f64, t_end: f64, dt: f64, analyses: &[&str]) -> ScenarioConfig {
        ScenarioConfig::resolve(ConfigFile {
            omega: Some(omega),
            theta: Some(theta),
            t_end: Some(t_end),
            dt: Some(dt),
            analyses: Some(analyses.iter().map(|s| s.to_string()).collect()),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn full_run_populates_everything() {
        let out = run_scenario(&config(
            0.1,
            0.7,
            20.0,
            0.01,
            &["duality", "adiabatic_h", "adiabatic_dual", "inconsistency", "resonance", "nu"],
        ))
        .unwrap();
        let r = &out.report;
        assert!(r.min_fidelity_h.is_some() && r.min_fidelity_dual.is_some());
        assert!(r.residuals.duality.unwrap() < 1e-4);
        assert!(r.residuals.equivalence.unwrap() <= 1e-12);
        assert!(r.inconsistency_distance.is_some() && r.resonance_dual.is_some() && r.nu.is_some());
        assert_eq!(out.residuals.len(), 2001);
        assert!(out.trace.phase_integrals.is_some());
    }

    #[test]
    fn nu_only_skips_the_frame() {
        let out = run_scenario(&config(0.1, 0.7, 20.0, 0.01, &["nu"])).unwrap();
        assert!(out.trace.phase_integrals.is_none());
        assert!(out.report.fidelity.is_empty());
        assert!(out.report.residuals.equivalence.is_none());
    }

    #[test]
    fn slow_rotation_verdicts() {
        let out = run_scenario(&config(0.01, std::f64::consts::FRAC_PI_4, 3000.0, 0.05, &["resonance"])).unwrap();
        assert_eq!(out.report.resonance_h.unwrap().verdict, Verdict::Adiabatic);
        assert_eq!(out.report.resonance_dual.unwrap().verdict, Verdict::Resonant);
    }

    #[test]
    fn custom_state_must_match_dimension() {
        let mut c = config(0.1, 0.7, 1.0, 0.01, &["adiabatic_h"]);
        c.initial_state = InitialState::Custom(vec![adiabatic_duality::C64::new(1.0, 0.0)]);
        assert!(matches!(run_scenario(&c), Err(CliError::Config(_))));
    }
}
