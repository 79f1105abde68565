//! The invariant suite run by `adlab verify`.
//!
//! `fast` uses two-level scenarios only. `full` adds seeded random 4×4
//! sampled Hamiltonians and convergence-order studies.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;

use adiabatic_duality::diagnostics::{fidelity_trace, nu_check, resonance_report, FrameMode, Thresholds, Verdict};
use adiabatic_duality::duality::{
    build_dual_frame, equivalence_residual, h2_adia_source, inconsistency_operator, w_dagger,
};
use adiabatic_duality::linalg::{cis, eig_hermitian};
use adiabatic_duality::models::{rotating_exact_propagator, rotating_hamiltonian, RotatingModelParams};
use adiabatic_duality::propagation::{dual_source, max_adjoint_mismatch, propagate};
use adiabatic_duality::spectral_flow::{
    adiabatic_propagator, build_eigenframe, coupling_matrix, dual_coupling, integrate_dual_frame, integrate_h_frame,
    EigenFrame,
};
use adiabatic_duality::{
    ComplexMatrix, ComplexVector, HamiltonianSource, Method, PropagatorTrace, Result, TimeGrid, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::random::{random_hermitian, random_smooth_hamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

/// One named invariant with its measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: (f64, f64),
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound: (f64::NEG_INFINITY, bound), pass: measured <= bound }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound: (bound, f64::INFINITY), pass: measured >= bound }
    }

    pub fn within(name: impl Into<String>, measured: f64, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), measured, bound: (lower, upper), pass: (lower..=upper).contains(&measured) }
    }

    fn failed(name: impl Into<String>, err: impl fmt::Display) -> Self {
        Self { name: format!("{} [error: {err}]", name.into()), measured: f64::NAN, bound: (0.0, 0.0), pass: false }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let bound = match self.bound {
            (lo, hi) if lo == f64::NEG_INFINITY => format!("<= {hi:e}"),
            (lo, hi) if hi == f64::INFINITY => format!(">= {lo:e}"),
            (lo, hi) => format!("in [{lo:e}, {hi:e}]"),
        };
        write!(f, "{status} {}: {:.6e} ({bound})", self.name, self.measured)
    }
}

fn rotating(omega: f64, theta: f64) -> Result<(RotatingModelParams, adiabatic_duality::models::RotatingModel)> {
    let p = RotatingModelParams::new(1.0, omega, theta)?;
    Ok((p, rotating_hamiltonian(p)?))
}

fn traced<S: HamiltonianSource + ?Sized>(src: &S, grid: TimeGrid) -> Result<(PropagatorTrace, EigenFrame)> {
    Ok((propagate(src, grid, Method::Midpoint2)?, build_eigenframe(src, grid)?))
}

fn collect(out: &mut Vec<Check>, name: &str, f: impl FnOnce() -> Result<Vec<Check>>) {
    match f() {
        Ok(checks) => out.extend(checks),
        Err(e) => out.push(Check::failed(name, e)),
    }
}

/// Flipping the exponent sign of the dual coupling must be detected by the
/// finite-difference cross-check, otherwise the check has no teeth.
pub fn dual_coupling_sign_residuals(flip: bool) -> Result<f64> {
    let (_, src) = rotating(0.1, PI / 3.0)?;
    let grid = TimeGrid::covering(30.0, 1e-3)?;
    let (trace, frame) = traced(&src, grid)?;
    let dual = build_dual_frame(&trace, &frame)?;
    let mut worst = 0.0_f64;
    for k in (1..grid.steps).step_by(997) {
        let base = coupling_matrix(&frame, k)?;
        let measured = dual.coupling(k)?;
        for (n, m) in [(0, 1), (1, 0)] {
            let expected = if flip {
                base.get(n, m) * cis(frame.phase_integrals[m][k] - frame.phase_integrals[n][k])
            } else {
                dual_coupling(&frame, k)?.get(n, m)
            };
            worst = worst.max((expected - measured[(n, m)]).norm());
        }
    }
    Ok(worst)
}

fn fast_checks(out: &mut Vec<Check>, seed: u64) {
    collect(out, "unitarity", || {
        let (_, src) = rotating(0.1, FRAC_PI_4)?;
        let grid = TimeGrid::covering(20.0 * PI, 1e-3)?;
        let mut checks = Vec::new();
        for method in [Method::Midpoint2, Method::Magnus4] {
            let trace = propagate(&src, grid, method)?;
            let worst = trace.u.iter().map(ComplexMatrix::unitarity_residual).fold(0.0, f64::max);
            checks.push(Check::at_most(format!("unitarity ({method})"), worst, 1e-12));
        }
        Ok(checks)
    });

    collect(out, "eigen reconstruction (2x2)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..500 {
            let m = random_hermitian(&mut rng, 2, 1.0);
            let eig = eig_hermitian(&m)?;
            worst = worst.max((&eig.reconstruct() - &m).frobenius_norm() / m.frobenius_norm().max(1e-300));
        }
        Ok(vec![Check::at_most("eigen reconstruction (2x2, relative)", worst, 1e-12)])
    });

    collect(out, "duality identity", || {
        let (_, src) = rotating(0.1, FRAC_PI_4)?;
        let grid = TimeGrid::covering(20.0 * PI, 1e-3)?;
        let trace = propagate(&src, grid, Method::Midpoint2)?;
        let dual = propagate(&dual_source(&src, &trace), grid, Method::Midpoint2)?;
        Ok(vec![Check::at_most("duality identity ||U_H - U^dagger||", max_adjoint_mismatch(&dual, &trace)?, 1e-6)])
    });

    collect(out, "equivalence identity", || {
        let mut worst = 0.0_f64;
        for theta in [0.01, FRAC_PI_4, PI / 3.0] {
            let (_, src) = rotating(0.1, theta)?;
            let (trace, frame) = traced(&src, TimeGrid::covering(20.0, 1e-2)?)?;
            for k in 0..frame.grid.len() {
                worst = worst.max(equivalence_residual(&trace, &frame, k)?);
            }
        }
        Ok(vec![Check::at_most("equivalence identity W = U^dagger U_adia V^dagger", worst, 1e-12)])
    });

    collect(out, "coupling", || {
        let (_, src) = rotating(0.1, FRAC_PI_4)?;
        let frame = build_eigenframe(&src, TimeGrid::covering(20.0 * PI, 1e-3)?)?;
        let mut worst = 0.0_f64;
        for k in 1..frame.grid.steps {
            worst = worst.max(coupling_matrix(&frame, k)?.derivative_antihermiticity_residual());
        }
        let phi0 = ComplexVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let long = build_eigenframe(&src, TimeGrid::new(0.0, 1e-3, 100_000)?)?;
        let drift_h = integrate_h_frame(&long, &phi0)?.max_norm_drift();
        let drift_dual = integrate_dual_frame(&long, &phi0)?.max_norm_drift();
        Ok(vec![
            Check::at_most("anti-Hermiticity of <n|d/dt|m>", worst, 1e-8),
            Check::at_most("norm conservation, h frame (1e5 steps)", drift_h, 1e-10),
            Check::at_most("norm conservation, dual frame (1e5 steps)", drift_dual, 1e-10),
        ])
    });

    collect(out, "dual coupling", || {
        Ok(vec![
            Check::at_most("dual coupling vs dual-frame differences", dual_coupling_sign_residuals(false)?, 1e-5),
            Check::at_least(
                "mutation: flipped dual-coupling phase is detected",
                dual_coupling_sign_residuals(true)?,
                1e-2,
            ),
        ])
    });

    collect(out, "resonance", || {
        let (_, src) = rotating(0.01, FRAC_PI_4)?;
        let frame = build_eigenframe(&src, TimeGrid::covering(10.0 * 2.0 * PI / 0.01, 0.05)?)?;
        let h = resonance_report(&frame, FrameMode::HFrame, Thresholds::default())?;
        let d = resonance_report(&frame, FrameMode::DualFrame, Thresholds::default())?;
        let ratio_h = h.verdict_ratio.unwrap_or(f64::INFINITY);
        let ratio_d = d.verdict_ratio.unwrap_or(f64::INFINITY);
        let mut checks = vec![
            Check::at_most("resonance ratio, h frame", ratio_h, 0.01),
            Check::within("resonance ratio, dual frame (tan theta = 1)", ratio_d, 0.95, 1.05),
        ];
        checks.push(Check::at_least(
            "verdict h frame is adiabatic",
            f64::from(u8::from(h.verdict == Verdict::Adiabatic)),
            1.0,
        ));
        checks.push(Check::at_least(
            "verdict dual frame is resonant",
            f64::from(u8::from(d.verdict == Verdict::Resonant)),
            1.0,
        ));
        Ok(checks)
    });

    collect(out, "fidelity", || {
        let mut checks = Vec::new();
        let (_, src) = rotating(0.01, FRAC_PI_4)?;
        let (trace, frame) = traced(&src, TimeGrid::covering(2.0 * PI / 0.01, 0.01)?)?;
        let psi0 = frame.vector(0, 0).clone();
        let f = fidelity_trace(&trace, |k| adiabatic_propagator(&frame, k), &psi0)?;
        checks.push(Check::at_least("h-frame adiabatic fidelity (omega = 0.01)", min_fidelity(&f), 0.999));
        for (theta, lower, upper) in [(0.01, 0.999, 1.0 + 1e-10), (PI / 3.0, 0.23, 0.27)] {
            let (_, src) = rotating(0.05, theta)?;
            let (trace, frame) = traced(&src, TimeGrid::covering(2.0 * PI / 0.05, 0.01)?)?;
            let psi0 = frame.vector(1, 0).clone();
            let f = fidelity_trace(&trace.adjoint_trace(), |k| w_dagger(&trace, &frame, k), &psi0)?;
            checks.push(Check::within(
                format!("dual-frame adiabatic fidelity (theta = {theta:.4})"),
                min_fidelity(&f),
                lower,
                upper,
            ));
        }
        Ok(checks)
    });

    collect(out, "nu", || {
        let (p, src) = rotating(0.1, FRAC_PI_4)?;
        let trace = propagate(&src, TimeGrid::covering(40.0 * PI, 0.01)?, Method::Midpoint2)?;
        let nu = nu_check(&src, &trace, (0, 0), Some(&p))?;
        Ok(vec![Check::at_most("nu spectral peak offset (bins)", (nu.measured - p.nu()).abs() / nu.bin_width, 1.0)])
    });

    collect(out, "inconsistency", || {
        let (_, src) = rotating(0.1, FRAC_PI_4)?;
        let (trace, frame) = traced(&src, TimeGrid::covering(PI / 0.1, 1e-3)?)?;
        let k = frame.grid.steps;
        let id = ComplexMatrix::identity(2);
        let d = (&inconsistency_operator(&frame, k)? - &id).frobenius_norm();
        let exact = (&(&trace.u[k] * &trace.u[k].adjoint()) - &id).frobenius_norm();
        Ok(vec![
            Check::at_least("inconsistency ||U_adia V^dagger - I||", d, 0.5),
            Check::at_most("consistency ||U U^dagger - I||", exact, 1e-12),
        ])
    });

    collect(out, "h2 re-propagation", || {
        let (_, src) = rotating(0.1, FRAC_PI_4)?;
        let frame = build_eigenframe(&src, TimeGrid::covering(2.0 * PI, 1e-4)?)?;
        let (h2, _) = h2_adia_source(&frame)?;
        let trace = propagate(&h2, frame.grid, Method::Midpoint2)?;
        let mut worst = 0.0_f64;
        for k in 0..frame.grid.len() {
            worst = worst.max((&trace.u[k] - &adiabatic_propagator(&frame, k)?.adjoint()).frobenius_norm());
        }
        Ok(vec![Check::at_most("H2 re-propagation vs U_adia^dagger", worst, 1e-6)])
    });
}

fn min_fidelity(f: &[(f64, f64)]) -> f64 {
    f.iter().map(|x| x.1).fold(f64::INFINITY, f64::min)
}

fn endpoint_error(method: Method, t_end: f64, dt: f64) -> Result<f64> {
    let (p, src) = rotating(0.1, FRAC_PI_4)?;
    let grid = TimeGrid::covering(t_end, dt)?;
    let trace = propagate(&src, grid, method)?;
    Ok((&trace.u[grid.steps] - &rotating_exact_propagator(&p, grid.t_end())?).frobenius_norm())
}

fn full_checks(out: &mut Vec<Check>, seed: u64) {
    for offset in 0..3 {
        let s = seed.wrapping_add(offset);
        collect(out, &format!("random 4x4 (seed {s})"), || {
            let src = random_smooth_hamiltonian(s, 4, 10.0, 401);
            let grid = TimeGrid::covering(10.0, 1e-3)?;
            let (trace, frame) = traced(&src, grid)?;
            let mut equivalence = 0.0_f64;
            let mut reconstruction = 0.0_f64;
            for k in 0..grid.len() {
                equivalence = equivalence.max(equivalence_residual(&trace, &frame, k)?);
            }
            for k in (0..grid.len()).step_by(97) {
                let h = src.evaluate(grid.time(k))?;
                reconstruction =
                    reconstruction.max((&eig_hermitian(&h)?.reconstruct() - &h).frobenius_norm() / h.frobenius_norm());
            }
            let dual = propagate(&dual_source(&src, &trace), grid, Method::Midpoint2)?;
            Ok(vec![
                Check::at_most(format!("equivalence identity, random 4x4 seed {s}"), equivalence, 1e-12),
                Check::at_most(format!("eigen reconstruction, random 4x4 seed {s}"), reconstruction, 1e-12),
                Check::at_most(format!("unitarity, random 4x4 seed {s}"), trace.max_unitarity_residual, 1e-12),
                Check::at_most(
                    format!("duality identity, random 4x4 seed {s}"),
                    max_adjoint_mismatch(&dual, &trace)?,
                    1e-6,
                ),
            ])
        });
    }

    collect(out, "convergence order", || {
        let mid =
            endpoint_error(Method::Midpoint2, 20.0 * PI, 1e-3)? / endpoint_error(Method::Midpoint2, 20.0 * PI, 5e-4)?;
        let magnus = endpoint_error(Method::Magnus4, 20.0, 0.1)? / endpoint_error(Method::Magnus4, 20.0, 0.05)?;
        let (_, src) = rotating(0.1, FRAC_PI_4)?;
        let duality = |dt: f64| -> Result<f64> {
            let grid = TimeGrid::covering(20.0 * PI, dt)?;
            let trace = propagate(&src, grid, Method::Midpoint2)?;
            max_adjoint_mismatch(&propagate(&dual_source(&src, &trace), grid, Method::Midpoint2)?, &trace)
        };
        let dual_ratio = duality(1e-3)? / duality(5e-4)?;
        Ok(vec![
            Check::within("midpoint2 order ratio (halving dt)", mid, 3.5, 4.5),
            Check::within("magnus4 order ratio (halving dt)", magnus, 14.0, 18.0),
            Check::within("duality residual ratio (halving dt)", dual_ratio, 3.5, 4.5),
        ])
    });
}

pub fn run_checks(level: Level, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    fast_checks(&mut out, seed);
    if level == Level::Full {
        full_checks(&mut out, seed);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_bounds() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::at_least("b", 0.4, 0.5).pass);
        assert!(Check::within("c", 4.0, 3.5, 4.5).pass);
        assert!(!Check::within("d", f64::NAN, 3.5, 4.5).pass);
        assert!(Check::at_most("e", 2e-13, 1e-12).to_string().starts_with("PASS e: 2.000000e-13 (<= 1e-12)"));
    }

    #[test]
    fn mutation_is_detected() {
        assert!(dual_coupling_sign_residuals(false).unwrap() <= 1e-5);
        assert!(dual_coupling_sign_residuals(true).unwrap() >= 1e-2);
    }
}
