//! The dual eigenframe and the operators built from it.
//!
//! If `|n(t)⟩` is an eigenvector of `h(t)` with eigenvalue `ε_n`, then
//! `U†(t)|n(t)⟩` is an eigenvector of `H(t) = −U†hU` with eigenvalue `−ε_n`.
//! Multiplying by `exp(−i∫ε_n)` puts those vectors in parallel-transport gauge.
//!
//! Two approximations to `U†` are compared here:
//!
//! - `V†(t) = Σ_n |n(0)⟩⟨n(0)|·exp(+i∫ε_n)`, the evolution under
//!   `H⁽¹⁾_adia = −U_adia†·h·U_adia`;
//! - `W†(t) = Σ_n U†(t)|n(t)⟩⟨n(0)|`, the adiabatic approximation applied to
//!   `H` in its own eigenframe.
//!
//! They are tied by the exact identity `W† = U†·U_adia·V†`, so the deviation
//! of `U_adia·V†` from the identity measures both at once.

use crate::error::{Error, Result};
use crate::linalg::{cis, ComplexMatrix, ComplexVector, C64, ZERO};
use crate::models::{sampled_hamiltonian, SampledHamiltonian};
use crate::propagation::{HamiltonianSource, PropagatorTrace, TimeGrid};
use crate::spectral_flow::{adiabatic_propagator, EigenFrame};

/// Eigenvectors of the dual Hamiltonian must satisfy `H v = −ε v` to this
/// absolute residual.
pub const DUAL_EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Eigenvalues `−ε_n(t_k)` and vectors `U†(t_k)|n(t_k)⟩·exp(−i∫ε_n)`.
#[derive(Debug, Clone)]
pub struct DualEigenFrame {
    pub grid: TimeGrid,
    /// `eps_h[n][k]`.
    pub eps_h: Vec<Vec<f64>>,
    /// `vectors_h[k][n]`.
    pub vectors_h: Vec<Vec<ComplexVector>>,
    pub max_eigen_residual: f64,
}

impl DualEigenFrame {
    pub fn levels(&self) -> usize {
        self.eps_h.len()
    }

    pub fn vector(&self, n: usize, k: usize) -> &ComplexVector {
        &self.vectors_h[k][n]
    }

    /// Centered-difference `−i⟨n;H|∂t|m;H⟩` at an interior node, diagonal
    /// included. The diagonal is the gauge connection, zero in the
    /// continuum parallel-transport gauge.
    pub fn coupling(&self, k: usize) -> Result<ComplexMatrix> {
        self.grid.check_interior(k)?;
        let scale = C64::new(0.0, -0.5 / self.grid.dt);
        Ok(ComplexMatrix::from_fn(self.levels(), |i, j| {
            let diff = self.vectors_h[k + 1][j].sub(&self.vectors_h[k - 1][j]);
            self.vectors_h[k][i].inner(&diff) * scale
        }))
    }

    /// `max_{n, interior k} |⟨n;H|∂t|n;H⟩|`.
    pub fn max_gauge_connection(&self) -> f64 {
        (1..self.grid.steps)
            .filter_map(|k| self.coupling(k).ok())
            .flat_map(|a| (0..a.dim()).map(move |n| a[(n, n)].norm()))
            .fold(0.0, f64::max)
    }
}

fn check_shared_grid(trace: &PropagatorTrace, frame: &EigenFrame) -> Result<()> {
    if trace.grid != frame.grid || trace.u.len() != frame.vectors.len() {
        return Err(Error::GridMismatch);
    }
    if trace.dim() != frame.vectors[0][0].dim() {
        return Err(Error::DimensionMismatch { expected: frame.vectors[0][0].dim(), found: trace.dim() });
    }
    Ok(())
}

/// `h(t_k)` rebuilt from its eigenframe.
fn spectral_sum(frame: &EigenFrame, k: usize) -> ComplexMatrix {
    let dim = frame.vectors[0][0].dim();
    (0..frame.levels()).fold(ComplexMatrix::zeros(dim), |acc, n| {
        let v = &frame.vectors[k][n];
        &acc + &ComplexMatrix::outer(v, v).scale_real(frame.eps[n][k])
    })
}

/// Builds the dual eigenframe and checks each vector against
/// `H(t_k) = −U†(t_k)·h(t_k)·U(t_k)`.
pub fn build_dual_frame(trace: &PropagatorTrace, frame: &EigenFrame) -> Result<DualEigenFrame> {
    check_shared_grid(trace, frame)?;
    let eps_h: Vec<Vec<f64>> = frame.eps.iter().map(|row| row.iter().map(|e| -e).collect()).collect();
    let mut vectors_h = Vec::with_capacity(frame.grid.len());
    let mut max_residual = 0.0_f64;
    for k in 0..frame.grid.len() {
        let u_dag = trace.u[k].adjoint();
        let dual = -&(&(&u_dag * &spectral_sum(frame, k)) * &trace.u[k]);
        let mut row = Vec::with_capacity(frame.levels());
        for n in 0..frame.levels() {
            let v = u_dag.apply(&frame.vectors[k][n]).scale(cis(-frame.phase_integrals[n][k]));
            let residual = dual.apply(&v).sub(&v.scale(C64::new(eps_h[n][k], 0.0))).norm();
            max_residual = max_residual.max(residual);
            row.push(v);
        }
        vectors_h.push(row);
    }
    if max_residual > DUAL_EIGEN_RESIDUAL_TOL {
        return Err(Error::EigenResidualTooLarge { residual: max_residual });
    }
    Ok(DualEigenFrame { grid: frame.grid, eps_h, vectors_h, max_eigen_residual: max_residual })
}

/// `V†(t_k) = Σ_n |n(0)⟩⟨n(0)|·exp(+i∫ε_n)`.
pub fn v_dagger(frame: &EigenFrame, k: usize) -> Result<ComplexMatrix> {
    frame.grid.check_index(k)?;
    let dim = frame.vectors[0][0].dim();
    Ok((0..frame.levels()).fold(ComplexMatrix::zeros(dim), |acc, n| {
        let v = &frame.vectors[0][n];
        &acc + &ComplexMatrix::outer(v, v).scale(cis(frame.phase_integrals[n][k]))
    }))
}

/// `W†(t_k) = Σ_n U†(t_k)|n(t_k)⟩⟨n(0)|`.
pub fn w_dagger(trace: &PropagatorTrace, frame: &EigenFrame, k: usize) -> Result<ComplexMatrix> {
    check_shared_grid(trace, frame)?;
    frame.grid.check_index(k)?;
    let u_dag = trace.u[k].adjoint();
    let dim = trace.dim();
    Ok((0..frame.levels()).fold(ComplexMatrix::zeros(dim), |acc, n| {
        &acc + &ComplexMatrix::outer(&u_dag.apply(&frame.vectors[k][n]), &frame.vectors[0][n])
    }))
}

/// `U_adia(t_k)·V†(t_k) = Σ_n |n(t_k)⟩⟨n(0)|`; the identity only while the
/// eigenvectors stay put.
pub fn inconsistency_operator(frame: &EigenFrame, k: usize) -> Result<ComplexMatrix> {
    frame.grid.check_index(k)?;
    let dim = frame.vectors[0][0].dim();
    Ok((0..frame.levels()).fold(ComplexMatrix::zeros(dim), |acc, n| {
        &acc + &ComplexMatrix::outer(&frame.vectors[k][n], &frame.vectors[0][n])
    }))
}

/// `‖W†(t_k) − U†(t_k)·U_adia(t_k)·V†(t_k)‖_F`, zero up to rounding.
pub fn equivalence_residual(trace: &PropagatorTrace, frame: &EigenFrame, k: usize) -> Result<f64> {
    let w = w_dagger(trace, frame, k)?;
    let composed = &(&trace.u[k].adjoint() * &adiabatic_propagator(frame, k)?) * &v_dagger(frame, k)?;
    Ok((&w - &composed).frobenius_norm())
}

/// `H⁽¹⁾_adia(t_k) = −U_adia†·h(t_k)·U_adia`, whose evolution is `V†`.
pub fn h1_adia<S>(frame: &EigenFrame, src: &S, k: usize) -> Result<ComplexMatrix>
where
    S: HamiltonianSource + ?Sized,
{
    let u = adiabatic_propagator(frame, k)?;
    let h = src.evaluate(frame.grid.time(k))?;
    Ok((-&(&(&u.adjoint() * &h) * &u)).symmetrized())
}

/// `H⁽²⁾_adia` at one node together with the anti-Hermitian part that the
/// finite difference left behind.
#[derive(Debug, Clone)]
pub struct H2Adia {
    pub matrix: ComplexMatrix,
    /// `‖M − M†‖_F / 2` before Hermitization.
    pub asymmetry: f64,
}

fn hermitize(raw: ComplexMatrix) -> H2Adia {
    let asymmetry = 0.5 * (&raw - &raw.adjoint()).frobenius_norm();
    H2Adia { matrix: raw.symmetrized(), asymmetry }
}

fn h2_from_derivative(u: &ComplexMatrix, du: &ComplexMatrix) -> H2Adia {
    hermitize((&u.adjoint() * du).scale(C64::new(0.0, -1.0)))
}

/// `H⁽²⁾_adia(t_k) = −i·U_adia†·∂t U_adia` with a centered difference; its
/// evolution is `U_adia†`.
pub fn h2_adia(frame: &EigenFrame, k: usize) -> Result<H2Adia> {
    frame.grid.check_interior(k)?;
    let u = adiabatic_propagator(frame, k)?;
    let du =
        (&adiabatic_propagator(frame, k + 1)? - &adiabatic_propagator(frame, k - 1)?).scale_real(0.5 / frame.grid.dt);
    Ok(h2_from_derivative(&u, &du))
}

/// `H⁽²⁾_adia` on every node, with second-order one-sided differences at the
/// two ends, as a piecewise-linear source.
pub fn h2_adia_source(frame: &EigenFrame) -> Result<(SampledHamiltonian, f64)> {
    let grid = frame.grid;
    if grid.steps < 2 {
        return Err(Error::TooFewSamples { required: 3, found: grid.len() });
    }
    let u: Vec<ComplexMatrix> = (0..grid.len()).map(|k| adiabatic_propagator(frame, k)).collect::<Result<_>>()?;
    let inv = 0.5 / grid.dt;
    let last = grid.steps;
    let mut samples = Vec::with_capacity(grid.len());
    let mut max_asymmetry = 0.0_f64;
    for k in 0..grid.len() {
        let du = if k == 0 {
            (&(&u[1].scale_real(4.0) - &u[0].scale_real(3.0)) - &u[2]).scale_real(inv)
        } else if k == last {
            (&(&u[last].scale_real(3.0) - &u[last - 1].scale_real(4.0)) + &u[last - 2]).scale_real(inv)
        } else {
            (&u[k + 1] - &u[k - 1]).scale_real(inv)
        };
        let h2 = h2_from_derivative(&u[k], &du);
        max_asymmetry = max_asymmetry.max(h2.asymmetry);
        samples.push((grid.time(k), h2.matrix));
    }
    Ok((sampled_hamiltonian(samples)?, max_asymmetry))
}

/// `Σ_n φ^H_n·exp(+i∫ε_n)·|n;H(t_k)⟩`, the state carried by dual-frame
/// amplitudes (`∫ε^H_n = −∫ε_n`).
pub fn reconstruct_dual_frame_state(
    dual: &DualEigenFrame,
    frame: &EigenFrame,
    amplitudes: &[C64],
    k: usize,
) -> Result<ComplexVector> {
    dual.grid.check_index(k)?;
    let dim = dual.vectors_h[0][0].dim();
    let mut psi = ComplexVector::new(vec![ZERO; dim]);
    for (n, &a) in amplitudes.iter().enumerate() {
        psi = psi.add(&dual.vectors_h[k][n].scale(a * cis(frame.phase_integrals[n][k])));
    }
    Ok(psi)
}
