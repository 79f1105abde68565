//! Built-in Hamiltonian families.
//!
//! The rotating two-level model is a spin-½ in a field of strength `ω0`
//! tilted by `θ` from the z-axis and precessing about it at frequency `ω`:
//!
//! ```text
//! h(t) = −(ω0/2) · [[cos θ,            sin θ·e^{−iωt}],
//!                   [sin θ·e^{iωt},   −cos θ         ]]
//! ```
//!
//! Because `h(t) = R(t) h(0) R(t)†` with `R(t) = exp(−iωt σz/2)`, the exact
//! propagator factorizes as `U(t) = R(t)·exp(−i h_eff t)` with the constant
//! co-rotating generator `h_eff = h(0) − (ω/2) σz`. Its level splitting is
//! `ν = √(ω0² + ω² + 2 ω0 ω cos θ)`.
//!
//! Note on labels: the spinor returned as `plus` is `(cos θ/2, sin θ/2 e^{iωt})`
//! up to its parallel-transport phase. For the sign of `h(t)` above it is the
//! eigenvector with eigenvalue `−ω0/2`, i.e. the lower branch.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, expm_hermitian_generator, sigma_z, ComplexMatrix, ComplexVector, C64};
use crate::propagation::HamiltonianSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingModelParams {
    /// Level splitting, angular frequency.
    pub omega0: f64,
    /// Rotation frequency of the field.
    pub omega: f64,
    /// Tilt angle in radians.
    pub theta: f64,
}

impl RotatingModelParams {
    pub fn new(omega0: f64, omega: f64, theta: f64) -> Result<Self> {
        let p = Self { omega0, omega, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::InvalidParams(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidParams(format!("omega must be >= 0, got {}", self.omega)));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::InvalidParams(format!("theta must lie in [0, pi], got {}", self.theta)));
        }
        Ok(())
    }

    /// `ν = √(ω0² + ω² + 2 ω0 ω cos θ)`, the splitting of the co-rotating
    /// generator and the oscillation frequency of the dual Hamiltonian.
    pub fn nu(&self) -> f64 {
        (self.omega0 * self.omega0 + self.omega * self.omega + 2.0 * self.omega0 * self.omega * self.theta.cos()).sqrt()
    }

    /// Instantaneous eigenvalues `(ε_plus, ε_minus) = (−ω0/2, +ω0/2)` of the
    /// `plus`/`minus` spinors.
    pub fn spinor_energies(&self) -> (f64, f64) {
        (-0.5 * self.omega0, 0.5 * self.omega0)
    }

    pub fn matrix_at(&self, t: f64) -> ComplexMatrix {
        let (s, c) = self.theta.sin_cos();
        let half = -0.5 * self.omega0;
        let off = cis(-self.omega * t) * (half * s);
        ComplexMatrix::from_rows([[C64::new(half * c, 0.0), off], [off.conj(), C64::new(-half * c, 0.0)]])
    }
}

/// The rotating two-level Hamiltonian as a source.
#[derive(Debug, Clone, Copy)]
pub struct RotatingModel {
    pub params: RotatingModelParams,
}

impl HamiltonianSource for RotatingModel {
    fn dim(&self) -> usize {
        2
    }
    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(self.params.matrix_at(t))
    }
}

pub fn rotating_hamiltonian(p: RotatingModelParams) -> Result<RotatingModel> {
    p.validate()?;
    Ok(RotatingModel { params: p })
}

/// Co-rotating generator `h_eff = h(0) − (ω/2)·σz`.
pub fn effective_hamiltonian(p: &RotatingModelParams) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(&p.matrix_at(0.0) - &sigma_z().scale_real(0.5 * p.omega))
}

/// Closed-form `U(t) = exp(−iωt σz/2)·exp(−i h_eff t)`.
pub fn rotating_exact_propagator(p: &RotatingModelParams, t: f64) -> Result<ComplexMatrix> {
    let frame = expm_hermitian_generator(&sigma_z().scale_real(0.5 * p.omega), t)?;
    let body = expm_hermitian_generator(&effective_hamiltonian(p)?, t)?;
    Ok(&frame * &body)
}

/// Parallel-transport eigenspinors `(plus, minus)`:
///
/// ```text
/// |+(t)⟩ = (cos θ/2,  sin θ/2·e^{iωt}) · exp[−i (ωt/2)(1 − cos θ)]
/// |−(t)⟩ = (−sin θ/2·e^{−iωt}, cos θ/2) · exp[+i (ωt/2)(1 − cos θ)]
/// ```
pub fn rotating_eigenspinors(p: &RotatingModelParams, t: f64) -> Result<(ComplexVector, ComplexVector)> {
    p.validate()?;
    let (s, c) = (0.5 * p.theta).sin_cos();
    let gauge = 0.5 * p.omega * t * (1.0 - p.theta.cos());
    let plus = ComplexVector::new(vec![C64::new(c, 0.0), cis(p.omega * t) * s]).scale(cis(-gauge));
    let minus = ComplexVector::new(vec![cis(-p.omega * t) * (-s), C64::new(c, 0.0)]).scale(cis(gauge));
    Ok((plus, minus))
}

/// `A₊₋(t) = −i⟨+|∂t|−⟩ = (ω/2)·sin θ·e^{−iωt cos θ}`.
pub fn rotating_coupling(p: &RotatingModelParams, t: f64) -> Result<C64> {
    p.validate()?;
    Ok(cis(-p.omega * t * p.theta.cos()) * (0.5 * p.omega * p.theta.sin()))
}

/// Piecewise-linear interpolation of Hermitian samples.
#[derive(Debug, Clone)]
pub struct SampledHamiltonian {
    times: Vec<f64>,
    matrices: Vec<ComplexMatrix>,
}

impl SampledHamiltonian {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }
}

pub fn sampled_hamiltonian(samples: impl IntoIterator<Item = (f64, ComplexMatrix)>) -> Result<SampledHamiltonian> {
    let (times, matrices): (Vec<f64>, Vec<ComplexMatrix>) = samples.into_iter().unzip();
    if times.len() < 2 {
        return Err(Error::TooFewSamples { required: 2, found: times.len() });
    }
    let dim = matrices[0].dim();
    for (i, (t, m)) in times.iter().zip(&matrices).enumerate() {
        if !t.is_finite() {
            return Err(Error::InvalidParams(format!("sample time {i} is not finite")));
        }
        if i > 0 && *t <= times[i - 1] {
            return Err(Error::NonMonotoneTimes { index: i });
        }
        if m.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
        }
        let residual = m.hermiticity_residual();
        if residual > 1e-10 * m.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
    }
    Ok(SampledHamiltonian { times, matrices })
}

impl HamiltonianSource for SampledHamiltonian {
    fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    fn window(&self) -> Option<(f64, f64)> {
        Some((self.times[0], *self.times.last().expect("at least two samples")))
    }

    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix> {
        let (start, end) = self.window().expect("sampled sources are windowed");
        let slack = 1e-9 * (end - start).max(1.0);
        if t < start - slack || t > end + slack {
            return Err(Error::SourceOutOfWindow { t, start, end });
        }
        let t = t.clamp(start, end);
        let upper = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[upper - 1], self.times[upper]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (&self.matrices[upper - 1], &self.matrices[upper]);
        Ok(ComplexMatrix::from_fn(a.dim(), |i, j| a[(i, j)] * (1.0 - w) + b[(i, j)] * w))
    }
}

/// On-disk sampled Hamiltonian: `dim`, ascending `times`, and one row-major
/// list of `[re, im]` pairs (length `dim²`) per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledHamiltonianFile {
    pub dim: usize,
    pub times: Vec<f64>,
    pub matrices: Vec<Vec<[f64; 2]>>,
}

impl SampledHamiltonianFile {
    pub fn into_source(self) -> Result<SampledHamiltonian> {
        if self.times.len() != self.matrices.len() {
            return Err(Error::DimensionMismatch { expected: self.times.len(), found: self.matrices.len() });
        }
        let dim = self.dim;
        let samples = self
            .times
            .into_iter()
            .zip(self.matrices)
            .map(|(t, entries)| {
                let data = entries.into_iter().map(|[re, im]| C64::new(re, im)).collect();
                ComplexMatrix::from_row_major(dim, data).map(|m| (t, m))
            })
            .collect::<Result<Vec<_>>>()?;
        sampled_hamiltonian(samples)
    }

    pub fn from_source_samples(samples: &[(f64, ComplexMatrix)]) -> Self {
        let dim = samples.first().map_or(0, |(_, m)| m.dim());
        Self {
            dim,
            times: samples.iter().map(|(t, _)| *t).collect(),
            matrices: samples.iter().map(|(_, m)| m.as_slice().iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }
}

/// Samples any source on the nodes of `times`.
pub fn sample_source<S>(src: &S, times: impl IntoIterator<Item = f64>) -> Result<Vec<(f64, ComplexMatrix)>>
where
    S: HamiltonianSource + ?Sized,
{
    times.into_iter().map(|t| src.evaluate(t).map(|m| (t, m))).collect()
}
