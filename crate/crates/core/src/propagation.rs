//! Exactly unitary time stepping of `i ∂t U = h(t) U`, `U(t_start) = I`, and
//! the dual Hamiltonian `H(t) = −U†(t) h(t) U(t)` whose evolution is `U†(t)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian_generator, ComplexMatrix, C64};

/// Relative Hermiticity tolerance applied to every source evaluation.
pub const SOURCE_HERMITIAN_TOL: f64 = 1e-10;

/// Uniform grid `t_k = t_start + k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t_start.is_finite() || steps == 0 {
            return Err(Error::InvalidParams(format!(
                "time grid needs dt > 0 and steps > 0 (dt = {dt}, steps = {steps})"
            )));
        }
        Ok(Self { t_start, dt, steps })
    }

    /// Grid on `[0, t_end]` with `round(t_end/dt)` steps.
    pub fn covering(t_end: f64, dt: f64) -> Result<Self> {
        let steps = (t_end / dt).round();
        if !(steps >= 1.0) {
            return Err(Error::InvalidParams(format!("t_end = {t_end} is shorter than dt = {dt}")));
        }
        Self::new(0.0, dt, steps as usize)
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Number of nodes, `steps + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Grid with the same span and twice as many steps.
    pub fn refined(&self) -> Self {
        Self { t_start: self.t_start, dt: self.dt / 2.0, steps: self.steps * 2 }
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: k, valid: format!("0..={}", self.steps) })
        }
    }

    pub(crate) fn check_interior(&self, k: usize) -> Result<()> {
        if k > 0 && k < self.steps {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: k, valid: format!("1..{}", self.steps) })
        }
    }

    pub(crate) fn nearest_node(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.dt).round();
        k.clamp(0.0, self.steps as f64) as usize
    }
}

/// A time-dependent Hermitian matrix `t ↦ h(t)`.
pub trait HamiltonianSource: Send + Sync {
    fn dim(&self) -> usize;

    /// Closed interval on which the source is defined; `None` for all `t`.
    fn window(&self) -> Option<(f64, f64)> {
        None
    }

    /// Unchecked evaluation.
    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix>;

    /// Evaluation guarded by the window and a relative Hermiticity check.
    fn evaluate(&self, t: f64) -> Result<ComplexMatrix> {
        if let Some((start, end)) = self.window() {
            let slack = 1e-9 * (end - start).abs().max(1.0);
            if t < start - slack || t > end + slack {
                return Err(Error::SourceOutOfWindow { t, start, end });
            }
        }
        let m = self.matrix_at(t)?;
        let residual = m.hermiticity_residual();
        if residual > SOURCE_HERMITIAN_TOL * m.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(m)
    }
}

impl<T: HamiltonianSource + ?Sized> HamiltonianSource for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn window(&self) -> Option<(f64, f64)> {
        (**self).window()
    }
    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix> {
        (**self).matrix_at(t)
    }
}

impl<T: HamiltonianSource + ?Sized> HamiltonianSource for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn window(&self) -> Option<(f64, f64)> {
        (**self).window()
    }
    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix> {
        (**self).matrix_at(t)
    }
}

/// Source backed by a closure.
pub struct FnSource<F> {
    dim: usize,
    window: Option<(f64, f64)>,
    f: F,
}

impl<F> FnSource<F>
where
    F: Fn(f64) -> ComplexMatrix + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, window: None, f }
    }

    pub fn with_window(mut self, start: f64, end: f64) -> Self {
        self.window = Some((start, end));
        self
    }
}

impl<F> HamiltonianSource for FnSource<F>
where
    F: Fn(f64) -> ComplexMatrix + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn window(&self) -> Option<(f64, f64)> {
        self.window
    }
    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix> {
        Ok((self.f)(t))
    }
}

/// Time-independent source.
#[derive(Debug, Clone)]
pub struct ConstantSource(pub ComplexMatrix);

impl HamiltonianSource for ConstantSource {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn matrix_at(&self, _t: f64) -> Result<ComplexMatrix> {
        Ok(self.0.clone())
    }
}

/// Step rule of [`propagate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exponential midpoint rule, second order.
    Midpoint2,
    /// Two-point Gauss–Legendre Magnus integrator, fourth order.
    Magnus4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Midpoint2 => "midpoint2",
            Method::Magnus4 => "magnus4",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "midpoint2" => Ok(Method::Midpoint2),
            "magnus4" => Ok(Method::Magnus4),
            other => Err(format!("unknown method `{other}` (expected midpoint2 or magnus4)")),
        }
    }
}

/// `U(t_k)` on a grid.
#[derive(Debug, Clone)]
pub struct PropagatorTrace {
    pub grid: TimeGrid,
    pub method: Method,
    pub u: Vec<ComplexMatrix>,
    /// Running `∫ ε_n dt′` per level, present once an eigenframe is attached.
    pub phase_integrals: Option<Vec<Vec<f64>>>,
    pub max_unitarity_residual: f64,
}

impl PropagatorTrace {
    pub fn dim(&self) -> usize {
        self.u[0].dim()
    }

    pub fn at(&self, k: usize) -> Result<&ComplexMatrix> {
        self.grid.check_index(k)?;
        Ok(&self.u[k])
    }

    /// The trace of `U†(t_k)`, i.e. the exact evolution of the dual
    /// Hamiltonian.
    pub fn adjoint_trace(&self) -> Self {
        Self {
            grid: self.grid,
            method: self.method,
            u: self.u.iter().map(ComplexMatrix::adjoint).collect(),
            phase_integrals: None,
            max_unitarity_residual: self.max_unitarity_residual,
        }
    }

    /// Attaches per-level phase integrals, one row per level with one entry
    /// per grid node.
    pub fn attach_phase_integrals(&mut self, integrals: Vec<Vec<f64>>) -> Result<()> {
        if let Some(bad) = integrals.iter().find(|row| row.len() != self.grid.len()) {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), found: bad.len() });
        }
        self.phase_integrals = Some(integrals);
        Ok(())
    }
}

/// Step generator for one interval: the Hermitian `M` with
/// `U(t + dt) ≈ exp(−i·M·dt)·U(t)`.
fn step_generator<S>(src: &S, t: f64, dt: f64, method: Method) -> Result<ComplexMatrix>
where
    S: HamiltonianSource + ?Sized,
{
    match method {
        Method::Midpoint2 => src.evaluate(t + 0.5 * dt),
        Method::Magnus4 => {
            let offset = 3f64.sqrt() / 6.0;
            let h1 = src.evaluate(t + (0.5 - offset) * dt)?;
            let h2 = src.evaluate(t + (0.5 + offset) * dt)?;
            let average = (&h1 + &h2).scale_real(0.5);
            let correction = h2.commutator(&h1).scale(C64::new(0.0, -3f64.sqrt() / 12.0 * dt));
            Ok((&average + &correction).symmetrized())
        }
    }
}

/// Propagates `U` from the identity across `grid`.
pub fn propagate<S>(src: &S, grid: TimeGrid, method: Method) -> Result<PropagatorTrace>
where
    S: HamiltonianSource + ?Sized,
{
    if let Some((start, end)) = src.window() {
        let slack = 1e-9 * (end - start).abs().max(1.0);
        for t in [grid.t_start, grid.t_end()] {
            if t < start - slack || t > end + slack {
                return Err(Error::SourceOutOfWindow { t, start, end });
            }
        }
    }
    let dim = src.dim();
    let mut u = Vec::with_capacity(grid.len());
    u.push(ComplexMatrix::identity(dim));
    let mut max_residual = 0.0_f64;
    for k in 0..grid.steps {
        let generator = step_generator(src, grid.time(k), grid.dt, method)?;
        let step = expm_hermitian_generator(&generator, grid.dt)?;
        let mut next = &step * &u[k];
        let mut residual = next.unitarity_residual();
        // Rounding in 10^5+ products drifts off the unitary group; one
        // Newton–Schulz step pulls it back quadratically.
        if residual > 1e-14 {
            next = next.reunitarized();
            residual = next.unitarity_residual();
        }
        max_residual = max_residual.max(residual);
        u.push(next);
    }
    Ok(PropagatorTrace { grid, method, u, phase_integrals: None, max_unitarity_residual: max_residual })
}

fn conjugated_dual(h: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    let dual = -&(&(&u.adjoint() * h) * u);
    debug_assert!(dual.hermiticity_residual() <= 1e-12 * h.frobenius_norm().max(1.0));
    dual.symmetrized()
}

/// `H(t_k) = −U†(t_k)·h(t_k)·U(t_k)`.
pub fn dual_hamiltonian_at<S>(src: &S, trace: &PropagatorTrace, k: usize) -> Result<ComplexMatrix>
where
    S: HamiltonianSource + ?Sized,
{
    let u = trace.at(k)?;
    let h = src.evaluate(trace.grid.time(k))?;
    Ok(conjugated_dual(&h, u))
}

/// The dual Hamiltonian as a source on the trace's window.
///
/// Between nodes `U` is advanced from the nearest node by one midpoint
/// sub-step, so the evaluated operator stays exactly Hermitian.
pub struct DualSource<'a, S: ?Sized> {
    src: &'a S,
    trace: &'a PropagatorTrace,
}

pub fn dual_source<'a, S>(src: &'a S, trace: &'a PropagatorTrace) -> DualSource<'a, S>
where
    S: HamiltonianSource + ?Sized,
{
    DualSource { src, trace }
}

impl<S> DualSource<'_, S>
where
    S: HamiltonianSource + ?Sized,
{
    /// `U(t)` reconstructed from the nearest node.
    pub fn propagator_at(&self, t: f64) -> Result<ComplexMatrix> {
        let grid = self.trace.grid;
        let k = grid.nearest_node(t);
        let offset = t - grid.time(k);
        if offset == 0.0 {
            return Ok(self.trace.u[k].clone());
        }
        let h = self.src.evaluate(grid.time(k) + 0.5 * offset)?;
        Ok(&expm_hermitian_generator(&h, offset)? * &self.trace.u[k])
    }
}

impl<S> HamiltonianSource for DualSource<'_, S>
where
    S: HamiltonianSource + ?Sized,
{
    fn dim(&self) -> usize {
        self.trace.dim()
    }

    fn window(&self) -> Option<(f64, f64)> {
        Some((self.trace.grid.t_start, self.trace.grid.t_end()))
    }

    fn matrix_at(&self, t: f64) -> Result<ComplexMatrix> {
        let u = self.propagator_at(t)?;
        let h = self.src.evaluate(t)?;
        Ok(conjugated_dual(&h, &u))
    }
}

/// `max_k ‖A[k] − B[k]†‖_F` over two traces on the same grid.
pub fn max_adjoint_mismatch(a: &PropagatorTrace, b: &PropagatorTrace) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.u.iter().zip(&b.u).map(|(x, y)| (x - &y.adjoint()).frobenius_norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, sigma_x, sigma_z};

    #[test]
    fn grid_nodes() {
        let grid = TimeGrid::new(1.0, 0.25, 8).unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid.time(4), 2.0);
        assert_eq!(grid.t_end(), 3.0);
        assert_eq!(grid.nearest_node(1.6), 2);
        assert!(TimeGrid::new(0.0, 0.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 0).is_err());
    }

    #[test]
    fn constant_source_matches_exponential() {
        let h0 = sigma_z().scale_real(0.5);
        let grid = TimeGrid::new(0.0, 0.01, 100).unwrap();
        for method in [Method::Midpoint2, Method::Magnus4] {
            let trace = propagate(&ConstantSource(h0.clone()), grid, method).unwrap();
            let expected = expm_hermitian_generator(&h0, 1.0).unwrap();
            assert!((&trace.u[100] - &expected).frobenius_norm() < 1e-10);
            assert!(trace.max_unitarity_residual <= 1e-12);
        }
    }

    #[test]
    fn dual_at_first_node_is_negated_source() {
        let src = FnSource::new(2, |t: f64| (&sigma_z() + &sigma_x().scale_real(t.sin())).scale_real(0.5));
        let grid = TimeGrid::new(0.0, 0.01, 50).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let dual0 = dual_hamiltonian_at(&src, &trace, 0).unwrap();
        assert!((&dual0 + &src.evaluate(0.0).unwrap()).frobenius_norm() < 1e-15);

        let h = eig_hermitian(&src.evaluate(grid.time(37)).unwrap()).unwrap();
        let dual = eig_hermitian(&dual_hamiltonian_at(&src, &trace, 37).unwrap()).unwrap();
        for (a, b) in h.values.iter().zip(dual.values.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
        assert!(matches!(dual_hamiltonian_at(&src, &trace, 51), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn dual_source_agrees_with_nodes() {
        let src = FnSource::new(2, |t: f64| (&sigma_z() + &sigma_x().scale_real(t.cos())).scale_real(0.5));
        let grid = TimeGrid::new(0.0, 0.05, 40).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let dual = dual_source(&src, &trace);
        for k in [0, 7, 40] {
            let at_node = dual_hamiltonian_at(&src, &trace, k).unwrap();
            assert_eq!(dual.evaluate(grid.time(k)).unwrap(), at_node);
        }
        assert!(matches!(dual.evaluate(2.5), Err(Error::SourceOutOfWindow { .. })));
        assert!(dual.evaluate(1.01).unwrap().hermiticity_residual() == 0.0);
    }

    #[test]
    fn window_is_enforced() {
        let src = FnSource::new(2, |_| sigma_z()).with_window(0.0, 1.0);
        let grid = TimeGrid::new(0.0, 0.1, 20).unwrap();
        assert!(matches!(propagate(&src, grid, Method::Midpoint2), Err(Error::SourceOutOfWindow { .. })));
    }

    #[test]
    fn non_hermitian_evaluation_is_rejected() {
        let src = FnSource::new(2, |_| {
            ComplexMatrix::from_rows([
                [C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
                [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            ])
        });
        assert!(matches!(src.evaluate(0.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn method_round_trips_through_strings() {
        for m in [Method::Midpoint2, Method::Magnus4] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("rk4".parse::<Method>().is_err());
    }
}
