//! Instantaneous eigenframes along a grid, fixed to the discrete
//! parallel-transport gauge, and the Schrödinger equation written in them.
//!
//! With `|ψ(t)⟩ = Σ_n φ_n(t)·exp(−i∫ε_n)·|n(t)⟩` the amplitudes obey
//!
//! ```text
//! i ∂t φ_n = Σ_{m≠n} A_nm(t)·exp(i∫(ε_n − ε_m))·φ_m,    A_nm = −i⟨n|∂t|m⟩
//! ```
//!
//! The adiabatic approximation drops the right-hand side. The same
//! amplitudes taken in the eigenframe of the dual Hamiltonian obey the same
//! equation *without* the oscillating factor, which is what
//! [`integrate_dual_frame`] solves.

use crate::error::{Error, Result};
use crate::linalg::{cis, eig_hermitian, expm_hermitian_generator, ComplexMatrix, ComplexVector, C64, ZERO};
use crate::propagation::{HamiltonianSource, TimeGrid};

/// Relative gap below which a frame is refused.
pub const MIN_RELATIVE_GAP: f64 = 1e-6;
/// Minimum separation of the two best overlaps when matching branches.
pub const BRANCH_MATCH_MARGIN: f64 = 1e-3;
/// Amplitude vectors passed to the frame integrators must have unit norm to
/// this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Eigenvalues and gauge-fixed eigenvectors along a grid.
#[derive(Debug, Clone)]
pub struct EigenFrame {
    pub grid: TimeGrid,
    /// `eps[n][k] = ε_n(t_k)`, following each branch continuously.
    pub eps: Vec<Vec<f64>>,
    /// `vectors[k][n] = |n(t_k)⟩`.
    pub vectors: Vec<Vec<ComplexVector>>,
    /// `phase_integrals[n][k] = ∫_{t_0}^{t_k} ε_n dt′` by the trapezoid rule.
    pub phase_integrals: Vec<Vec<f64>>,
    /// Smallest level spacing at each node.
    pub min_gap: Vec<f64>,
}

impl EigenFrame {
    pub fn levels(&self) -> usize {
        self.eps.len()
    }

    pub fn vector(&self, n: usize, k: usize) -> &ComplexVector {
        &self.vectors[k][n]
    }

    /// The same frame with branch `n` multiplied by `exp(i·phases[n])`.
    pub fn rephased(&self, phases: &[f64]) -> Self {
        assert_eq!(phases.len(), self.levels(), "one phase per branch");
        let mut out = self.clone();
        for row in &mut out.vectors {
            for (v, &phase) in row.iter_mut().zip(phases) {
                *v = v.scale(cis(phase));
            }
        }
        out
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        self.grid.check_index(k)
    }

    /// Hermitian coupling for the interval `[t_k, t_{k+1}]`, evaluated at its
    /// midpoint: `−i⟨(v_n(k)+v_n(k+1))/2, (v_m(k+1) − v_m(k))/dt⟩`.
    pub(crate) fn midpoint_coupling(&self, k: usize) -> ComplexMatrix {
        let n = self.levels();
        let dt = self.grid.dt;
        let (lo, hi) = (&self.vectors[k], &self.vectors[k + 1]);
        let mut a = ComplexMatrix::from_fn(n, |i, j| {
            if i == j {
                return ZERO;
            }
            let mid = lo[i].add(&hi[i]).scale(C64::new(0.5, 0.0));
            let slope = hi[j].sub(&lo[j]).scale(C64::new(1.0 / dt, 0.0));
            mid.inner(&slope) * C64::new(0.0, -1.0)
        });
        a = a.symmetrized();
        for i in 0..n {
            a[(i, i)] = ZERO;
        }
        a
    }

    fn midpoint_phases(&self, k: usize) -> Vec<f64> {
        self.phase_integrals.iter().map(|row| 0.5 * (row[k] + row[k + 1])).collect()
    }
}

/// Diagonalizes the source at every node, matches branches by maximum
/// overlap with the previous node and fixes phases so consecutive overlaps
/// are real and positive.
pub fn build_eigenframe<S>(src: &S, grid: TimeGrid) -> Result<EigenFrame>
where
    S: HamiltonianSource + ?Sized,
{
    let levels = src.dim();
    let mut eps = vec![Vec::with_capacity(grid.len()); levels];
    let mut vectors: Vec<Vec<ComplexVector>> = Vec::with_capacity(grid.len());
    let mut min_gap = Vec::with_capacity(grid.len());

    for k in 0..grid.len() {
        let t = grid.time(k);
        let h = src.evaluate(t)?;
        let eig = eig_hermitian(&h)?;
        let gap = eig.min_gap();
        if gap <= MIN_RELATIVE_GAP * h.frobenius_norm() {
            return Err(Error::DegenerateSpectrum { t, gap });
        }
        min_gap.push(gap);

        let ordered: Vec<(f64, ComplexVector)> = match vectors.last() {
            None => eig.values.into_iter().zip(eig.vectors).collect(),
            Some(previous) => match_branches(previous, eig.values, eig.vectors, t)?,
        };
        let mut row = Vec::with_capacity(levels);
        for (n, (value, vector)) in ordered.into_iter().enumerate() {
            eps[n].push(value);
            row.push(vector);
        }
        vectors.push(row);
    }

    let phase_integrals = eps
        .iter()
        .map(|branch| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(branch.len());
            out.push(0.0);
            for w in branch.windows(2) {
                acc += 0.5 * grid.dt * (w[0] + w[1]);
                out.push(acc);
            }
            out
        })
        .collect();

    Ok(EigenFrame { grid, eps, vectors, phase_integrals, min_gap })
}

fn match_branches(
    previous: &[ComplexVector],
    values: Vec<f64>,
    candidates: Vec<ComplexVector>,
    t: f64,
) -> Result<Vec<(f64, ComplexVector)>> {
    let n = previous.len();
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for prev in previous {
        let overlaps: Vec<C64> = candidates.iter().map(|w| prev.inner(w)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| overlaps[b].norm().total_cmp(&overlaps[a].norm()));
        let best = order[0];
        if n > 1 && overlaps[best].norm() - overlaps[order[1]].norm() < BRANCH_MATCH_MARGIN {
            return Err(Error::BranchMatchAmbiguous { t });
        }
        if taken[best] {
            return Err(Error::BranchMatchAmbiguous { t });
        }
        taken[best] = true;
        let ov = overlaps[best];
        let phase = ov.conj() / ov.norm();
        out.push((values[best], candidates[best].scale(phase)));
    }
    Ok(out)
}

/// `A_nm(t_k)` with a zero diagonal.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub k: usize,
    pub entries: ComplexMatrix,
}

impl CouplingMatrix {
    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.entries[(n, m)]
    }

    /// `max |A_nm − conj(A_mn)|`. Differentiating `⟨n|m⟩ = δ_nm` makes
    /// `⟨n|∂t|m⟩` anti-Hermitian, hence `A` Hermitian.
    pub fn hermiticity_residual(&self) -> f64 {
        self.entries.hermiticity_residual()
    }

    /// `max |D_nm + conj(D_mn)|` for `D = ⟨n|∂t|m⟩ = i·A`.
    pub fn derivative_antihermiticity_residual(&self) -> f64 {
        let d = self.entries.scale(C64::new(0.0, 1.0));
        let n = d.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((d[(i, j)] + d[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Centered-difference `A_nm = −i⟨v_n(t_k), (v_m(t_{k+1}) − v_m(t_{k−1}))/(2dt)⟩`.
pub fn coupling_matrix(frame: &EigenFrame, k: usize) -> Result<CouplingMatrix> {
    frame.grid.check_interior(k)?;
    let n = frame.levels();
    let scale = C64::new(0.0, -0.5 / frame.grid.dt);
    let entries = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            return ZERO;
        }
        let diff = frame.vectors[k + 1][j].sub(&frame.vectors[k - 1][j]);
        frame.vectors[k][i].inner(&diff) * scale
    });
    Ok(CouplingMatrix { k, entries })
}

/// `A^H_nm = A_nm·exp(i[∫ε_n − ∫ε_m])`, the coupling seen in the dual
/// eigenframe.
pub fn dual_coupling(frame: &EigenFrame, k: usize) -> Result<CouplingMatrix> {
    let base = coupling_matrix(frame, k)?;
    let phases: Vec<f64> = frame.phase_integrals.iter().map(|row| row[k]).collect();
    let entries = ComplexMatrix::from_fn(frame.levels(), |i, j| base.entries[(i, j)] * cis(phases[i] - phases[j]));
    Ok(CouplingMatrix { k, entries })
}

/// `U_adia(t_k) = Σ_n |n(t_k)⟩⟨n(t_0)|·exp(−i∫ε_n)`.
pub fn adiabatic_propagator(frame: &EigenFrame, k: usize) -> Result<ComplexMatrix> {
    frame.check_index(k)?;
    let dim = frame.vectors[0][0].dim();
    let mut u = ComplexMatrix::zeros(dim);
    for n in 0..frame.levels() {
        let now = frame.vectors[k][n].scale(cis(-frame.phase_integrals[n][k]));
        u = &u + &ComplexMatrix::outer(&now, &frame.vectors[0][n]);
    }
    Ok(u)
}

/// Which adiabatic frame a set of amplitudes refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Eigenframe of `h(t)`.
    Original,
    /// Eigenframe of the dual Hamiltonian `H(t)`.
    Dual,
}

/// Amplitude trace `phi[k][n]`.
#[derive(Debug, Clone)]
pub struct FrameAmplitudes {
    pub kind: FrameKind,
    pub phi: Vec<Vec<C64>>,
}

impl FrameAmplitudes {
    pub fn populations(&self, k: usize) -> Vec<f64> {
        self.phi[k].iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.phi.iter().map(|row| (row.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn integrate_frame(frame: &EigenFrame, phi0: &ComplexVector, kind: FrameKind) -> Result<FrameAmplitudes> {
    if phi0.dim() != frame.levels() {
        return Err(Error::DimensionMismatch { expected: frame.levels(), found: phi0.dim() });
    }
    if !phi0.is_normalized(NORMALIZATION_TOL) {
        return Err(Error::NotNormalized { norm: phi0.norm() });
    }
    if let Some((k, &gap)) = frame.min_gap.iter().enumerate().find(|(_, &g)| !(g > 0.0)) {
        return Err(Error::DegenerateSpectrum { t: frame.grid.time(k), gap });
    }
    let mut phi = Vec::with_capacity(frame.grid.len());
    let mut current = phi0.clone();
    phi.push(current.as_slice().to_vec());
    for k in 0..frame.grid.steps {
        let mut generator = frame.midpoint_coupling(k);
        if kind == FrameKind::Original {
            let phases = frame.midpoint_phases(k);
            generator = ComplexMatrix::from_fn(generator.dim(), |i, j| generator[(i, j)] * cis(phases[i] - phases[j]))
                .symmetrized();
        }
        let step = expm_hermitian_generator(&generator, frame.grid.dt)?;
        current = step.apply(&current);
        phi.push(current.as_slice().to_vec());
    }
    Ok(FrameAmplitudes { kind, phi })
}

/// Integrates the amplitudes in the eigenframe of `h(t)` with an exactly
/// unitary midpoint rule.
pub fn integrate_h_frame(frame: &EigenFrame, phi0: &ComplexVector) -> Result<FrameAmplitudes> {
    integrate_frame(frame, phi0, FrameKind::Original)
}

/// Integrates `i ∂t φ^H_n = Σ_{m≠n} A_nm φ^H_m`, the amplitudes in the dual
/// eigenframe, driven by the bare coupling.
pub fn integrate_dual_frame(frame: &EigenFrame, phi0: &ComplexVector) -> Result<FrameAmplitudes> {
    integrate_frame(frame, phi0, FrameKind::Dual)
}

/// `Σ_n φ_n·exp(−i∫ε_n)·|n(t_k)⟩`.
pub fn reconstruct_h_frame_state(frame: &EigenFrame, amplitudes: &[C64], k: usize) -> Result<ComplexVector> {
    frame.check_index(k)?;
    let dim = frame.vectors[0][0].dim();
    let mut psi = ComplexVector::new(vec![ZERO; dim]);
    for (n, &a) in amplitudes.iter().enumerate() {
        psi = psi.add(&frame.vectors[k][n].scale(a * cis(-frame.phase_integrals[n][k])));
    }
    Ok(psi)
}

/// Amplitudes `φ_n = ⟨n(t_0)|ψ⟩` of a state in the initial eigenbasis.
pub fn initial_amplitudes(frame: &EigenFrame, psi: &ComplexVector) -> ComplexVector {
    ComplexVector::new(frame.vectors[0].iter().map(|v| v.inner(psi)).collect())
}

/// `|⟨a, b⟩|²` for unit vectors.
pub fn state_fidelity(a: &ComplexVector, b: &ComplexVector) -> Result<f64> {
    for v in [a, b] {
        if !v.is_normalized(NORMALIZATION_TOL) {
            return Err(Error::NotNormalized { norm: v.norm() });
        }
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.inner(b).norm_sqr())
}
