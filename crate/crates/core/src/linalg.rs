//! Dense complex linear algebra for small Hermitian and unitary matrices.
//!
//! Everything here targets dimensions up to a few dozen. Matrices are stored
//! row-major in a flat `Vec`. The eigensolver uses the closed form for 2×2
//! input and cyclic complex Jacobi rotations otherwise.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative gap below which an eigendecomposition is flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// `exp(i·phase)`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::new(phase.cos(), phase.sin())
}

/// Square dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from a row-major slice of `dim²` entries.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self::from_fn(N, |i, j| rows[i][j])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &ComplexVector, b: &ComplexVector) -> Self {
        assert_eq!(a.dim(), b.dim(), "outer product of vectors with different dims");
        Self::from_fn(a.dim(), |i, j| a[i] * b[j].conj())
    }

    /// Matrix whose k-th column is `columns[k]`.
    pub fn from_columns(columns: &[ComplexVector]) -> Self {
        let dim = columns.len();
        Self::from_fn(dim, |i, j| columns[j][i])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::new((0..self.dim).map(|i| self[(i, j)]).collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * z).collect() }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * x).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `max |M_ij − conj(M_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `‖M†M − I‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.dim)).frobenius_norm()
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim, v.dim(), "matrix-vector dimension mismatch");
        let n = self.dim;
        ComplexVector::new((0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect())
    }

    /// Conjugate-symmetric entries `(i, j)` ↔ `(j, i)` averaged so the result is
    /// exactly Hermitian.
    pub fn symmetrized(mut self) -> Self {
        for i in 0..self.dim {
            self[(i, i)] = C64::new(self[(i, i)].re, 0.0);
            for j in i + 1..self.dim {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
        self
    }

    /// One Newton–Schulz step toward the nearest unitary: `U(3I − U†U)/2`.
    pub fn reunitarized(&self) -> Self {
        let gram = &self.adjoint() * self;
        let correction = &Self::identity(self.dim).scale_real(3.0) - &gram;
        (self * &correction).scale_real(0.5)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}×{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|a| -a).collect() }
    }
}

/// Dense complex column vector.
#[derive(Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<C64>,
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut data = vec![ZERO; dim];
        data[k] = ONE;
        Self { data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// `⟨self, other⟩ = Σ conj(self_i)·other_i`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { data: self.data.iter().map(|&a| a * z).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    #[inline]
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.iter()).finish()
    }
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[1.0, -1.0])
}

/// True iff `max |M_ij − conj(M_ji)| ≤ tol`.
pub fn check_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.hermiticity_residual() <= tol
}

/// Eigenvalues in ascending order with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<ComplexVector>,
    /// Set when two eigenvalues lie closer than `DEGENERACY_TOL·‖M‖`.
    pub degenerate: bool,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Σ_k λ_k |v_k⟩⟨v_k|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += v[i] * v[j].conj() * *lambda;
                }
            }
        }
        m
    }

    /// Smallest spacing between adjacent eigenvalues (infinite for 1×1).
    pub fn min_gap(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Matrix with the eigenvectors as columns.
    pub fn vector_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors)
    }
}

/// Hermitian eigendecomposition.
///
/// Each eigenvector is rotated so its largest-magnitude component is real and
/// positive, which makes the output deterministic.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = m.frobenius_norm();
    let residual = m.hermiticity_residual();
    if residual > 1e-10 * scale {
        return Err(Error::NotHermitian { residual });
    }

    let (values, mut vectors) = match m.dim() {
        1 => (vec![m[(0, 0)].re], vec![ComplexVector::basis(1, 0)]),
        2 => closed_form_2x2(m),
        _ => jacobi(m, scale)?,
    };
    for v in &mut vectors {
        fix_phase(v);
    }
    let mut decomposition = EigenDecomposition { values, vectors, degenerate: false };
    decomposition.degenerate = decomposition.min_gap() <= DEGENERACY_TOL * scale;
    Ok(decomposition)
}

fn closed_form_2x2(m: &ComplexMatrix) -> (Vec<f64>, Vec<ComplexVector>) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let radius = half_diff.hypot(b.norm());
    if radius == 0.0 {
        return (vec![mean, mean], vec![ComplexVector::basis(2, 0), ComplexVector::basis(2, 1)]);
    }
    // Upper eigenvector, written in whichever of the two equivalent forms avoids
    // cancellation.
    let upper = if half_diff >= 0.0 {
        ComplexVector::new(vec![C64::new(half_diff + radius, 0.0), b.conj()])
    } else {
        ComplexVector::new(vec![b, C64::new(radius - half_diff, 0.0)])
    }
    .normalized();
    let lower = ComplexVector::new(vec![-upper[1].conj(), upper[0].conj()]);
    (vec![mean - radius, mean + radius], vec![lower, upper])
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(m: &ComplexMatrix, scale: f64) -> Result<(Vec<f64>, Vec<ComplexVector>)> {
    let n = m.dim();
    let mut a = m.clone().symmetrized();
    let mut v = ComplexMatrix::identity(n);
    let target = JACOBI_TOL * scale;

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_diagonal: off_diagonal_norm(&a) });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let x = a[(p, p)].re;
                let z = a[(q, q)].re;
                // After removing the phase of a_pq the 2×2 block is real
                // symmetric and the textbook rotation applies.
                let phase = apq / g;
                let tau = (z - x) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;

                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * gpp + arq * gqp;
                    a[(r, q)] = arp * gpq + arq * gqq;
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * gpp + vrq * gqp;
                    v[(r, q)] = vrp * gpq + vrq * gqq;
                }
                for k in 0..n {
                    let bpk = a[(p, k)];
                    let bqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * bpk + gqp.conj() * bqk;
                    a[(q, k)] = gpq.conj() * bpk + gqq.conj() * bqk;
                }
                a[(p, p)] = C64::new(x - t * g, 0.0);
                a[(q, q)] = C64::new(z + t * g, 0.0);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = order.iter().map(|&k| v.column(k)).collect();
    Ok((values, vectors))
}

fn fix_phase(v: &mut ComplexVector) {
    let max = v.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.as_slice().iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).expect("max is attained");
    let phase = v[pivot].conj() / v[pivot].norm();
    *v = v.scale(phase);
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

/// `exp(−i·M·s)` for Hermitian `M`, built from its eigendecomposition.
pub fn expm_hermitian_generator(m: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    Ok(spectral_exponential(&eig, s))
}

/// `Σ_k exp(−i·λ_k·s) |v_k⟩⟨v_k|`.
pub fn spectral_exponential(eig: &EigenDecomposition, s: f64) -> ComplexMatrix {
    let n = eig.dim();
    let mut out = ComplexMatrix::zeros(n);
    for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
        let phase = cis(-lambda * s);
        for i in 0..n {
            let vi = v[i] * phase;
            for j in 0..n {
                out[(i, j)] += vi * v[j].conj();
            }
        }
    }
    out
}

/// Frobenius and spectral-norm distances between two operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub frobenius: f64,
    pub spectral: f64,
}

/// `‖A − B‖_F`.
pub fn operator_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok((a - b).frobenius_norm())
}

/// Frobenius norm together with the spectral 2-norm, the latter taken from the
/// largest eigenvalue of `(A − B)†(A − B)`.
pub fn operator_distances(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Distance> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let diff = a - b;
    let gram = (&diff.adjoint() * &diff).symmetrized();
    let top = eig_hermitian(&gram)?.values.last().copied().unwrap_or(0.0);
    Ok(Distance { frobenius: diff.frobenius_norm(), spectral: top.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(dim: usize, entries: &[f64]) -> ComplexMatrix {
        let mut k = 0;
        let mut next = || {
            let x = entries[k % entries.len()];
            k += 1;
            x
        };
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(next(), 0.0);
            for j in i + 1..dim {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn hermitian_checks() {
        assert!(check_hermitian(&sigma_z(), 1e-12));
        let anti = ComplexMatrix::from_rows([[ZERO, I], [I, ZERO]]);
        assert!(!check_hermitian(&anti, 1e-12));
    }

    #[test]
    fn sigma_x_eigenpairs() {
        let eig = eig_hermitian(&sigma_x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
        let lower = &eig.vectors[0];
        let upper = &eig.vectors[1];
        assert!((lower[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((lower[1] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((upper[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((upper[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn largest_component_is_real_positive() {
        let m = ComplexMatrix::from_rows([[c(0.3, 0.0), c(0.2, -0.7)], [c(0.2, 0.7), c(-1.1, 0.0)]]);
        for v in eig_hermitian(&m).unwrap().vectors {
            let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
            assert!(pivot.im == 0.0 && pivot.re > 0.0);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_rows([[ONE, ONE], [ZERO, ONE]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn degenerate_spectrum_is_flagged() {
        let eig = eig_hermitian(&ComplexMatrix::identity(3)).unwrap();
        assert!(eig.degenerate);
        let eig = eig_hermitian(&ComplexMatrix::from_diagonal(&[1.0, 2.0, 3.0])).unwrap();
        assert!(!eig.degenerate);
    }

    #[test]
    fn random_4x4_reconstruction() {
        let entries = [0.8, -0.3, 0.45, 1.2, -0.9, 0.05, 0.33, -0.71, 0.6, 0.12, -0.48, 0.27, 0.91, -0.2, 0.14, 0.5];
        let m = random_hermitian(4, &entries);
        let eig = eig_hermitian(&m).unwrap();
        let residual = (&eig.reconstruct() - &m).frobenius_norm();
        assert!(residual <= 1e-12, "reconstruction residual {residual:e}");
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn expm_of_sigma_z_at_pi_is_minus_identity() {
        let u = expm_hermitian_generator(&sigma_z(), PI).unwrap();
        let expected = ComplexMatrix::identity(2).scale_real(-1.0);
        assert!((&u - &expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian_generator(&ComplexMatrix::zeros(3), 4.2).unwrap();
        assert!((&u - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn distances() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(operator_distance(&id, &id).unwrap(), 0.0);
        assert!((operator_distance(&id, &sigma_z()).unwrap() - 2.0).abs() < 1e-15);
        let d = operator_distances(&id, &sigma_z()).unwrap();
        assert!((d.spectral - 2.0).abs() < 1e-14);
        assert!(matches!(operator_distance(&id, &ComplexMatrix::identity(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn jacobi_handles_already_diagonal_input() {
        let m = ComplexMatrix::from_diagonal(&[3.0, -1.0, 2.0]);
        let eig = eig_hermitian(&m).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
    }

    fn hermitian_strategy() -> impl Strategy<Value = ComplexMatrix> {
        (2usize..=8).prop_flat_map(|dim| {
            prop::collection::vec(-2.0f64..2.0, dim * dim * 2).prop_map(move |entries| random_hermitian(dim, &entries))
        })
    }

    proptest! {
        #[test]
        fn reconstruction_reproduces_input(m in hermitian_strategy()) {
            let eig = eig_hermitian(&m).unwrap();
            let scale = m.frobenius_norm().max(1e-300);
            let residual = (&eig.reconstruct() - &m).frobenius_norm();
            prop_assert!(residual <= 1e-12 * scale, "residual {:e}", residual);
            for (i, a) in eig.vectors.iter().enumerate() {
                for (j, b) in eig.vectors.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((a.inner(b) - c(expected, 0.0)).norm() <= 1e-12);
                }
            }
        }

        #[test]
        fn exponential_is_unitary(m in hermitian_strategy(), s in -20.0f64..20.0) {
            let u = expm_hermitian_generator(&m, s).unwrap();
            prop_assert!(u.unitarity_residual() <= 1e-13);
        }

        #[test]
        fn exponential_group_property(m in hermitian_strategy(), s1 in -3.0f64..3.0, s2 in -3.0f64..3.0) {
            let a = expm_hermitian_generator(&m, s1).unwrap();
            let b = expm_hermitian_generator(&m, s2).unwrap();
            let ab = expm_hermitian_generator(&m, s1 + s2).unwrap();
            prop_assert!((&(&a * &b) - &ab).frobenius_norm() <= 1e-12);
        }
    }
}
