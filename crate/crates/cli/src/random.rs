//! Seeded random Hamiltonians for property checks.

use adiabatic_duality::models::{sampled_hamiltonian, SampledHamiltonian};
use adiabatic_duality::{ComplexMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hermitian matrix with entries uniform in `[−scale, scale]`.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize, scale: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(rng.gen_range(-scale..=scale), 0.0);
        for j in i + 1..dim {
            let z = C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// `diag(−(dim−1), …, dim−1) + Σ_j A_j·cos(w_j t + φ_j)` with three random
/// Hermitian `A_j` small enough that levels never come within 0.8 of each
/// other, sampled at `samples` evenly spaced times on `[0, t_end]`.
pub fn random_smooth_hamiltonian(seed: u64, dim: usize, t_end: f64, samples: usize) -> SampledHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<f64> = (0..dim).map(|i| 2.0 * i as f64 - (dim - 1) as f64).collect();
    let base = ComplexMatrix::from_diagonal(&levels);
    let drives: Vec<(ComplexMatrix, f64, f64)> = (0..3)
        .map(|_| {
            (
                random_hermitian(&mut rng, dim, 0.2 / dim as f64),
                rng.gen_range(0.2..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let times = (0..samples).map(|i| t_end * i as f64 / (samples - 1) as f64);
    let data: Vec<(f64, ComplexMatrix)> = times
        .map(|t| {
            let h = drives.iter().fold(base.clone(), |acc, (a, w, phase)| &acc + &a.scale_real((w * t + phase).cos()));
            (t, h)
        })
        .collect();
    sampled_hamiltonian(data).expect("generated samples are Hermitian and increasing")
}
