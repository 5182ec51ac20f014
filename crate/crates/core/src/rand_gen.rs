//! Seeded random generators for states, unitaries, and channels.
//!
//! These exist so optimizer restarts and test sweeps are reproducible: every
//! function takes the RNG explicitly, and callers derive per-task generators
//! from a fixed seed (see [`crate::capacity::OptimizerOptions`]).

use rand::Rng;

use crate::channels::{CqStructure, DensityMatrix, KrausChannel};
use crate::matops::{
    matrix_function_on_support, Complex64, ComplexMatrix, ComplexVector, SpectralFn,
};

/// One standard complex Gaussian sample (real and imaginary parts N(0, 1/2)).
fn gaussian(rng: &mut impl Rng) -> Complex64 {
    // Box-Muller; the two uniform draws keep this dependency-free.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-u1.ln()).sqrt();
    Complex64::new(r * u2.cos(), r * u2.sin())
}

pub fn random_gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// A Haar-distributed random pure state vector.
pub fn random_state_vector(dim: usize, rng: &mut impl Rng) -> ComplexVector {
    loop {
        let v = ComplexVector::from_components((0..dim).map(|_| gaussian(rng)).collect());
        if v.norm() > 1e-6 {
            return v.normalized();
        }
    }
}

/// A random unitary from Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut columns: Vec<ComplexVector> = Vec::with_capacity(dim);
    while columns.len() < dim {
        let mut v = ComplexVector::from_components((0..dim).map(|_| gaussian(rng)).collect());
        for u in &columns {
            let overlap = u.inner(&v);
            v = v.sub(&u.scale(overlap));
        }
        if v.norm() > 1e-6 {
            columns.push(v.normalized());
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| columns[j].data[i])
}

/// A random density matrix of the given rank (Hilbert-Schmidt-style:
/// GG†/Tr GG† for a d×rank Gaussian G).
pub fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let g = random_gaussian_matrix(dim, rank, rng);
    let m = g.mul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr)).expect("GG†/Tr is a valid state")
}

/// A random channel with the given number of Kraus operators: Gaussian blocks
/// right-normalized by (Σ G†G)^{-1/2}.
pub fn random_channel(
    dim_in: usize,
    dim_out: usize,
    n_kraus: usize,
    rng: &mut impl Rng,
) -> KrausChannel {
    assert!(n_kraus >= 1, "need at least one Kraus operator");
    assert!(
        n_kraus * dim_out >= dim_in,
        "too few Kraus operators for a trace-preserving map"
    );
    let blocks: Vec<ComplexMatrix> = (0..n_kraus)
        .map(|_| random_gaussian_matrix(dim_out, dim_in, rng))
        .collect();
    let mut t = ComplexMatrix::zeros(dim_in, dim_in);
    for g in &blocks {
        t = t.add(&g.adjoint().mul(g));
    }
    let t_inv_sqrt =
        matrix_function_on_support(&t, SpectralFn::InvSqrt).expect("Σ G†G is positive definite");
    let kraus = blocks.iter().map(|g| g.mul(&t_inv_sqrt)).collect();
    KrausChannel::new(dim_in, dim_out, kraus).expect("normalized Gaussian family is complete")
}

/// A random classical-quantum structure: a Haar basis of the input space and
/// independent full-rank output states.
pub fn random_cq_structure(dim_in: usize, dim_out: usize, rng: &mut impl Rng) -> CqStructure {
    let u = random_unitary(dim_in, rng);
    let basis = (0..dim_in).map(|k| u.column(k)).collect();
    let sigmas = (0..dim_in)
        .map(|_| random_density(dim_out, dim_out, rng))
        .collect();
    CqStructure { basis, sigmas }
}

/// A random POVM with `n` elements: random positive operators renormalized by
/// the inverse square root of their sum.
pub fn random_povm(dim: usize, n: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    assert!(n >= 1, "need at least one POVM element");
    let raw: Vec<ComplexMatrix> = (0..n)
        .map(|_| {
            let g = random_gaussian_matrix(dim, dim, rng);
            g.mul(&g.adjoint())
        })
        .collect();
    let mut s = ComplexMatrix::zeros(dim, dim);
    for m in &raw {
        s = s.add(m);
    }
    let s_inv_sqrt =
        matrix_function_on_support(&s, SpectralFn::InvSqrt).expect("POVM sum is positive definite");
    raw.iter()
        .map(|m| s_inv_sqrt.mul(m).mul(&s_inv_sqrt).hermitized())
        .collect()
}
