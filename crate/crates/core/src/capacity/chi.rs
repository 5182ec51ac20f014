//! The χ-function at a fixed average state, via pure-state decompositions.
//!
//! χ_Φ(ρ) = H(Φ(ρ)) − Ĥ_Φ(ρ), where Ĥ_Φ(ρ) is the minimal average output
//! entropy over pure-state decompositions of ρ. Every decomposition of ρ with
//! rank r into m ≥ r pure states arises as ψ_i = A u_i, where the columns of
//! the fixed d×r matrix A are √λ_j v_j from the eigendecomposition of ρ and
//! the u_i are columns of an r×m matrix W with orthonormal rows (WW† = I_r):
//! the unnormalized vectors ψ_i then satisfy Σ_i ψ_iψ_i† = ρ exactly. Ĥ is
//! minimized over the Stiefel manifold of such W by projected-gradient
//! descent with a polar retraction.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channels::{DensityMatrix, KrausChannel};
use crate::entropy::{entropy, entropy_psd, Ensemble};
use crate::matops::{hermitian_eigendecompose, ComplexMatrix, ComplexVector};
use crate::rand_gen::random_gaussian_matrix;
use crate::{Error, Result};

use super::sphere::{propagate, pull_back};
use super::{restart_rng, CapacityResult, Optimizer, OptimizerOptions};

/// Columns of ρ's eigendecomposition needed by the decomposition search:
/// `a = [√λ_1 v_1 | … | √λ_r v_r]` and the bare eigenvector frame.
pub(crate) struct Factorization {
    pub a: ComplexMatrix,     // d×r
    pub a_adj: ComplexMatrix, // r×d
    pub basis: ComplexMatrix, // d×r eigenvector columns
    pub rank: usize,
    pub dim: usize,
}

pub(crate) fn factorize(rho: &DensityMatrix) -> Factorization {
    let d = rho.dim();
    let eig = hermitian_eigendecompose(rho.matrix())
        .expect("eigendecomposition of a validated density matrix");
    let mut kept = Vec::new();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 1e-12 {
            kept.push((j, l));
        }
    }
    let r = kept.len().max(1);
    if kept.is_empty() {
        kept.push((0, eig.eigenvalues[0].max(0.0)));
    }
    let a = ComplexMatrix::from_fn(d, r, |i, jj| {
        let (j, l) = kept[jj];
        eig.eigenvectors.get(i, j) * Complex64::new(l.sqrt(), 0.0)
    });
    let basis = ComplexMatrix::from_fn(d, r, |i, jj| eig.eigenvectors.get(i, kept[jj].0));
    Factorization {
        a_adj: a.adjoint(),
        a,
        basis,
        rank: r,
        dim: d,
    }
}

/// Per-column artifacts of one decomposition W, shared by the objective, the
/// gradient, and the fixed-decomposition derivative used by [`max_delta`].
///
/// [`max_delta`]: super::max_delta
pub(crate) struct Column {
    /// ‖ψ_i‖² for the unnormalized vector ψ_i = A u_i.
    pub prob: f64,
    /// Kraus images V_k ψ_i.
    pub images: Vec<ComplexVector>,
    /// Output σ_i = Φ(ψ_iψ_i†) (trace π_i).
    pub sigma: ComplexMatrix,
}

pub(crate) fn columns_of(ch: &KrausChannel, fact: &Factorization, w: &ComplexMatrix) -> Vec<Column> {
    (0..w.cols)
        .map(|j| {
            let u = w.column(j);
            let psi = fact.a.apply(&u);
            let prob = psi.norm_sqr();
            let (images, sigma) = propagate(ch, &psi);
            Column {
                prob,
                images,
                sigma,
            }
        })
        .collect()
}

/// Average output entropy F(W) = Σ_i π_i H(Φ(ψ_iψ_i†)/π_i) and its Euclidean
/// gradient ∂F/∂W̄.
///
/// Writing σ_i = Φ(ψ_iψ_i†), the per-vector gradient is
/// `∂F/∂ψ̄_i = −Φ*(L_i)ψ_i` with `L_i = log₂σ_i − log₂π_i` on the support of
/// σ_i: the identity-scale pieces of the entropy derivative cancel because
/// Φ*(P_supp σ_i) acts as the identity on ψ_i (no Kraus image of ψ_i leaves
/// the support of σ_i). The chain rule through ψ_i = A u_i turns that into
/// column i of the W-gradient via A†.
fn f_and_grad(
    ch: &KrausChannel,
    fact: &Factorization,
    w: &ComplexMatrix,
) -> (f64, ComplexMatrix) {
    let cols = columns_of(ch, fact, w);
    let r = fact.rank;
    let m = w.cols;
    let mut f = 0.0;
    let mut grad = ComplexMatrix::zeros(r, m);
    for (j, col) in cols.iter().enumerate() {
        if col.prob < 1e-14 {
            continue;
        }
        let eig = hermitian_eigendecompose(&col.sigma)
            .expect("eigendecomposition of a channel output");
        let top = eig.eigenvalues[0].max(0.0);
        let cutoff = crate::SUPPORT_CUTOFF * top;
        let log_prob = col.prob.log2();
        let mut ent = 0.0;
        for &l in &eig.eigenvalues {
            if l > cutoff {
                ent -= l * l.log2();
            }
        }
        // π H(σ/π) = −Tr σ log₂σ + π log₂π.
        f += ent + col.prob * log_prob;
        let l_mat = eig.map_eigenvalues(|x| if x > cutoff { x.log2() - log_prob } else { 0.0 });
        let g_psi = pull_back(ch, &l_mat, &col.images).scale(Complex64::new(-1.0, 0.0));
        let g_col = fact.a_adj.apply(&g_psi);
        for i in 0..r {
            grad.set(i, j, g_col.data[i]);
        }
    }
    (f, grad)
}

/// Orthogonal projection of a Euclidean gradient onto the tangent space of
/// {W : WW† = I} at W.
fn tangent_project(grad: &ComplexMatrix, w: &ComplexMatrix) -> ComplexMatrix {
    let gw = grad.mul(&w.adjoint());
    let herm = gw.add(&gw.adjoint()).scale_real(0.5);
    grad.sub(&herm.mul(w))
}

/// Polar retraction: W − step·Z renormalized to orthonormal rows.
fn retract(w: &ComplexMatrix, z: &ComplexMatrix, step: f64) -> ComplexMatrix {
    let moved = w.sub(&z.scale_real(step));
    let gram = moved.mul(&moved.adjoint()).hermitized();
    let eig = hermitian_eigendecompose(&gram).expect("Gram matrix of a retraction step");
    let inv_sqrt = eig.map_eigenvalues(|x| 1.0 / x.max(1e-300).sqrt());
    inv_sqrt.mul(&moved)
}

fn eye_start(r: usize, m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, m, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn random_start(r: usize, m: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    let g = random_gaussian_matrix(r, m, rng);
    let gram = g.mul(&g.adjoint()).hermitized();
    let eig = hermitian_eigendecompose(&gram).expect("Gram matrix of a random start");
    let inv_sqrt = eig.map_eigenvalues(|x| 1.0 / x.max(1e-300).sqrt());
    inv_sqrt.mul(&g)
}

/// Outcome of the decomposition search at fixed average state.
pub(crate) struct ChiInner {
    pub w: ComplexMatrix,
    /// Minimal average output entropy found (Ĥ).
    pub hhat: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

fn minimize_from(
    ch: &KrausChannel,
    fact: &Factorization,
    start: ComplexMatrix,
    max_iters: usize,
    grad_tol: f64,
    obj_tol: f64,
) -> ChiInner {
    let mut w = start;
    let (mut f, mut grad) = f_and_grad(ch, fact, &w);
    let mut eta = 0.5_f64;
    let mut converged = false;
    let mut z_norm = 0.0;
    let mut stall = 0_u32;
    for _ in 0..max_iters {
        let z = tangent_project(&grad, &w);
        z_norm = z.frobenius_norm();
        if z_norm <= grad_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        let mut step = eta;
        for _ in 0..60 {
            let cand = retract(&w, &z, step);
            let (cf, cgrad) = f_and_grad(ch, fact, &cand);
            if cf < f - 1e-4 * step * z_norm * z_norm {
                let improvement = f - cf;
                w = cand;
                f = cf;
                grad = cgrad;
                accepted = true;
                if improvement <= obj_tol * 1e-2 {
                    stall += 1;
                } else {
                    stall = 0;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
        eta = (step * 1.5).min(10.0);
        if stall >= 5 {
            converged = true;
            break;
        }
    }
    ChiInner {
        w,
        hhat: f,
        grad_norm: z_norm,
        converged,
    }
}

/// Multi-start minimization of the average output entropy over decompositions
/// of `rho`. `warm` (when its shape matches) replaces the deterministic
/// eigen-decomposition start; callers iterating over nearby average states
/// pass the previous solution here.
pub(crate) fn chi_inner(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
    warm: Option<&ComplexMatrix>,
    restarts: usize,
    max_iters: usize,
) -> ChiInner {
    let fact = factorize(rho);
    let r = fact.rank;
    let m = r.max(opts.effective_ensemble_size(fact.dim).min(r * r));
    let n_starts = restarts.max(1);
    let starts: Vec<ComplexMatrix> = (0..n_starts)
        .map(|k| {
            if k == 0 {
                match warm {
                    Some(w) if w.rows == r && w.cols == m => w.clone(),
                    _ => eye_start(r, m),
                }
            } else {
                let mut rng = restart_rng(opts.seed, 0xC41 + k as u64);
                random_start(r, m, &mut rng)
            }
        })
        .collect();
    let outcomes: Vec<ChiInner> = starts
        .into_par_iter()
        .map(|s| minimize_from(ch, &fact, s, max_iters, opts.grad_tol, opts.obj_tol))
        .collect();
    outcomes
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.hhat.partial_cmp(&b.hhat).unwrap().then(ia.cmp(ib)))
        .map(|(_, o)| o)
        .expect("at least one start")
}

/// The ensemble encoded by a decomposition point W (columns with vanishing
/// probability are dropped; the remainder averages back to ρ exactly).
pub(crate) fn ensemble_at(fact: &Factorization, w: &ComplexMatrix) -> Ensemble {
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for j in 0..w.cols {
        let u = w.column(j);
        let psi = fact.a.apply(&u);
        let p = psi.norm_sqr();
        if p > 1e-13 {
            weights.push(p);
            states.push(DensityMatrix::pure(&psi.normalized()));
        }
    }
    Ensemble::new(weights, states).expect("decomposition probabilities form a distribution")
}

/// χ_Φ(ρ): the maximal Holevo quantity among ensembles averaging to ρ,
/// computed as H(Φρ) minus the minimized average output entropy.
///
/// The reported ensemble achieves the value and averages back to ρ; the
/// certificate gap is the stationarity residual of the inner minimization
/// (see the module notes on certificate strength).
pub fn chi_function(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
) -> Result<CapacityResult> {
    if rho.dim() != ch.dim_in() {
        return Err(Error::DimensionMismatch {
            context: "chi_function input state",
            expected: ch.dim_in(),
            got: rho.dim(),
        });
    }
    let out_entropy = entropy_psd(&ch.apply_matrix(rho.matrix()));
    let fact = factorize(rho);
    let inner = chi_inner(ch, rho, opts, None, opts.restarts.max(1), opts.max_iters);
    let ensemble = ensemble_at(&fact, &inner.w);
    Ok(CapacityResult {
        value: out_entropy - inner.hhat,
        optimizer: Optimizer::Ensemble(ensemble),
        certificate_gap: inner.grad_norm,
        converged: inner.converged,
    })
}

/// Δ_Φ(ρ) = H(ρ) − χ_{Φ̂}(ρ): the gap between mutual information and the
/// χ-function at ρ, computed with a single inner optimization on the
/// complementary channel.
///
/// The value is nonnegative up to optimizer tolerance: the inner search can
/// only under-estimate χ_{Φ̂}(ρ), which over-estimates Δ, and χ_{Φ̂}(ρ) never
/// exceeds H(ρ). The reported optimizer is the minimizing decomposition.
pub fn delta(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    opts: &OptimizerOptions,
) -> Result<CapacityResult> {
    if rho.dim() != ch.dim_in() {
        return Err(Error::DimensionMismatch {
            context: "delta input state",
            expected: ch.dim_in(),
            got: rho.dim(),
        });
    }
    let comp = ch.minimal_kraus().complement();
    let chi_c = chi_function(&comp, rho, opts)?;
    Ok(CapacityResult {
        value: entropy(rho) - chi_c.value,
        optimizer: chi_c.optimizer,
        certificate_gap: chi_c.certificate_gap,
        converged: chi_c.converged,
    })
}
