//! Projected gradient ascent over unit vectors, and the minimal output
//! entropy built on it.
//!
//! All pure-state objectives in this module are phase-invariant and smooth on
//! the sphere, so a Riemannian ascent with the full complex tangent
//! projection `g ↦ g − ⟨ψ, g⟩ψ` and a backtracking line search is enough.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channels::{DensityMatrix, KrausChannel};
use crate::matops::{hermitian_eigendecompose, ComplexMatrix, ComplexVector};
use crate::rand_gen::random_state_vector;

use super::{restart_rng, CapacityResult, Optimizer, OptimizerOptions};

pub(crate) struct SphereOutcome {
    pub vector: ComplexVector,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Maximizes a phase-invariant objective over unit vectors.
///
/// `value_and_grad` returns the objective and its (unprojected) Wirtinger
/// gradient ∂f/∂ψ̄; the tangent component is taken here. Terminates on a
/// tangent-gradient norm below `grad_tol`, on an objective plateau at the
/// `obj_tol` scale, or when the line search can no longer make progress.
pub(crate) fn maximize_on_sphere(
    start: &ComplexVector,
    mut value_and_grad: impl FnMut(&ComplexVector) -> (f64, ComplexVector),
    max_iters: usize,
    grad_tol: f64,
    obj_tol: f64,
) -> SphereOutcome {
    let mut psi = start.normalized();
    let (mut value, mut grad) = value_and_grad(&psi);
    let mut eta = 1.0_f64;
    let mut converged = false;
    let mut tangent_norm = 0.0;
    let mut stall = 0_u32;
    for _ in 0..max_iters {
        let radial = psi.inner(&grad);
        let tangent = grad.sub(&psi.scale(radial));
        tangent_norm = tangent.norm();
        if tangent_norm <= grad_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        let mut step = eta;
        for _ in 0..60 {
            let cand = psi
                .add(&tangent.scale(Complex64::new(step, 0.0)))
                .normalized();
            let (cand_value, cand_grad) = value_and_grad(&cand);
            if cand_value > value + 1e-4 * step * tangent_norm * tangent_norm {
                let improvement = cand_value - value;
                psi = cand;
                value = cand_value;
                grad = cand_grad;
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
            // The objective cannot be improved along the tangent gradient at
            // any representable step; treat as stationary.
            converged = true;
            break;
        }
        eta = (step * 1.5).min(1e3);
        if stall >= 5 {
            converged = true;
            break;
        }
    }
    SphereOutcome {
        vector: psi,
        value,
        grad_norm: tangent_norm,
        converged,
    }
}

/// Output state Φ(ψψ†) together with the propagated Kraus images V_kψ, which
/// both the objective and the dual-gradient evaluation reuse.
pub(crate) fn propagate(ch: &KrausChannel, psi: &ComplexVector) -> (Vec<ComplexVector>, ComplexMatrix) {
    let images: Vec<ComplexVector> = ch.kraus().iter().map(|v| v.apply(psi)).collect();
    let d_out = ch.dim_out();
    let mut sigma = ComplexMatrix::zeros(d_out, d_out);
    for phi in &images {
        for i in 0..d_out {
            for j in 0..d_out {
                let add = phi.data[i] * phi.data[j].conj();
                let cur = sigma.get(i, j);
                sigma.set(i, j, cur + add);
            }
        }
    }
    (images, sigma)
}

/// `Φ*(L)ψ = Σ_k V_k†(L V_kψ)` evaluated from precomputed Kraus images.
pub(crate) fn pull_back(
    ch: &KrausChannel,
    l: &ComplexMatrix,
    images: &[ComplexVector],
) -> ComplexVector {
    let mut acc = ComplexVector::zeros(ch.dim_in());
    for (v, phi) in ch.kraus().iter().zip(images) {
        let lifted = v.adjoint().apply(&l.apply(phi));
        acc = acc.add(&lifted);
    }
    acc
}

/// Entropy of a PSD matrix and `log₂` on its support from one shared
/// eigendecomposition.
pub(crate) fn entropy_and_log(sigma: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let eig = hermitian_eigendecompose(sigma).expect("eigendecomposition of a channel output");
    let top = eig.eigenvalues[0].max(0.0);
    let cutoff = crate::SUPPORT_CUTOFF * top;
    let mut h = 0.0;
    for &l in &eig.eigenvalues {
        if l > cutoff {
            h -= l * l.log2();
        }
    }
    let log = eig.map_eigenvalues(|x| if x > cutoff { x.log2() } else { 0.0 });
    (h, log)
}

/// Minimal output entropy `min_ψ H(Φ(ψψ†))` over pure inputs by multi-start
/// sphere ascent of `−H`.
///
/// The certificate gap is the stationarity residual of the best start; the
/// value coincides with the minimal output entropy of any complementary
/// channel up to optimizer tolerance.
pub fn min_output_entropy(ch: &KrausChannel, opts: &OptimizerOptions) -> CapacityResult {
    let d = ch.dim_in();
    let n_starts = opts.restarts.max(1);
    let starts: Vec<ComplexVector> = (0..n_starts)
        .map(|k| {
            if k == 0 {
                ComplexVector::basis_state(d, 0)
            } else {
                let mut rng = restart_rng(opts.seed, 0x5EA0 + k as u64);
                random_state_vector(d, &mut rng)
            }
        })
        .collect();
    let outcomes: Vec<SphereOutcome> = starts
        .par_iter()
        .map(|start| {
            maximize_on_sphere(
                start,
                |psi| {
                    let (images, sigma) = propagate(ch, psi);
                    let (h, log) = entropy_and_log(&sigma);
                    // Ascent on −H; the radial component of the gradient is
                    // projected out by the sphere step.
                    (-h, pull_back(ch, &log, &images))
                },
                opts.max_iters,
                opts.grad_tol,
                opts.obj_tol,
            )
        })
        .collect();
    let best = outcomes
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.value
                .partial_cmp(&b.value)
                .unwrap()
                .then(ib.cmp(ia))
        })
        .map(|(_, o)| o)
        .expect("at least one start");
    CapacityResult {
        value: -best.value,
        optimizer: Optimizer::State(DensityMatrix::pure(&best.vector)),
        certificate_gap: best.grad_norm,
        converged: best.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{completely_depolarizing, dephasing_computational, noiseless};
    use crate::rand_gen::random_channel;

    #[test]
    fn noiseless_min_output_entropy_is_zero() {
        let ch = noiseless(3);
        let r = min_output_entropy(&ch, &OptimizerOptions::with_seed(1));
        assert!(r.value.abs() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn completely_depolarizing_min_output_entropy_is_flat() {
        let sigma = DensityMatrix::maximally_mixed(2);
        let ch = completely_depolarizing(2, &sigma);
        let r = min_output_entropy(&ch, &OptimizerOptions::with_seed(1));
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn dephasing_min_output_entropy_attained_at_basis_states() {
        let ch = dephasing_computational(3);
        let r = min_output_entropy(&ch, &OptimizerOptions::with_seed(2));
        assert!(r.value.abs() < 1e-7, "got {}", r.value);
        // The minimizer must be (up to phase) a basis state.
        let rho = r.optimizer.average_state();
        let mut top = 0.0_f64;
        for k in 0..3 {
            top = top.max(rho.matrix().get(k, k).re);
        }
        assert!(top > 1.0 - 1e-6);
    }

    #[test]
    fn sphere_search_maximizes_quadratic_form() {
        // f(ψ) = ⟨ψ|A|ψ⟩ has gradient Aψ and maximum λ_max(A).
        let a = ComplexMatrix::diag_real(&[0.3, 1.7, 0.9]);
        let mut rng = restart_rng(5, 0);
        let start = random_state_vector(3, &mut rng);
        let out = maximize_on_sphere(
            &start,
            |psi| (a.expectation(psi).re, a.apply(psi)),
            500,
            1e-9,
            1e-12,
        );
        assert!((out.value - 1.7).abs() < 1e-7);
        assert!(out.converged);
    }

    #[test]
    fn min_output_entropy_matches_complement() {
        let mut rng = restart_rng(11, 3);
        let ch = random_channel(3, 3, 3, &mut rng);
        let comp = ch.minimal_kraus().complement();
        let opts = OptimizerOptions {
            restarts: 12,
            ..OptimizerOptions::with_seed(4)
        };
        let a = min_output_entropy(&ch, &opts);
        let b = min_output_entropy(&comp, &opts);
        assert!(
            (a.value - b.value).abs() < 2e-3,
            "H_min {} vs complement {}",
            a.value,
            b.value
        );
    }
}
