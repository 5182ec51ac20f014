//! The optimization layer: capacity-type quantities of a channel.
//!
//! Everything here reduces to maximizing an entropic functional over input
//! states or input ensembles:
//!
//! * [`chi_function`] — the χ-function at a fixed average state, computed by
//!   minimizing the average output entropy over pure-state decompositions;
//! * [`holevo_capacity`] / [`constrained_holevo`] — the one-shot classical
//!   capacity over free (or average-energy-constrained) ensembles;
//! * [`ea_capacity`] / [`constrained_ea`] — the entanglement-assisted
//!   capacity via entropic mirror ascent on the quantum mutual information;
//! * [`min_output_entropy`], [`q1`], [`delta`], [`max_delta`] — minimal
//!   output entropy, one-shot coherent-information maximum, and the gap
//!   between mutual information and the χ-function together with its maximum;
//! * [`gibbs_state`] — the entropy-maximizing state under a linear constraint;
//! * [`bounds_report`] — a table of the general inequalities relating these
//!   quantities, evaluated on one channel;
//! * [`covariant_capacities`] — closed forms for irreducibly covariant
//!   channels.
//!
//! # Certificates
//!
//! Every optimizer reports a `certificate_gap` alongside its value, but the
//! strength of that certificate differs by problem class and callers should
//! interpret it accordingly:
//!
//! * **Concave maximizations** ([`ea_capacity`], [`constrained_ea`]): the gap
//!   is a rigorous upper bound on how far the value can lie below the true
//!   optimum, obtained from the first-order concavity bound
//!   `f(δ) ≤ f(ρ) + ⟨G(ρ), δ − ρ⟩`, maximized over states δ.
//! * **Ensemble capacities** ([`holevo_capacity`], [`constrained_holevo`]):
//!   the gap is `max_ψ D(Φ(ψ)‖σ̄*) − value` (with the Lagrangian tilt in the
//!   constrained case), where σ̄* is the optimal output average found. The
//!   minimax representation of the capacity makes this an upper-bound test
//!   for *any* σ̄, so the certificate is sound — but the inner maximization
//!   over pure states is itself a multi-start search, so the reported gap is
//!   exact only up to that search finding the global maximizer.
//! * **Pure-state minimizations and non-concave maximizations**
//!   ([`min_output_entropy`], [`chi_function`], [`q1`], [`max_delta`]): no
//!   sound upper bound is available; the gap reported is the first-order
//!   stationarity residual at the returned point, and values carry the usual
//!   heuristic-global caveat of multi-start local search.

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::DensityMatrix;
use crate::entropy::Ensemble;
use crate::matops::{
    hermitian_eigendecompose, matrix_function_on_support, ComplexMatrix, SpectralFn,
};
use crate::{Error, Result, HERMITIAN_TOL, NEGATIVE_EIGENVALUE_TOL};

mod bounds;
mod chi;
mod holevo;
mod mirror;
mod sphere;

pub use bounds::{bounds_report, covariant_capacities, BoundLine, BoundsReport};
pub use chi::{chi_function, delta};
pub use holevo::{constrained_holevo, holevo_capacity};
pub use mirror::{constrained_ea, ea_capacity, max_delta, q1};
pub use sphere::min_output_entropy;

pub(crate) use chi::chi_inner;
pub(crate) use holevo::{finalize_unconstrained, holevo_restarts, refine_ensemble, HolevoRestart};

/// Tuning knobs shared by all optimizers in this module.
///
/// All optimizers are deterministic given `seed`; restarts draw from
/// independent counter-indexed streams of one generator, so the work of the
/// individual restarts can be scheduled in any order without changing the
/// result.
#[derive(Clone, Debug)]
pub struct OptimizerOptions {
    /// Master seed for every randomized start.
    pub seed: u64,
    /// Number of independent starts for multi-start searches.
    pub restarts: usize,
    /// Cap on the number of pure states in ensemble searches; `None` means
    /// d_A² which is always sufficient for an exact optimizer.
    pub max_ensemble_size: Option<usize>,
    /// Objective-scale tolerance (bits): improvements below this level count
    /// as convergence.
    pub obj_tol: f64,
    /// Gradient-scale tolerance for first-order stationarity.
    pub grad_tol: f64,
    /// Hard iteration cap per start.
    pub max_iters: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            seed: 0,
            restarts: 32,
            max_ensemble_size: None,
            obj_tol: 1e-7,
            grad_tol: 1e-6,
            max_iters: 5000,
        }
    }
}

impl OptimizerOptions {
    pub fn with_seed(seed: u64) -> Self {
        OptimizerOptions {
            seed,
            ..OptimizerOptions::default()
        }
    }

    /// The ensemble-size cap actually used for a channel with input dimension
    /// `dim_in`: the configured cap, defaulting to d_A², but never below d_A
    /// (fewer pure states cannot even average to a full-rank state).
    pub fn effective_ensemble_size(&self, dim_in: usize) -> usize {
        self.max_ensemble_size
            .unwrap_or(dim_in * dim_in)
            .max(dim_in)
    }
}

/// The argument achieving (or approximating) an optimal value: ensemble
/// searches report the ensemble, state searches the state.
#[derive(Clone, Debug)]
pub enum Optimizer {
    Ensemble(Ensemble),
    State(DensityMatrix),
}

impl Optimizer {
    /// The input state the optimizer occupies: the ensemble average, or the
    /// state itself.
    pub fn average_state(&self) -> DensityMatrix {
        match self {
            Optimizer::Ensemble(e) => e.average(),
            Optimizer::State(s) => s.clone(),
        }
    }

    pub fn ensemble(&self) -> Option<&Ensemble> {
        match self {
            Optimizer::Ensemble(e) => Some(e),
            Optimizer::State(_) => None,
        }
    }
}

/// Outcome of one capacity-type optimization. `value` is in bits.
///
/// `certificate_gap` is an upper-bound residual whose interpretation depends
/// on the producing operation — see the module documentation. `converged`
/// reports whether the optimizer terminated by its own criterion rather than
/// by exhausting the iteration budget; a `false` flag still carries the best
/// value found.
#[derive(Clone, Debug)]
pub struct CapacityResult {
    pub value: f64,
    pub optimizer: Optimizer,
    pub certificate_gap: f64,
    pub converged: bool,
}

/// A linear input constraint `Tr Hρ ≤ h` with `H ⪰ 0` and `h > 0`.
///
/// Construction validates Hermiticity and positivity of the observable and
/// feasibility of the level: some state must satisfy the constraint, which
/// holds exactly when `λ_min(H) ≤ h`.
#[derive(Clone, Debug)]
pub struct ConstraintSpec {
    observable: ComplexMatrix,
    level: f64,
    min_eigenvalue: f64,
    mean_eigenvalue: f64,
}

impl ConstraintSpec {
    pub fn new(observable: ComplexMatrix, level: f64) -> Result<Self> {
        if !observable.is_square() {
            return Err(Error::NonSquare {
                rows: observable.rows,
                cols: observable.cols,
            });
        }
        let deviation = observable.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitian {
                deviation,
                tol: HERMITIAN_TOL,
            });
        }
        let observable = observable.hermitized();
        let eig = hermitian_eigendecompose(&observable)?;
        let min_eigenvalue = *eig
            .eigenvalues
            .last()
            .expect("constraint observable has positive dimension");
        if min_eigenvalue < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::NegativeSpectrum {
                eigenvalue: min_eigenvalue,
            });
        }
        if level <= 0.0 {
            return Err(Error::Infeasible(format!(
                "constraint level must be positive, got {level}"
            )));
        }
        if min_eigenvalue > level {
            return Err(Error::Infeasible(format!(
                "no state satisfies the constraint: smallest achievable expectation \
                 {min_eigenvalue} exceeds the level {level}"
            )));
        }
        let mean_eigenvalue = observable.trace().re / observable.rows as f64;
        Ok(ConstraintSpec {
            observable,
            level,
            min_eigenvalue,
            mean_eigenvalue,
        })
    }

    pub fn observable(&self) -> &ComplexMatrix {
        &self.observable
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.observable.rows
    }

    /// Smallest eigenvalue of the observable — the least achievable
    /// expectation.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `Tr H / d`, the expectation at the maximally mixed state. Levels at or
    /// above this make the entropy-maximization constraint slack.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.mean_eigenvalue
    }

    /// `Tr Hρ` for a state.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        self.observable.hs_inner(rho.matrix()).re
    }

    /// Whether the observable is a multiple of the identity, in which case
    /// every state has the same expectation and the constraint cannot bind.
    pub fn is_proportional_to_identity(&self) -> bool {
        let d = self.dim();
        let c = self.observable.trace().re / d as f64;
        let scale = 1.0 + self.observable.max_abs();
        let mut deviation = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let expected = if i == j {
                    Complex64::new(c, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                deviation = deviation.max((self.observable.get(i, j) - expected).norm());
            }
        }
        deviation <= 1e-12 * scale
    }
}

/// A capacity value under a linear constraint, together with the dual data of
/// the solve.
#[derive(Clone, Debug)]
pub struct ConstrainedCapacityResult {
    pub capacity: CapacityResult,
    /// Lagrange multiplier of the constraint at the returned optimizer (zero
    /// when the unconstrained optimum is feasible).
    pub multiplier: f64,
    /// Whether the constraint binds at the returned optimizer.
    pub constraint_active: bool,
    /// `Tr Hρ̄` at the returned optimizer.
    pub expectation: f64,
}

/// The entropy-maximizing state under `Tr Hρ ≤ h`, with its Lagrange data.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub state: DensityMatrix,
    /// Exponent λ of `ρ* ∝ exp(−λH)`; zero when the constraint is slack.
    pub multiplier: f64,
    /// `false` when `h ≥ Tr H/d`, in which case the maximally mixed state is
    /// returned and the constraint does not bind.
    pub constraint_active: bool,
}

/// Maximizes `H(ρ)` subject to `Tr Hρ ≤ h`.
///
/// For binding levels the maximizer is `ρ* = exp(−λH)/Tr exp(−λH)` with λ
/// solving `Tr Hρ* = h`; λ is found by bisection to `|Tr Hρ* − h| ≤ 1e-10`.
/// A level at or above `Tr H/d` makes the constraint slack and the maximally
/// mixed state is returned with a cleared `constraint_active` flag. An
/// observable proportional to the identity leaves λ undetermined and is
/// rejected.
pub fn gibbs_state(constraint: &ConstraintSpec) -> Result<GibbsState> {
    if constraint.is_proportional_to_identity() {
        return Err(Error::DegenerateObservable);
    }
    let d = constraint.dim();
    if constraint.level >= constraint.mean_eigenvalue {
        return Ok(GibbsState {
            state: DensityMatrix::maximally_mixed(d),
            multiplier: 0.0,
            constraint_active: false,
        });
    }
    let eig = hermitian_eigendecompose(&constraint.observable)?;
    let energies = &eig.eigenvalues;
    let e_min = energies[energies.len() - 1];
    // Mean energy of exp(−λ(H − e_min)); the shift keeps every exponential in
    // (0, 1] so the bisection stays well-conditioned for large λ.
    let mean_at = |lambda: f64| -> f64 {
        let mut z = 0.0;
        let mut acc = 0.0;
        for &e in energies {
            let w = (-lambda * (e - e_min)).exp();
            z += w;
            acc += e * w;
        }
        acc / z
    };
    let target = constraint.level;
    let mut hi = 1.0;
    let mut doublings = 0;
    while mean_at(hi) > target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 600 {
            return Err(Error::Infeasible(format!(
                "constraint level {target} is too close to the smallest eigenvalue \
                 {e_min} for the exponential family to reach it"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (mean_at(0.5 * (lo + hi)) - target).abs() <= 1e-12 {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut z = 0.0;
    for &e in energies {
        z += (-lambda * (e - e_min)).exp();
    }
    let state = eig.map_eigenvalues(|e| (-lambda * (e - e_min)).exp() / z);
    Ok(GibbsState {
        state: DensityMatrix::new(state.hermitized())?,
        multiplier: lambda,
        constraint_active: true,
    })
}

/// Deterministic per-restart generator: one master seed, one stream per
/// restart index.
pub(crate) fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `log₂` of a PSD matrix on its support (kernel directions map to zero).
pub(crate) fn plog2(m: &ComplexMatrix) -> ComplexMatrix {
    matrix_function_on_support(m, SpectralFn::Log2)
        .expect("matrix logarithm of a PSD matrix within tolerance")
}

/// `log₂ρ` with eigenvalues clamped to at least `1e-18·λ_max` before the
/// logarithm. Unlike the support-restricted logarithm this keeps near-kernel
/// directions strongly repulsive (≈ −60 bits) instead of silently mapping
/// them to zero, which is what entropic mirror steps need.
pub(crate) fn log2_clamped(rho: &ComplexMatrix) -> ComplexMatrix {
    let eig = hermitian_eigendecompose(rho).expect("eigendecomposition of a density matrix");
    let top = eig.eigenvalues[0].max(f64::MIN_POSITIVE);
    let floor = 1e-18 * top;
    eig.map_eigenvalues(|x| x.max(floor).log2())
}

/// `exp₂(X)/Tr exp₂(X)` for Hermitian `X`, evaluated stably by subtracting
/// the top eigenvalue before exponentiating.
pub(crate) fn normalized_exp2(x: &ComplexMatrix) -> DensityMatrix {
    let eig = hermitian_eigendecompose(x).expect("eigendecomposition of a Hermitian exponent");
    let top = eig.eigenvalues[0];
    let total: f64 = eig.eigenvalues.iter().map(|l| (l - top).exp2()).sum();
    let m = eig.map_eigenvalues(|l| (l - top).exp2() / total);
    DensityMatrix::from_valid(m.hermitized())
}

/// Largest eigenvalue of a Hermitian matrix.
pub(crate) fn max_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigendecompose(m).expect("eigendecomposition of a Hermitian matrix").eigenvalues[0]
}
