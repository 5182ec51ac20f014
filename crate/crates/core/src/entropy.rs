//! Entropic quantities in bits: von Neumann entropy, relative entropy,
//! ensemble (Holevo) information, and the mutual/coherent information of a
//! state through a channel.
//!
//! All logarithms are base 2. Relative entropy is `+∞` when the support of the
//! first argument leaks outside the support of the second; that case is a
//! first-class value ([`RelEntropy::Infinite`]), not an error, because
//! optimizers legitimately probe it.

use crate::channels::{DensityMatrix, KrausChannel};
use crate::matops::{hermitian_eigendecompose, ComplexMatrix};
use crate::{Error, Result, SUPPORT_CUTOFF};

/// Probability mass allowed outside the second argument's support before a
/// relative entropy is declared infinite.
const INFINITE_MASS_TOL: f64 = 1e-9;

/// A weighted family of states with a common dimension.
#[derive(Debug, Clone)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    /// Validates that weights and states pair up, weights are nonnegative and
    /// sum to one (within 1e-10), and all states share a dimension.
    pub fn new(weights: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch {
                context: "ensemble weight count",
                expected: states.len(),
                got: weights.len(),
            });
        }
        if states.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < -1e-12) || (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidWeights(sum));
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "ensemble state dimension",
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        let weights = weights.iter().map(|&w| w.max(0.0)).collect();
        Ok(Ensemble { weights, states })
    }

    /// Equal weights on the given states.
    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let n = states.len();
        Ensemble::new(vec![1.0 / n as f64; n], states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// The barycenter Σ p_i ρ_i.
    pub fn average(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut avg = ComplexMatrix::zeros(dim, dim);
        for (w, s) in self.weights.iter().zip(&self.states) {
            if *w > 0.0 {
                avg = avg.add(&s.matrix().scale_real(*w));
            }
        }
        DensityMatrix::from_valid(avg)
    }

    /// The image ensemble {p_i, Φ(ρ_i)}.
    pub fn push_through(&self, channel: &KrausChannel) -> Result<Ensemble> {
        let states = self
            .states
            .iter()
            .map(|s| channel.apply(s))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(self.weights.clone(), states)
    }

    /// Drops members with weight below `threshold` and renormalizes.
    pub fn pruned(&self, threshold: f64) -> Ensemble {
        let kept: Vec<(f64, DensityMatrix)> = self
            .weights
            .iter()
            .zip(&self.states)
            .filter(|(w, _)| **w >= threshold)
            .map(|(w, s)| (*w, s.clone()))
            .collect();
        let total: f64 = kept.iter().map(|(w, _)| *w).sum();
        let (weights, states) = kept
            .into_iter()
            .map(|(w, s)| (w / total, s))
            .unzip();
        Ensemble { weights, states }
    }
}

/// Shannon entropy in bits of a nonnegative vector (zeros contribute zero;
/// tiny negative rounding is clipped).
pub(crate) fn shannon_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Von Neumann entropy H(ρ) = −Tr ρ log₂ ρ of a positive semidefinite matrix,
/// from its eigenvalues.
pub(crate) fn entropy_psd(m: &ComplexMatrix) -> f64 {
    let eig = hermitian_eigendecompose(m).expect("entropy input must be Hermitian");
    shannon_bits(&eig.eigenvalues)
}

/// Von Neumann entropy H(ρ) in bits.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    entropy_psd(rho.matrix())
}

/// A relative entropy value: finite bits, or infinite on support violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelEntropy {
    Bits(f64),
    Infinite,
}

impl RelEntropy {
    pub fn bits(&self) -> Option<f64> {
        match self {
            RelEntropy::Bits(x) => Some(*x),
            RelEntropy::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RelEntropy::Infinite)
    }

    /// The value in bits, treating infinity as `f64::INFINITY`.
    pub fn or_infinity(&self) -> f64 {
        self.bits().unwrap_or(f64::INFINITY)
    }
}

/// Relative entropy D(ρ‖σ) = Tr ρ(log₂ρ − log₂σ) for unit-trace PSD matrices.
///
/// Computed in σ's eigenbasis; the support condition is enforced by measuring
/// the mass of ρ on σ's kernel, so near-singular σ with matching support stays
/// finite.
pub(crate) fn relative_entropy_psd(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> RelEntropy {
    let sig = hermitian_eigendecompose(sigma).expect("relative entropy input must be Hermitian");
    let cutoff = SUPPORT_CUTOFF * sig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let mut kernel_mass = 0.0;
    let mut cross_term = 0.0;
    for (j, &s) in sig.eigenvalues.iter().enumerate() {
        let v = sig.eigenvectors.column(j);
        let mass = v.inner(&rho.apply(&v)).re.max(0.0);
        if s > cutoff {
            cross_term += mass * s.log2();
        } else {
            kernel_mass += mass;
        }
    }
    if kernel_mass > INFINITE_MASS_TOL {
        return RelEntropy::Infinite;
    }
    let rho_eig = hermitian_eigendecompose(rho).expect("relative entropy input must be Hermitian");
    let self_term: f64 = rho_eig
        .eigenvalues
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum();
    RelEntropy::Bits(self_term - cross_term)
}

/// Relative entropy D(ρ‖σ) in bits, or [`RelEntropy::Infinite`] when the
/// support of ρ is not contained in the support of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<RelEntropy> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "relative entropy arguments",
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    Ok(relative_entropy_psd(rho.matrix(), sigma.matrix()))
}

/// Holevo information of an ensemble,
/// χ = H(Σ p_i ρ_i) − Σ p_i H(ρ_i) = Σ p_i D(ρ_i ‖ ρ̄).
///
/// Zero-weight members are skipped.
pub fn holevo_quantity(ensemble: &Ensemble) -> f64 {
    let avg = ensemble.average();
    let mut chi = entropy(&avg);
    for (w, s) in ensemble.weights().iter().zip(ensemble.states()) {
        if *w > 0.0 {
            chi -= w * entropy(s);
        }
    }
    chi
}

/// Mutual information of ρ through Φ:
/// I(ρ,Φ) = H(ρ) + H(Φρ) − H(Φ̂ρ), where the last term (the entropy
/// exchange) is computed through the complementary channel and does not
/// depend on the choice of Kraus family.
pub fn mutual_information(channel: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch {
            context: "mutual information input state",
            expected: channel.dim_in(),
            got: rho.dim(),
        });
    }
    let output = channel.apply_matrix(rho.matrix());
    let environment = channel.complement().apply_matrix(rho.matrix());
    Ok(entropy(rho) + entropy_psd(&output) - entropy_psd(&environment))
}

/// Coherent information I_c(ρ,Φ) = H(Φρ) − H(Φ̂ρ).
pub fn coherent_information(channel: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch {
            context: "coherent information input state",
            expected: channel.dim_in(),
            got: rho.dim(),
        });
    }
    let output = channel.apply_matrix(rho.matrix());
    let environment = channel.complement().apply_matrix(rho.matrix());
    Ok(entropy_psd(&output) - entropy_psd(&environment))
}
