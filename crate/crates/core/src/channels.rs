//! Quantum channels in Kraus form, their complementary channels, Choi
//! transforms, structure detection, and a catalog of named channels.
//!
//! A channel Φ: A → B is a family of Kraus operators {V_i} with
//! Σ V_i†V_i = I_A. The complementary channel Φ̂: A → E sends ρ to the matrix
//! of traces [Tr(V_i ρ V_j†)]_{ij} on an environment of dimension equal to the
//! number of Kraus operators, which is why most entropic quantities below ask
//! for a *minimal* Kraus family first (extracted from the Choi matrix).
//!
//! Channels defined by an action formula rather than a Kraus list (see
//! [`bsst_plus`]) are constructed through a single trusted path: evaluate the
//! action on a basis of input matrix units, assemble the Choi matrix, validate
//! positivity and trace preservation, and extract Kraus operators from its
//! spectral decomposition.

use crate::matops::{
    hermitian_basis, hermitian_eigendecompose, partial_trace, tensor_product, Complex64,
    ComplexMatrix, ComplexVector, Subsystem, ONE, ZERO,
};
use crate::{Error, Result, COMPLETENESS_TOL, HERMITIAN_TOL, NEGATIVE_EIGENVALUE_TOL, SUPPORT_CUTOFF};

/// A density matrix: Hermitian, positive semidefinite, unit trace.
///
/// The constructor validates all three properties; eigenvalues in
/// `[-1e-9, 0)` are tolerated as rounding and treated as zero downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows,
                cols: matrix.cols,
            });
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NonHermitian {
                deviation,
                tol: HERMITIAN_TOL,
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::NonUnitTrace(tr.re));
        }
        let matrix = matrix.hermitized();
        let eig = hermitian_eigendecompose(&matrix)?;
        if let Some(&min) = eig
            .eigenvalues
            .iter()
            .find(|&&x| x < -NEGATIVE_EIGENVALUE_TOL)
        {
            return Err(Error::NegativeSpectrum { eigenvalue: min });
        }
        Ok(DensityMatrix { matrix })
    }

    /// Wraps a matrix that is valid by construction (e.g. a channel output).
    pub(crate) fn from_valid(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        debug_assert!(matrix.hermiticity_deviation() <= 1e-8);
        debug_assert!((matrix.trace().re - 1.0).abs() <= 1e-8);
        DensityMatrix {
            matrix: matrix.hermitized(),
        }
    }

    /// The pure state |ψ⟩⟨ψ| (ψ is normalized first).
    pub fn pure(psi: &ComplexVector) -> Self {
        let n = psi.normalized();
        DensityMatrix {
            matrix: n.outer(&n),
        }
    }

    /// The chaotic state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        DensityMatrix {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// A state with the given weights on the computational basis.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        DensityMatrix::new(ComplexMatrix::diag_real(weights))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Convex mixture (1−t)·self + t·other.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> DensityMatrix {
        assert!((0.0..=1.0).contains(&t), "mixing weight outside [0,1]");
        DensityMatrix::from_valid(
            self.matrix
                .scale_real(1.0 - t)
                .add(&other.matrix.scale_real(t)),
        )
    }

    /// Rank of the support at the crate-wide spectral cutoff.
    pub fn rank(&self) -> usize {
        let eig = hermitian_eigendecompose(&self.matrix).expect("density matrix is Hermitian");
        let cutoff = SUPPORT_CUTOFF * eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        eig.eigenvalues.iter().filter(|&&x| x > cutoff).count()
    }
}

/// A completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Builds a channel after checking operator shapes and the completeness
    /// relation Σ V†V = I within the crate-wide tolerance.
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_completeness_tol(dim_in, dim_out, kraus, COMPLETENESS_TOL)
    }

    /// Same as [`KrausChannel::new`] with an explicit completeness tolerance
    /// (file-based inputs accept a slightly looser one than exact arithmetic
    /// produces).
    pub fn with_completeness_tol(
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::EmptyKraus);
        }
        for v in &kraus {
            if v.rows != dim_out {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator rows",
                    expected: dim_out,
                    got: v.rows,
                });
            }
            if v.cols != dim_in {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator columns",
                    expected: dim_in,
                    got: v.cols,
                });
            }
        }
        let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
        for v in &kraus {
            sum = sum.add(&v.adjoint().mul(v));
        }
        let deviation = sum.sub(&ComplexMatrix::identity(dim_in)).max_abs();
        if deviation > tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(KrausChannel {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Number of Kraus operators (the environment dimension of
    /// [`KrausChannel::complement`]).
    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    /// Linear action Σ V M V† on an arbitrary input-space matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.rows, self.dim_in, "channel input has wrong dimension");
        assert_eq!(m.cols, self.dim_in, "channel input has wrong dimension");
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for v in &self.kraus {
            out = out.add(&v.mul(m).mul(&v.adjoint()));
        }
        out
    }

    /// Φ(ρ) for a state ρ.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch {
                context: "channel input state",
                expected: self.dim_in,
                got: rho.dim(),
            });
        }
        Ok(DensityMatrix::from_valid(self.apply_matrix(rho.matrix())))
    }

    /// The dual (Heisenberg-picture) action Φ*(A) = Σ V†AV on an output-space
    /// observable; unital whenever the channel is trace-preserving.
    pub fn dual_apply(&self, a: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(a.rows, self.dim_out, "dual input has wrong dimension");
        assert_eq!(a.cols, self.dim_out, "dual input has wrong dimension");
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for v in &self.kraus {
            out = out.add(&v.adjoint().mul(a).mul(v));
        }
        out
    }

    /// The complementary channel Φ̂(ρ) = Σ_ij Tr(V_i ρ V_j†)|i⟩⟨j| to the
    /// environment spanned by the Kraus indices.
    ///
    /// The result depends on the Kraus family only up to a unitary rotation of
    /// the environment; apply this to a minimal family (see
    /// [`KrausChannel::minimal_kraus`]) when the environment dimension
    /// matters.
    pub fn complement(&self) -> KrausChannel {
        let n = self.kraus.len();
        // Kraus operators of the complement: (F_m)_{i,a} = (V_i)_{m,a} for
        // each output index m.
        let kraus = (0..self.dim_out)
            .map(|m| {
                ComplexMatrix::from_fn(n, self.dim_in, |i, a| self.kraus[i].get(m, a))
            })
            .collect();
        KrausChannel {
            dim_in: self.dim_in,
            dim_out: n,
            kraus,
        }
    }

    /// The (unnormalized) Choi matrix Σ_{kl} |k⟩⟨l| ⊗ Φ(|k⟩⟨l|), input factor
    /// major.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim_in * self.dim_out;
        let mut c = ComplexMatrix::zeros(d, d);
        for v in &self.kraus {
            // The Choi contribution of V is w w† with w[(a, b)] = V[b, a].
            let mut w = ComplexVector::zeros(d);
            for a in 0..self.dim_in {
                for b in 0..self.dim_out {
                    w.data[a * self.dim_out + b] = v.get(b, a);
                }
            }
            c = c.add(&w.outer(&w));
        }
        ChoiMatrix {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix: c,
        }
    }

    /// A minimal Kraus family for the same channel, extracted from the Choi
    /// spectrum; the operator count equals the Choi rank.
    pub fn minimal_kraus(&self) -> KrausChannel {
        self.choi()
            .to_channel()
            .expect("the Choi matrix of a valid channel is positive and trace-preserving")
    }

    /// Rewrites the Kraus family in terms of an overcomplete system {ψ_k} on
    /// the environment: W_k = Σ_i ⟨ψ_k|i⟩ V_i. The vectors must resolve the
    /// identity Σ|ψ_k⟩⟨ψ_k| = I on the environment of *this* family; the
    /// output has one operator per vector and the same Choi matrix.
    pub fn rekraus_from_overcomplete(&self, vectors: &[ComplexVector]) -> Result<KrausChannel> {
        let n = self.kraus.len();
        for psi in vectors {
            if psi.dim() != n {
                return Err(Error::DimensionMismatch {
                    context: "overcomplete system vector",
                    expected: n,
                    got: psi.dim(),
                });
            }
        }
        let mut resolution = ComplexMatrix::zeros(n, n);
        for psi in vectors {
            resolution = resolution.add(&psi.outer(psi));
        }
        let deviation = resolution.sub(&ComplexMatrix::identity(n)).max_abs();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::NotOvercomplete(deviation));
        }
        let kraus = vectors
            .iter()
            .map(|psi| {
                let mut w = ComplexMatrix::zeros(self.dim_out, self.dim_in);
                for (i, v) in self.kraus.iter().enumerate() {
                    w = w.add(&v.scale(psi.data[i].conj()));
                }
                w
            })
            .collect();
        KrausChannel::new(self.dim_in, self.dim_out, kraus)
    }

    /// Composition self ∘ inner (inner runs first).
    pub fn compose(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        if inner.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch {
                context: "channel composition",
                expected: self.dim_in,
                got: inner.dim_out,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * inner.kraus.len());
        for w in &self.kraus {
            for v in &inner.kraus {
                kraus.push(w.mul(v));
            }
        }
        KrausChannel::new(inner.dim_in, self.dim_out, kraus)
    }

    /// Tensor product channel acting on the joint input space, left factor
    /// major.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for v in &self.kraus {
            for w in &other.kraus {
                kraus.push(tensor_product(v, w));
            }
        }
        KrausChannel {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        }
    }

    /// Restriction of the channel to a subspace of its input space given by an
    /// isometry J (columns orthonormal): ρ ↦ Φ(JρJ†).
    pub fn restrict_input(&self, isometry: &ComplexMatrix) -> Result<KrausChannel> {
        if isometry.rows != self.dim_in {
            return Err(Error::DimensionMismatch {
                context: "input restriction isometry rows",
                expected: self.dim_in,
                got: isometry.rows,
            });
        }
        let dev = isometry
            .adjoint()
            .mul(isometry)
            .sub(&ComplexMatrix::identity(isometry.cols))
            .max_abs();
        if dev > 1e-8 {
            return Err(Error::NotOrthonormal(dev));
        }
        let kraus = self.kraus.iter().map(|v| v.mul(isometry)).collect();
        KrausChannel::new(isometry.cols, self.dim_out, kraus)
    }
}

/// The Choi matrix of a channel: positive semidefinite, with partial trace
/// over the output factor equal to the input identity.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: ComplexMatrix,
}

impl ChoiMatrix {
    /// Validates positivity and trace preservation, then extracts a minimal
    /// Kraus family from the spectral decomposition.
    pub fn to_channel(&self) -> Result<KrausChannel> {
        let d = self.dim_in * self.dim_out;
        if self.matrix.rows != d || self.matrix.cols != d {
            return Err(Error::DimensionMismatch {
                context: "Choi matrix size",
                expected: d,
                got: self.matrix.rows,
            });
        }
        let eig = hermitian_eigendecompose(&self.matrix)?;
        if let Some(&min) = eig
            .eigenvalues
            .iter()
            .find(|&&x| x < -NEGATIVE_EIGENVALUE_TOL)
        {
            return Err(Error::NotCompletelyPositive(min));
        }
        let reduced = partial_trace(&self.matrix, self.dim_in, self.dim_out, Subsystem::First)?;
        let deviation = reduced
            .sub(&ComplexMatrix::identity(self.dim_in))
            .max_abs();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::NotTracePreserving { deviation });
        }
        let lambda_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = SUPPORT_CUTOFF * lambda_max;
        let mut kraus = Vec::new();
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let col = eig.eigenvectors.column(j);
            let scale = lambda.sqrt();
            kraus.push(ComplexMatrix::from_fn(
                self.dim_out,
                self.dim_in,
                |b, a| col.data[a * self.dim_out + b] * scale,
            ));
        }
        // The extracted family reproduces the Choi matrix exactly, so its
        // completeness deviation equals the trace-preservation deviation
        // already checked; a slightly loose tolerance avoids rejecting inputs
        // that barely passed the first test.
        KrausChannel::with_completeness_tol(self.dim_in, self.dim_out, kraus, 10.0 * COMPLETENESS_TOL)
    }

    pub fn max_abs_diff(&self, other: &ChoiMatrix) -> f64 {
        self.matrix.sub(&other.matrix).max_abs()
    }
}

/// Builds a channel from its action on matrix units, through Choi extraction.
///
/// This is the single trusted path for channels stated as formulas: the action
/// closure is evaluated on every |k⟩⟨l|, the Choi matrix is assembled and
/// validated (complete positivity, trace preservation), and a minimal Kraus
/// family is returned.
pub fn channel_from_action(
    dim_in: usize,
    dim_out: usize,
    action: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> Result<KrausChannel> {
    let d = dim_in * dim_out;
    let mut c = ComplexMatrix::zeros(d, d);
    for k in 0..dim_in {
        for l in 0..dim_in {
            let mut unit = ComplexMatrix::zeros(dim_in, dim_in);
            unit.set(k, l, ONE);
            let out = action(&unit);
            assert_eq!(out.rows, dim_out, "action output has wrong dimension");
            for b in 0..dim_out {
                for bp in 0..dim_out {
                    c.set(k * dim_out + b, l * dim_out + bp, out.get(b, bp));
                }
            }
        }
    }
    ChoiMatrix {
        dim_in,
        dim_out,
        matrix: c,
    }
    .to_channel()
}

/// The data of a classical-quantum channel Φ(ρ) = Σ_k ⟨b_k|ρ|b_k⟩ σ_k: an
/// orthonormal basis {b_k} of the input space and one output state per basis
/// vector.
#[derive(Debug, Clone)]
pub struct CqStructure {
    pub basis: Vec<ComplexVector>,
    pub sigmas: Vec<DensityMatrix>,
}

impl CqStructure {
    pub fn dim_in(&self) -> usize {
        self.basis.len()
    }

    pub fn dim_out(&self) -> usize {
        self.sigmas.first().map(|s| s.dim()).unwrap_or(0)
    }

    /// Max-abs deviation of {b_k} from orthonormality.
    pub fn basis_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let expected = if i == j { ONE } else { ZERO };
                dev = dev.max((a.inner(b) - expected).norm());
            }
        }
        dev
    }

    /// Evaluates Σ_k ⟨b_k|M|b_k⟩ σ_k on an arbitrary input matrix.
    pub fn action(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let d_out = self.dim_out();
        let mut out = ComplexMatrix::zeros(d_out, d_out);
        for (b, sigma) in self.basis.iter().zip(&self.sigmas) {
            let weight = b.inner(&m.apply(b));
            out = out.add(&sigma.matrix().scale(weight));
        }
        out
    }
}

/// Builds the classical-quantum channel with the given structure. Kraus
/// operators are √λ |β⟩⟨b_k| over the spectral decompositions σ_k = Σ λ|β⟩⟨β|.
pub fn cq_channel(structure: &CqStructure) -> Result<KrausChannel> {
    if structure.basis.is_empty() {
        return Err(Error::EmptyKraus);
    }
    let dim_in = structure.basis.len();
    for b in &structure.basis {
        if b.dim() != dim_in {
            return Err(Error::DimensionMismatch {
                context: "classical-quantum basis vector",
                expected: dim_in,
                got: b.dim(),
            });
        }
    }
    if structure.sigmas.len() != dim_in {
        return Err(Error::DimensionMismatch {
            context: "classical-quantum output state count",
            expected: dim_in,
            got: structure.sigmas.len(),
        });
    }
    let deviation = structure.basis_deviation();
    if deviation > COMPLETENESS_TOL {
        return Err(Error::NotOrthonormal(deviation));
    }
    let dim_out = structure.dim_out();
    let mut kraus = Vec::new();
    for (b, sigma) in structure.basis.iter().zip(&structure.sigmas) {
        if sigma.dim() != dim_out {
            return Err(Error::DimensionMismatch {
                context: "classical-quantum output state dimension",
                expected: dim_out,
                got: sigma.dim(),
            });
        }
        let eig = hermitian_eigendecompose(sigma.matrix())?;
        let cutoff = SUPPORT_CUTOFF * eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let beta = eig.eigenvectors.column(j).scale(Complex64::new(lambda.sqrt(), 0.0));
            kraus.push(beta.outer(b));
        }
    }
    KrausChannel::new(dim_in, dim_out, kraus)
}

/// Outcome of classical-quantum structure detection.
#[derive(Debug, Clone)]
pub enum CqDetection {
    /// The channel is classical-quantum; the structure reproduces it within
    /// the requested tolerance.
    Cq(CqStructure),
    /// Not classical-quantum; `witness` is the largest violation found (a
    /// commutator norm, or the reconstruction error if the commutators
    /// passed).
    NotCq { witness: f64 },
}

impl CqDetection {
    pub fn structure(&self) -> Option<&CqStructure> {
        match self {
            CqDetection::Cq(s) => Some(s),
            CqDetection::NotCq { .. } => None,
        }
    }
}

/// Decides whether Φ is classical-quantum: Φ is c-q iff the dual images
/// Φ*(E_r) of an operator basis of the output space all commute, in which case
/// their joint eigenbasis is the measurement basis {b_k} and σ_k = Φ(|b_k⟩⟨b_k|).
///
/// Joint diagonalization refines eigenvalue clusters operator by operator, so
/// degenerate spectra are handled without randomization; the recovered
/// structure is verified against the channel on a full operator basis before
/// being returned.
pub fn detect_classical_quantum(channel: &KrausChannel, tol: f64) -> CqDetection {
    let duals: Vec<ComplexMatrix> = hermitian_basis(channel.dim_out())
        .iter()
        .map(|e| channel.dual_apply(e).hermitized())
        .collect();

    let mut max_commutator: f64 = 0.0;
    for (i, x) in duals.iter().enumerate() {
        for y in duals.iter().skip(i + 1) {
            let comm = x.mul(y).sub(&y.mul(x)).max_abs();
            max_commutator = max_commutator.max(comm);
        }
    }
    if max_commutator > tol {
        return CqDetection::NotCq {
            witness: max_commutator,
        };
    }

    // Joint eigenbasis by cluster refinement: diagonalize each dual restricted
    // to the current clusters, rotating the candidate basis and splitting
    // clusters at spectral gaps.
    let d = channel.dim_in();
    let mut basis = ComplexMatrix::identity(d);
    let mut clusters: Vec<Vec<usize>> = vec![(0..d).collect()];
    for x in &duals {
        if clusters.iter().all(|c| c.len() == 1) {
            break;
        }
        let gap = 1e-6 * (1.0 + x.max_abs());
        let mut next_clusters = Vec::new();
        for cluster in &clusters {
            if cluster.len() == 1 {
                next_clusters.push(cluster.clone());
                continue;
            }
            let q = ComplexMatrix::from_fn(d, cluster.len(), |i, j| basis.get(i, cluster[j]));
            let restricted = q.adjoint().mul(x).mul(&q).hermitized();
            let eig = hermitian_eigendecompose(&restricted)
                .expect("restriction of a Hermitian matrix is Hermitian");
            let rotated = q.mul(&eig.eigenvectors);
            for (j, &col) in cluster.iter().enumerate() {
                for i in 0..d {
                    basis.set(i, col, rotated.get(i, j));
                }
            }
            let mut start = 0;
            for j in 1..=cluster.len() {
                if j == cluster.len()
                    || (eig.eigenvalues[j - 1] - eig.eigenvalues[j]).abs() > gap
                {
                    next_clusters.push(cluster[start..j].to_vec());
                    start = j;
                }
            }
        }
        clusters = next_clusters;
    }

    let basis_vectors: Vec<ComplexVector> = (0..d).map(|k| basis.column(k)).collect();
    let sigmas: Vec<DensityMatrix> = basis_vectors
        .iter()
        .map(|b| {
            DensityMatrix::from_valid(channel.apply_matrix(&b.outer(b)))
        })
        .collect();
    let structure = CqStructure {
        basis: basis_vectors,
        sigmas,
    };

    // Verify the structure actually reproduces the channel.
    let mut reconstruction_dev: f64 = 0.0;
    for e in hermitian_basis(d) {
        let dev = structure
            .action(&e)
            .sub(&channel.apply_matrix(&e))
            .max_abs();
        reconstruction_dev = reconstruction_dev.max(dev);
    }
    if reconstruction_dev > tol.max(1e-8) {
        return CqDetection::NotCq {
            witness: reconstruction_dev,
        };
    }
    CqDetection::Cq(structure)
}

/// Checks covariance Φ(V_g ρ V_g†) = W_g Φ(ρ) W_g† for each supplied pair of
/// unitaries, on a full operator basis of the input space.
pub fn verify_covariance(
    channel: &KrausChannel,
    input_unitaries: &[ComplexMatrix],
    output_unitaries: &[ComplexMatrix],
    tol: f64,
) -> Result<bool> {
    if input_unitaries.len() != output_unitaries.len() {
        return Err(Error::DimensionMismatch {
            context: "covariance unitary pairing",
            expected: input_unitaries.len(),
            got: output_unitaries.len(),
        });
    }
    for (u, dim) in input_unitaries
        .iter()
        .map(|u| (u, channel.dim_in()))
        .chain(output_unitaries.iter().map(|w| (w, channel.dim_out())))
    {
        if u.rows != dim || u.cols != dim {
            return Err(Error::DimensionMismatch {
                context: "covariance unitary size",
                expected: dim,
                got: u.rows,
            });
        }
        let dev = u
            .adjoint()
            .mul(u)
            .sub(&ComplexMatrix::identity(dim))
            .max_abs();
        if dev > 1e-9 {
            return Err(Error::NotUnitary(dev));
        }
    }
    let basis = hermitian_basis(channel.dim_in());
    for (v, w) in input_unitaries.iter().zip(output_unitaries) {
        for e in &basis {
            let lhs = channel.apply_matrix(&v.mul(e).mul(&v.adjoint()));
            let rhs = w.mul(&channel.apply_matrix(e)).mul(&w.adjoint());
            if lhs.sub(&rhs).max_abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Checks that `candidate` degrades Φ to its complementary channel:
/// candidate ∘ Φ = Φ̂ (with Φ̂ taken from a minimal Kraus family), compared on
/// Choi matrices.
pub fn verify_degrading(
    channel: &KrausChannel,
    candidate: &KrausChannel,
    tol: f64,
) -> Result<bool> {
    let complement = channel.minimal_kraus().complement();
    if candidate.dim_in() != channel.dim_out() {
        return Err(Error::DimensionMismatch {
            context: "degrading map input dimension",
            expected: channel.dim_out(),
            got: candidate.dim_in(),
        });
    }
    if candidate.dim_out() != complement.dim_out() {
        return Err(Error::DimensionMismatch {
            context: "degrading map output dimension",
            expected: complement.dim_out(),
            got: candidate.dim_out(),
        });
    }
    let composed = candidate.compose(channel)?;
    Ok(composed.choi().max_abs_diff(&complement.choi()) <= tol)
}

// ---------------------------------------------------------------------------
// Channel catalog
// ---------------------------------------------------------------------------

/// The identity (noiseless) channel on dimension `dim`.
pub fn noiseless(dim: usize) -> KrausChannel {
    KrausChannel {
        dim_in: dim,
        dim_out: dim,
        kraus: vec![ComplexMatrix::identity(dim)],
    }
}

/// Dephasing in the given orthonormal basis: Π(ρ) = Σ_k ⟨b_k|ρ|b_k⟩ |b_k⟩⟨b_k|.
pub fn dephasing(basis: &[ComplexVector]) -> Result<KrausChannel> {
    let dim = basis.len();
    if dim == 0 {
        return Err(Error::EmptyKraus);
    }
    let mut dev: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "dephasing basis vector",
                expected: dim,
                got: a.dim(),
            });
        }
        for (j, b) in basis.iter().enumerate() {
            let expected = if i == j { ONE } else { ZERO };
            dev = dev.max((a.inner(b) - expected).norm());
        }
    }
    if dev > COMPLETENESS_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let kraus = basis.iter().map(|b| b.outer(b)).collect();
    KrausChannel::new(dim, dim, kraus)
}

/// Dephasing in the computational basis.
pub fn dephasing_computational(dim: usize) -> KrausChannel {
    let basis: Vec<ComplexVector> = (0..dim).map(|k| ComplexVector::basis_state(dim, k)).collect();
    dephasing(&basis).expect("computational basis is orthonormal")
}

/// The measurement channel of an overcomplete system {φ_k}:
/// Φ(ρ) = Σ_k ⟨φ_k|ρ|φ_k⟩ |k⟩⟨k|, with one output dimension per vector.
/// The vectors must resolve the identity Σ|φ_k⟩⟨φ_k| = I.
pub fn measurement_channel(vectors: &[ComplexVector]) -> Result<KrausChannel> {
    if vectors.is_empty() {
        return Err(Error::EmptyKraus);
    }
    let dim_in = vectors[0].dim();
    for v in vectors {
        if v.dim() != dim_in {
            return Err(Error::DimensionMismatch {
                context: "measurement vector",
                expected: dim_in,
                got: v.dim(),
            });
        }
    }
    let mut resolution = ComplexMatrix::zeros(dim_in, dim_in);
    for v in vectors {
        resolution = resolution.add(&v.outer(v));
    }
    let deviation = resolution.sub(&ComplexMatrix::identity(dim_in)).max_abs();
    if deviation > COMPLETENESS_TOL {
        return Err(Error::NotOvercomplete(deviation));
    }
    let dim_out = vectors.len();
    let kraus = vectors
        .iter()
        .enumerate()
        .map(|(k, phi)| ComplexVector::basis_state(dim_out, k).outer(phi))
        .collect();
    KrausChannel::new(dim_in, dim_out, kraus)
}

/// The three symmetric ("trine") qubit vectors scaled to resolve the identity,
/// √(2/3)·(cos(2πk/3), sin(2πk/3)).
pub fn trine_vectors() -> Vec<ComplexVector> {
    (0..3)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            ComplexVector::from_real(&[angle.cos(), angle.sin()])
                .scale(Complex64::new((2.0f64 / 3.0).sqrt(), 0.0))
        })
        .collect()
}

/// The measurement channel of the trine system.
pub fn trine_channel() -> KrausChannel {
    measurement_channel(&trine_vectors()).expect("trine vectors resolve the identity")
}

/// The quantum-classical channel of a POVM {M_k}: Φ(ρ) = Σ_k Tr(M_k ρ)|k⟩⟨k|.
pub fn qc_channel(povm: &[ComplexMatrix]) -> Result<KrausChannel> {
    if povm.is_empty() {
        return Err(Error::EmptyKraus);
    }
    let dim_in = povm[0].rows;
    let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
    for m in povm {
        if m.rows != dim_in || m.cols != dim_in {
            return Err(Error::DimensionMismatch {
                context: "POVM element size",
                expected: dim_in,
                got: m.rows,
            });
        }
        sum = sum.add(m);
    }
    let deviation = sum.sub(&ComplexMatrix::identity(dim_in)).max_abs();
    if deviation > COMPLETENESS_TOL {
        return Err(Error::NotTracePreserving { deviation });
    }
    let dim_out = povm.len();
    let mut kraus = Vec::new();
    for (k, m) in povm.iter().enumerate() {
        let eig = hermitian_eigendecompose(m)?;
        if let Some(&min) = eig
            .eigenvalues
            .iter()
            .find(|&&x| x < -NEGATIVE_EIGENVALUE_TOL)
        {
            return Err(Error::NegativeSpectrum { eigenvalue: min });
        }
        let cutoff = SUPPORT_CUTOFF * eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let out = ComplexVector::basis_state(dim_out, k);
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let u = eig.eigenvectors.column(j);
            kraus.push(out.outer(&u).scale(Complex64::new(lambda.sqrt(), 0.0)));
        }
    }
    KrausChannel::new(dim_in, dim_out, kraus)
}

/// The depolarizing channel ρ ↦ (1−p)ρ + p·Tr(ρ)·I/d, in Weyl-operator Kraus
/// form. Requires 0 ≤ p ≤ 1.
pub fn depolarizing(dim: usize, p: f64) -> KrausChannel {
    assert!((0.0..=1.0).contains(&p), "depolarizing weight outside [0,1]");
    assert!(dim >= 2, "depolarizing needs dimension at least 2");
    let d2 = (dim * dim) as f64;
    let mut kraus = Vec::with_capacity(dim * dim);
    let omega = std::f64::consts::TAU / dim as f64;
    for a in 0..dim {
        for b in 0..dim {
            // Weyl operator X^a Z^b: |j⟩ ↦ ω^{bj} |j+a⟩.
            let weight = if a == 0 && b == 0 {
                (1.0 - p + p / d2).sqrt()
            } else {
                (p / d2).sqrt()
            };
            if weight == 0.0 {
                continue;
            }
            let mut w = ComplexMatrix::zeros(dim, dim);
            for j in 0..dim {
                let phase = Complex64::from_polar(weight, omega * (b * j) as f64);
                w.set((j + a) % dim, j, phase);
            }
            kraus.push(w);
        }
    }
    KrausChannel::new(dim, dim, kraus).expect("Weyl family is complete")
}

/// The completely depolarizing channel ρ ↦ Tr(ρ)·σ with a fixed output state.
pub fn completely_depolarizing(dim_in: usize, sigma: &DensityMatrix) -> KrausChannel {
    let eig = hermitian_eigendecompose(sigma.matrix()).expect("state is Hermitian");
    let cutoff = SUPPORT_CUTOFF * eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let mut kraus = Vec::new();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= cutoff {
            continue;
        }
        let u = eig.eigenvectors.column(j).scale(Complex64::new(lambda.sqrt(), 0.0));
        for k in 0..dim_in {
            kraus.push(u.outer(&ComplexVector::basis_state(dim_in, k)));
        }
    }
    KrausChannel::new(dim_in, sigma.dim(), kraus).expect("preparation family is complete")
}

/// An 8-to-4-dimensional channel combining perfect classical transmission with
/// a noiseless qubit sector.
///
/// The input space is H₁⊗H₂⊗H₃ (three qubits, left factor major); the output
/// is K = H₁⊗H₂. With |±⟩ = (|0⟩±|1⟩)/√2 on H₃ and {|k⟩} the computational
/// basis of K, the action is
///
///   Φ(ρ) = Σ_k ⟨k⊗+|ρ|k⊗+⟩ |k⟩⟨k|  +  ½ · X(ρ) ⊗ I_{H₂},
///
/// where X(ρ) = Tr_{H₂⊗H₃}[(I_K⊗|−⟩⟨−|)ρ] lives on H₁. (The "+" sector is
/// measured in the K basis; the "−" sector ships H₁ through noiselessly and
/// replaces H₂ with the chaotic qubit. Output ordering is fixed as H₁⊗H₂.)
pub fn bsst_plus() -> KrausChannel {
    let dim_in = 8;
    let dim_out = 4;
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let plus = ComplexVector::from_real(&[sqrt_half, sqrt_half]);
    let minus = ComplexVector::from_real(&[sqrt_half, -sqrt_half]);
    let minus_proj = minus.outer(&minus);
    let id_k = ComplexMatrix::identity(4);
    let id_2 = ComplexMatrix::identity(2);
    let probes: Vec<ComplexVector> = (0..4)
        .map(|k| ComplexVector::basis_state(4, k).tensor(&plus))
        .collect();
    let project_minus = tensor_product(&id_k, &minus_proj);

    channel_from_action(dim_in, dim_out, |m| {
        let mut out = ComplexMatrix::zeros(dim_out, dim_out);
        for (k, probe) in probes.iter().enumerate() {
            let weight = probe.inner(&m.apply(probe));
            let cur = out.get(k, k);
            out.set(k, k, cur + weight);
        }
        let masked = project_minus.mul(m);
        let x = partial_trace(&masked, 2, 4, Subsystem::First)
            .expect("input factors as H₁ ⊗ (H₂⊗H₃)");
        out.add(&tensor_product(&x, &id_2).scale_real(0.5))
    })
    .expect("the action is completely positive and trace-preserving")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_gen::{
        random_channel, random_cq_structure, random_density, random_povm, random_state_vector,
        random_unitary,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]])
    }

    fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![ZERO, Complex64::new(0.0, -1.0)],
            vec![Complex64::new(0.0, 1.0), ZERO],
        ])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag_real(&[1.0, -1.0])
    }

    #[test]
    fn density_matrix_rejects_bad_inputs() {
        let not_trace_one = ComplexMatrix::diag_real(&[0.9, 0.3]);
        assert!(matches!(
            DensityMatrix::new(not_trace_one),
            Err(Error::NonUnitTrace(_))
        ));
        let negative = ComplexMatrix::diag_real(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(Error::NegativeSpectrum { .. })
        ));
        let non_hermitian = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.5, 0.0), ONE],
            vec![ZERO, Complex64::new(0.5, 0.0)],
        ]);
        assert!(matches!(
            DensityMatrix::new(non_hermitian),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn kraus_channel_validates_completeness() {
        let two_identities = vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)];
        assert!(matches!(
            KrausChannel::new(2, 2, two_identities),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(matches!(KrausChannel::new(2, 2, vec![]), Err(Error::EmptyKraus)));
    }

    #[test]
    fn dephasing_kills_off_diagonal_entries() {
        let ch = dephasing_computational(2);
        let rho = DensityMatrix::new(ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)],
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)],
        ]))
        .unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!(out
            .matrix()
            .sub(&ComplexMatrix::diag_real(&[0.5, 0.5]))
            .max_abs()
            < 1e-12);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let ch = dephasing_computational(2);
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            ch.apply(&rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_is_adjoint_of_action_and_unital() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let ch = random_channel(3, 2, 3, &mut rng);
            let rho = random_density(3, 3, &mut rng);
            let a = {
                let g = crate::rand_gen::random_gaussian_matrix(2, 2, &mut rng);
                g.add(&g.adjoint()).scale_real(0.5)
            };
            let lhs = ch.apply_matrix(rho.matrix()).hs_inner(&a);
            let rhs = ch.dual_apply(&a).adjoint().hs_inner(rho.matrix()).conj();
            assert!((lhs - rhs).norm() < 1e-10, "duality pairing mismatch");
            let unital = ch
                .dual_apply(&ComplexMatrix::identity(2))
                .sub(&ComplexMatrix::identity(3))
                .max_abs();
            assert!(unital < 1e-10, "dual not unital: {unital:.3e}");
        }
    }

    #[test]
    fn dual_of_dephasing_preserves_diagonals() {
        let ch = dephasing_computational(2);
        let a = ComplexMatrix::diag_real(&[0.3, 0.9]);
        assert!(ch.dual_apply(&a).sub(&a).max_abs() < 1e-12);
    }

    #[test]
    fn complement_is_complete_and_matches_trace_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ch = random_channel(3, 4, 3, &mut rng);
        let comp = ch.complement();
        assert_eq!(comp.dim_out(), ch.kraus_count());
        let rho = random_density(3, 2, &mut rng);
        let out = comp.apply(&rho).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = ch.kraus()[i]
                    .mul(rho.matrix())
                    .mul(&ch.kraus()[j].adjoint())
                    .trace();
                assert!((out.matrix().get(i, j) - expected).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn complement_of_noiseless_is_trace_map() {
        let comp = noiseless(3).complement();
        assert_eq!(comp.dim_out(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density(3, 3, &mut rng);
        let out = comp.apply(&rho).unwrap();
        assert!((out.matrix().get(0, 0) - ONE).norm() < 1e-12);
    }

    #[test]
    fn measurement_channel_equals_its_complement() {
        // Both for an orthonormal basis and for the overcomplete trine system,
        // the measurement channel coincides with its complementary channel.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let u = random_unitary(3, &mut rng);
        let onb: Vec<ComplexVector> = (0..3).map(|k| u.column(k)).collect();
        for ch in [measurement_channel(&onb).unwrap(), trine_channel()] {
            let comp = ch.complement();
            assert_eq!(comp.dim_out(), ch.dim_out());
            for _ in 0..5 {
                let rho = random_density(ch.dim_in(), ch.dim_in(), &mut rng);
                let a = ch.apply(&rho).unwrap();
                let b = comp.apply(&rho).unwrap();
                assert!(a.matrix().sub(b.matrix()).max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn choi_is_positive_with_identity_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let ch = random_channel(3, 2, 4, &mut rng);
            let choi = ch.choi();
            let eig = hermitian_eigendecompose(&choi.matrix).unwrap();
            assert!(*eig.eigenvalues.last().unwrap() > -1e-11);
            let reduced =
                partial_trace(&choi.matrix, 3, 2, Subsystem::First).unwrap();
            assert!(reduced.sub(&ComplexMatrix::identity(3)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn choi_roundtrip_preserves_the_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let ch = random_channel(2, 3, 3, &mut rng);
            let rebuilt = ch.choi().to_channel().unwrap();
            assert!(ch.choi().max_abs_diff(&rebuilt.choi()) < 1e-10);
        }
    }

    #[test]
    fn choi_rejects_invalid_matrices() {
        let bad_psd = ChoiMatrix {
            dim_in: 2,
            dim_out: 1,
            matrix: ComplexMatrix::diag_real(&[1.0, -1.0]),
        };
        assert!(matches!(
            bad_psd.to_channel(),
            Err(Error::NotCompletelyPositive(_))
        ));
        let bad_tp = ChoiMatrix {
            dim_in: 2,
            dim_out: 1,
            matrix: ComplexMatrix::diag_real(&[2.0, 1.0]),
        };
        assert!(matches!(
            bad_tp.to_channel(),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn minimal_kraus_removes_redundant_operators() {
        let p0 = ComplexMatrix::diag_real(&[1.0, 0.0]);
        let p1 = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let inflated = KrausChannel::new(
            2,
            2,
            vec![p0.clone(), p1.scale(half), p1.scale(half)],
        )
        .unwrap();
        assert_eq!(inflated.kraus_count(), 3);
        let minimal = inflated.minimal_kraus();
        assert_eq!(minimal.kraus_count(), 2);
        assert!(inflated.choi().max_abs_diff(&minimal.choi()) < 1e-10);
    }

    #[test]
    fn minimal_kraus_of_complete_depolarizing_qubit_is_four() {
        let ch = completely_depolarizing(2, &DensityMatrix::maximally_mixed(2));
        assert_eq!(ch.minimal_kraus().kraus_count(), 4);
    }

    #[test]
    fn rekraus_preserves_choi_and_counts_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ch = random_channel(2, 2, 3, &mut rng);
        // Rows of a random 5×3 isometry give an overcomplete system on the
        // 3-dimensional environment.
        let u = random_unitary(5, &mut rng);
        let vectors: Vec<ComplexVector> = (0..5)
            .map(|k| {
                ComplexVector::from_components(
                    (0..3).map(|i| u.get(k, i).conj()).collect(),
                )
            })
            .collect();
        let rewritten = ch.rekraus_from_overcomplete(&vectors).unwrap();
        assert_eq!(rewritten.kraus_count(), 5);
        assert!(ch.choi().max_abs_diff(&rewritten.choi()) < 1e-10);
    }

    #[test]
    fn rekraus_rejects_non_resolving_vectors() {
        let ch = dephasing_computational(2);
        let vectors = vec![
            ComplexVector::basis_state(2, 0),
            ComplexVector::basis_state(2, 0),
        ];
        assert!(matches!(
            ch.rekraus_from_overcomplete(&vectors),
            Err(Error::NotOvercomplete(_))
        ));
    }

    #[test]
    fn compose_dephasing_twice_is_dephasing() {
        let pi = dephasing_computational(3);
        let composed = pi.compose(&pi).unwrap();
        assert!(composed.choi().max_abs_diff(&pi.choi()) < 1e-12);
        let mismatched = dephasing_computational(2).compose(&pi);
        assert!(matches!(mismatched, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tensor_channel_factorizes_on_product_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let a = random_channel(2, 2, 2, &mut rng);
        let b = random_channel(2, 3, 2, &mut rng);
        let joint = a.tensor(&b);
        assert_eq!(joint.dim_in(), 4);
        assert_eq!(joint.dim_out(), 6);
        let rho = random_density(2, 2, &mut rng);
        let sigma = random_density(2, 1, &mut rng);
        let lhs = joint.apply_matrix(&tensor_product(rho.matrix(), sigma.matrix()));
        let rhs = tensor_product(
            &a.apply_matrix(rho.matrix()),
            &b.apply_matrix(sigma.matrix()),
        );
        assert!(lhs.sub(&rhs).max_abs() < 1e-11);
    }

    #[test]
    fn detect_recovers_dephasing_structure() {
        match detect_classical_quantum(&dephasing_computational(3), 1e-8) {
            CqDetection::Cq(s) => {
                assert_eq!(s.dim_in(), 3);
                // Output states are the basis projectors (up to ordering).
                for sigma in &s.sigmas {
                    let eig = hermitian_eigendecompose(sigma.matrix()).unwrap();
                    assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-9);
                }
            }
            CqDetection::NotCq { witness } => {
                panic!("dephasing not detected as classical-quantum (witness {witness:.3e})")
            }
        }
    }

    #[test]
    fn detect_recovers_random_cq_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for trial in 0..10 {
            let dim_in = 2 + trial % 3; // 2..=4
            let structure = random_cq_structure(dim_in, 3, &mut rng);
            let ch = cq_channel(&structure).unwrap();
            match detect_classical_quantum(&ch, 1e-8) {
                CqDetection::Cq(found) => {
                    let rebuilt = cq_channel(&found).unwrap();
                    assert!(
                        ch.choi().max_abs_diff(&rebuilt.choi()) < 1e-8,
                        "recovered structure does not reproduce the channel (trial {trial})"
                    );
                }
                CqDetection::NotCq { witness } => {
                    panic!("cq channel not detected in trial {trial} (witness {witness:.3e})")
                }
            }
        }
    }

    #[test]
    fn detect_rejects_depolarizing_and_trine() {
        for (name, ch) in [
            ("depolarizing", depolarizing(2, 0.5)),
            ("trine measurement", trine_channel()),
        ] {
            match detect_classical_quantum(&ch, 1e-8) {
                CqDetection::NotCq { witness } => {
                    assert!(witness > 1e-3, "{name}: witness too small: {witness:.3e}")
                }
                CqDetection::Cq(_) => panic!("{name} wrongly detected as classical-quantum"),
            }
        }
    }

    #[test]
    fn qc_channel_is_cq_exactly_when_povm_commutes() {
        // Commuting POVM: diagonal elements.
        let diag_povm = vec![
            ComplexMatrix::diag_real(&[0.7, 0.2]),
            ComplexMatrix::diag_real(&[0.3, 0.8]),
        ];
        let ch = qc_channel(&diag_povm).unwrap();
        assert!(matches!(
            detect_classical_quantum(&ch, 1e-8),
            CqDetection::Cq(_)
        ));
        // Non-commuting POVM from the trine vectors.
        let trine_povm: Vec<ComplexMatrix> =
            trine_vectors().iter().map(|v| v.outer(v)).collect();
        let ch = qc_channel(&trine_povm).unwrap();
        assert!(matches!(
            detect_classical_quantum(&ch, 1e-8),
            CqDetection::NotCq { .. }
        ));
    }

    #[test]
    fn covariance_of_dephasing_under_bit_and_phase_flips() {
        let ch = dephasing_computational(2);
        let ok = verify_covariance(
            &ch,
            &[pauli_z(), pauli_x()],
            &[pauli_z(), pauli_x()],
            1e-9,
        )
        .unwrap();
        assert!(ok, "dephasing is covariant under Z and X");
        let hadamard = ComplexMatrix::from_fn(2, 2, |i, j| {
            let sign = if i == 1 && j == 1 { -1.0 } else { 1.0 };
            Complex64::new(sign * std::f64::consts::FRAC_1_SQRT_2, 0.0)
        });
        let not_cov = verify_covariance(&ch, &[hadamard.clone()], &[hadamard], 1e-9).unwrap();
        assert!(!not_cov, "dephasing is not covariant under Hadamard");
    }

    #[test]
    fn covariance_of_depolarizing_under_pauli_group() {
        let ch = depolarizing(2, 0.3);
        let paulis = vec![
            ComplexMatrix::identity(2),
            pauli_x(),
            pauli_y(),
            pauli_z(),
        ];
        assert!(verify_covariance(&ch, &paulis, &paulis, 1e-9).unwrap());
    }

    #[test]
    fn covariance_rejects_non_unitary_input() {
        let ch = dephasing_computational(2);
        let not_unitary = ComplexMatrix::diag_real(&[1.0, 2.0]);
        assert!(matches!(
            verify_covariance(&ch, &[not_unitary.clone()], &[not_unitary], 1e-9),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn noiseless_channel_is_degraded_by_trace_map() {
        let ch = noiseless(3);
        let trace_kraus: Vec<ComplexMatrix> = (0..3)
            .map(|k| {
                ComplexMatrix::from_fn(1, 3, |_, j| if j == k { ONE } else { ZERO })
            })
            .collect();
        let trace_map = KrausChannel::new(3, 1, trace_kraus).unwrap();
        assert!(verify_degrading(&ch, &trace_map, 1e-9).unwrap());
        let wrong_dims = noiseless(3);
        assert!(matches!(
            verify_degrading(&ch, &wrong_dims, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orthogonal_cq_channel_is_degradable() {
        // A classical-quantum channel whose outputs have orthogonal supports
        // is degraded by measuring the support blocks and preparing the
        // corresponding complement outputs.
        let basis = vec![
            ComplexVector::basis_state(2, 0),
            ComplexVector::basis_state(2, 1),
        ];
        let sigmas = vec![
            DensityMatrix::diagonal(&[0.6, 0.4, 0.0, 0.0]).unwrap(),
            DensityMatrix::diagonal(&[0.0, 0.0, 0.3, 0.7]).unwrap(),
        ];
        let structure = CqStructure { basis, sigmas };
        let ch = cq_channel(&structure).unwrap();
        let minimal = ch.minimal_kraus();
        let comp = minimal.complement();
        let supports = vec![
            ComplexMatrix::diag_real(&[1.0, 1.0, 0.0, 0.0]),
            ComplexMatrix::diag_real(&[0.0, 0.0, 1.0, 1.0]),
        ];
        let taus: Vec<ComplexMatrix> = (0..2)
            .map(|k| {
                let b = ComplexVector::basis_state(2, k);
                comp.apply_matrix(&b.outer(&b))
            })
            .collect();
        let d_e = comp.dim_out();
        let degrading = channel_from_action(4, d_e, |m| {
            let mut out = ComplexMatrix::zeros(d_e, d_e);
            for (p, tau) in supports.iter().zip(&taus) {
                let weight = p.mul(m).trace();
                out = out.add(&tau.scale(weight));
            }
            out
        })
        .unwrap();
        assert!(verify_degrading(&ch, &degrading, 1e-8).unwrap());
    }

    #[test]
    fn catalog_channel_shapes_and_counts() {
        assert_eq!(noiseless(4).kraus_count(), 1);
        assert_eq!(dephasing_computational(3).kraus_count(), 3);
        assert_eq!(trine_channel().dim_out(), 3);
        assert_eq!(depolarizing(2, 0.5).kraus_count(), 4);
        let ch = completely_depolarizing(3, &DensityMatrix::maximally_mixed(2));
        assert_eq!(ch.dim_in(), 3);
        assert_eq!(ch.dim_out(), 2);
        assert_eq!(ch.kraus_count(), 6);
    }

    #[test]
    fn depolarizing_action_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for dim in [2usize, 3] {
            let p = 0.37;
            let ch = depolarizing(dim, p);
            let rho = random_density(dim, dim, &mut rng);
            let expected = rho
                .matrix()
                .scale_real(1.0 - p)
                .add(&ComplexMatrix::identity(dim).scale_real(p / dim as f64));
            let got = ch.apply_matrix(rho.matrix());
            assert!(got.sub(&expected).max_abs() < 1e-10);
        }
    }

    #[test]
    fn qc_channel_outputs_measurement_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let povm = random_povm(3, 4, &mut rng);
        let ch = qc_channel(&povm).unwrap();
        let rho = random_density(3, 3, &mut rng);
        let out = ch.apply(&rho).unwrap();
        for (k, m) in povm.iter().enumerate() {
            let expected = m.mul(rho.matrix()).trace().re;
            assert!((out.matrix().get(k, k).re - expected).abs() < 1e-10);
            for l in 0..povm.len() {
                if l != k {
                    assert!(out.matrix().get(k, l).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bsst_plus_matches_its_action_formula() {
        let ch = bsst_plus();
        assert_eq!(ch.dim_in(), 8);
        assert_eq!(ch.dim_out(), 4);

        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::from_real(&[sqrt_half, sqrt_half]);
        let minus = ComplexVector::from_real(&[sqrt_half, -sqrt_half]);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let rho = random_density(8, 8, &mut rng);
            let direct = {
                let mut out = ComplexMatrix::zeros(4, 4);
                for k in 0..4 {
                    let probe = ComplexVector::basis_state(4, k).tensor(&plus);
                    let w = probe.inner(&rho.matrix().apply(&probe));
                    let cur = out.get(k, k);
                    out.set(k, k, cur + w);
                }
                let masked = tensor_product(&ComplexMatrix::identity(4), &minus.outer(&minus))
                    .mul(rho.matrix());
                let x = partial_trace(&masked, 2, 4, Subsystem::First).unwrap();
                out.add(&tensor_product(&x, &ComplexMatrix::identity(2)).scale_real(0.5))
            };
            let via_kraus = ch.apply_matrix(rho.matrix());
            assert!(
                via_kraus.sub(&direct).max_abs() < 1e-9,
                "Kraus form disagrees with the action formula"
            );
            assert!((via_kraus.trace().re - 1.0).abs() < 1e-9);
        }

        // Classical probes go through perfectly: |k⟩⊗|+⟩ ↦ |k⟩⟨k|.
        for k in 0..4 {
            let probe = ComplexVector::basis_state(4, k).tensor(&plus);
            let out = ch.apply(&DensityMatrix::pure(&probe)).unwrap();
            let mut expected = ComplexMatrix::zeros(4, 4);
            expected.set(k, k, ONE);
            assert!(out.matrix().sub(&expected).max_abs() < 1e-9);
        }

        // The minus sector ships H₁ noiselessly next to a chaotic qubit.
        let psi1 = random_state_vector(2, &mut rng);
        let input = psi1
            .tensor(&ComplexVector::basis_state(2, 0))
            .tensor(&minus);
        let out = ch.apply(&DensityMatrix::pure(&input)).unwrap();
        let expected = tensor_product(
            &psi1.outer(&psi1),
            &ComplexMatrix::identity(2).scale_real(0.5),
        );
        assert!(out.matrix().sub(&expected).max_abs() < 1e-9);
    }

    #[test]
    fn restrict_input_to_plus_sector_of_bsst_gives_dephasing() {
        let ch = bsst_plus();
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::from_real(&[sqrt_half, sqrt_half]);
        let isometry = ComplexMatrix::from_fn(8, 4, |i, j| {
            ComplexVector::basis_state(4, j).tensor(&plus).data[i]
        });
        let restricted = ch.restrict_input(&isometry).unwrap();
        let depha = dephasing_computational(4);
        assert!(restricted.choi().max_abs_diff(&depha.choi()) < 1e-9);
    }
}
