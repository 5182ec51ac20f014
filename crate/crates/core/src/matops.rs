//! Dense complex matrices and the spectral operations everything else is
//! built on.
//!
//! Storage is row-major `Vec<Complex64>`; nothing here is tuned beyond what
//! dimension ≤ 64 needs. The only nontrivial algorithm is a cyclic Jacobi
//! eigensolver for Hermitian matrices, chosen because it is dependency-free,
//! deterministic, and accurate to near machine precision at these sizes.
//!
//! Spectral functions follow a pseudo-inverse convention: eigenvalues at or
//! below `SUPPORT_CUTOFF` times the largest eigenvalue count as zero and are
//! mapped to zero, so `Power(-0.5)` of a singular positive matrix is its
//! pseudo inverse square root, `Log2` is the logarithm on the support, etc.

use crate::{Error, Result, HERMITIAN_TOL, NEGATIVE_EIGENVALUE_TOL, SUPPORT_CUTOFF};

pub type Complex64 = num_complex::Complex<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    pub data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn zeros(dim: usize) -> Self {
        ComplexVector {
            data: vec![ZERO; dim],
        }
    }

    pub fn from_components(data: Vec<Complex64>) -> Self {
        ComplexVector { data }
    }

    pub fn from_real(data: &[f64]) -> Self {
        ComplexVector {
            data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// The computational basis vector |k⟩ in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = Self::zeros(dim);
        v.data[k] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(&self) -> ComplexVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scale(&self, z: Complex64) -> ComplexVector {
        ComplexVector {
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    pub fn add(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), other.dim(), "vector addition dimension mismatch");
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> ComplexVector {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// |self⟩⟨other|.
    pub fn outer(&self, other: &ComplexVector) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim(), other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                m.set(i, j, self.data[i] * other.data[j].conj());
            }
        }
        m
    }

    /// |self⟩ ⊗ |other⟩ with the left factor major, matching [`tensor_product`].
    pub fn tensor(&self, other: &ComplexVector) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.dim() * other.dim());
        for i in 0..self.dim() {
            for j in 0..other.dim() {
                out.data[i * other.dim() + j] = self.data[i] * other.data[j];
            }
        }
        out
    }
}

/// A dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from rows of `[re, im]` pairs; rows must be equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged rows in matrix literal");
            for (j, &z) in row.iter().enumerate() {
                m.set(i, j, z);
            }
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.entries[i * self.cols + j] = z;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector {
            data: (0..self.rows).map(|i| self.get(i, j)).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "matrix addition shape mismatch"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * z).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> ComplexMatrix {
        self.scale(Complex64::new(x, 0.0))
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matrix product shape mismatch: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector shape mismatch");
        let mut out = ComplexVector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = ZERO;
            for j in 0..self.cols {
                acc += self.get(i, j) * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus; the workhorse norm for closeness checks.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max_ij |M_ij − conj(M_ji)|, zero exactly for Hermitian matrices.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square(), "hermiticity of a non-square matrix");
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tol
    }

    /// (M + M†)/2; the diagonal comes out exactly real.
    pub fn hermitized(&self) -> ComplexMatrix {
        assert!(self.is_square(), "hermitization of a non-square matrix");
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    /// Tr(self† · other), the Hilbert-Schmidt pairing.
    pub fn hs_inner(&self, other: &ComplexMatrix) -> Complex64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "Hilbert-Schmidt pairing shape mismatch"
        );
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Expectation ⟨v|M|v⟩.
    pub fn expectation(&self, v: &ComplexVector) -> Complex64 {
        v.inner(&self.apply(v))
    }
}

/// Result of a Hermitian eigendecomposition: M = V diag(λ) V† with the
/// eigenvalues sorted in non-increasing order and eigenvectors as the
/// corresponding columns of a unitary `eigenvectors`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V diag(f(λ)) V† for an arbitrary function of the eigenvalues.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for j in 0..n {
            let g = Complex64::new(f(self.eigenvalues[j]), 0.0);
            for i in 0..n {
                let val = scaled.get(i, j) * g;
                scaled.set(i, j, val);
            }
        }
        scaled.mul(&v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|x| x)
    }

    /// Projector onto the span of eigenvectors with eigenvalue strictly above
    /// `cutoff`.
    pub fn support_projector(&self, cutoff: f64) -> ComplexMatrix {
        self.map_eigenvalues(|x| if x > cutoff { 1.0 } else { 0.0 })
    }
}

const JACOBI_OFF_FACTOR: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

fn offdiagonal_frobenius(a: &ComplexMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.rows {
        for j in 0..a.cols {
            if i != j {
                acc += a.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Sweeps run until the off-diagonal Frobenius mass drops below
/// 1e-14 · ‖M‖_F. Output is deterministic for identical input. Rejects
/// non-square input and matrices whose Hermiticity deviation exceeds the
/// crate-wide tolerance (the input is symmetrized before iterating, so the
/// deviation is never amplified).
pub fn hermitian_eigendecompose(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let deviation = m.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NonHermitian {
            deviation,
            tol: HERMITIAN_TOL,
        });
    }

    let n = m.rows;
    let mut a = m.hermitized();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        let target = JACOBI_OFF_FACTOR * scale;
        // Entries below this cannot push the off-diagonal mass back above the
        // target even if every one of them is skipped.
        let skip = target / n as f64;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            if offdiagonal_frobenius(&a) <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let abs = apq.norm();
                    if abs <= skip {
                        continue;
                    }
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let tau = (aqq - app) / (2.0 * abs);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let phase = apq / abs; // e^{iφ}
                    // The 2x2 block of the rotation is
                    //   [ c            s          ]
                    //   [ -s·e^{-iφ}   c·e^{-iφ}  ]
                    // i.e. a phase that makes the pivot real, then a real
                    // Jacobi rotation that annihilates it.
                    let u_qp = -s * phase.conj();
                    let u_qq = c * phase.conj();

                    // A ← U† A U: columns first, then rows.
                    for r in 0..n {
                        let arp = a.get(r, p);
                        let arq = a.get(r, q);
                        a.set(r, p, arp * c + arq * u_qp);
                        a.set(r, q, arp * s + arq * u_qq);
                    }
                    for r in 0..n {
                        let apr = a.get(p, r);
                        let aqr = a.get(q, r);
                        a.set(p, r, apr * c + aqr * u_qp.conj());
                        a.set(q, r, apr * s + aqr * u_qq.conj());
                    }
                    // The transformed 2x2 block is known analytically; writing
                    // it directly keeps the diagonal exactly real and the
                    // pivot exactly zero.
                    a.set(p, p, Complex64::new(app - t * abs, 0.0));
                    a.set(q, q, Complex64::new(aqq + t * abs, 0.0));
                    a.set(p, q, ZERO);
                    a.set(q, p, ZERO);

                    for r in 0..n {
                        let vrp = v.get(r, p);
                        let vrq = v.get(r, q);
                        v.set(r, p, vrp * c + vrq * u_qp);
                        v.set(r, q, vrp * s + vrq * u_qq);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .re
            .partial_cmp(&a.get(i, i).re)
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Scalar functions that can be lifted to positive-semidefinite matrices via
/// the spectral theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFn {
    Log2,
    Sqrt,
    InvSqrt,
    Exp2,
    Power(f64),
}

impl SpectralFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SpectralFn::Log2 => x.log2(),
            SpectralFn::Sqrt => x.sqrt(),
            SpectralFn::InvSqrt => 1.0 / x.sqrt(),
            SpectralFn::Exp2 => x.exp2(),
            SpectralFn::Power(p) => x.powf(p),
        }
    }
}

/// Applies a scalar function to the support of a positive-semidefinite matrix.
///
/// Eigenvalues in `[-1e-9, 0)` are clipped to zero; eigenvalues at or below the
/// relative support cutoff map to zero instead of through `f`, which yields
/// pseudo-inverse conventions for negative powers and keeps logarithms finite.
/// An eigenvalue below `-1e-9` is a genuine negativity and is rejected.
pub fn matrix_function_on_support(m: &ComplexMatrix, f: SpectralFn) -> Result<ComplexMatrix> {
    let eig = hermitian_eigendecompose(m)?;
    if let Some(&min) = eig
        .eigenvalues
        .iter()
        .find(|&&x| x < -NEGATIVE_EIGENVALUE_TOL)
    {
        return Err(Error::NegativeSpectrum { eigenvalue: min });
    }
    let lambda_max = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = SUPPORT_CUTOFF * lambda_max;
    Ok(eig.map_eigenvalues(|x| if x > cutoff { f.eval(x) } else { 0.0 }))
}

/// Kronecker product with the left factor major: the row index of the result
/// is `i_a * b.rows + i_b`, matching [`ComplexVector::tensor`].
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let za = a.get(ia, ja);
            if za == ZERO {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out.set(ia * b.rows + ib, ja * b.cols + jb, za * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Which tensor factor a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of an operator on a bipartite space of dimensions
/// `(dim_first, dim_second)`, keeping the named factor.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim_first: usize,
    dim_second: usize,
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if m.rows != dim_first * dim_second {
        return Err(Error::DimensionMismatch {
            context: "partial trace factor dimensions",
            expected: m.rows,
            got: dim_first * dim_second,
        });
    }
    match keep {
        Subsystem::First => {
            let mut out = ComplexMatrix::zeros(dim_first, dim_first);
            for i in 0..dim_first {
                for j in 0..dim_first {
                    let mut acc = ZERO;
                    for k in 0..dim_second {
                        acc += m.get(i * dim_second + k, j * dim_second + k);
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
        Subsystem::Second => {
            let mut out = ComplexMatrix::zeros(dim_second, dim_second);
            for i in 0..dim_second {
                for j in 0..dim_second {
                    let mut acc = ZERO;
                    for k in 0..dim_first {
                        acc += m.get(k * dim_second + i, k * dim_second + j);
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
    }
}

/// Hilbert-Schmidt-orthonormal basis of Hermitian d×d matrices: the diagonal
/// units, then (|k⟩⟨l| + |l⟩⟨k|)/√2 and i(|k⟩⟨l| − |l⟩⟨k|)/√2 for k < l.
pub fn hermitian_basis(dim: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(dim * dim);
    for k in 0..dim {
        let mut e = ComplexMatrix::zeros(dim, dim);
        e.set(k, k, ONE);
        basis.push(e);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..dim {
        for l in (k + 1)..dim {
            let mut re = ComplexMatrix::zeros(dim, dim);
            re.set(k, l, Complex64::new(inv_sqrt2, 0.0));
            re.set(l, k, Complex64::new(inv_sqrt2, 0.0));
            basis.push(re);
            let mut im = ComplexMatrix::zeros(dim, dim);
            im.set(k, l, Complex64::new(0.0, inv_sqrt2));
            im.set(l, k, Complex64::new(0.0, -inv_sqrt2));
            basis.push(im);
        }
    }
    basis
}

/// Trace norm (sum of absolute eigenvalues) of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigendecompose(m)?;
    Ok(eig.eigenvalues.iter().map(|x| x.abs()).sum())
}
