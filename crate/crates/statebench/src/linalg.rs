//! Dense complex linear algebra for the small (2x2 and 4x4) matrices the
//! rest of the crate works with: Hermitian eigendecomposition, PSD square
//! roots, trace norms, and Kronecker products.
//!
//! The eigensolver is a cyclic Jacobi sweep specialised to Hermitian input.
//! At these dimensions it converges in a handful of sweeps and needs no
//! external dependency.

use num_complex::Complex64;
use thiserror::Error;

/// Maximum number of Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm below which the Jacobi iteration stops.
pub const JACOBI_OFF_THRESHOLD: f64 = 1e-13;
/// Default tolerance for Hermiticity checks (max-entry norm of m - m†).
pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;
/// Default clamping tolerance for [`sqrt_psd`]: eigenvalues in
/// [-CLAMP, 0) are treated as rounding noise and clamped to zero;
/// anything below -CLAMP is an error.
pub const DEFAULT_PSD_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |m - m†| entry is {max_deviation:.3e} (tolerance {tol:.3e})")]
    NotHermitian { max_deviation: f64, tol: f64 },
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e} below -{tol:.3e}")]
    NotPsd { eigenvalue: f64, tol: f64 },
    #[error("dimension mismatch: {a}x{a} vs {b}x{b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("entry data has length {len}, expected {dim}x{dim}")]
    BadShape { len: usize, dim: usize },
}

/// Square complex matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim, entries: vec![Complex64::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be `dim²`.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if entries.len() != dim * dim {
            return Err(LinalgError::BadShape { len: entries.len(), dim });
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        Self::from_entries(dim, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// Largest entry magnitude of `self - self†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            worst = worst.max(self[(i, i)].im.abs());
            for j in (i + 1)..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Approximate equality: same dimension exactly, entries within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// Kronecker product `a ⊗ b` in the row-major block convention: the (i, j)
/// block of the result is `a[i][j] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let mut out = ComplexMatrix::zeros(na * nb);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            if aij == Complex64::ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigenvalues (real, descending) and orthonormal eigenvectors of a
/// Hermitian matrix. Column `i` of `eigenvectors` pairs with
/// `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `i` of the eigenvector matrix.
    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|r| self.eigenvectors[(r, i)]).collect()
    }

    /// Rebuilds `Σ_i f(λ_i) v_i v_i†`.
    pub fn rebuild_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let w = f(self.eigenvalues[k]);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.eigenvectors[(i, k)];
                for j in 0..n {
                    out[(i, j)] += w * vik * self.eigenvectors[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Rebuilds `Σ_i λ_i v_i v_i†`, which should reproduce the input matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.rebuild_with(|x| x)
    }
}

/// Frobenius norm of the strictly off-diagonal part.
fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation zeroing the (p, q) entry of the Hermitian matrix
/// `a`, accumulating the rotation into the columns of `v` when present.
fn jacobi_rotate(a: &mut ComplexMatrix, v: Option<&mut ComplexMatrix>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let m = apq.norm();
    if m == 0.0 {
        return;
    }
    // Phase removal turns the (p, q) pivot real; w = e^{-i arg(apq)}.
    let w = apq.conj() / m;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * m);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Unitary restricted to (p, q): [[c, s], [-s w, c w]].
    let n = a.dim();
    // Right multiplication by J updates columns p and q.
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = c * aip - s * w * aiq;
        a[(i, q)] = s * aip + c * w * aiq;
    }
    // Left multiplication by J† updates rows p and q.
    let wc = w.conj();
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = c * apj - s * wc * aqj;
        a[(q, j)] = s * apj + c * wc * aqj;
    }
    // The pivot is zero by construction; pin it and keep the diagonal real.
    a[(p, q)] = Complex64::ZERO;
    a[(q, p)] = Complex64::ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    if let Some(v) = v {
        for i in 0..n {
            let vip = v[(i, p)];
            let viq = v[(i, q)];
            v[(i, p)] = c * vip - s * w * viq;
            v[(i, q)] = s * vip + c * w * viq;
        }
    }
}

fn jacobi_sweeps(
    a: &mut ComplexMatrix,
    mut v: Option<&mut ComplexMatrix>,
) -> Result<(), LinalgError> {
    let n = a.dim();
    if n == 1 {
        return Ok(());
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(a) <= JACOBI_OFF_THRESHOLD {
            return Ok(());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(a, v.as_deref_mut(), p, q);
            }
        }
    }
    let off = off_diagonal_norm(a);
    if off <= JACOBI_OFF_THRESHOLD {
        Ok(())
    } else {
        Err(LinalgError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS, off_norm: off })
    }
}

fn check_hermitian(m: &ComplexMatrix, tol: f64) -> Result<(), LinalgError> {
    let dev = m.hermiticity_deviation();
    if dev > tol {
        return Err(LinalgError::NotHermitian { max_deviation: dev, tol });
    }
    Ok(())
}

fn sort_descending(values: &mut [f64], vectors: Option<&mut ComplexMatrix>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).expect("finite eigenvalues"));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    values.copy_from_slice(&sorted);
    if let Some(v) = vectors {
        let old = v.clone();
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                v[(r, new_col)] = old[(r, old_col)];
            }
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eig(
    m: &ComplexMatrix,
    hermiticity_tol: f64,
) -> Result<HermitianSpectrum, LinalgError> {
    check_hermitian(m, hermiticity_tol)?;
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(m.dim());
    jacobi_sweeps(&mut a, Some(&mut v))?;
    let mut values: Vec<f64> = (0..m.dim()).map(|i| a[(i, i)].re).collect();
    sort_descending(&mut values, Some(&mut v));
    Ok(HermitianSpectrum { eigenvalues: values, eigenvectors: v })
}

/// Eigenvalues only (descending); cheaper than [`hermitian_eig`] on hot paths.
pub fn hermitian_eigenvalues(
    m: &ComplexMatrix,
    hermiticity_tol: f64,
) -> Result<Vec<f64>, LinalgError> {
    check_hermitian(m, hermiticity_tol)?;
    let mut a = m.clone();
    jacobi_sweeps(&mut a, None)?;
    let mut values: Vec<f64> = (0..m.dim()).map(|i| a[(i, i)].re).collect();
    sort_descending(&mut values, None);
    Ok(values)
}

/// Hermitian PSD square root. Eigenvalues in `[-clamp_tol, 0)` are clamped
/// to zero before the root; anything below `-clamp_tol` is rejected.
pub fn sqrt_psd(m: &ComplexMatrix, clamp_tol: f64) -> Result<ComplexMatrix, LinalgError> {
    let spectrum = hermitian_eig(m, DEFAULT_HERMITICITY_TOL)?;
    if let Some(&low) = spectrum.eigenvalues.last() {
        if low < -clamp_tol {
            return Err(LinalgError::NotPsd { eigenvalue: low, tol: clamp_tol });
        }
    }
    Ok(spectrum.rebuild_with(|x| if x > 0.0 { x.sqrt() } else { 0.0 }))
}

/// Trace norm `Σ_i |λ_i|` of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    let values = hermitian_eigenvalues(m, DEFAULT_HERMITICITY_TOL)?;
    Ok(values.iter().map(|x| x.abs()).sum())
}
