//! Construction and validation of the two-qubit states under study: pure
//! nonmaximally entangled states, their depolarized (Werner-like) family,
//! maximally entangled mixed states, and the depolarizing channel itself.
//!
//! Basis ordering is (|00>, |01>, |10>, |11>) everywhere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, LinalgError};

/// Max-entry Hermiticity tolerance for density-matrix validation.
pub const VALIDATION_HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance for density-matrix validation.
pub const VALIDATION_TRACE_TOL: f64 = 1e-10;
/// Eigenvalues may undershoot zero by at most this much (rounding noise).
pub const VALIDATION_EIGENVALUE_FLOOR: f64 = -1e-9;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("density matrix is not Hermitian: deviation {0:.3e}")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("density matrix has eigenvalue {0:.3e} below the PSD floor")]
    NotPositive(f64),
    #[error("depolarization strength {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("concurrence parameter {0} outside [0, 1]")]
    ROutOfRange(f64),
    #[error("unsupported dimension {0}, expected 2 or 4")]
    BadDimension(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// up to rounding noise. Construction through [`DensityMatrix::new`] is the
/// validation witness; the wrapped matrix is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates and wraps `matrix`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self, StateError> {
        let dev = matrix.hermiticity_deviation();
        if dev > VALIDATION_HERMITICITY_TOL {
            return Err(StateError::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > VALIDATION_TRACE_TOL || tr.im.abs() > VALIDATION_TRACE_TOL {
            return Err(StateError::TraceNotOne(tr.re));
        }
        let values = linalg::hermitian_eigenvalues(&matrix, VALIDATION_HERMITICITY_TOL)?;
        if let Some(&low) = values.last() {
            if low < VALIDATION_EIGENVALUE_FLOOR {
                return Err(StateError::NotPositive(low));
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Tr(rho^2), computed entrywise (the matrix is Hermitian).
    pub fn purity(&self) -> f64 {
        self.matrix.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.matrix.approx_eq(&other.matrix, tol)
    }
}

/// Parameters naming one member of the state families; doubles as the
/// provenance record attached to plane points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FamilyParams {
    /// cos(2θ)|00> + sin(2θ)|11>, θ in radians.
    Pure { theta: f64 },
    /// Depolarized nonmaximally entangled state.
    Rho1 { eps: f64, theta: f64 },
    /// Maximally entangled mixed state with concurrence `r`.
    Mems { r: f64 },
    /// Depolarized maximally entangled mixed state.
    Rho2 { eps: f64, r: f64 },
    /// The normalized identity on an N-level system.
    FullyMixed { dim: usize },
}

impl FamilyParams {
    pub fn build(&self) -> Result<DensityMatrix, StateError> {
        match *self {
            FamilyParams::Pure { theta } => Ok(pure_nonmax(theta)),
            FamilyParams::Rho1 { eps, theta } => rho1(eps, theta),
            FamilyParams::Mems { r } => mems(r),
            FamilyParams::Rho2 { eps, r } => rho2(eps, r),
            FamilyParams::FullyMixed { dim } => fully_mixed(dim),
        }
    }
}

impl std::fmt::Display for FamilyParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            FamilyParams::Pure { theta } => write!(f, "pure(theta={theta})"),
            FamilyParams::Rho1 { eps, theta } => write!(f, "rho1(eps={eps},theta={theta})"),
            FamilyParams::Mems { r } => write!(f, "mems(r={r})"),
            FamilyParams::Rho2 { eps, r } => write!(f, "rho2(eps={eps},r={r})"),
            FamilyParams::FullyMixed { dim } => write!(f, "fully-mixed(dim={dim})"),
        }
    }
}

/// Rank-1 projector onto cos(2θ)|00> + sin(2θ)|11>.
pub fn pure_nonmax(theta: f64) -> DensityMatrix {
    let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let mut m = ComplexMatrix::zeros(4);
    m[(0, 0)] = Complex64::new(c * c, 0.0);
    m[(0, 3)] = Complex64::new(c * s, 0.0);
    m[(3, 0)] = Complex64::new(c * s, 0.0);
    m[(3, 3)] = Complex64::new(s * s, 0.0);
    DensityMatrix::new(m).expect("rank-1 projector is a valid state")
}

/// The maximally entangled state (|00> + |11>)/sqrt(2) as a density matrix.
pub fn phi_plus() -> DensityMatrix {
    pure_nonmax(std::f64::consts::FRAC_PI_8)
}

/// The normalized identity on an N-level system (N = 2 or 4).
pub fn fully_mixed(dim: usize) -> Result<DensityMatrix, StateError> {
    if dim != 2 && dim != 4 {
        return Err(StateError::BadDimension(dim));
    }
    let m = ComplexMatrix::identity(dim).scale_re(1.0 / dim as f64);
    Ok(DensityMatrix::new(m).expect("normalized identity is a valid state"))
}

/// Uniform depolarization: rho -> (1 - eps) rho + (eps/N) I.
pub fn depolarize(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix, StateError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(StateError::EpsilonOutOfRange(eps));
    }
    let n = rho.dim();
    let m = rho
        .matrix()
        .scale_re(1.0 - eps)
        .add(&ComplexMatrix::identity(n).scale_re(eps / n as f64));
    DensityMatrix::new(m)
}

/// Depolarized nonmaximally entangled state:
/// (1 - eps)|Ψ(θ)><Ψ(θ)| + (eps/4) I.
pub fn rho1(eps: f64, theta: f64) -> Result<DensityMatrix, StateError> {
    depolarize(&pure_nonmax(theta), eps)
}

/// Maximally entangled mixed state with concurrence `r`. Two matrix
/// templates cover r > 2/3 and r <= 2/3; at the branch point they coincide
/// entrywise and the second template is used.
pub fn mems(r: f64) -> Result<DensityMatrix, StateError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(StateError::ROutOfRange(r));
    }
    let mut m = ComplexMatrix::zeros(4);
    let corner = Complex64::new(r / 2.0, 0.0);
    if r > 2.0 / 3.0 {
        m[(0, 0)] = Complex64::new(r / 2.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0 - r, 0.0);
        m[(3, 3)] = Complex64::new(r / 2.0, 0.0);
    } else {
        m[(0, 0)] = Complex64::new(1.0 / 3.0, 0.0);
        m[(1, 1)] = Complex64::new(1.0 / 3.0, 0.0);
        m[(3, 3)] = Complex64::new(1.0 / 3.0, 0.0);
    }
    m[(0, 3)] = corner;
    m[(3, 0)] = corner;
    DensityMatrix::new(m)
}

/// Depolarized maximally entangled mixed state:
/// (1 - eps) rho_MEMS(r) + (eps/4) I.
pub fn rho2(eps: f64, r: f64) -> Result<DensityMatrix, StateError> {
    depolarize(&mems(r)?, eps)
}

/// Rank-four nonmaximally entangled mixed example state used as a plane
/// target. The template is normalized to unit trace before validation.
pub fn nonmax_mixed_example() -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(4);
    m[(0, 0)] = Complex64::new(0.7113, 0.0);
    m[(1, 1)] = Complex64::new(0.0564, 0.0);
    m[(2, 2)] = Complex64::new(0.0564, 0.0);
    m[(3, 3)] = Complex64::new(0.1760, 0.0);
    m[(0, 3)] = Complex64::new(0.2800, 0.0);
    m[(3, 0)] = Complex64::new(0.2800, 0.0);
    let m = m.scale_re(1.0 / m.trace().re);
    DensityMatrix::new(m).expect("normalized example template is a valid state")
}

/// JSON wire format for a density matrix: row-major real and imaginary
/// parts. Shared with the command-line front end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum MatrixJsonError {
    #[error("field `{field}` has shape {rows}x{cols}, expected {dim}x{dim}")]
    BadShape { field: &'static str, rows: usize, cols: usize, dim: usize },
    #[error(transparent)]
    State(#[from] StateError),
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let mut re = vec![vec![0.0; n]; n];
        let mut im = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                re[i][j] = m[(i, j)].re;
                im[i][j] = m[(i, j)].im;
            }
        }
        Self { dim: n, re, im }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, MatrixJsonError> {
        let n = self.dim;
        for (field, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                let cols = rows.first().map_or(0, Vec::len);
                return Err(MatrixJsonError::BadShape { field, rows: rows.len(), cols, dim: n });
            }
        }
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(self.re[i][j], self.im[i][j]);
            }
        }
        Ok(m)
    }

    /// Parses and validates the matrix as a density matrix.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix, MatrixJsonError> {
        Ok(DensityMatrix::new(self.to_matrix()?)?)
    }
}
