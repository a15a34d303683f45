//! The state benchmarks: fidelity and its amplitude version, trace
//! distance, linear entropy, von Neumann entropy, concurrence, and tangle.
//!
//! Concurrence is evaluated through the Hermitian matrix
//! sqrt(rho) rho~ sqrt(rho), which shares its spectrum with rho rho~, so a
//! single Hermitian eigensolver serves the whole crate.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, LinalgError, DEFAULT_PSD_CLAMP_TOL};
use crate::states::DensityMatrix;

/// Tolerance band for clamping numeric noise: results may undershoot 0 or
/// overshoot their upper bound by at most this much before being treated
/// as invalid input rather than rounding error.
pub const CLAMP_TOL: f64 = 1e-9;
/// Spectral weights below this are treated as exactly zero in the entropy
/// sum (continuous extension of x ln x at 0).
pub const ENTROPY_EIGENVALUE_CUTOFF: f64 = 1e-15;
/// Eigenvalues of matrix products below this are rounding noise and are
/// zeroed before square-rooting. The square root amplifies spectral noise
/// (sqrt(1e-16) = 1e-8), so sums of root-eigenvalues need a floor; genuine
/// eigenvalues in this problem domain stay above it by an order of
/// magnitude even at depolarization strengths of 1e-6.
pub const ROOT_EIGENVALUE_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("dimension mismatch: {a}x{a} vs {b}x{b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("operation requires a two-qubit (4x4) state, got {0}x{0}")]
    NotTwoQubit(usize),
    #[error("{what} evaluated to {value}, outside its valid range by more than {tol:.1e}")]
    OutOfRange { what: &'static str, value: f64, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<(), MeasureError> {
    if a.dim() != b.dim() {
        return Err(MeasureError::DimensionMismatch { a: a.dim(), b: b.dim() });
    }
    Ok(())
}

/// Clamps `value` into [0, hi], erroring when it lies outside by more than
/// [`CLAMP_TOL`].
fn clamp_unit(what: &'static str, value: f64, hi: f64) -> Result<f64, MeasureError> {
    if value < -CLAMP_TOL || value > hi + CLAMP_TOL {
        return Err(MeasureError::OutOfRange { what, value, tol: CLAMP_TOL });
    }
    Ok(value.clamp(0.0, hi))
}

/// Amplitude fidelity f = Tr sqrt(sqrt(a) b sqrt(a)); the fidelity is f².
pub fn amplitude_fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, MeasureError> {
    check_same_dim(a, b)?;
    let root = linalg::sqrt_psd(a.matrix(), DEFAULT_PSD_CLAMP_TOL)?;
    let inner = root.mul(b.matrix()).mul(&root);
    let values = linalg::hermitian_eigenvalues(&inner, CLAMP_TOL)?;
    let mut f = 0.0;
    for v in values {
        if v < -CLAMP_TOL {
            return Err(MeasureError::OutOfRange {
                what: "fidelity eigenvalue",
                value: v,
                tol: CLAMP_TOL,
            });
        }
        if v > ROOT_EIGENVALUE_CUTOFF {
            f += v.sqrt();
        }
    }
    clamp_unit("amplitude fidelity", f, 1.0)
}

/// Fidelity F = |Tr sqrt(sqrt(a) b sqrt(a))|², symmetric in its arguments.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, MeasureError> {
    let f = amplitude_fidelity(a, b)?;
    Ok(f * f)
}

/// Trace distance D = Tr|a - b| / 2.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, MeasureError> {
    check_same_dim(a, b)?;
    let diff = a.matrix().sub(b.matrix());
    let norm = linalg::trace_norm(&diff)?;
    clamp_unit("trace distance", norm / 2.0, 1.0)
}

/// Linear entropy S_L = N/(N-1) (1 - Tr rho²); 0 for pure states, 1 for
/// the normalized identity.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    let n = rho.dim() as f64;
    let s = n / (n - 1.0) * (1.0 - rho.purity());
    // Purity of a validated state sits in [1/N, 1] up to rounding.
    s.clamp(0.0, 1.0)
}

/// Von Neumann entropy S_V = -Tr(rho ln rho), in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let values = linalg::hermitian_eigenvalues(rho.matrix(), CLAMP_TOL)
        .expect("validated density matrix has a convergent eigendecomposition");
    values
        .iter()
        .filter(|&&v| v > ENTROPY_EIGENVALUE_CUTOFF)
        .map(|&v| -v * v.ln())
        .sum()
}

/// Spin-flipped matrix (σ₂⊗σ₂) rho* (σ₂⊗σ₂).
pub fn spin_flip(rho: &DensityMatrix) -> Result<ComplexMatrix, MeasureError> {
    if rho.dim() != 4 {
        return Err(MeasureError::NotTwoQubit(rho.dim()));
    }
    let yy = sigma2_pair();
    Ok(yy.mul(&rho.matrix().conj()).mul(&yy))
}

/// σ₂ ⊗ σ₂, the two-qubit spin-flip operator.
pub fn sigma2_pair() -> ComplexMatrix {
    let i = Complex64::new(0.0, 1.0);
    let sigma2 = ComplexMatrix::from_entries(2, vec![Complex64::ZERO, -i, i, Complex64::ZERO])
        .expect("2x2 entries");
    linalg::kron(&sigma2, &sigma2)
}

/// Descending eigenvalues of rho rho~, clamped to be non-negative, computed
/// via the Hermitian similarity sqrt(rho) rho~ sqrt(rho).
pub(crate) fn concurrence_spectrum(rho: &DensityMatrix) -> Result<Vec<f64>, MeasureError> {
    let root = linalg::sqrt_psd(rho.matrix(), DEFAULT_PSD_CLAMP_TOL)?;
    let flipped = spin_flip(rho)?;
    let hermitian = root.mul(&flipped).mul(&root);
    let values = linalg::hermitian_eigenvalues(&hermitian, CLAMP_TOL)?;
    values
        .into_iter()
        .map(|v| {
            if v < -CLAMP_TOL {
                Err(MeasureError::OutOfRange {
                    what: "concurrence eigenvalue",
                    value: v,
                    tol: CLAMP_TOL,
                })
            } else {
                Ok(if v > ROOT_EIGENVALUE_CUTOFF { v } else { 0.0 })
            }
        })
        .collect()
}

/// Wootters concurrence max{0, sqrt(λ₁) - sqrt(λ₂) - sqrt(λ₃) - sqrt(λ₄)}.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64, MeasureError> {
    let values = concurrence_spectrum(rho)?;
    let mut c = values[0].sqrt();
    for v in &values[1..] {
        c -= v.sqrt();
    }
    clamp_unit("concurrence", c.max(0.0), 1.0)
}

/// Tangle T = C².
pub fn tangle(rho: &DensityMatrix) -> Result<f64, MeasureError> {
    let c = concurrence(rho)?;
    Ok(c * c)
}

/// All benchmark values for one state or one state pair. The pairwise
/// entries (fidelity, amplitude fidelity, trace distance) are present only
/// for pair reports; concurrence and tangle only for two-qubit states.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport {
    pub fidelity: Option<f64>,
    pub amplitude_fidelity: Option<f64>,
    pub trace_distance: Option<f64>,
    pub linear_entropy: f64,
    pub von_neumann_entropy: f64,
    pub concurrence: Option<f64>,
    pub tangle: Option<f64>,
}

impl MeasureReport {
    /// Single-state report: entropies always, entanglement when dim = 4.
    pub fn of_state(rho: &DensityMatrix) -> Result<Self, MeasureError> {
        let (c, t) = if rho.dim() == 4 {
            let c = concurrence(rho)?;
            (Some(c), Some(c * c))
        } else {
            (None, None)
        };
        Ok(Self {
            fidelity: None,
            amplitude_fidelity: None,
            trace_distance: None,
            linear_entropy: linear_entropy(rho),
            von_neumann_entropy: von_neumann_entropy(rho),
            concurrence: c,
            tangle: t,
        })
    }

    /// Pair report: comparison measures between `target` and `produced`,
    /// single-state measures of `produced`.
    pub fn of_pair(target: &DensityMatrix, produced: &DensityMatrix) -> Result<Self, MeasureError> {
        let f = amplitude_fidelity(target, produced)?;
        let mut report = Self::of_state(produced)?;
        report.fidelity = Some(f * f);
        report.amplitude_fidelity = Some(f);
        report.trace_distance = Some(trace_distance(target, produced)?);
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{
        depolarize, fully_mixed, mems, nonmax_mixed_example, phi_plus, pure_nonmax, rho1, rho2,
    };

    const DEG: f64 = std::f64::consts::PI / 180.0;

    fn fixtures() -> Vec<DensityMatrix> {
        vec![
            phi_plus(),
            pure_nonmax(11.25 * DEG),
            mems(0.8).unwrap(),
            mems(0.5).unwrap(),
            rho1(0.2, 22.5 * DEG).unwrap(),
            rho2(0.15, 0.6).unwrap(),
            fully_mixed(4).unwrap(),
            nonmax_mixed_example(),
        ]
    }

    #[test]
    fn fidelity_of_state_with_itself_is_one() {
        for rho in fixtures() {
            let f = fidelity(&rho, &rho).unwrap();
            assert!((f - 1.0).abs() < 1e-10, "{f}");
        }
    }

    #[test]
    fn fidelity_of_product_state_with_bell_state() {
        let f = fidelity(&pure_nonmax(0.0), &phi_plus()).unwrap();
        assert!((f - 0.5).abs() < 1e-12, "{f}");
    }

    #[test]
    fn fidelity_of_bell_state_with_werner_state() {
        let f = fidelity(&phi_plus(), &rho1(0.19525, 22.5 * DEG).unwrap()).unwrap();
        assert!((f - 0.854).abs() < 5e-4, "{f}");
    }

    #[test]
    fn fidelity_is_symmetric() {
        let states = fixtures();
        for a in &states {
            for b in &states {
                let fab = fidelity(a, b).unwrap();
                let fba = fidelity(b, a).unwrap();
                assert!((fab - fba).abs() < 1e-9, "{fab} vs {fba}");
            }
        }
    }

    #[test]
    fn fidelity_reduces_to_overlap_for_pure_states() {
        for (ta, tb) in [(0.0, 0.3), (0.1, 0.5), (0.39, 0.2), (0.25, 0.25)] {
            let a = pure_nonmax(ta);
            let b = pure_nonmax(tb);
            let overlap = ((2.0 * ta).cos() * (2.0 * tb).cos()
                + (2.0 * ta).sin() * (2.0 * tb).sin())
            .powi(2);
            let f = fidelity(&a, &b).unwrap();
            assert!((f - overlap).abs() < 1e-10, "{f} vs {overlap}");
        }
    }

    #[test]
    fn amplitude_fidelity_under_depolarization_matches_spectral_form() {
        // For the depolarizing channel the amplitude fidelity has the closed
        // form sum_i sqrt((1-eps) λ_i² + (eps/N) λ_i); an independent route
        // through the state's spectrum.
        for rho in fixtures() {
            let values = linalg::hermitian_eigenvalues(rho.matrix(), 1e-10).unwrap();
            for eps in [0.01, 0.1, 0.3, 0.7] {
                let perturbed = depolarize(&rho, eps).unwrap();
                let f = amplitude_fidelity(&rho, &perturbed).unwrap();
                let expected: f64 = values
                    .iter()
                    .map(|&l| ((1.0 - eps) * l * l + eps / 4.0 * l).max(0.0).sqrt())
                    .sum();
                assert!((f - expected).abs() < 1e-10, "eps={eps}: {f} vs {expected}");
            }
        }
    }

    #[test]
    fn trace_distance_basics() {
        for rho in fixtures() {
            assert!(trace_distance(&rho, &rho).unwrap() < 1e-12);
        }
        let zero = pure_nonmax(0.0);
        let one = pure_nonmax(std::f64::consts::FRAC_PI_4); // sin(2θ) = 1 → |11>
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_to_depolarized_bell_state_is_linear() {
        let bell = phi_plus();
        for eps in [0.05, 0.19525, 0.4, 0.8, 1.0] {
            let d = trace_distance(&bell, &depolarize(&bell, eps).unwrap()).unwrap();
            assert!((d - 0.75 * eps).abs() < 1e-12, "eps={eps}: {d}");
        }
    }

    #[test]
    fn trace_distance_triangle_inequality_on_fixture_triples() {
        let states = fixtures();
        for a in &states {
            for b in &states {
                for c in &states {
                    let ab = trace_distance(a, b).unwrap();
                    let bc = trace_distance(b, c).unwrap();
                    let ac = trace_distance(a, c).unwrap();
                    assert!(ac <= ab + bc + 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_entropy_values() {
        assert!(linear_entropy(&pure_nonmax(0.17)) < 1e-12);
        assert!((linear_entropy(&fully_mixed(4).unwrap()) - 1.0).abs() < 1e-12);
        let s = linear_entropy(&rho1(0.3, 0.2).unwrap());
        assert!((s - 0.51).abs() < 1e-12, "{s}");
    }

    #[test]
    fn von_neumann_entropy_values() {
        assert!(von_neumann_entropy(&pure_nonmax(0.23)) < 1e-12);
        let s = von_neumann_entropy(&fully_mixed(4).unwrap());
        assert!((s - 4f64.ln()).abs() < 1e-12, "{s}");
        // Spectrum (0.85, 0.05, 0.05, 0.05).
        let s = von_neumann_entropy(&rho1(0.2, 22.5 * DEG).unwrap());
        let expected = -(0.85f64 * 0.85f64.ln() + 3.0 * 0.05 * 0.05f64.ln());
        assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");
        assert!((s - 0.5875).abs() < 1e-4);
    }

    #[test]
    fn spin_flip_examples() {
        let mixed = fully_mixed(4).unwrap();
        assert!(spin_flip(&mixed).unwrap().approx_eq(mixed.matrix(), 1e-15));

        let bell = phi_plus();
        assert!(spin_flip(&bell).unwrap().approx_eq(bell.matrix(), 1e-12));

        let zero = pure_nonmax(0.0); // |00><00|
        let flipped = spin_flip(&zero).unwrap();
        let expected = ComplexMatrix::diagonal(&[0.0, 0.0, 0.0, 1.0]); // |11><11|
        assert!(flipped.approx_eq(&expected, 1e-15));

        assert!(spin_flip(&fully_mixed(2).unwrap()).is_err());
    }

    #[test]
    fn concurrence_examples() {
        assert!(concurrence(&pure_nonmax(0.0)).unwrap() < 1e-12);
        assert!((concurrence(&phi_plus()).unwrap() - 1.0).abs() < 1e-12);
        let c = concurrence(&rho1(0.19525, 22.5 * DEG).unwrap()).unwrap();
        assert!((c - 0.5f64.sqrt()).abs() < 1e-3, "{c}");
        // Exact closed form for this family: max(0, 1 - 3 eps / 2).
        assert!((c - (1.0 - 1.5 * 0.19525)).abs() < 1e-10);
    }

    #[test]
    fn concurrence_of_rho1_matches_closed_form() {
        for theta_deg in [0.0, 7.0, 11.25, 16.0, 22.5] {
            for eps in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9] {
                let theta = theta_deg * DEG;
                let c = concurrence(&rho1(eps, theta).unwrap()).unwrap();
                let expected =
                    (2.0 * (1.0 - eps) * (2.0 * theta).cos() * (2.0 * theta).sin() - eps / 2.0)
                        .max(0.0);
                assert!(
                    (c - expected).abs() < 1e-10,
                    "theta={theta_deg} eps={eps}: {c} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn concurrence_of_mems_equals_parameter() {
        for k in 0..=10 {
            let r = k as f64 / 10.0;
            let c = concurrence(&mems(r).unwrap()).unwrap();
            assert!((c - r).abs() < 1e-10, "r={r}: {c}");
        }
    }

    #[test]
    fn tangle_examples() {
        assert!((tangle(&phi_plus()).unwrap() - 1.0).abs() < 1e-12);
        // sin(45°)² = 1/2 exactly.
        let t = tangle(&rho1(0.0, 11.25 * DEG).unwrap()).unwrap();
        assert!((t - 0.5).abs() < 1e-10, "{t}");
        let t = tangle(&mems(0.8).unwrap()).unwrap();
        assert!((t - 0.64).abs() < 1e-10, "{t}");
    }

    #[test]
    fn concurrence_and_tangle_vanish_together_on_separable_states() {
        let separable = [
            pure_nonmax(0.0),
            fully_mixed(4).unwrap(),
            rho1(0.8, 22.5 * DEG).unwrap(), // beyond the 2/3 threshold
            mems(0.0).unwrap(),
            depolarize(&pure_nonmax(0.0), 0.5).unwrap(),
        ];
        for rho in separable {
            let c = concurrence(&rho).unwrap();
            let t = tangle(&rho).unwrap();
            assert!(c < 1e-10 && t < 1e-10, "c={c} t={t}");
        }
    }

    #[test]
    fn bell_fidelity_saturates_entanglement_bound_on_family() {
        // F(phi+, rho1) = (1 + sqrt(T))/2 wherever the state is entangled.
        let bell = phi_plus();
        for theta_deg in [2.0, 8.0, 11.25, 15.0, 22.5] {
            for eps in [0.0, 0.1, 0.19525, 0.4, 0.6] {
                let rho = rho1(eps, theta_deg * DEG).unwrap();
                let c = concurrence(&rho).unwrap();
                if c <= 0.0 {
                    continue;
                }
                let f = fidelity(&bell, &rho).unwrap();
                let bound = (1.0 + c) / 2.0;
                assert!((f - bound).abs() < 1e-9, "theta={theta_deg} eps={eps}");
            }
        }
    }

    #[test]
    fn bell_fidelity_bound_holds_for_arbitrary_states() {
        // Haphazard but deterministic states: normalized B B† matrices.
        let bell = phi_plus();
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let mut m = ComplexMatrix::zeros(4);
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] = Complex64::new(next() - 0.5, next() - 0.5);
                }
            }
            let psd = m.mul(&m.adjoint());
            let rho = DensityMatrix::new(psd.scale_re(1.0 / psd.trace().re)).unwrap();
            let f = fidelity(&bell, &rho).unwrap();
            let t = tangle(&rho).unwrap();
            assert!(f <= (1.0 + t.sqrt()) / 2.0 + 1e-9, "f={f} t={t}");
        }
    }

    #[test]
    fn report_invariants() {
        let produced = rho1(0.19525, 22.5 * DEG).unwrap();
        let report = MeasureReport::of_pair(&phi_plus(), &produced).unwrap();
        let f = report.fidelity.unwrap();
        let af = report.amplitude_fidelity.unwrap();
        assert!((f - af * af).abs() < 1e-12);
        let c = report.concurrence.unwrap();
        let t = report.tangle.unwrap();
        assert!((t - c * c).abs() < 1e-12);
        assert!(report.trace_distance.is_some());

        let single = MeasureReport::of_state(&produced).unwrap();
        assert!(single.fidelity.is_none());
        assert!(single.trace_distance.is_none());

        let qubit = MeasureReport::of_state(&fully_mixed(2).unwrap()).unwrap();
        assert!(qubit.concurrence.is_none());
        assert!((qubit.von_neumann_entropy - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = fully_mixed(2).unwrap();
        let b = fully_mixed(4).unwrap();
        assert!(matches!(fidelity(&a, &b), Err(MeasureError::DimensionMismatch { .. })));
        assert!(matches!(trace_distance(&a, &b), Err(MeasureError::DimensionMismatch { .. })));
    }
}
