//! Analytic expansions of each benchmark's response to a depolarizing
//! channel, an exact-evaluation oracle for them, and an empirical
//! order-of-sensitivity estimator.
//!
//! Conventions: expansions for the amplitude fidelity describe the value
//! f(rho, rho') itself (constant term 1); the trace-distance expansion
//! describes D(rho, rho'); all others describe the change
//! measure(rho') - measure(rho).

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, DEFAULT_PSD_CLAMP_TOL};
use crate::measures::{self, MeasureError};
use crate::states::{self, DensityMatrix, StateError};

/// Eigenvalues at or below this (relative to unit trace) count as zero when
/// deciding the rank of a state. Every expansion coefficient forks on this
/// cutoff.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate block when
/// evaluating eigenvector-dependent coefficients.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Absolute deviations below this are indistinguishable from rounding noise
/// and are excluded from order-of-sensitivity fits.
pub const SCALING_NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum PerturbationError {
    #[error("state is not entangled (concurrence {concurrence:.3e}); the concurrence expansion needs C > 0")]
    NotEntangled { concurrence: f64 },
    #[error("degenerate epsilon grid: {0}")]
    DegenerateGrid(&'static str),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// The six benchmarks whose channel sensitivity is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Measure {
    AmplitudeFidelity,
    TraceDistance,
    LinearEntropy,
    VonNeumannEntropy,
    Concurrence,
    Tangle,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::AmplitudeFidelity,
        Measure::TraceDistance,
        Measure::LinearEntropy,
        Measure::VonNeumannEntropy,
        Measure::Concurrence,
        Measure::Tangle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::AmplitudeFidelity => "amplitude_fidelity",
            Measure::TraceDistance => "trace_distance",
            Measure::LinearEntropy => "linear_entropy",
            Measure::VonNeumannEntropy => "von_neumann_entropy",
            Measure::Concurrence => "concurrence",
            Measure::Tangle => "tangle",
        }
    }
}

/// Counts of nonzero and zero eigenvalues of the spectrum driving an
/// expansion (the state's own spectrum, or that of rho rho~ for the
/// entanglement measures).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankInfo {
    pub n_nonzero: usize,
    pub n_zero: usize,
}

/// Leading-order response of one benchmark to depolarization strength eps:
///
/// value(eps) ≈ constant + coeff_eps·eps + coeff_eps2·eps²
///            + coeff_eps_log_eps·eps·ln(eps)
///            - sqrt_scale·Σ_j sqrt(sqrt_eps_coeffs[j]·eps(1-eps) + eps²/16)
///
/// The square-root terms arise only for the entanglement measures, one per
/// zero eigenvalue of rho rho~.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityExpansion {
    pub measure: Measure,
    pub constant: f64,
    pub coeff_eps: f64,
    pub coeff_eps2: f64,
    pub coeff_eps_log_eps: f64,
    pub sqrt_eps_coeffs: Vec<f64>,
    pub sqrt_scale: f64,
    pub rank_info: RankInfo,
    /// Largest eps for which the expansion is claimed to hold.
    pub validity_bound: f64,
}

impl SensitivityExpansion {
    pub fn evaluate(&self, eps: f64) -> f64 {
        let mut value = self.constant + self.coeff_eps * eps + self.coeff_eps2 * eps * eps;
        if eps > 0.0 {
            value += self.coeff_eps_log_eps * eps * eps.ln();
        }
        let root_sum: f64 = self
            .sqrt_eps_coeffs
            .iter()
            .map(|&a| (a * eps * (1.0 - eps) + eps * eps / 16.0).max(0.0).sqrt())
            .sum();
        value - self.sqrt_scale * root_sum
    }
}

fn spectrum_rank(values: &[f64]) -> RankInfo {
    let n_nonzero = values.iter().filter(|&&v| v > RANK_CUTOFF).count();
    RankInfo { n_nonzero, n_zero: values.len() - n_nonzero }
}

fn state_eigenvalues(rho: &DensityMatrix) -> Vec<f64> {
    linalg::hermitian_eigenvalues(rho.matrix(), measures::CLAMP_TOL)
        .expect("validated density matrix has a convergent eigendecomposition")
}

/// Expansion of the amplitude fidelity f(rho, rho') around eps = 0:
/// f ≈ 1 - (1/2 - n⊗/2N)·eps - Σ_{λ≠0} (λ/8)((1-Nλ)/(Nλ))²·eps².
pub fn expand_amplitude_fidelity(rho: &DensityMatrix) -> SensitivityExpansion {
    let n = rho.dim() as f64;
    let values = state_eigenvalues(rho);
    let rank = spectrum_rank(&values);

    let coeff_eps = -(0.5 - rank.n_nonzero as f64 / (2.0 * n));
    let mut coeff_eps2 = 0.0;
    let mut bound = f64::INFINITY;
    for &l in values.iter().filter(|&&l| l > RANK_CUTOFF) {
        let ratio = (1.0 - n * l) / (n * l);
        coeff_eps2 -= l / 8.0 * ratio * ratio;
        let margin = 1.0 - n * l;
        if margin.abs() > RANK_CUTOFF {
            bound = bound.min(n * l / margin.abs());
        }
    }
    SensitivityExpansion {
        measure: Measure::AmplitudeFidelity,
        constant: 1.0,
        coeff_eps,
        coeff_eps2,
        coeff_eps_log_eps: 0.0,
        sqrt_eps_coeffs: Vec::new(),
        sqrt_scale: 1.0,
        rank_info: rank,
        validity_bound: bound.min(1.0),
    }
}

/// Trace distance response D(rho, rho') = (eps/2)·Σ_i |λ_i - 1/N|.
/// Exact for all eps, not just small ones.
pub fn expand_trace_distance(rho: &DensityMatrix) -> SensitivityExpansion {
    let n = rho.dim() as f64;
    let values = state_eigenvalues(rho);
    let coeff_eps = 0.5 * values.iter().map(|&l| (l - 1.0 / n).abs()).sum::<f64>();
    SensitivityExpansion {
        measure: Measure::TraceDistance,
        constant: 0.0,
        coeff_eps,
        coeff_eps2: 0.0,
        coeff_eps_log_eps: 0.0,
        sqrt_eps_coeffs: Vec::new(),
        sqrt_scale: 1.0,
        rank_info: spectrum_rank(&values),
        validity_bound: 1.0,
    }
}

/// Linear entropy change ΔS_L = (2eps - eps²)(1 - S_L).
/// Exact for all eps.
pub fn expand_linear_entropy(rho: &DensityMatrix) -> SensitivityExpansion {
    let values = state_eigenvalues(rho);
    let deficit = 1.0 - measures::linear_entropy(rho);
    SensitivityExpansion {
        measure: Measure::LinearEntropy,
        constant: 0.0,
        coeff_eps: 2.0 * deficit,
        coeff_eps2: -deficit,
        coeff_eps_log_eps: 0.0,
        sqrt_eps_coeffs: Vec::new(),
        sqrt_scale: 1.0,
        rank_info: spectrum_rank(&values),
        validity_bound: 1.0,
    }
}

/// First-order von Neumann entropy change:
/// ΔS ≈ -(n₀/N)·eps·ln(eps)
///    + eps·(1 - S_V - n⊗/N + (n₀/N)·ln N - (1/N)·Σ_{λ≠0} ln λ).
pub fn expand_von_neumann(rho: &DensityMatrix) -> SensitivityExpansion {
    let n = rho.dim() as f64;
    let values = state_eigenvalues(rho);
    let rank = spectrum_rank(&values);
    let s_v = measures::von_neumann_entropy(rho);
    let log_sum: f64 = values.iter().filter(|&&l| l > RANK_CUTOFF).map(|&l| l.ln()).sum();
    let coeff_eps = 1.0 - s_v - rank.n_nonzero as f64 / n + rank.n_zero as f64 / n * n.ln()
        - log_sum / n;
    let smallest_nonzero = values
        .iter()
        .rev()
        .find(|&&l| l > RANK_CUTOFF)
        .copied()
        .unwrap_or(1.0);
    SensitivityExpansion {
        measure: Measure::VonNeumannEntropy,
        constant: 0.0,
        coeff_eps,
        coeff_eps2: 0.0,
        coeff_eps_log_eps: -(rank.n_zero as f64) / n,
        sqrt_eps_coeffs: Vec::new(),
        sqrt_scale: 1.0,
        rank_info: rank,
        validity_bound: smallest_nonzero.min(1.0),
    }
}

/// Re⟨a| m |b⟩ for column vectors a, b.
fn sandwich(m: &ComplexMatrix, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let n = m.dim();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        let ai = a[i].conj();
        for j in 0..n {
            acc += ai * m[(i, j)] * b[j];
        }
    }
    acc
}

/// Per-eigenvalue perturbation weights ⟨λ_i|V|λ_i⟩ for the eigenvalues of
/// rho rho~, evaluated in the Hermitian frame of sqrt(rho) rho~ sqrt(rho):
/// each eigenvector w maps back through the state's spectral decomposition,
/// giving ⟨w|rho|w⟩ + λ⟨w|rho⁺|w⟩ on the support; within a degenerate block
/// the Hermitian restriction is diagonalized and its eigenvalues used. Zero
/// modes take the restriction of rho + rho~ itself.
fn concurrence_perturbation_weights(
    rho: &DensityMatrix,
    lambdas: &[f64],
    vectors: &linalg::HermitianSpectrum,
    rho_spectrum: &linalg::HermitianSpectrum,
    flipped: &ComplexMatrix,
) -> Result<Vec<f64>, PerturbationError> {
    let rho_pinv = rho_spectrum.rebuild_with(|x| if x > RANK_CUTOFF { 1.0 / x } else { 0.0 });
    let rho_plus_flip = rho.matrix().add(flipped);
    let n = lambdas.len();
    let mut weights = vec![0.0; n];

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        let zero_block = lambdas[start] <= RANK_CUTOFF;
        while end < n {
            let same_class = (lambdas[end] <= RANK_CUTOFF) == zero_block;
            let degenerate = (lambdas[start] - lambdas[end]).abs() <= DEGENERACY_TOL;
            if same_class && (zero_block || degenerate) {
                end += 1;
            } else {
                break;
            }
        }
        let block: Vec<usize> = (start..end).collect();
        let op = if zero_block {
            rho_plus_flip.clone()
        } else {
            rho.matrix().add(&rho_pinv.scale_re(lambdas[start]))
        };
        if block.len() == 1 {
            let w = vectors.eigenvector(block[0]);
            weights[block[0]] = sandwich(&op, &w, &w).re;
        } else {
            let k = block.len();
            let mut restricted = ComplexMatrix::zeros(k);
            let basis: Vec<Vec<Complex64>> =
                block.iter().map(|&i| vectors.eigenvector(i)).collect();
            for a in 0..k {
                for b in 0..k {
                    restricted[(a, b)] = sandwich(&op, &basis[a], &basis[b]);
                }
            }
            let block_values =
                linalg::hermitian_eigenvalues(&restricted, measures::CLAMP_TOL)
                    .map_err(MeasureError::from)?;
            for (offset, &idx) in block.iter().enumerate() {
                weights[idx] = block_values[offset];
            }
        }
        start = end;
    }
    Ok(weights)
}

/// Expansion of the concurrence change ΔC for an entangled state:
/// the smooth part -C·eps + (eps/8)(⟨·⟩₁/√λ₁ - Σ_{i≥2,λ≠0} ⟨·⟩_i/√λ_i),
/// plus one square-root term per zero eigenvalue of rho rho~.
pub fn expand_concurrence(rho: &DensityMatrix) -> Result<SensitivityExpansion, PerturbationError> {
    let rho_spectrum = linalg::hermitian_eig(rho.matrix(), measures::CLAMP_TOL)
        .map_err(MeasureError::from)?;
    let root = linalg::sqrt_psd(rho.matrix(), DEFAULT_PSD_CLAMP_TOL).map_err(MeasureError::from)?;
    let flipped = measures::spin_flip(rho)?;
    let hermitian = root.mul(&flipped).mul(&root);
    let spectrum = linalg::hermitian_eig(&hermitian, measures::CLAMP_TOL)
        .map_err(MeasureError::from)?;
    let lambdas: Vec<f64> = spectrum.eigenvalues.iter().map(|&v| v.max(0.0)).collect();

    let c = measures::concurrence(rho)?;
    if c <= 0.0 {
        return Err(PerturbationError::NotEntangled { concurrence: c });
    }

    let weights =
        concurrence_perturbation_weights(rho, &lambdas, &spectrum, &rho_spectrum, &flipped)?;

    let mut coeff_eps = -c;
    let mut sqrt_eps_coeffs = Vec::new();
    let mut smallest_nonzero = f64::INFINITY;
    for (i, (&l, &w)) in lambdas.iter().zip(&weights).enumerate() {
        if l > RANK_CUTOFF {
            smallest_nonzero = smallest_nonzero.min(l);
            let term = w / (8.0 * l.sqrt());
            coeff_eps += if i == 0 { term } else { -term };
        } else {
            sqrt_eps_coeffs.push((w / 4.0).max(0.0));
        }
    }
    let rank = spectrum_rank(&lambdas);
    Ok(SensitivityExpansion {
        measure: Measure::Concurrence,
        constant: 0.0,
        coeff_eps,
        coeff_eps2: 0.0,
        coeff_eps_log_eps: 0.0,
        sqrt_eps_coeffs,
        sqrt_scale: 1.0,
        rank_info: rank,
        validity_bound: smallest_nonzero.min(1.0),
    })
}

/// Expansion of the tangle change, ΔT ≈ 2C·ΔC.
pub fn expand_tangle(rho: &DensityMatrix) -> Result<SensitivityExpansion, PerturbationError> {
    let c = measures::concurrence(rho)?;
    let base = expand_concurrence(rho)?;
    Ok(SensitivityExpansion {
        measure: Measure::Tangle,
        coeff_eps: 2.0 * c * base.coeff_eps,
        sqrt_scale: 2.0 * c,
        ..base
    })
}

/// Expansion for any measure; the entanglement measures require C > 0.
pub fn expand(measure: Measure, rho: &DensityMatrix) -> Result<SensitivityExpansion, PerturbationError> {
    match measure {
        Measure::AmplitudeFidelity => Ok(expand_amplitude_fidelity(rho)),
        Measure::TraceDistance => Ok(expand_trace_distance(rho)),
        Measure::LinearEntropy => Ok(expand_linear_entropy(rho)),
        Measure::VonNeumannEntropy => Ok(expand_von_neumann(rho)),
        Measure::Concurrence => expand_concurrence(rho),
        Measure::Tangle => expand_tangle(rho),
    }
}

/// Exact response at finite eps, computed through the measures module: the
/// comparison value itself for the two-state measures (f or D between rho
/// and its depolarized image), the change measure(rho') - measure(rho) for
/// the single-state ones.
pub fn exact_delta(measure: Measure, rho: &DensityMatrix, eps: f64) -> Result<f64, PerturbationError> {
    let perturbed = states::depolarize(rho, eps)?;
    let value = match measure {
        Measure::AmplitudeFidelity => measures::amplitude_fidelity(rho, &perturbed)?,
        Measure::TraceDistance => measures::trace_distance(rho, &perturbed)?,
        Measure::LinearEntropy => {
            measures::linear_entropy(&perturbed) - measures::linear_entropy(rho)
        }
        Measure::VonNeumannEntropy => {
            measures::von_neumann_entropy(&perturbed) - measures::von_neumann_entropy(rho)
        }
        Measure::Concurrence => measures::concurrence(&perturbed)? - measures::concurrence(rho)?,
        Measure::Tangle => measures::tangle(&perturbed)? - measures::tangle(rho)?,
    };
    Ok(value)
}

/// Deviation magnitude used for order fitting: 1 - f for the amplitude
/// fidelity, the raw distance for D, |Δ| otherwise.
fn deviation(measure: Measure, rho: &DensityMatrix, eps: f64) -> Result<f64, PerturbationError> {
    let value = exact_delta(measure, rho, eps)?;
    Ok(match measure {
        Measure::AmplitudeFidelity => (1.0 - value).abs(),
        _ => value.abs(),
    })
}

/// Empirical order-of-sensitivity estimate for one measure.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub measure: Measure,
    /// Fitted slope of log|deviation| against log(eps); 0 when fewer than
    /// two grid points rise above the noise floor.
    pub estimated_order: f64,
    pub r_squared: f64,
    /// True when the deviation behaves like eps·ln(1/eps) rather than a
    /// plain power of eps.
    pub flagged_log_term: bool,
    /// Grid points whose deviation exceeded the noise floor.
    pub points_used: usize,
}

/// Least-squares line fit returning (slope, intercept, r²).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let fitted = intercept + slope * x;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fits the leading order of the exact deviation over `eps_grid`, which
/// must be strictly positive and strictly decreasing (geometric grids work
/// best). Flags eps·ln(eps) behaviour when the deviation scaled by
/// eps·ln(1/eps) extrapolates to a nonzero constant.
pub fn order_scaling_report(
    rho: &DensityMatrix,
    measure: Measure,
    eps_grid: &[f64],
) -> Result<ScalingReport, PerturbationError> {
    if eps_grid.len() < 2 {
        return Err(PerturbationError::DegenerateGrid("need at least two grid points"));
    }
    if eps_grid.iter().any(|&e| e <= 0.0) {
        return Err(PerturbationError::DegenerateGrid("grid values must be positive"));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PerturbationError::DegenerateGrid("grid must be strictly decreasing"));
    }

    let mut log_eps = Vec::new();
    let mut log_dev = Vec::new();
    let mut scaled = Vec::new(); // (1/ln(1/eps), dev / (eps ln(1/eps)))
    for &eps in eps_grid {
        let dev = deviation(measure, rho, eps)?;
        if dev > SCALING_NOISE_FLOOR {
            log_eps.push(eps.ln());
            log_dev.push(dev.ln());
            let l = (1.0 / eps).ln();
            scaled.push((1.0 / l, dev / (eps * l)));
        }
    }
    let points_used = log_eps.len();
    if points_used < 2 {
        return Ok(ScalingReport {
            measure,
            estimated_order: 0.0,
            r_squared: 0.0,
            flagged_log_term: false,
            points_used,
        });
    }
    let (order, _, r2) = linear_fit(&log_eps, &log_dev);

    // dev = a·eps·ln(1/eps) + b·eps gives dev/(eps·ln(1/eps)) = a + b·x
    // with x = 1/ln(1/eps); a pure power of eps extrapolates to a = 0.
    let flagged = if points_used >= 3 {
        let xs: Vec<f64> = scaled.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = scaled.iter().map(|p| p.1).collect();
        let (_, log_coeff, fit_r2) = linear_fit(&xs, &ys);
        log_coeff.abs() > 0.01 && fit_r2 > 0.9
    } else {
        false
    };

    Ok(ScalingReport {
        measure,
        estimated_order: order,
        r_squared: r2,
        flagged_log_term: flagged,
        points_used,
    })
}

/// Geometric grid from `hi` down to `lo` with `points` entries.
pub fn geometric_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && hi > lo && lo > 0.0);
    let step = (lo / hi).powf(1.0 / (points as f64 - 1.0));
    (0..points).map(|k| hi * step.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fully_mixed, mems, phi_plus, pure_nonmax, rho1, rho2};

    const DEG: f64 = std::f64::consts::PI / 180.0;

    /// Depolarization extended to slightly negative eps; the image is still
    /// a valid state for full-rank input, which lets central differences
    /// straddle eps = 0.
    fn depolarize_extended(rho: &DensityMatrix, eps: f64) -> DensityMatrix {
        let m = rho
            .matrix()
            .scale_re(1.0 - eps)
            .add(&ComplexMatrix::identity(4).scale_re(eps / 4.0));
        DensityMatrix::new(m).expect("extension keeps the state valid")
    }

    /// Central difference with one Richardson refinement.
    fn derivative_at_zero(rho: &DensityMatrix, f: impl Fn(&DensityMatrix) -> f64) -> f64 {
        let h = 1e-5;
        let diff = |h: f64| {
            (f(&depolarize_extended(rho, h)) - f(&depolarize_extended(rho, -h))) / (2.0 * h)
        };
        let d1 = diff(h);
        let d2 = diff(h / 2.0);
        (4.0 * d2 - d1) / 3.0
    }

    #[test]
    fn amplitude_fidelity_expansion_fixed_point() {
        let exp = expand_amplitude_fidelity(&fully_mixed(4).unwrap());
        assert!(exp.coeff_eps.abs() < 1e-14);
        assert!(exp.coeff_eps2.abs() < 1e-14);
        assert!((exp.evaluate(0.3) - 1.0).abs() < 1e-14);
        assert_eq!(exp.rank_info, RankInfo { n_nonzero: 4, n_zero: 0 });
    }

    #[test]
    fn amplitude_fidelity_expansion_pure_state() {
        // Exact f = sqrt(1 - 3 eps / 4) = 1 - (3/8) eps - (9/128) eps² + ...
        let exp = expand_amplitude_fidelity(&phi_plus());
        assert!((exp.coeff_eps - (-3.0 / 8.0)).abs() < 1e-14);
        assert!((exp.coeff_eps2 - (-9.0 / 128.0)).abs() < 1e-12);
        assert_eq!(exp.rank_info, RankInfo { n_nonzero: 1, n_zero: 3 });
        assert!((exp.validity_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_fidelity_first_order_vanishes_at_full_rank() {
        let rho = rho1(0.2, 22.5 * DEG).unwrap();
        let exp = expand_amplitude_fidelity(&rho);
        assert!(exp.coeff_eps.abs() < 1e-12, "{}", exp.coeff_eps);
        // Recompute the curvature from the known spectrum (0.85, 0.05³).
        let expected: f64 = [0.85f64, 0.05, 0.05, 0.05]
            .iter()
            .map(|&l| -l / 8.0 * ((1.0 - 4.0 * l) / (4.0 * l)).powi(2))
            .sum();
        assert!((exp.coeff_eps2 - expected).abs() < 1e-10);
        // Validity bound: min over the spectrum of 4λ/|1-4λ|.
        assert!((exp.validity_bound - 0.2 / 0.8).abs() < 1e-10);
    }

    #[test]
    fn amplitude_fidelity_expansion_tracks_exact_value() {
        let full_rank = [rho1(0.2, 22.5 * DEG).unwrap(), rho2(0.15, 0.6).unwrap()];
        let rank_deficient =
            [phi_plus(), pure_nonmax(11.25 * DEG), mems(0.8).unwrap(), mems(0.5).unwrap()];
        for eps in [1e-3, 1e-4, 1e-5] {
            for rho in &full_rank {
                let exact = exact_delta(Measure::AmplitudeFidelity, rho, eps).unwrap();
                let predicted = expand_amplitude_fidelity(rho).evaluate(eps);
                assert!((exact - predicted).abs() < 50.0 * eps.powi(3));
            }
            for rho in &rank_deficient {
                let exact = exact_delta(Measure::AmplitudeFidelity, rho, eps).unwrap();
                let predicted = expand_amplitude_fidelity(rho).evaluate(eps);
                assert!((exact - predicted).abs() < 50.0 * eps.powi(2));
            }
        }
    }

    #[test]
    fn linear_entropy_delta_is_exact_for_all_eps() {
        let fixtures = [
            phi_plus(),
            mems(0.8).unwrap(),
            mems(0.5).unwrap(),
            rho1(0.2, 22.5 * DEG).unwrap(),
            fully_mixed(4).unwrap(),
        ];
        for rho in &fixtures {
            let s = measures::linear_entropy(rho);
            for eps in [0.01, 0.1, 0.5, 0.9, 1.0] {
                let exact = exact_delta(Measure::LinearEntropy, rho, eps).unwrap();
                let identity = (2.0 * eps - eps * eps) * (1.0 - s);
                assert!((exact - identity).abs() < 1e-12, "eps={eps}: {exact} vs {identity}");
                let expanded = expand_linear_entropy(rho).evaluate(eps);
                assert!((exact - expanded).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_distance_delta_is_exact_for_all_eps() {
        let fixtures = [
            phi_plus(),
            mems(0.8).unwrap(),
            rho1(0.2, 22.5 * DEG).unwrap(),
            fully_mixed(4).unwrap(),
        ];
        for rho in &fixtures {
            let values = state_eigenvalues(rho);
            let slope = 0.5 * values.iter().map(|&l| (l - 0.25).abs()).sum::<f64>();
            for eps in [0.01, 0.1, 0.5, 0.9, 1.0] {
                let exact = exact_delta(Measure::TraceDistance, rho, eps).unwrap();
                assert!((exact - slope * eps).abs() < 1e-12, "eps={eps}");
                let expanded = expand_trace_distance(rho).evaluate(eps);
                assert!((exact - expanded).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_delta_vanishes_at_zero() {
        let rho = mems(0.7).unwrap();
        for m in Measure::ALL {
            let value = exact_delta(m, &rho, 0.0).unwrap();
            let reference = if m == Measure::AmplitudeFidelity { 1.0 } else { 0.0 };
            assert!((value - reference).abs() < 1e-10, "{m:?}: {value}");
        }
    }

    #[test]
    fn von_neumann_expansion_fixed_point() {
        // For the fully mixed state S_V = ln N cancels the spectral sum and
        // both coefficients vanish.
        let exp = expand_von_neumann(&fully_mixed(4).unwrap());
        assert!(exp.coeff_eps_log_eps.abs() < 1e-14);
        assert!(exp.coeff_eps.abs() < 1e-12);
    }

    #[test]
    fn von_neumann_expansion_pure_state() {
        let exp = expand_von_neumann(&phi_plus());
        assert!((exp.coeff_eps_log_eps - (-0.75)).abs() < 1e-14);
        let expected_linear = 1.0 - 0.25 + 0.75 * 4f64.ln();
        assert!((exp.coeff_eps - expected_linear).abs() < 1e-10);
    }

    #[test]
    fn von_neumann_expansion_full_rank_has_no_log_term() {
        let rho = rho1(0.2, 22.5 * DEG).unwrap();
        let exp = expand_von_neumann(&rho);
        assert_eq!(exp.coeff_eps_log_eps, 0.0);
        for eps in [1e-3, 1e-4, 1e-5] {
            let exact = exact_delta(Measure::VonNeumannEntropy, &rho, eps).unwrap();
            assert!((exact - exp.evaluate(eps)).abs() < 100.0 * eps * eps);
        }
    }

    #[test]
    fn von_neumann_log_coefficient_extracted_empirically() {
        // Two-point elimination of the linear term: with
        // ΔS = a·eps·ln(1/eps) + b·eps, the combination
        // (ΔS₂/eps₂ - ΔS₁/eps₁) / (ln(1/eps₂) - ln(1/eps₁)) recovers a.
        for (rho, n_zero) in [
            (phi_plus(), 3.0),
            (mems(0.8).unwrap(), 2.0),
            (mems(0.5).unwrap(), 1.0),
        ] {
            let (e1, e2) = (1e-5, 1e-6);
            let d1 = exact_delta(Measure::VonNeumannEntropy, &rho, e1).unwrap();
            let d2 = exact_delta(Measure::VonNeumannEntropy, &rho, e2).unwrap();
            let a = (d2 / e2 - d1 / e1) / ((1.0f64 / e2).ln() - (1.0f64 / e1).ln());
            let expected = n_zero / 4.0;
            assert!(
                (a - expected).abs() < 0.05 * expected,
                "n_zero={n_zero}: extracted {a}, expected {expected}"
            );
            let exp = expand_von_neumann(&rho);
            assert!((exp.coeff_eps_log_eps + expected).abs() < 1e-12);
        }
    }

    #[test]
    fn concurrence_expansion_bell_state_total_first_order() {
        // Exact C(rho') = 1 - 3 eps / 2 for the maximally entangled state;
        // the expansion's square-root terms collapse to -eps/4 each since
        // the kernel weights vanish.
        let exp = expand_concurrence(&phi_plus()).unwrap();
        assert_eq!(exp.sqrt_eps_coeffs.len(), 3);
        for &a in &exp.sqrt_eps_coeffs {
            assert!(a.abs() < 1e-12, "{a}");
        }
        let eps = 1e-6;
        let slope = exp.evaluate(eps) / eps;
        assert!((slope - (-1.5)).abs() < 1e-4, "{slope}");
    }

    #[test]
    fn concurrence_expansion_werner_state_analytic_slope() {
        // Composing channels: rho1(0.1) depolarized by delta is
        // rho1(0.1 + 0.9 delta), so dC/d(delta) = -1.5 * 0.9 = -1.35.
        let exp = expand_concurrence(&rho1(0.1, 22.5 * DEG).unwrap()).unwrap();
        assert!(exp.sqrt_eps_coeffs.is_empty());
        assert!((exp.coeff_eps - (-1.35)).abs() < 1e-9, "{}", exp.coeff_eps);
    }

    #[test]
    fn concurrence_expansion_matches_finite_differences_at_full_rank() {
        let fixtures = [rho1(0.1, 22.5 * DEG).unwrap(), rho2(0.1, 0.8).unwrap()];
        for rho in &fixtures {
            let exp = expand_concurrence(rho).unwrap();
            assert!(exp.sqrt_eps_coeffs.is_empty(), "full-rank state has no kernel terms");
            let fd = derivative_at_zero(rho, |r| measures::concurrence(r).unwrap());
            assert!((exp.coeff_eps - fd).abs() < 1e-4, "{} vs {fd}", exp.coeff_eps);
        }
    }

    #[test]
    fn tangle_expansion_scales_concurrence_by_2c() {
        let rho = rho2(0.1, 0.8).unwrap();
        let c = measures::concurrence(&rho).unwrap();
        let base = expand_concurrence(&rho).unwrap();
        let tangle = expand_tangle(&rho).unwrap();
        assert!((tangle.coeff_eps - 2.0 * c * base.coeff_eps).abs() < 1e-12);
        let fd = derivative_at_zero(&rho, |r| measures::tangle(r).unwrap());
        assert!((tangle.coeff_eps - fd).abs() < 1e-4);
    }

    #[test]
    fn tangle_variation_identity() {
        // ΔT = 2CΔC + (ΔC)² algebraically, so |ΔT - 2CΔC| <= (ΔC)².
        let fixtures = [phi_plus(), mems(0.8).unwrap(), rho1(0.1, 22.5 * DEG).unwrap()];
        for rho in &fixtures {
            let c = measures::concurrence(rho).unwrap();
            for eps in [1e-3, 1e-2, 0.1] {
                let dc = exact_delta(Measure::Concurrence, rho, eps).unwrap();
                let dt = exact_delta(Measure::Tangle, rho, eps).unwrap();
                assert!((dt - 2.0 * c * dc).abs() <= dc * dc + 1e-12);
            }
        }
    }

    #[test]
    fn concurrence_expansion_requires_entanglement() {
        for rho in [fully_mixed(4).unwrap(), pure_nonmax(0.0), mems(0.0).unwrap()] {
            assert!(matches!(
                expand_concurrence(&rho),
                Err(PerturbationError::NotEntangled { .. })
            ));
        }
    }

    #[test]
    fn scaling_fidelity_full_rank_is_second_order() {
        let rho = rho1(0.2, 22.5 * DEG).unwrap();
        let grid = geometric_grid(1e-2, 1e-6, 9);
        let report = order_scaling_report(&rho, Measure::AmplitudeFidelity, &grid).unwrap();
        assert!((report.estimated_order - 2.0).abs() < 0.05, "{}", report.estimated_order);
        assert!(!report.flagged_log_term);
    }

    #[test]
    fn scaling_trace_distance_is_first_order() {
        let grid = geometric_grid(1e-2, 1e-6, 9);
        for rho in [phi_plus(), mems(0.8).unwrap(), rho1(0.2, 22.5 * DEG).unwrap()] {
            let report = order_scaling_report(&rho, Measure::TraceDistance, &grid).unwrap();
            assert!((report.estimated_order - 1.0).abs() < 0.01, "{}", report.estimated_order);
        }
    }

    #[test]
    fn scaling_linear_entropy_pure_state_is_first_order() {
        let grid = geometric_grid(1e-2, 1e-6, 9);
        let report =
            order_scaling_report(&pure_nonmax(11.25 * DEG), Measure::LinearEntropy, &grid).unwrap();
        assert!((report.estimated_order - 1.0).abs() < 0.02, "{}", report.estimated_order);
    }

    #[test]
    fn scaling_von_neumann_flags_log_behaviour_only_when_rank_deficient() {
        let grid = geometric_grid(1e-2, 1e-6, 9);
        let pure = order_scaling_report(&phi_plus(), Measure::VonNeumannEntropy, &grid).unwrap();
        assert!(pure.flagged_log_term);
        let full =
            order_scaling_report(&rho1(0.2, 22.5 * DEG).unwrap(), Measure::VonNeumannEntropy, &grid)
                .unwrap();
        assert!(!full.flagged_log_term);
        assert!((full.estimated_order - 1.0).abs() < 0.02);
    }

    #[test]
    fn scaling_fully_mixed_state_has_no_signal() {
        let grid = geometric_grid(1e-2, 1e-6, 9);
        let report =
            order_scaling_report(&fully_mixed(4).unwrap(), Measure::LinearEntropy, &grid).unwrap();
        assert_eq!(report.points_used, 0);
        assert_eq!(report.estimated_order, 0.0);
    }

    #[test]
    fn scaling_rejects_degenerate_grids() {
        let rho = phi_plus();
        let cases: [&[f64]; 3] = [&[1e-3], &[1e-3, 1e-2], &[1e-2, -1e-3]];
        for grid in cases {
            assert!(matches!(
                order_scaling_report(&rho, Measure::TraceDistance, grid),
                Err(PerturbationError::DegenerateGrid(_))
            ));
        }
    }
}
