//! Monte Carlo simulation of noisy two-qubit tomography: ideal counts for
//! the 16 separable polarization-analysis settings, Poisson counting noise,
//! linear-inversion reconstruction with projection onto physical states,
//! and accumulation of reconstruction clouds in the entropy-tangle plane.
//!
//! All randomness flows through counter-seeded ChaCha streams, so every
//! result is bit-reproducible regardless of thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curves::{plane_point, PlanePoint, PointSource};
use crate::linalg::{self, ComplexMatrix};
use crate::measures::{self, MeasureError};
use crate::states::{DensityMatrix, StateError};

/// Number of measurement settings in the standard separable set.
pub const NUM_SETTINGS: usize = 16;
/// Settings per complete measurement basis; the count budget is split by
/// this divisor to obtain the per-setting budget.
pub const SETTINGS_PER_BASIS: f64 = 4.0;
/// Poisson means below this use exact inversion sampling; larger means use
/// a rounded normal approximation.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("operation requires a two-qubit (4x4) state, got {0}x{0}")]
    NotTwoQubit(usize),
    #[error("count budget must be positive")]
    ZeroBudget,
    #[error("trial count must be positive")]
    ZeroTrials,
    #[error("acceptance threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("measurement design matrix is singular (pivot {pivot:.3e})")]
    SingularDesign { pivot: f64 },
    #[error("only {accepted} acceptances after {trials} trials; wanted {wanted}")]
    AcceptanceShortfall { accepted: usize, trials: usize, wanted: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Simulated counts for the 16 settings of one tomography run.
#[derive(Debug, Clone, Serialize)]
pub struct CountsRecord {
    pub setting_labels: Vec<String>,
    /// Noise-free counts, budget_per_setting * Tr(rho Pi_k).
    pub expected: Vec<f64>,
    /// Poisson-drawn counts; all zeros until [`perturb_counts`] runs.
    pub observed: Vec<u64>,
    pub total_budget: u64,
    pub seed: u64,
}

impl CountsRecord {
    /// Count budget assigned to each projector setting.
    pub fn budget_per_setting(&self) -> f64 {
        self.total_budget as f64 / SETTINGS_PER_BASIS
    }

    /// Observed counts normalized by the per-setting budget.
    pub fn frequencies(&self) -> [f64; NUM_SETTINGS] {
        let scale = 1.0 / self.budget_per_setting();
        let mut out = [0.0; NUM_SETTINGS];
        for (slot, &count) in out.iter_mut().zip(&self.observed) {
            *slot = count as f64 * scale;
        }
        out
    }
}

/// Accepted reconstructions for one Monte Carlo cloud.
#[derive(Debug, Clone, Serialize)]
pub struct CloudResult {
    pub accepted_points: Vec<PlanePoint>,
    pub trials_run: usize,
    pub acceptance_threshold: f64,
    pub target_label: String,
}

/// Single-qubit analysis states: computational basis plus the two
/// superpositions needed for an informationally complete set.
fn qubit_states() -> [(char, [Complex64; 2]); 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        ('H', [Complex64::ONE, Complex64::ZERO]),
        ('V', [Complex64::ZERO, Complex64::ONE]),
        ('D', [Complex64::new(h, 0.0), Complex64::new(h, 0.0)]),
        ('R', [Complex64::new(h, 0.0), Complex64::new(0.0, h)]),
    ]
}

/// The 16 separable projectors |a><a| ⊗ |b><b| with a, b drawn from the
/// four analysis states, plus their labels.
pub fn standard_settings() -> (Vec<String>, Vec<ComplexMatrix>) {
    let singles = qubit_states();
    let mut labels = Vec::with_capacity(NUM_SETTINGS);
    let mut projectors = Vec::with_capacity(NUM_SETTINGS);
    for (la, a) in &singles {
        for (lb, b) in &singles {
            labels.push(format!("{la}{lb}"));
            let mut proj = ComplexMatrix::zeros(4);
            for i in 0..4 {
                let amp_i = a[i / 2] * b[i % 2];
                for j in 0..4 {
                    let amp_j = a[j / 2] * b[j % 2];
                    proj[(i, j)] = amp_i * amp_j.conj();
                }
            }
            projectors.push(proj);
        }
    }
    (labels, projectors)
}

fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Noise-free expected counts for every setting.
pub fn ideal_counts(rho: &DensityMatrix, budget: u64) -> Result<CountsRecord, TomoError> {
    if rho.dim() != 4 {
        return Err(TomoError::NotTwoQubit(rho.dim()));
    }
    if budget == 0 {
        return Err(TomoError::ZeroBudget);
    }
    let (labels, projectors) = standard_settings();
    let per_setting = budget as f64 / SETTINGS_PER_BASIS;
    let expected: Vec<f64> = projectors
        .iter()
        .map(|p| (per_setting * trace_product(rho.matrix(), p).re).max(0.0))
        .collect();
    Ok(CountsRecord {
        setting_labels: labels,
        expected,
        observed: vec![0; NUM_SETTINGS],
        total_budget: budget,
        seed: 0,
    })
}

/// One ChaCha stream per (seed, stream index) pair.
fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 step, used to decorrelate per-trial seeds.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic Poisson draw: inversion below the mean cutoff, rounded
/// normal approximation (Box-Muller) above it.
fn poisson(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < POISSON_INVERSION_LIMIT {
        let limit = (-mean).exp();
        let mut product: f64 = 1.0;
        let mut count = 0u64;
        loop {
            product *= 1.0 - rng.random::<f64>(); // uniform in (0, 1]
            if product <= limit {
                return count;
            }
            count += 1;
        }
    }
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    (mean + z * mean.sqrt()).round().max(0.0) as u64
}

/// Draws observed counts from independent Poisson distributions with the
/// record's expected means, one generator stream per setting.
pub fn perturb_counts(record: &CountsRecord, seed: u64) -> CountsRecord {
    let observed = record
        .expected
        .iter()
        .enumerate()
        .map(|(k, &mean)| poisson(&mut stream_rng(seed, k as u64), mean))
        .collect();
    CountsRecord { observed, seed, ..record.clone() }
}

/// Real 16x16 design solver mapping setting frequencies to the Hermitian
/// coordinate vector (diagonal entries, then re/im of each upper off-
/// diagonal entry).
pub struct DesignMatrix {
    inverse: Vec<f64>, // row-major 16x16
    basis: Vec<ComplexMatrix>,
}

fn hermitian_basis() -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(16);
    for d in 0..4 {
        let mut m = ComplexMatrix::zeros(4);
        m[(d, d)] = Complex64::ONE;
        basis.push(m);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let mut sym = ComplexMatrix::zeros(4);
            sym[(i, j)] = Complex64::ONE;
            sym[(j, i)] = Complex64::ONE;
            basis.push(sym);
            let mut asym = ComplexMatrix::zeros(4);
            asym[(i, j)] = Complex64::new(0.0, -1.0);
            asym[(j, i)] = Complex64::new(0.0, 1.0);
            basis.push(asym);
        }
    }
    basis
}

/// Gauss-Jordan inverse of a row-major n x n matrix.
fn invert_real(matrix: &mut [f64], n: usize) -> Result<Vec<f64>, TomoError> {
    let mut inv: Vec<f64> = (0..n * n)
        .map(|idx| if idx / n == idx % n { 1.0 } else { 0.0 })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| {
                matrix[a * n + col]
                    .abs()
                    .partial_cmp(&matrix[b * n + col].abs())
                    .expect("finite design entries")
            })
            .expect("non-empty range");
        let pivot = matrix[pivot_row * n + col];
        if pivot.abs() < 1e-12 {
            return Err(TomoError::SingularDesign { pivot: pivot.abs() });
        }
        if pivot_row != col {
            for j in 0..n {
                matrix.swap(pivot_row * n + j, col * n + j);
                inv.swap(pivot_row * n + j, col * n + j);
            }
        }
        let scale = 1.0 / matrix[col * n + col];
        for j in 0..n {
            matrix[col * n + j] *= scale;
            inv[col * n + j] *= scale;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = matrix[row * n + col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                matrix[row * n + j] -= factor * matrix[col * n + j];
                inv[row * n + j] -= factor * inv[col * n + j];
            }
        }
    }
    Ok(inv)
}

impl DesignMatrix {
    pub fn new(projectors: &[ComplexMatrix]) -> Result<Self, TomoError> {
        assert_eq!(projectors.len(), NUM_SETTINGS);
        let basis = hermitian_basis();
        let mut design = vec![0.0; NUM_SETTINGS * NUM_SETTINGS];
        for (k, proj) in projectors.iter().enumerate() {
            for (m, b) in basis.iter().enumerate() {
                design[k * NUM_SETTINGS + m] = trace_product(proj, b).re;
            }
        }
        let inverse = invert_real(&mut design, NUM_SETTINGS)?;
        Ok(Self { inverse, basis })
    }

    /// Solves Tr(T Pi_k) = freqs[k] for the Hermitian matrix T.
    pub fn solve(&self, freqs: &[f64; NUM_SETTINGS]) -> ComplexMatrix {
        let mut coords = [0.0; NUM_SETTINGS];
        for (m, slot) in coords.iter_mut().enumerate() {
            *slot = (0..NUM_SETTINGS)
                .map(|k| self.inverse[m * NUM_SETTINGS + k] * freqs[k])
                .sum();
        }
        let mut out = ComplexMatrix::zeros(4);
        for (m, b) in self.basis.iter().enumerate() {
            out = out.add(&b.scale_re(coords[m]));
        }
        out
    }
}

fn standard_design() -> &'static DesignMatrix {
    use std::sync::OnceLock;
    static DESIGN: OnceLock<DesignMatrix> = OnceLock::new();
    DESIGN.get_or_init(|| {
        let (_, projectors) = standard_settings();
        DesignMatrix::new(&projectors).expect("standard settings are informationally complete")
    })
}

/// Euclidean projection of a spectrum onto the probability simplex.
fn project_spectrum(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    let mut support = 0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (1.0 - cumulative) / (k + 1) as f64;
        if v + candidate > 0.0 {
            shift = candidate;
            support = k + 1;
        }
    }
    let _ = support;
    values.iter().map(|&v| (v + shift).max(0.0)).collect()
}

/// Linear inversion of normalized frequencies followed by projection to the
/// nearest physical (PSD, unit-trace) state.
pub fn reconstruct_frequencies(freqs: &[f64; NUM_SETTINGS]) -> Result<DensityMatrix, TomoError> {
    let mut linear = standard_design().solve(freqs);
    let trace = linear.trace().re;
    if (trace - 1.0).abs() > 1e-12 && trace.abs() > 0.1 {
        linear = linear.scale_re(1.0 / trace);
    }
    let spectrum = linalg::hermitian_eig(&linear, 1e-9).map_err(MeasureError::from)?;
    let projected = project_spectrum(&spectrum.eigenvalues);

    let mut out = ComplexMatrix::zeros(4);
    for (k, &weight) in projected.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        let v = spectrum.eigenvector(k);
        for i in 0..4 {
            for j in 0..4 {
                out[(i, j)] += weight * v[i] * v[j].conj();
            }
        }
    }
    // Pin exact Hermitian symmetry before validation.
    let symmetrized = out.add(&out.adjoint()).scale_re(0.5);
    Ok(DensityMatrix::new(symmetrized)?)
}

/// Reconstruction from a counts record's observed counts.
pub fn reconstruct(record: &CountsRecord) -> Result<DensityMatrix, TomoError> {
    reconstruct_frequencies(&record.frequencies())
}

/// One simulate-and-reconstruct round.
fn run_trial(
    ideal: &CountsRecord,
    target: &DensityMatrix,
    trial: usize,
    seed: u64,
    threshold: f64,
) -> Result<Option<PlanePoint>, TomoError> {
    let trial_seed = mix_seed(seed, trial as u64);
    let noisy = perturb_counts(ideal, trial_seed);
    let reconstruction = reconstruct(&noisy)?;
    let f = measures::fidelity(target, &reconstruction)?;
    if f < threshold {
        return Ok(None);
    }
    let (s_l, t) = plane_point(&reconstruction)?;
    Ok(Some(PlanePoint {
        s_l,
        t,
        source: PointSource::Reconstruction { trial },
        fidelity_with_target: f,
    }))
}

/// Runs `trials` independent simulate-reconstruct rounds against `target`,
/// keeping reconstructions whose fidelity reaches `threshold`. Fixed
/// (target, trials, budget, threshold, seed) produce bit-identical output.
pub fn monte_carlo_cloud(
    target: &DensityMatrix,
    target_label: &str,
    trials: usize,
    budget: u64,
    threshold: f64,
    seed: u64,
) -> Result<CloudResult, TomoError> {
    if trials == 0 {
        return Err(TomoError::ZeroTrials);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(TomoError::BadThreshold(threshold));
    }
    let ideal = ideal_counts(target, budget)?;
    let accepted: Vec<Option<PlanePoint>> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(&ideal, target, trial, seed, threshold))
        .collect::<Result<_, TomoError>>()?;
    Ok(CloudResult {
        accepted_points: accepted.into_iter().flatten().collect(),
        trials_run: trials,
        acceptance_threshold: threshold,
        target_label: target_label.to_string(),
    })
}

/// Batch size for the open-ended accumulation loop.
const CLOUD_BATCH: usize = 8192;

/// Accumulates trials until `wanted` acceptances are collected (then
/// truncates to exactly that many, in trial order) or `max_trials` is
/// exhausted. Batch boundaries are fixed, so the result does not depend on
/// scheduling.
pub fn cloud_with_acceptances(
    target: &DensityMatrix,
    target_label: &str,
    wanted: usize,
    max_trials: usize,
    budget: u64,
    threshold: f64,
    seed: u64,
) -> Result<CloudResult, TomoError> {
    if wanted == 0 || max_trials == 0 {
        return Err(TomoError::ZeroTrials);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(TomoError::BadThreshold(threshold));
    }
    let ideal = ideal_counts(target, budget)?;
    let mut accepted = Vec::with_capacity(wanted);
    let mut trials_run = 0usize;
    while accepted.len() < wanted && trials_run < max_trials {
        let batch = CLOUD_BATCH.min(max_trials - trials_run);
        let results: Vec<Option<PlanePoint>> = (trials_run..trials_run + batch)
            .into_par_iter()
            .map(|trial| run_trial(&ideal, target, trial, seed, threshold))
            .collect::<Result<_, TomoError>>()?;
        accepted.extend(results.into_iter().flatten());
        trials_run += batch;
    }
    if accepted.len() < wanted {
        return Err(TomoError::AcceptanceShortfall {
            accepted: accepted.len(),
            trials: trials_run,
            wanted,
        });
    }
    accepted.truncate(wanted);
    Ok(CloudResult {
        accepted_points: accepted,
        trials_run,
        acceptance_threshold: threshold,
        target_label: target_label.to_string(),
    })
}
