//! Constant-fidelity contours in the linear-entropy/tangle plane, the
//! physical-region boundary traced by the maximally entangled mixed states,
//! and fidelity-region area estimates.
//!
//! Contours are found by sweeping one family parameter on a grid and
//! bisecting the other until the fidelity with the target hits the
//! requested level. Both sweep orientations run, because the curves have
//! horizontal and near-vertical segments.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::measures::{self, MeasureError};
use crate::states::{self, DensityMatrix, FamilyParams, StateError};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("fidelity level {0} outside the valid range")]
    InvalidLevel(f64),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Where a plane point came from: a family member or a tomographic
/// reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PointSource {
    Family(FamilyParams),
    Reconstruction { trial: usize },
}

/// A (linear entropy, tangle) coordinate with provenance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlanePoint {
    pub s_l: f64,
    pub t: f64,
    pub source: PointSource,
    pub fidelity_with_target: f64,
}

/// Which family is swept to generate perturbed states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepFamily {
    /// Depolarized nonmaximally entangled states, (eps, theta).
    Rho1Sweep,
    /// Depolarized maximally entangled mixed states, (eps, r).
    Rho2Sweep,
}

/// One constant-fidelity contour.
#[derive(Debug, Clone, Serialize)]
pub struct Contour {
    pub target_label: String,
    pub fidelity_level: f64,
    pub family: SweepFamily,
    pub points: Vec<PlanePoint>,
}

/// Contour tracer resolution knobs.
#[derive(Debug, Clone)]
pub struct ContourConfig {
    /// Grid points along the swept parameter.
    pub sweep_points: usize,
    /// Scan nodes along the bisected parameter used to bracket roots; every
    /// sign change is refined, so several roots per sweep line are found.
    pub scan_points: usize,
    /// Accepted |F - level| for an emitted point.
    pub contour_tol: f64,
    /// Bisection iteration cap.
    pub max_bisect_iters: usize,
    /// Plane-distance below which points are merged.
    pub dedupe_dist: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            sweep_points: 512,
            scan_points: 128,
            contour_tol: 1e-6,
            max_bisect_iters: 80,
            dedupe_dist: 1e-4,
        }
    }
}

/// Largest theta in the rho1 sweep: the maximally entangled corner.
pub const THETA_MAX: f64 = std::f64::consts::FRAC_PI_8;

/// The (linear entropy, tangle) coordinates of a two-qubit state.
pub fn plane_point(rho: &DensityMatrix) -> Result<(f64, f64), MeasureError> {
    Ok((measures::linear_entropy(rho), measures::tangle(rho)?))
}

/// Plane coordinates of the maximally-entangled-mixed-state boundary, split
/// at the template crossover: `branch_ii` covers r < 2/3 and `branch_i`
/// covers r >= 2/3.
#[derive(Debug, Clone, Serialize)]
pub struct MemsBoundary {
    pub branch_ii: Vec<(f64, f64)>,
    pub branch_i: Vec<(f64, f64)>,
}

impl MemsBoundary {
    pub fn all_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.branch_ii.iter().chain(self.branch_i.iter()).copied()
    }
}

/// Samples the physical-region boundary on a uniform r grid over [0, 1].
pub fn mems_boundary(samples: usize) -> MemsBoundary {
    assert!(samples >= 2, "need at least the two endpoints");
    let mut branch_ii = Vec::new();
    let mut branch_i = Vec::new();
    for k in 0..samples {
        let r = k as f64 / (samples - 1) as f64;
        let rho = states::mems(r).expect("r is in range");
        let point = plane_point(&rho).expect("boundary state is a valid two-qubit state");
        if r < 2.0 / 3.0 {
            branch_ii.push(point);
        } else {
            branch_i.push(point);
        }
    }
    MemsBoundary { branch_ii, branch_i }
}

/// Plane coordinates of the depolarized maximally entangled state for eps
/// on a uniform grid over [0, 1].
pub fn werner_curve(samples: usize) -> Vec<(f64, f64)> {
    assert!(samples >= 2, "need at least the two endpoints");
    (0..samples)
        .map(|k| {
            let eps = k as f64 / (samples - 1) as f64;
            let rho = states::rho1(eps, THETA_MAX).expect("eps is in range");
            plane_point(&rho).expect("family state is a valid two-qubit state")
        })
        .collect()
}

/// Piecewise-linear interpolation of the tangle bound t_max(s_l) built from
/// boundary samples; beyond the sampled range the bound is zero.
pub struct BoundaryInterpolation {
    knots: Vec<(f64, f64)>, // sorted by s_l
}

impl BoundaryInterpolation {
    pub fn new(samples: usize) -> Self {
        let boundary = mems_boundary(samples);
        let mut knots: Vec<(f64, f64)> = boundary.all_points().collect();
        knots.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite coordinates"));
        Self { knots }
    }

    /// Maximum physical tangle at the given linear entropy.
    pub fn t_max(&self, s_l: f64) -> f64 {
        let first = self.knots.first().expect("non-empty boundary");
        let last = self.knots.last().expect("non-empty boundary");
        if s_l <= first.0 {
            return first.1;
        }
        if s_l >= last.0 {
            return 0.0;
        }
        let idx = self.knots.partition_point(|k| k.0 <= s_l);
        let (x0, y0) = self.knots[idx - 1];
        let (x1, y1) = self.knots[idx];
        if x1 == x0 {
            return y0.max(y1);
        }
        y0 + (y1 - y0) * (s_l - x0) / (x1 - x0)
    }
}

fn family_state(family: SweepFamily, sweep: f64, bisect: f64) -> Result<(DensityMatrix, FamilyParams), StateError> {
    // The sweep coordinate is theta (rho1) or r (rho2); the bisected one is
    // always eps for pass A and the roles swap for pass B (handled by the
    // caller through `Axes`).
    let params = match family {
        SweepFamily::Rho1Sweep => FamilyParams::Rho1 { eps: bisect, theta: sweep },
        SweepFamily::Rho2Sweep => FamilyParams::Rho2 { eps: bisect, r: sweep },
    };
    Ok((params.build()?, params))
}

/// One sweep orientation: fix `sweep` values on a grid, solve along the
/// other axis over `range`.
struct Axes {
    /// Build (state, provenance) from (sweep value, solved value).
    build: fn(SweepFamily, f64, f64) -> Result<(DensityMatrix, FamilyParams), StateError>,
    sweep_range: (f64, f64),
    solve_range: (f64, f64),
}

fn swapped_family_state(
    family: SweepFamily,
    sweep: f64,
    bisect: f64,
) -> Result<(DensityMatrix, FamilyParams), StateError> {
    family_state(family, bisect, sweep)
}

/// Traces the constant-fidelity contour of `target` at `level` over one
/// family. Sweep lines are independent and evaluated in parallel; output
/// order follows the sweep parameter, then the root position. An empty
/// contour means the level is not attained anywhere.
pub fn trace_contour(
    target: &DensityMatrix,
    target_label: &str,
    family: SweepFamily,
    level: f64,
    config: &ContourConfig,
) -> Result<Contour, CurveError> {
    if !(level > 0.0 && level <= 1.0) || !level.is_finite() {
        return Err(CurveError::InvalidLevel(level));
    }

    let sweep_max = match family {
        SweepFamily::Rho1Sweep => THETA_MAX,
        SweepFamily::Rho2Sweep => 1.0,
    };
    let passes = [
        Axes { build: family_state, sweep_range: (0.0, sweep_max), solve_range: (0.0, 1.0) },
        Axes { build: swapped_family_state, sweep_range: (0.0, 1.0), solve_range: (0.0, sweep_max) },
    ];

    let mut points = Vec::new();
    for axes in &passes {
        let lines: Vec<Vec<PlanePoint>> = (0..config.sweep_points)
            .into_par_iter()
            .map(|k| {
                let frac = k as f64 / (config.sweep_points - 1) as f64;
                let sweep = axes.sweep_range.0 + frac * (axes.sweep_range.1 - axes.sweep_range.0);
                solve_line(target, family, axes, sweep, level, config)
            })
            .collect::<Result<_, CurveError>>()?;
        points.extend(lines.into_iter().flatten());
    }

    dedupe(&mut points, config.dedupe_dist);
    Ok(Contour { target_label: target_label.to_string(), fidelity_level: level, family, points })
}

/// Finds every root of F(target, state(sweep, x)) = level along one line by
/// scanning for brackets and bisecting each.
fn solve_line(
    target: &DensityMatrix,
    family: SweepFamily,
    axes: &Axes,
    sweep: f64,
    level: f64,
    config: &ContourConfig,
) -> Result<Vec<PlanePoint>, CurveError> {
    let (lo, hi) = axes.solve_range;
    let eval = |x: f64| -> Result<(f64, DensityMatrix, FamilyParams), CurveError> {
        let (rho, params) = (axes.build)(family, sweep, x)?;
        let f = measures::fidelity(target, &rho)?;
        Ok((f, rho, params))
    };

    let mut found = Vec::new();
    let mut emit = |x: f64| -> Result<(), CurveError> {
        let (f, rho, params) = eval(x)?;
        if (f - level).abs() <= config.contour_tol {
            let (s_l, t) = plane_point(&rho)?;
            found.push(PlanePoint {
                s_l,
                t,
                source: PointSource::Family(params),
                fidelity_with_target: f,
            });
        }
        Ok(())
    };

    let n = config.scan_points;
    let mut prev_x = lo;
    let mut prev_g = eval(lo)?.0 - level;
    if prev_g.abs() <= config.contour_tol {
        emit(lo)?;
    }
    for k in 1..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let g = eval(x)?.0 - level;
        if g.abs() <= config.contour_tol {
            emit(x)?;
        } else if prev_g.abs() > config.contour_tol && g.signum() != prev_g.signum() {
            // Bracketed crossing; bisect.
            let (mut a, mut ga, mut b) = (prev_x, prev_g, x);
            for _ in 0..config.max_bisect_iters {
                let mid = 0.5 * (a + b);
                let gm = eval(mid)?.0 - level;
                if gm.abs() <= config.contour_tol {
                    emit(mid)?;
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = mid;
                    ga = gm;
                } else {
                    b = mid;
                }
            }
        }
        prev_x = x;
        prev_g = g;
    }
    Ok(found)
}

/// Drops points that land within `dist` of an earlier point in the plane.
fn dedupe(points: &mut Vec<PlanePoint>, dist: f64) {
    let mut kept: Vec<PlanePoint> = Vec::with_capacity(points.len());
    for p in points.iter() {
        let close = kept
            .iter()
            .any(|q| ((p.s_l - q.s_l).powi(2) + (p.t - q.t).powi(2)).sqrt() < dist);
        if !close {
            kept.push(*p);
        }
    }
    *points = kept;
}

/// Raster and sweep densities for the area estimate.
#[derive(Debug, Clone)]
pub struct GridConfig {
    /// Cells per axis over the unit square.
    pub raster: usize,
    /// Boundary samples behind the physical-cell test.
    pub boundary_samples: usize,
    /// Grid points per parameter in each family sweep.
    pub sweep_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { raster: 400, boundary_samples: 2048, sweep_steps: 1024 }
    }
}

/// Fraction of the physical region of the plane reachable by family states
/// whose fidelity with `target` is at least `level`. Cells of a
/// raster x raster grid count as physical when their centre lies below the
/// boundary; a cell is covered when any sampled family state with
/// F >= level lands in it.
pub fn region_fraction(
    target: &DensityMatrix,
    level: f64,
    config: &GridConfig,
) -> Result<f64, CurveError> {
    if !(level > 0.0 && level < 1.0) || !level.is_finite() {
        return Err(CurveError::InvalidLevel(level));
    }
    let raster = config.raster;
    let boundary = BoundaryInterpolation::new(config.boundary_samples);

    let physical: Vec<bool> = (0..raster * raster)
        .map(|idx| {
            let (i, j) = (idx % raster, idx / raster); // i: s_l, j: t
            let s_c = (i as f64 + 0.5) / raster as f64;
            let t_c = (j as f64 + 0.5) / raster as f64;
            t_c <= boundary.t_max(s_c)
        })
        .collect();

    let steps = config.sweep_steps;
    let cell_of = |s_l: f64, t: f64| -> usize {
        let i = ((s_l * raster as f64) as usize).min(raster - 1);
        let j = ((t * raster as f64) as usize).min(raster - 1);
        j * raster + i
    };

    // Union of covered cells over both family sweeps, one sweep line per
    // task; OR-reduction keeps the result independent of scheduling.
    let covered = (0..2 * steps)
        .into_par_iter()
        .map(|task| -> Result<Vec<bool>, CurveError> {
            let mut local = vec![false; raster * raster];
            let (family, line) = if task < steps {
                (SweepFamily::Rho1Sweep, task)
            } else {
                (SweepFamily::Rho2Sweep, task - steps)
            };
            let eps = line as f64 / (steps - 1) as f64;
            for k in 0..steps {
                let frac = k as f64 / (steps - 1) as f64;
                let params = match family {
                    SweepFamily::Rho1Sweep => {
                        FamilyParams::Rho1 { eps, theta: frac * THETA_MAX }
                    }
                    SweepFamily::Rho2Sweep => FamilyParams::Rho2 { eps, r: frac },
                };
                let rho = params.build()?;
                if measures::fidelity(target, &rho)? >= level {
                    let (s_l, t) = plane_point(&rho)?;
                    local[cell_of(s_l, t)] = true;
                }
            }
            Ok(local)
        })
        .try_reduce(
            || vec![false; raster * raster],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x |= y;
                }
                Ok(a)
            },
        )?;

    let physical_cells = physical.iter().filter(|&&p| p).count();
    let covered_physical = covered
        .iter()
        .zip(&physical)
        .filter(|&(&c, &p)| c && p)
        .count();
    Ok(covered_physical as f64 / physical_cells as f64)
}
