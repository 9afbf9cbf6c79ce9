//! Grid-based density estimation for scalar fiber statistics: a compact
//! smoothing kernel, the telescoping multilevel accumulator over coupled
//! level samples, and a Gaussian post-filter.

use crate::error::{FiberError, Result};
use crate::fiber::{DesignMatrix, FiberPoint, SufficientStatistic};
use crate::moves::MoveBasis;
use crate::samplers::{run_level_samples, ChainConfig, LevelSchedule};

/// Uniformly spaced evaluation points for density estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    spacing: f64,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(FiberError::InvalidArgument(
                "grid needs at least two points".into(),
            ));
        }
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(FiberError::InvalidArgument(
                "grid bounds must be finite with hi > lo".into(),
            ));
        }
        let spacing = (hi - lo) / (k - 1) as f64;
        let points = (0..k).map(|i| lo + spacing * i as f64).collect();
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Inclusive index range of grid points within `radius` of `t`,
    /// widened by one point per side so exact-boundary cases are settled
    /// by the kernel itself.
    fn window(&self, t: f64, radius: f64) -> Option<(usize, usize)> {
        let first = self.points[0];
        let lo = ((t - radius - first) / self.spacing).floor() - 1.0;
        let hi = ((t + radius - first) / self.spacing).ceil() + 1.0;
        let last = (self.points.len() - 1) as f64;
        if hi < 0.0 || lo > last {
            return None;
        }
        Some((lo.max(0.0) as usize, hi.min(last) as usize))
    }
}

/// The parabolic compact kernel `0.75 (1 - u^2)` on `|u| <= 1`, scaled by
/// a positive bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    bandwidth: f64,
}

impl SmoothingKernel {
    pub fn epanechnikov(bandwidth: f64) -> Result<Self> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(FiberError::InvalidArgument(
                "kernel bandwidth must be finite and positive".into(),
            ));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Density contribution of a sample at `t` evaluated at `s`.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let u = (t - s) / self.bandwidth;
        if u.abs() < 1.0 {
            0.75 * (1.0 - u * u) / self.bandwidth
        } else {
            0.0
        }
    }
}

/// Kernel evaluations of one sample value against every grid point.
pub fn kernel_vector(t: f64, grid: &Grid, kern: &SmoothingKernel) -> Vec<f64> {
    grid.points().iter().map(|&s| kern.eval(t, s)).collect()
}

/// Statistic values recorded by one level's chain, plus the coupled draws
/// from the level below (absent on level 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSamples {
    pub multiplier: i64,
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
}

/// All levels of one multilevel run, coarsest first.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSampleSet {
    pub levels: Vec<LevelSamples>,
    /// 1-based levels whose chain never changed state.
    pub starved: Vec<usize>,
}

impl LevelSampleSet {
    pub fn new(levels: Vec<LevelSamples>, starved: Vec<usize>) -> Self {
        Self { levels, starved }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(FiberError::Empty("level sample set"));
        }
        for (idx, level) in self.levels.iter().enumerate() {
            if level.y.is_empty() {
                return Err(FiberError::Empty("level sample"));
            }
            if level.y.iter().any(|v| !v.is_finite()) {
                return Err(FiberError::InvalidArgument(format!(
                    "level {} holds a non-finite statistic value",
                    idx + 1
                )));
            }
            match (&level.z, idx) {
                (None, 0) => {}
                (Some(_), 0) => {
                    return Err(FiberError::InvalidArgument(
                        "level 1 carries the base term and takes no coupled draws".into(),
                    ));
                }
                (None, _) => {
                    return Err(FiberError::InvalidArgument(format!(
                        "level {} is missing its coupled draws",
                        idx + 1
                    )));
                }
                (Some(z), _) => {
                    if z.len() != level.y.len() {
                        return Err(FiberError::DimensionMismatch {
                            context: "coupled level draws",
                            expected: level.y.len(),
                            got: z.len(),
                        });
                    }
                    if z.iter().any(|v| !v.is_finite()) {
                        return Err(FiberError::InvalidArgument(format!(
                            "level {} holds a non-finite coupled value",
                            idx + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Raw and post-filtered density values over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Grid,
    /// Telescoped estimate; correction terms can push values negative.
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub sigma_grid: f64,
    pub warnings: Vec<String>,
}

impl DensityEstimate {
    /// Spacing-weighted sum of the raw values, the discrete stand-in for
    /// the integral of the estimate.
    pub fn raw_mass(&self) -> f64 {
        self.grid.spacing() * self.raw.iter().sum::<f64>()
    }

    /// Replaces the smoothed values with a Gaussian filtering of the raw
    /// ones.
    pub fn apply_gaussian(&mut self, sigma_grid: f64) -> Result<()> {
        if !sigma_grid.is_finite() || sigma_grid < 0.0 {
            return Err(FiberError::InvalidArgument(
                "smoothing sigma must be finite and nonnegative".into(),
            ));
        }
        self.smoothed = gaussian_smooth(&self.raw, sigma_grid);
        self.sigma_grid = sigma_grid;
        Ok(())
    }
}

fn accumulate(acc: &mut [f64], t: f64, grid: &Grid, kern: &SmoothingKernel) {
    if let Some((lo, hi)) = grid.window(t, kern.bandwidth()) {
        for (slot, &s) in acc[lo..=hi].iter_mut().zip(&grid.points()[lo..=hi]) {
            *slot += kern.eval(t, s);
        }
    }
}

/// Adds the pointwise difference of two kernel evaluations, so a pair with
/// identical values contributes exactly zero.
fn accumulate_diff(acc: &mut [f64], y: f64, z: f64, grid: &Grid, kern: &SmoothingKernel) {
    let wy = grid.window(y, kern.bandwidth());
    let wz = grid.window(z, kern.bandwidth());
    let (lo, hi) = match (wy, wz) {
        (Some((aly, ahy)), Some((alz, ahz))) => (aly.min(alz), ahy.max(ahz)),
        (Some(w), None) | (None, Some(w)) => w,
        (None, None) => return,
    };
    for (slot, &s) in acc[lo..=hi].iter_mut().zip(&grid.points()[lo..=hi]) {
        *slot += kern.eval(y, s) - kern.eval(z, s);
    }
}

/// The telescoped density estimate: level 1 contributes its plain kernel
/// average, every later level the mean difference between its own kernel
/// evaluations and those of its coupled draws.
pub fn multilevel_density(
    samples: &LevelSampleSet,
    grid: &Grid,
    kern: &SmoothingKernel,
) -> Result<DensityEstimate> {
    samples.validate()?;
    let k = grid.len();
    let mut raw = vec![0.0f64; k];
    let mut acc = vec![0.0f64; k];
    let base = &samples.levels[0];
    for &t in &base.y {
        accumulate(&mut acc, t, grid, kern);
    }
    let n = base.y.len() as f64;
    for (r, a) in raw.iter_mut().zip(&acc) {
        *r = a / n;
    }
    for level in &samples.levels[1..] {
        let z = level.z.as_ref().expect("validated level draws");
        acc.iter_mut().for_each(|v| *v = 0.0);
        for (&yv, &zv) in level.y.iter().zip(z) {
            accumulate_diff(&mut acc, yv, zv, grid, kern);
        }
        let n = level.y.len() as f64;
        for (r, a) in raw.iter_mut().zip(&acc) {
            *r += a / n;
        }
    }
    let warnings = samples
        .starved
        .iter()
        .map(|&lvl| {
            let m = samples.levels[lvl - 1].multiplier;
            format!(
                "level {lvl} (multiplier {m}) recorded no state changes; its samples repeat the start"
            )
        })
        .collect();
    let smoothed = raw.clone();
    Ok(DensityEstimate {
        grid: grid.clone(),
        raw,
        smoothed,
        sigma_grid: 0.0,
        warnings,
    })
}

/// Discrete convolution with a unit-mass Gaussian of standard deviation
/// `sigma_grid` grid points, truncated at four sigmas and renormalized
/// over the in-range taps near the edges.  Nonpositive sigma returns the
/// input unchanged.
pub fn gaussian_smooth(raw: &[f64], sigma_grid: f64) -> Vec<f64> {
    if sigma_grid <= 0.0 || raw.is_empty() {
        return raw.to_vec();
    }
    let radius = ((4.0 * sigma_grid).ceil() as usize).min(raw.len() - 1);
    let weights: Vec<f64> = (0..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma_grid * sigma_grid)).exp())
        .collect();
    let n = raw.len();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let lo = j.saturating_sub(radius);
        let hi = (j + radius).min(n - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &v) in raw.iter().enumerate().take(hi + 1).skip(lo) {
            let w = weights[j.abs_diff(i)];
            num += w * v;
            den += w;
        }
        out.push(num / den);
    }
    out
}

/// End-to-end estimate: per-level chains, telescoped accumulation, then
/// the Gaussian post-filter.  Starved levels surface as warnings on the
/// result.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pipeline<F>(
    matrix: &DesignMatrix,
    target: &SufficientStatistic,
    basis: &MoveBasis,
    start: &FiberPoint,
    schedule: &LevelSchedule,
    statistic: F,
    grid: &Grid,
    kern: &SmoothingKernel,
    sigma_grid: f64,
    seed: u64,
) -> Result<DensityEstimate>
where
    F: FnMut(&FiberPoint) -> Result<f64>,
{
    let config = ChainConfig::new(basis.clone(), start.clone(), 1, seed)
        .with_margin_check(matrix.clone(), target.clone());
    let samples = run_level_samples(schedule, &config, statistic)?;
    let mut estimate = multilevel_density(&samples, grid, kern)?;
    estimate.apply_gaussian(sigma_grid)?;
    Ok(estimate)
}
