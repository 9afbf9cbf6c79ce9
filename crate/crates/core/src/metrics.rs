//! Sample-quality metrics: squared maximum mean discrepancy under the
//! energy-distance kernel, and the Voronoi coverage score with greedy
//! center thinning.

use rayon::prelude::*;

use crate::error::{FiberError, Result};
use crate::fiber::FiberPoint;

/// Points of common dimension stored flat, embedded as reals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    data: Vec<f64>,
    dim: usize,
    len: usize,
}

impl PointSample {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let len = points.len();
        let mut data = Vec::with_capacity(dim * len);
        for p in &points {
            if p.len() != dim {
                return Err(FiberError::DimensionMismatch {
                    context: "point sample",
                    expected: dim,
                    got: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Ok(Self { data, dim, len })
    }

    pub fn from_points(points: &[FiberPoint]) -> Result<Self> {
        let dim = points.first().map_or(0, FiberPoint::len);
        let len = points.len();
        let mut data = Vec::with_capacity(dim * len);
        for p in points {
            if p.len() != dim {
                return Err(FiberError::DimensionMismatch {
                    context: "point sample",
                    expected: dim,
                    got: p.len(),
                });
            }
            data.extend(p.cells().iter().map(|&c| c as f64));
        }
        Ok(Self { data, dim, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// `||x|| + ||y|| - ||x - y||`, the kernel under which squared MMD equals
/// the energy distance.
pub fn energy_kernel(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(FiberError::DimensionMismatch {
            context: "kernel arguments",
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(norm(x) + norm(y) - euclidean(x, y))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Mean pairwise distance over all ordered (i, j) pairs, diagonal
/// included.  Rows are summed with compensation and combined in index
/// order, so the result does not depend on the number of worker threads.
fn mean_pair_distance(a: &PointSample, b: &PointSample) -> f64 {
    let rows: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let p = a.point(i);
            let mut acc = KahanSum::default();
            for q in b.iter() {
                acc.add(euclidean(p, q));
            }
            acc.value()
        })
        .collect();
    let mut total = KahanSum::default();
    for r in rows {
        total.add(r);
    }
    total.value() / (a.len() as f64 * b.len() as f64)
}

fn check_metric_pair(a: &PointSample, b: &PointSample) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(FiberError::Empty("point sample"));
    }
    if a.dim() != b.dim() {
        return Err(FiberError::DimensionMismatch {
            context: "sample pair",
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Squared MMD between two samples under the energy kernel, as the full
/// V-statistic over all index pairs.  For this kernel the three kernel
/// sums reduce algebraically to pairwise distances alone:
/// `2 E||X - Y|| - E||X - X'|| - E||Y - Y'||`.
pub fn mmd2(s1: &PointSample, s2: &PointSample) -> Result<f64> {
    check_metric_pair(s1, s2)?;
    let within_1 = mean_pair_distance(s1, s1);
    let within_2 = mean_pair_distance(s2, s2);
    let cross = mean_pair_distance(s1, s2);
    Ok(2.0 * cross - within_1 - within_2)
}

/// A fixed reference sample with its within-sample distance mean
/// precomputed, for repeated comparisons against many candidates.
#[derive(Debug, Clone)]
pub struct MmdReference {
    sample: PointSample,
    within: f64,
}

impl MmdReference {
    pub fn new(sample: PointSample) -> Result<Self> {
        if sample.is_empty() {
            return Err(FiberError::Empty("point sample"));
        }
        let within = mean_pair_distance(&sample, &sample);
        Ok(Self { sample, within })
    }

    pub fn sample(&self) -> &PointSample {
        &self.sample
    }

    pub fn mmd2_against(&self, other: &PointSample) -> Result<f64> {
        check_metric_pair(other, &self.sample)?;
        let within_other = mean_pair_distance(other, other);
        let cross = mean_pair_distance(other, &self.sample);
        Ok(2.0 * cross - within_other - self.within)
    }
}

/// Pairwise-separated center points partitioning space by nearest
/// distance.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCenterSet {
    centers: Vec<Vec<f64>>,
    min_separation: f64,
}

impl VoronoiCenterSet {
    pub fn new(centers: Vec<Vec<f64>>, min_separation: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(FiberError::Empty("center set"));
        }
        if !min_separation.is_finite() || min_separation < 0.0 {
            return Err(FiberError::InvalidArgument(
                "center separation must be finite and nonnegative".into(),
            ));
        }
        let dim = centers[0].len();
        for c in &centers {
            if c.len() != dim {
                return Err(FiberError::DimensionMismatch {
                    context: "center set",
                    expected: dim,
                    got: c.len(),
                });
            }
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if euclidean(&centers[i], &centers[j]) < min_separation {
                    return Err(FiberError::InvalidArgument(format!(
                        "centers {i} and {j} sit closer than the separation threshold"
                    )));
                }
            }
        }
        Ok(Self {
            centers,
            min_separation,
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }
}

/// Greedy pass in input order keeping each candidate whose distance to
/// every kept center is at least `r`.
pub fn thin_centers(candidates: &[Vec<f64>], r: f64) -> Result<VoronoiCenterSet> {
    if candidates.is_empty() {
        return Err(FiberError::Empty("center candidates"));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(FiberError::InvalidArgument(
            "thinning radius must be finite and nonnegative".into(),
        ));
    }
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for cand in candidates {
        if kept.iter().all(|c| euclidean(c, cand) >= r) {
            kept.push(cand.clone());
        }
    }
    VoronoiCenterSet::new(kept, r)
}

/// Fraction of cells holding at least one sample point; each point joins
/// its nearest center, ties resolved toward the lowest center index.
pub fn fcs(sample: &PointSample, centers: &VoronoiCenterSet) -> Result<f64> {
    if sample.is_empty() {
        return Ok(0.0);
    }
    if sample.dim() != centers.centers()[0].len() {
        return Err(FiberError::DimensionMismatch {
            context: "sample against centers",
            expected: centers.centers()[0].len(),
            got: sample.dim(),
        });
    }
    let mut hit = vec![false; centers.k()];
    for p in sample.iter() {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (k, c) in centers.centers().iter().enumerate() {
            let d = euclidean(p, c);
            if d < best_dist {
                best_dist = d;
                best = k;
            }
        }
        hit[best] = true;
    }
    Ok(hit.iter().filter(|&&h| h).count() as f64 / centers.k() as f64)
}

/// Thins the candidates at each radius and scores the sample against the
/// resulting centers; radii must decrease strictly, so the center counts
/// grow along the sweep.
pub fn fcs_sweep(
    sample: &PointSample,
    candidates: &[Vec<f64>],
    radii: &[f64],
) -> Result<Vec<(usize, f64)>> {
    if radii.is_empty() {
        return Err(FiberError::Empty("radius sweep"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FiberError::InvalidArgument(
            "sweep radii must be strictly decreasing".into(),
        ));
    }
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let centers = thin_centers(candidates, r)?;
        let score = fcs(sample, &centers)?;
        out.push((centers.k(), score));
    }
    Ok(out)
}
