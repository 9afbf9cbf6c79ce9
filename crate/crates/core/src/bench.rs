//! Bundled benchmark fibers and exact desk-scale oracles.
//!
//! Three instances ship with the crate:
//!
//! - `jobsat4x4`: a 4x4 two-margin (independence) table whose fiber has
//!   exactly 185,227,230 points;
//! - `no3factor225`: a 2x2x5 no-three-factor-interaction table with 570
//!   observations and a ten-move Markov basis;
//! - `hemmecke(k)`: a block design whose fiber points all have entries in
//!   {0, 1}, so every move scaled by two or more is infeasible.
//!
//! The oracles ([`enumerate_fiber`], [`count_fiber`], [`exact_distribution`])
//! are deliberately independent of the samplers: bounded depth-first search
//! with interval pruning, and a memoized margin-state recursion for
//! two-margin tables.  They exist to pin down ground truth on instances
//! small enough to check exhaustively.

use std::collections::{HashMap, VecDeque};

use statrs::function::factorial::ln_factorial;

use crate::error::{FiberError, Result};
use crate::fiber::{sufficient_statistic, DesignMatrix, FiberPoint, SufficientStatistic};
use crate::moves::{basic_moves_independence, basic_moves_no3factor, lattice_basis, MoveBasis};

/// A bundled fiber problem: matrix, margins, a feasible starting table, and
/// whatever bases are known for it.
#[derive(Debug, Clone)]
pub struct FiberInstance {
    pub name: String,
    pub matrix: DesignMatrix,
    pub target: SufficientStatistic,
    pub start: FiberPoint,
    /// Present when the connecting basis of the model is known.
    pub markov_basis: Option<MoveBasis>,
    pub lattice_basis: MoveBasis,
    pub known_count: Option<u128>,
}

impl FiberInstance {
    fn build(
        name: &str,
        matrix: DesignMatrix,
        start: Vec<i64>,
        markov_basis: Option<MoveBasis>,
        known_count: Option<u128>,
    ) -> Result<Self> {
        let start = FiberPoint::new(start)?;
        let target = sufficient_statistic(&matrix, &start)?;
        let lattice = lattice_basis(&matrix)?;
        Ok(Self {
            name: name.to_string(),
            matrix,
            target,
            start,
            markov_basis,
            lattice_basis: lattice,
            known_count,
        })
    }

    /// The basis a walk should use: the Markov basis when the model has
    /// one, otherwise the lattice basis.
    pub fn walk_basis(&self) -> &MoveBasis {
        self.markov_basis.as_ref().unwrap_or(&self.lattice_basis)
    }
}

/// Design matrix of the r x c independence model: r row margins then c
/// column margins, cells flattened row-major.
pub fn independence_design(r: usize, c: usize) -> DesignMatrix {
    let n = r * c;
    let mut entries = vec![0i64; (r + c) * n];
    for i in 0..r {
        for j in 0..c {
            entries[i * n + i * c + j] = 1;
        }
    }
    for j in 0..c {
        for i in 0..r {
            entries[(r + j) * n + i * c + j] = 1;
        }
    }
    DesignMatrix::new(r + c, n, entries).expect("independence design dimensions")
}

/// Design matrix of the 2x2xK no-three-factor-interaction model, cells
/// flattened `(x, y, z) -> 4z + 2(y-1) + (x-1)`: four XY-pair margins
/// summed over z, then per-level pair margins in two sweeps.
pub fn no3factor_design(levels: usize) -> DesignMatrix {
    let n = 4 * levels;
    let rows = 4 + 4 * levels;
    let mut entries = vec![0i64; rows * n];
    for w in 0..4 {
        for z in 0..levels {
            entries[w * n + 4 * z + w] = 1;
        }
    }
    for z in 0..levels {
        for b in 0..2 {
            let row = 4 + 2 * z + b;
            entries[row * n + 4 * z + 2 * b] = 1;
            entries[row * n + 4 * z + 2 * b + 1] = 1;
        }
    }
    for a in 0..2 {
        for z in 0..levels {
            let row = 4 + 2 * levels + a * levels + z;
            entries[row * n + 4 * z + a] = 1;
            entries[row * n + 4 * z + 2 + a] = 1;
        }
    }
    DesignMatrix::new(rows, n, entries).expect("no3factor design dimensions")
}

/// Block design with unit-entry fibers: rows `x_i + x_{k+i} - x_{4k} = 0`
/// and `x_{2k+i} + x_{3k+i} - x_{4k+1} = 0` for each `i`, plus
/// `x_{4k} + x_{4k+1} = 1`.
pub fn hemmecke_design(k: usize) -> DesignMatrix {
    assert!(k >= 1, "block design needs k >= 1");
    let n = 4 * k + 2;
    let rows = 2 * k + 1;
    let mut entries = vec![0i64; rows * n];
    for i in 0..k {
        entries[i * n + i] = 1;
        entries[i * n + k + i] = 1;
        entries[i * n + 4 * k] = -1;
        entries[(k + i) * n + 2 * k + i] = 1;
        entries[(k + i) * n + 3 * k + i] = 1;
        entries[(k + i) * n + 4 * k + 1] = -1;
    }
    entries[(2 * k) * n + 4 * k] = 1;
    entries[(2 * k) * n + 4 * k + 1] = 1;
    DesignMatrix::new(rows, n, entries).expect("block design dimensions")
}

/// Synthetic 4x4 job-satisfaction survey table (110 respondents).
pub fn jobsat_4x4() -> Result<FiberInstance> {
    let start = vec![10, 0, 0, 2, 0, 3, 0, 40, 10, 0, 2, 0, 0, 3, 40, 0];
    FiberInstance::build(
        "jobsat4x4",
        independence_design(4, 4),
        start,
        Some(basic_moves_independence(4, 4)?),
        Some(185_227_230),
    )
}

/// 2x2x5 no-three-factor-interaction table with 570 observations.
pub fn no3factor_2x2x5() -> Result<FiberInstance> {
    let start = vec![
        39, 23, 27, 23, 25, 31, 28, 25, 42, 32, 34, 28, 33, 21, 24, 27, 26, 23, 27, 32,
    ];
    FiberInstance::build(
        "no3factor225",
        no3factor_design(5),
        start,
        Some(basic_moves_no3factor(5)?),
        None,
    )
}

/// Block-design fiber of size parameter `k`; all fiber points have entries
/// in {0, 1}.  For `k = 1` the fiber has exactly 4 points.
pub fn hemmecke(k: usize) -> Result<FiberInstance> {
    if k < 1 {
        return Err(FiberError::InvalidArgument(
            "block design needs k >= 1".into(),
        ));
    }
    let n = 4 * k + 2;
    let mut start = vec![0i64; n];
    for i in 0..k {
        start[k + i] = 1;
    }
    start[4 * k] = 1;
    let known = if k == 1 { Some(4) } else { None };
    FiberInstance::build(&format!("hemmecke{k}"), hemmecke_design(k), start, None, known)
}

fn floor_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    -((-a).div_euclid(b))
}

/// Per-cell upper bounds by interval propagation: each margin row bounds a
/// cell once the other cells' extremes are known.  Returns `Ok(None)` when
/// the bounds prove the fiber empty.
fn cell_upper_bounds(a: &DesignMatrix, b: &[i64]) -> Result<Option<Vec<i64>>> {
    let n = a.cols();
    let mut upper: Vec<Option<i128>> = vec![None; n];
    let passes = 2 * n + 2;
    for _ in 0..passes {
        let mut changed = false;
        for (r, &target) in b.iter().enumerate() {
            let row = a.row(r);
            let target = target as i128;
            for j in 0..n {
                let coef = row[j] as i128;
                if coef == 0 {
                    continue;
                }
                // Contribution extremes of the other cells in this row: a
                // positive-coefficient cell contributes at least 0, a
                // negative one at most 0, so each extreme only needs the
                // upper bounds of cells with the matching sign.
                let mut rest_min: i128 = 0;
                let mut rest_min_known = true;
                let mut rest_max: i128 = 0;
                let mut rest_max_known = true;
                for (j2, &c2) in row.iter().enumerate() {
                    if j2 == j || c2 == 0 {
                        continue;
                    }
                    let c2 = c2 as i128;
                    if c2 > 0 {
                        match upper[j2] {
                            Some(u) => rest_max += c2 * u,
                            None => rest_max_known = false,
                        }
                    } else {
                        match upper[j2] {
                            Some(u) => rest_min += c2 * u,
                            None => rest_min_known = false,
                        }
                    }
                }
                let bound = if coef > 0 {
                    // coef * x <= target - rest_min
                    if !rest_min_known {
                        continue;
                    }
                    floor_div(target - rest_min, coef)
                } else {
                    // -coef * x <= rest_max - target
                    if !rest_max_known {
                        continue;
                    }
                    floor_div(rest_max - target, -coef)
                };
                if bound < 0 {
                    return Ok(None);
                }
                if upper[j].is_none_or(|u| bound < u) {
                    upper[j] = Some(bound);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (j, u) in upper.iter().enumerate() {
        match u {
            Some(v) => out.push(
                i64::try_from(*v).map_err(|_| FiberError::Overflow("cell bound computation"))?,
            ),
            None => return Err(FiberError::Unbounded { col: j }),
        }
    }
    Ok(Some(out))
}

struct FiberSearch<'a> {
    a: &'a DesignMatrix,
    upper: Vec<i64>,
    /// suffix_min[r][i] / suffix_max[r][i]: achievable range of
    /// `sum_{j >= i} a_rj x_j` given the cell bounds
    suffix_min: Vec<Vec<i128>>,
    suffix_max: Vec<Vec<i128>>,
    col_rows: Vec<Vec<(usize, i128)>>,
    nodes: u64,
    node_budget: u64,
}

enum Visit<'p> {
    Point(&'p [i64]),
}

impl<'a> FiberSearch<'a> {
    fn new(a: &'a DesignMatrix, upper: Vec<i64>, node_budget: u64) -> Result<Self> {
        let n = a.cols();
        let d = a.rows();
        let mut suffix_min = vec![vec![0i128; n + 1]; d];
        let mut suffix_max = vec![vec![0i128; n + 1]; d];
        for r in 0..d {
            for i in (0..n).rev() {
                let coef = a.entry(r, i) as i128;
                let u = upper[i] as i128;
                let (lo, hi) = if coef >= 0 {
                    (0, coef.checked_mul(u).ok_or(FiberError::Overflow("search bound"))?)
                } else {
                    (coef.checked_mul(u).ok_or(FiberError::Overflow("search bound"))?, 0)
                };
                suffix_min[r][i] = suffix_min[r][i + 1] + lo;
                suffix_max[r][i] = suffix_max[r][i + 1] + hi;
            }
        }
        let mut col_rows = vec![Vec::new(); n];
        for r in 0..d {
            for (j, &coef) in a.row(r).iter().enumerate() {
                if coef != 0 {
                    col_rows[j].push((r, coef as i128));
                }
            }
        }
        Ok(Self {
            a,
            upper,
            suffix_min,
            suffix_max,
            col_rows,
            nodes: 0,
            node_budget,
        })
    }

    fn run(
        &mut self,
        b: &[i64],
        mut visit: impl FnMut(Visit<'_>) -> Result<()>,
    ) -> Result<()> {
        let n = self.a.cols();
        let mut residual: Vec<i128> = b.iter().map(|&v| v as i128).collect();
        let mut cells = vec![0i64; n];
        self.dfs(0, &mut residual, &mut cells, &mut visit)
    }

    fn dfs(
        &mut self,
        i: usize,
        residual: &mut [i128],
        cells: &mut Vec<i64>,
        visit: &mut impl FnMut(Visit<'_>) -> Result<()>,
    ) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Err(FiberError::TooLarge {
                budget: self.node_budget,
            });
        }
        for (r, res) in residual.iter().enumerate() {
            if *res < self.suffix_min[r][i] || *res > self.suffix_max[r][i] {
                return Ok(());
            }
        }
        let n = self.a.cols();
        if i == n {
            // suffix ranges at depth n are [0, 0], so residuals are zero here
            return visit(Visit::Point(cells));
        }
        let mut lo: i128 = 0;
        let mut hi: i128 = self.upper[i] as i128;
        for &(r, coef) in &self.col_rows[i] {
            let m = self.suffix_min[r][i + 1];
            let big = self.suffix_max[r][i + 1];
            let res = residual[r];
            if coef > 0 {
                lo = lo.max(ceil_div(res - big, coef));
                hi = hi.min(floor_div(res - m, coef));
            } else {
                let p = -coef;
                lo = lo.max(ceil_div(m - res, p));
                hi = hi.min(floor_div(big - res, p));
            }
            if lo > hi {
                return Ok(());
            }
        }
        for v in lo..=hi {
            for &(r, coef) in &self.col_rows[i] {
                residual[r] -= coef * v;
            }
            cells[i] = v as i64;
            self.dfs(i + 1, residual, cells, visit)?;
            for &(r, coef) in &self.col_rows[i] {
                residual[r] += coef * v;
            }
        }
        cells[i] = 0;
        Ok(())
    }
}

const COUNT_NODE_BUDGET: u64 = 200_000_000;

/// Enumerates the whole fiber in lexicographic cell order, up to `cap`
/// points.  Infeasible margins yield an empty list; exceeding the cap or an
/// unbounded coordinate is an error.
pub fn enumerate_fiber(
    a: &DesignMatrix,
    b: &SufficientStatistic,
    cap: usize,
) -> Result<Vec<FiberPoint>> {
    if b.len() != a.rows() {
        return Err(FiberError::DimensionMismatch {
            context: "margin vector",
            expected: a.rows(),
            got: b.len(),
        });
    }
    if cap == 0 {
        return Err(FiberError::InvalidArgument("cap must be positive".into()));
    }
    let Some(upper) = cell_upper_bounds(a, b.values())? else {
        return Ok(Vec::new());
    };
    let mut search = FiberSearch::new(a, upper, u64::MAX)?;
    let mut out: Vec<FiberPoint> = Vec::new();
    let result = search.run(b.values(), |Visit::Point(cells)| {
        if out.len() == cap {
            return Err(FiberError::CapExceeded {
                cap,
                seen: cap + 1,
            });
        }
        out.push(FiberPoint::new(cells.to_vec())?);
        Ok(())
    });
    result.map(|()| out)
}

/// True two-margin shape behind `a`, if `a` is exactly an independence
/// design for some r x c split.
pub fn detect_two_margin(a: &DesignMatrix) -> Option<(usize, usize)> {
    let d = a.rows();
    let n = a.cols();
    for r in 1..d {
        let c = d - r;
        if r * c == n && independence_design(r, c) == *a {
            return Some((r, c));
        }
    }
    None
}

/// Number of ways to write `total` as an ordered sum of `bounds.len()`
/// nonnegative parts with `part_j <= bounds[j]`.
fn bounded_compositions(total: i64, bounds: &[i64]) -> u128 {
    if total < 0 {
        return 0;
    }
    let total = total as usize;
    let mut dp = vec![0u128; total + 1];
    dp[0] = 1;
    for &b in bounds {
        let b = b.max(0) as usize;
        let mut next = vec![0u128; total + 1];
        for s in 0..=total {
            if dp[s] == 0 {
                continue;
            }
            let top = b.min(total - s);
            for v in 0..=top {
                next[s + v] += dp[s];
            }
        }
        dp = next;
    }
    dp[total]
}

/// Exact count of R x C nonnegative integer tables with the given row and
/// column sums, by recursion over rows with memoized remaining-column-sum
/// states (columns are interchangeable once sorted).
pub fn count_two_margin(row_sums: &[i64], col_sums: &[i64]) -> Result<u128> {
    if row_sums.is_empty() || col_sums.is_empty() {
        return Err(FiberError::Empty("margin vector"));
    }
    if row_sums.iter().any(|&v| v < 0) || col_sums.iter().any(|&v| v < 0) {
        return Ok(0);
    }
    let total_r: i64 = row_sums.iter().sum();
    let total_c: i64 = col_sums.iter().sum();
    if total_r != total_c {
        return Ok(0);
    }
    // Ascending rows leave the largest for the final, fully determined row.
    let mut rows: Vec<i64> = row_sums.to_vec();
    rows.sort_unstable();
    let mut cols: Vec<i64> = col_sums.to_vec();
    cols.sort_unstable_by(|x, y| y.cmp(x));

    struct Counter {
        rows: Vec<i64>,
        memo: HashMap<(usize, Vec<i64>), u128>,
    }

    impl Counter {
        fn count(&mut self, level: usize, cols: &[i64]) -> u128 {
            let last = self.rows.len() - 1;
            if level == last {
                return 1;
            }
            if level + 1 == last {
                return bounded_compositions(self.rows[level], cols);
            }
            let key = (level, cols.to_vec());
            if let Some(&seen) = self.memo.get(&key) {
                return seen;
            }
            let target = self.rows[level];
            let mut acc = 0u128;
            let mut parts = vec![0i64; cols.len()];
            acc += self.emit(level, target, 0, cols, &mut parts);
            self.memo.insert(key, acc);
            acc
        }

        /// Walks compositions of `remaining` over columns `idx..`, recursing
        /// into the next row for each complete assignment.
        fn emit(
            &mut self,
            level: usize,
            remaining: i64,
            idx: usize,
            cols: &[i64],
            parts: &mut Vec<i64>,
        ) -> u128 {
            if idx == cols.len() {
                if remaining != 0 {
                    return 0;
                }
                let mut next: Vec<i64> = cols.iter().zip(parts.iter()).map(|(c, p)| c - p).collect();
                next.sort_unstable_by(|x, y| y.cmp(x));
                return self.count(level + 1, &next);
            }
            let tail: i64 = cols[idx + 1..].iter().sum();
            let lo = (remaining - tail).max(0);
            let hi = cols[idx].min(remaining);
            let mut acc = 0u128;
            for v in lo..=hi {
                parts[idx] = v;
                acc += self.emit(level, remaining - v, idx + 1, cols, parts);
            }
            parts[idx] = 0;
            acc
        }
    }

    if rows.len() == 1 {
        return Ok(1);
    }
    let mut counter = Counter {
        rows,
        memo: HashMap::new(),
    };
    let cols_clone = cols.clone();
    Ok(counter.count(0, &cols_clone))
}

/// Exact fiber count: the two-margin recursion when `a` is an independence
/// design, otherwise a budgeted depth-first count.
pub fn count_fiber(a: &DesignMatrix, b: &SufficientStatistic) -> Result<u128> {
    if b.len() != a.rows() {
        return Err(FiberError::DimensionMismatch {
            context: "margin vector",
            expected: a.rows(),
            got: b.len(),
        });
    }
    if let Some((r, _)) = detect_two_margin(a) {
        return count_two_margin(&b.values()[..r], &b.values()[r..]);
    }
    let Some(upper) = cell_upper_bounds(a, b.values())? else {
        return Ok(0);
    };
    let mut search = FiberSearch::new(a, upper, COUNT_NODE_BUDGET)?;
    let mut count: u128 = 0;
    search.run(b.values(), |Visit::Point(_)| {
        count += 1;
        Ok(())
    })?;
    Ok(count)
}

/// Target laws for exact per-point probabilities on an enumerated fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLaw {
    Uniform,
    /// `P(x)` proportional to `prod_i 1 / x_i!`.
    Hypergeometric,
}

/// Exact distribution over an enumerated fiber, normalized in log space.
pub fn exact_distribution(points: &[FiberPoint], law: TargetLaw) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(FiberError::Empty("fiber enumeration"));
    }
    match law {
        TargetLaw::Uniform => {
            let p = 1.0 / points.len() as f64;
            Ok(vec![p; points.len()])
        }
        TargetLaw::Hypergeometric => {
            let logw: Vec<f64> = points
                .iter()
                .map(|pt| -pt.cells().iter().map(|&c| ln_factorial(c as u64)).sum::<f64>())
                .collect();
            let peak = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logw.iter().map(|&l| (l - peak).exp()).collect();
            let total: f64 = weights.iter().sum();
            Ok(weights.into_iter().map(|w| w / total).collect())
        }
    }
}

/// Number of enumerated points reachable from `start` by single moves of
/// the basis (both signs) without leaving the fiber.  A Markov basis
/// reaches everything; a lattice basis may not.
pub fn reachable_from(
    points: &[FiberPoint],
    start: &FiberPoint,
    basis: &MoveBasis,
) -> Result<usize> {
    let index: HashMap<&[i64], usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.cells(), i))
        .collect();
    let Some(&start_idx) = index.get(start.cells()) else {
        return Err(FiberError::InvalidArgument(
            "start point is not among the enumerated points".into(),
        ));
    };
    let mut seen = vec![false; points.len()];
    seen[start_idx] = true;
    let mut queue = VecDeque::from([start_idx]);
    let mut reached = 1usize;
    while let Some(cur) = queue.pop_front() {
        for mv in basis.moves() {
            for sign in [1i64, -1] {
                let cells: Vec<i64> = points[cur]
                    .cells()
                    .iter()
                    .zip(mv.delta())
                    .map(|(&x, &d)| x + sign * d)
                    .collect();
                if cells.iter().any(|&c| c < 0) {
                    continue;
                }
                if let Some(&next) = index.get(cells.as_slice()) {
                    if !seen[next] {
                        seen[next] = true;
                        reached += 1;
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    Ok(reached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moves::validate_basis;

    #[test]
    fn instance_margins_match_their_start_tables() {
        let job = jobsat_4x4().unwrap();
        assert_eq!(job.target.values(), &[12, 43, 12, 43, 20, 6, 42, 42]);
        assert_eq!(job.lattice_basis.len(), 9);
        assert_eq!(job.markov_basis.as_ref().unwrap().len(), 36);

        let no3 = no3factor_2x2x5().unwrap();
        let total: i64 = no3.start.cells().iter().sum();
        assert_eq!(total, 570);
        assert_eq!(no3.markov_basis.as_ref().unwrap().len(), 10);
        assert_eq!(no3.matrix.rows(), 24);
        assert_eq!(no3.matrix.cols(), 20);

        let hem = hemmecke(5).unwrap();
        assert_eq!(hem.matrix.rows(), 11);
        assert_eq!(hem.matrix.cols(), 22);
        assert_eq!(hem.lattice_basis.len(), 11);
        let s = sufficient_statistic(&hem.matrix, &hem.start).unwrap();
        let mut want = [0i64; 11];
        want[10] = 1;
        assert_eq!(s.values(), &want);
    }

    #[test]
    fn bundled_bases_validate_against_their_matrices() {
        for inst in [jobsat_4x4().unwrap(), no3factor_2x2x5().unwrap()] {
            let report = validate_basis(&inst.matrix, inst.markov_basis.as_ref().unwrap()).unwrap();
            assert!(report.checks.iter().all(|c| c.residual_linf == 0));
        }
        for inst in [
            jobsat_4x4().unwrap(),
            no3factor_2x2x5().unwrap(),
            hemmecke(1).unwrap(),
            hemmecke(5).unwrap(),
        ] {
            let report = validate_basis(&inst.matrix, &inst.lattice_basis).unwrap();
            assert_eq!(report.rank_ok, Some(true), "{}", inst.name);
        }
    }

    #[test]
    fn enumerates_the_two_point_fiber() {
        let a = independence_design(2, 2);
        let b = SufficientStatistic::new(vec![1, 1, 1, 1]);
        let points = enumerate_fiber(&a, &b, 100).unwrap();
        let cells: Vec<&[i64]> = points.iter().map(|p| p.cells()).collect();
        assert_eq!(cells, vec![&[0, 1, 1, 0][..], &[1, 0, 0, 1][..]]);
    }

    #[test]
    fn enumeration_is_lexicographic_and_capped() {
        let a = independence_design(2, 2);
        let b = SufficientStatistic::new(vec![2, 2, 2, 2]);
        let points = enumerate_fiber(&a, &b, 100).unwrap();
        assert_eq!(points.len(), 3);
        for w in points.windows(2) {
            assert!(w[0].cells() < w[1].cells());
        }
        assert!(matches!(
            enumerate_fiber(&a, &b, 2),
            Err(FiberError::CapExceeded { cap: 2, seen: 3 })
        ));
    }

    #[test]
    fn infeasible_margins_enumerate_to_nothing() {
        let a = independence_design(2, 2);
        let b = SufficientStatistic::new(vec![-1, 1, 0, 0]);
        assert!(enumerate_fiber(&a, &b, 10).unwrap().is_empty());
        // Row and column totals disagree.
        let b = SufficientStatistic::new(vec![2, 2, 1, 1]);
        assert!(enumerate_fiber(&a, &b, 10).unwrap().is_empty());
    }

    #[test]
    fn unbounded_fibers_are_refused() {
        // Single row x0 - x1 = 0 leaves the diagonal unbounded.
        let a = DesignMatrix::new(1, 2, vec![1, -1]).unwrap();
        let b = SufficientStatistic::new(vec![0]);
        assert!(matches!(
            enumerate_fiber(&a, &b, 10),
            Err(FiberError::Unbounded { .. })
        ));
    }

    #[test]
    fn block_fiber_k1_has_exactly_four_points() {
        let inst = hemmecke(1).unwrap();
        let points = enumerate_fiber(&inst.matrix, &inst.target, 100).unwrap();
        assert_eq!(points.len(), 4);
        assert!(points.iter().any(|p| p.cells() == inst.start.cells()));
        for p in &points {
            assert!(p.cells().iter().all(|&c| c == 0 || c == 1));
        }
    }

    #[test]
    fn counting_agrees_with_enumeration_on_random_margins() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let r = rng.gen_range(2..4usize);
            let c = rng.gen_range(2..5usize);
            let cells: Vec<i64> = (0..r * c).map(|_| rng.gen_range(0..4i64)).collect();
            let a = independence_design(r, c);
            let x = FiberPoint::new(cells).unwrap();
            let b = sufficient_statistic(&a, &x).unwrap();
            let listed = enumerate_fiber(&a, &b, 1_000_000).unwrap();
            let counted = count_fiber(&a, &b).unwrap();
            assert_eq!(listed.len() as u128, counted);
        }
    }

    #[test]
    fn counts_trivial_and_tiny_fibers() {
        assert_eq!(count_two_margin(&[5], &[2, 3, 0]).unwrap(), 1);
        assert_eq!(count_two_margin(&[1, 1], &[1, 1]).unwrap(), 2);
        assert_eq!(count_two_margin(&[2, 2], &[2, 2]).unwrap(), 3);
        assert_eq!(count_two_margin(&[2, 2], &[3, 2]).unwrap(), 0);

        // 1 x n via the full matrix path.
        let a = independence_design(1, 3);
        let b = SufficientStatistic::new(vec![5, 2, 3, 0]);
        assert_eq!(count_fiber(&a, &b).unwrap(), 1);
    }

    #[test]
    fn three_by_three_doubly_balanced_fiber_has_55_points() {
        let a = independence_design(3, 3);
        let b = SufficientStatistic::new(vec![3; 6]);
        let points = enumerate_fiber(&a, &b, 10_000).unwrap();
        assert_eq!(points.len(), 55);
        assert_eq!(count_fiber(&a, &b).unwrap(), 55);
    }

    #[test]
    fn block_fiber_count_uses_search_path() {
        let inst = hemmecke(1).unwrap();
        assert_eq!(count_fiber(&inst.matrix, &inst.target).unwrap(), 4);
        assert!(detect_two_margin(&inst.matrix).is_none());
    }

    #[test]
    fn exact_distributions_normalize() {
        let a = independence_design(2, 2);
        let b = SufficientStatistic::new(vec![1, 1, 1, 1]);
        let points = enumerate_fiber(&a, &b, 10).unwrap();
        let uniform = exact_distribution(&points, TargetLaw::Uniform).unwrap();
        assert_eq!(uniform, vec![0.5, 0.5]);
        let hyper = exact_distribution(&points, TargetLaw::Hypergeometric).unwrap();
        // both points are 0/1 tables, so the weights tie
        assert!((hyper[0] - 0.5).abs() < 1e-15);
        assert!((hyper.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hypergeometric_favors_spread_tables() {
        let a = independence_design(2, 2);
        let b = SufficientStatistic::new(vec![2, 2, 2, 2]);
        let points = enumerate_fiber(&a, &b, 10).unwrap();
        let probs = exact_distribution(&points, TargetLaw::Hypergeometric).unwrap();
        let ones_idx = points
            .iter()
            .position(|p| p.cells() == [1, 1, 1, 1])
            .unwrap();
        // 1/(1!)^4 = 1 against 1/(2!2!) = 1/4 for each diagonal table
        assert!((probs[ones_idx] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn markov_moves_connect_small_independence_fibers() {
        let a = independence_design(3, 3);
        let b = SufficientStatistic::new(vec![3; 6]);
        let points = enumerate_fiber(&a, &b, 10_000).unwrap();
        let basis = basic_moves_independence(3, 3).unwrap();
        let reached = reachable_from(&points, &points[0], &basis).unwrap();
        assert_eq!(reached, points.len());
    }

    #[test]
    fn lattice_reachability_on_block_fiber_is_reported() {
        // The lattice walk may or may not connect this fiber; record the
        // answer rather than asserting it.
        let inst = hemmecke(1).unwrap();
        let points = enumerate_fiber(&inst.matrix, &inst.target, 100).unwrap();
        let reached = reachable_from(&points, &inst.start, &inst.lattice_basis).unwrap();
        println!(
            "lattice basis reaches {reached} of {} block-fiber points",
            points.len()
        );
        assert!(reached >= 1);
    }
}
