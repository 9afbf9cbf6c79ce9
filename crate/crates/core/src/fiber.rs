//! Design matrices, fiber points, sufficient statistics, expected tables,
//! and the Pearson chi-square statistic.
//!
//! A fiber point is a nonnegative integer table flattened to a vector; the
//! design matrix rows encode which cells each margin sums (entries may be
//! negative for difference-type constraints).  All integer arithmetic is
//! checked: overflow is a reported error, never silent wraparound.

use crate::error::{FiberError, Result};

/// Integer design matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<i64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(FiberError::InvalidArgument(
                "design matrix dimensions must be positive".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(FiberError::DimensionMismatch {
                context: "design matrix entries",
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(FiberError::Empty("design matrix"));
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(FiberError::DimensionMismatch {
                    context: "design matrix row",
                    expected: cols,
                    got: rows[i].len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// Checked matrix-vector product `A v`.  `v` may have negative entries
    /// (moves are multiplied through here as well as fiber points).
    pub fn multiply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(FiberError::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc: i64 = 0;
            for (a, x) in self.row(r).iter().zip(v) {
                let term = a
                    .checked_mul(*x)
                    .ok_or(FiberError::Overflow("margin computation"))?;
                acc = acc
                    .checked_add(term)
                    .ok_or(FiberError::Overflow("margin computation"))?;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Margin vector `b = Ax`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientStatistic {
    values: Vec<i64>,
}

impl SufficientStatistic {
    pub fn new(values: Vec<i64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A nonnegative integer table, flattened.  Constructed only from feasible
/// cell vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiberPoint {
    cells: Vec<i64>,
}

impl FiberPoint {
    pub fn new(cells: Vec<i64>) -> Result<Self> {
        if cells.is_empty() {
            return Err(FiberError::Empty("fiber point"));
        }
        if !is_feasible(&cells) {
            return Err(FiberError::InvalidArgument(
                "fiber point has a negative cell".into(),
            ));
        }
        Ok(Self { cells })
    }

    /// For callers that have already established feasibility (samplers pick
    /// steps inside the feasible range by construction).
    pub(crate) fn from_feasible(cells: Vec<i64>) -> Self {
        debug_assert!(is_feasible(&cells));
        Self { cells }
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| c as f64).collect()
    }
}

/// True when every cell is nonnegative.
pub fn is_feasible(cells: &[i64]) -> bool {
    cells.iter().all(|&c| c >= 0)
}

/// Computes the margin vector `Ax` of a table.
pub fn sufficient_statistic(a: &DesignMatrix, x: &FiberPoint) -> Result<SufficientStatistic> {
    Ok(SufficientStatistic::new(a.multiply(x.cells())?))
}

/// Expected cell counts fitted to a margin vector, with bookkeeping for
/// cells forced to zero by zero margins.
#[derive(Debug, Clone)]
pub struct ExpectedTable {
    cells: Vec<f64>,
    included: Vec<bool>,
    residual: f64,
    warnings: Vec<String>,
}

impl ExpectedTable {
    /// Builds a table directly from strictly positive cells (no exclusions).
    pub fn from_cells(cells: Vec<f64>) -> Result<Self> {
        if cells.is_empty() {
            return Err(FiberError::Empty("expected table"));
        }
        for (i, &e) in cells.iter().enumerate() {
            if !e.is_finite() || e <= 0.0 {
                return Err(FiberError::NonPositiveExpected { cell: i });
            }
        }
        let included = vec![true; cells.len()];
        Ok(Self {
            cells,
            included,
            residual: 0.0,
            warnings: Vec::new(),
        })
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// One cycle's worth of scaling state for `fit_expected_table`.
struct ScalingRow {
    /// (cell index, coefficient) pairs over currently included cells.
    support: Vec<(usize, i64)>,
    target: f64,
}

/// Solves `sum_j a_j e_j t^{a_j} = target` for `t > 0`.  The left side is
/// strictly increasing in `t` whenever the support is nonempty, so a root is
/// bracketed by doubling and closed by bisection.
fn solve_scale(row: &ScalingRow, e: &[f64]) -> Result<f64> {
    let mut pos = 0.0f64; // sum of a_j e_j over a_j > 0
    let mut neg = 0.0f64; // sum of |a_j| e_j over a_j < 0
    let mut pure_unit = true;
    for &(j, a) in &row.support {
        if a > 0 {
            pos += a as f64 * e[j];
            if a != 1 {
                pure_unit = false;
            }
        } else {
            neg += (-a) as f64 * e[j];
            if a != -1 {
                pure_unit = false;
            }
        }
    }
    let b = row.target;
    if pure_unit {
        // Closed forms for the common margin shapes: coefficients in {−1, 1}.
        if neg == 0.0 {
            return Ok(b / pos);
        }
        if pos == 0.0 {
            return Ok(-neg / b);
        }
        // pos * t - neg / t = b
        return Ok((b + (b * b + 4.0 * pos * neg).sqrt()) / (2.0 * pos));
    }

    let f = |t: f64| -> f64 {
        let mut acc = 0.0;
        for &(j, a) in &row.support {
            acc += a as f64 * e[j] * t.powi(a as i32);
        }
        acc - b
    };
    let mut lo = 1.0f64;
    let mut hi = 1.0f64;
    let mut guard = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 300 {
            return Err(FiberError::NonConvergence {
                residual: f64::INFINITY,
                tol: 0.0,
                max_iter: guard,
            });
        }
    }
    guard = 0;
    while f(lo) > 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 300 {
            return Err(FiberError::NonConvergence {
                residual: f64::INFINITY,
                tol: 0.0,
                max_iter: guard,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits expected cell counts to the margin vector by cyclic proportional
/// scaling: each pass makes every margin exact in turn, until the whole
/// residual `max |Ae - b|` drops below `tol`.
///
/// Margins whose coefficients are sign-definite and whose target is zero
/// force their cells to zero; those cells are excluded (with a warning) and
/// skipped by [`chi_square`].  For a two-margin independence model the fit
/// reaches the closed form `e_ij = r_i * c_j / N` after the first pass.
pub fn fit_expected_table(
    a: &DesignMatrix,
    b: &SufficientStatistic,
    tol: f64,
    max_iter: usize,
) -> Result<ExpectedTable> {
    if b.len() != a.rows() {
        return Err(FiberError::DimensionMismatch {
            context: "margin vector",
            expected: a.rows(),
            got: b.len(),
        });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(FiberError::InvalidArgument(
            "fit tolerance must be positive".into(),
        ));
    }
    let n = a.cols();
    let mut included = vec![true; n];
    let mut cells = vec![1.0f64; n];
    let mut warnings = Vec::new();

    // Zero-margin pre-pass.  Excluding cells can empty the positive support
    // of another margin, so iterate to a fixed point.
    loop {
        let mut changed = false;
        for r in 0..a.rows() {
            let row = a.row(r);
            let target = b.values()[r];
            let mut pos = Vec::new();
            let mut has_neg = false;
            let mut has_pos = false;
            for (j, &coef) in row.iter().enumerate() {
                if !included[j] || coef == 0 {
                    continue;
                }
                if coef > 0 {
                    has_pos = true;
                    pos.push(j);
                } else {
                    has_neg = true;
                }
            }
            if !has_neg {
                if target < 0 {
                    return Err(FiberError::InfeasibleMargin { row: r });
                }
                if target == 0 && has_pos {
                    for &j in &pos {
                        included[j] = false;
                        cells[j] = 0.0;
                    }
                    warnings.push(format!(
                        "margin {r} is zero; excluded {} cell(s) from the fit",
                        pos.len()
                    ));
                    changed = true;
                }
            } else if !has_pos && target > 0 {
                return Err(FiberError::InfeasibleMargin { row: r });
            }
        }
        if !changed {
            break;
        }
    }

    let rows: Vec<ScalingRow> = (0..a.rows())
        .map(|r| {
            let support: Vec<(usize, i64)> = a
                .row(r)
                .iter()
                .enumerate()
                .filter(|&(j, &coef)| included[j] && coef != 0)
                .map(|(j, &coef)| (j, coef))
                .collect();
            ScalingRow {
                support,
                target: b.values()[r] as f64,
            }
        })
        .collect();

    for (r, row) in rows.iter().enumerate() {
        if row.support.is_empty() && row.target != 0.0 {
            return Err(FiberError::InfeasibleMargin { row: r });
        }
    }

    let residual_of = |cells: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for r in 0..a.rows() {
            let mut acc = 0.0;
            for (j, &coef) in a.row(r).iter().enumerate() {
                acc += coef as f64 * cells[j];
            }
            worst = worst.max((acc - b.values()[r] as f64).abs());
        }
        worst
    };

    let mut residual = residual_of(&cells);
    let mut iterations = 0usize;
    while residual > tol {
        if iterations == max_iter {
            return Err(FiberError::NonConvergence {
                residual,
                tol,
                max_iter,
            });
        }
        for row in &rows {
            if row.support.is_empty() {
                continue;
            }
            let t = solve_scale(row, &cells)?;
            if !t.is_finite() || t <= 0.0 {
                return Err(FiberError::NonConvergence {
                    residual,
                    tol,
                    max_iter,
                });
            }
            for &(j, coef) in &row.support {
                cells[j] *= t.powi(coef as i32);
            }
        }
        residual = residual_of(&cells);
        iterations += 1;
    }

    Ok(ExpectedTable {
        cells,
        included,
        residual,
        warnings,
    })
}

/// Pearson chi-square `sum (x_i - e_i)^2 / e_i` over included cells.
pub fn chi_square(x: &FiberPoint, expected: &ExpectedTable) -> Result<f64> {
    if x.len() != expected.len() {
        return Err(FiberError::DimensionMismatch {
            context: "chi-square",
            expected: expected.len(),
            got: x.len(),
        });
    }
    let mut acc = 0.0f64;
    for (i, (&xi, &ei)) in x.cells().iter().zip(expected.cells()).enumerate() {
        if !expected.included()[i] {
            continue;
        }
        if !ei.is_finite() || ei <= 0.0 {
            return Err(FiberError::NonPositiveExpected { cell: i });
        }
        let d = xi as f64 - ei;
        acc += d * d / ei;
    }
    Ok(acc)
}
