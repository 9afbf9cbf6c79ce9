//! Exact integer linear algebra: rank and primitive kernel bases via
//! elimination over arbitrary-precision rationals.  Matrices here are tiny
//! (tens of rows), so clarity beats asymptotics.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

use crate::error::{FiberError, Result};

struct Rref {
    cols: usize,
    data: Vec<BigRational>,
    /// pivot column of each nonzero row, in row order
    pivots: Vec<usize>,
}

fn rref(rows: usize, cols: usize, entries: &[i64]) -> Rref {
    let mut data: Vec<BigRational> = entries
        .iter()
        .map(|&v| BigRational::from_integer(BigInt::from(v)))
        .collect();
    let at = |data: &Vec<BigRational>, r: usize, c: usize| data[r * cols + c].clone();
    let mut pivots = Vec::new();
    let mut pivot_row = 0usize;
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        let mut sel = None;
        for r in pivot_row..rows {
            if !data[r * cols + col].is_zero() {
                sel = Some(r);
                break;
            }
        }
        let Some(sel) = sel else { continue };
        if sel != pivot_row {
            for c in 0..cols {
                data.swap(pivot_row * cols + c, sel * cols + c);
            }
        }
        let pivot = at(&data, pivot_row, col);
        for c in col..cols {
            let v = at(&data, pivot_row, c) / pivot.clone();
            data[pivot_row * cols + c] = v;
        }
        for r in 0..rows {
            if r == pivot_row || data[r * cols + col].is_zero() {
                continue;
            }
            let factor = at(&data, r, col);
            for c in col..cols {
                let v = at(&data, r, c) - factor.clone() * at(&data, pivot_row, c);
                data[r * cols + c] = v;
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    Rref { cols, data, pivots }
}

pub(crate) fn rank(rows: usize, cols: usize, entries: &[i64]) -> usize {
    rref(rows, cols, entries).pivots.len()
}

/// Primitive integer kernel basis of the row space: `cols - rank` vectors,
/// each with entry gcd 1 and first nonzero entry positive, ordered by free
/// column.
pub(crate) fn integer_kernel_basis(
    rows: usize,
    cols: usize,
    entries: &[i64],
) -> Result<Vec<Vec<i64>>> {
    let reduced = rref(rows, cols, entries);
    let pivot_set: Vec<usize> = reduced.pivots.clone();
    let is_pivot = {
        let mut mask = vec![false; cols];
        for &c in &pivot_set {
            mask[c] = true;
        }
        mask
    };

    let mut basis = Vec::new();
    for free in 0..cols {
        if is_pivot[free] {
            continue;
        }
        let mut vec_q = vec![BigRational::zero(); cols];
        vec_q[free] = BigRational::one();
        for (row, &pcol) in pivot_set.iter().enumerate() {
            // Row reads x_p + sum_{free f} R[row][f] x_f = 0.
            let coef = reduced.data[row * reduced.cols + free].clone();
            vec_q[pcol] = -coef;
        }
        let mut denom_lcm = BigInt::one();
        for q in &vec_q {
            denom_lcm = denom_lcm.lcm(q.denom());
        }
        let mut ints: Vec<BigInt> = vec_q
            .iter()
            .map(|q| q.numer() * (&denom_lcm / q.denom()))
            .collect();
        let mut g = BigInt::zero();
        for v in &ints {
            g = g.gcd(v);
        }
        if !g.is_zero() && !g.is_one() {
            for v in &mut ints {
                *v = &*v / &g;
            }
        }
        if let Some(first) = ints.iter().find(|v| !v.is_zero()) {
            if first.is_negative() {
                for v in &mut ints {
                    *v = -&*v;
                }
            }
        }
        let mut out = Vec::with_capacity(cols);
        for v in ints {
            let Ok(small) = i64::try_from(&v) else {
                return Err(FiberError::Overflow("kernel basis extraction"));
            };
            out.push(small);
        }
        basis.push(out);
    }
    Ok(basis)
}

/// Rank of a set of integer vectors stacked as rows.
pub(crate) fn rank_of_vectors(vectors: &[Vec<i64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols = vectors[0].len();
    let flat: Vec<i64> = vectors.iter().flatten().copied().collect();
    rank(vectors.len(), cols, &flat)
}
