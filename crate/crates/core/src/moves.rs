//! Move bases for fiber walks.
//!
//! A move is a nonzero integer vector in the kernel of the design matrix:
//! adding it to a table changes cells but not margins.  A *Markov* basis
//! connects every fiber of its model; a *lattice* basis merely spans the
//! kernel as a linear space (`n - rank(A)` vectors) and may disconnect
//! fibers when restricted to nonnegative tables.  Bases are generated from
//! the known combinatorial form of a model, computed from the matrix, or
//! loaded from files in the shared text format.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{FiberError, Result};
use crate::fiber::DesignMatrix;
use crate::linalg;
use crate::textio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Markov,
    Lattice,
    Custom,
}

/// A single move: its cell deltas and the (precomputed) support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    delta: Vec<i64>,
    support: Vec<usize>,
}

impl Move {
    pub fn new(delta: Vec<i64>) -> Result<Self> {
        let support: Vec<usize> = delta
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0)
            .map(|(i, _)| i)
            .collect();
        if support.is_empty() {
            return Err(FiberError::InvalidBasis("zero vector is not a move".into()));
        }
        Ok(Self { delta, support })
    }

    pub fn delta(&self) -> &[i64] {
        &self.delta
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

/// Sign-canonical copy used for duplicate detection: first nonzero positive.
fn canonical(delta: &[i64]) -> Vec<i64> {
    match delta.iter().find(|&&d| d != 0) {
        Some(&d) if d < 0 => delta.iter().map(|&x| -x).collect(),
        _ => delta.to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct MoveBasis {
    moves: Vec<Move>,
    kind: BasisKind,
}

impl MoveBasis {
    /// A basis may be empty (a full-rank matrix has an empty kernel), but
    /// duplicate moves, even up to sign, are rejected.
    pub fn new(moves: Vec<Move>, kind: BasisKind) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, mv) in moves.iter().enumerate() {
            if !seen.insert(canonical(mv.delta())) {
                return Err(FiberError::InvalidBasis(format!(
                    "move {i} duplicates an earlier move (up to sign)"
                )));
            }
        }
        Ok(Self { moves, kind })
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

/// Outcome of validating one move (residual is always exactly zero for a
/// basis that passes).
#[derive(Debug, Clone)]
pub struct MoveCheck {
    pub index: usize,
    pub residual_linf: i64,
}

#[derive(Debug, Clone)]
pub struct BasisValidation {
    pub checks: Vec<MoveCheck>,
    pub matrix_rank: usize,
    pub kernel_dim: usize,
    /// Rank of the move set, computed for lattice bases only.
    pub span_rank: Option<usize>,
    /// Whether a lattice basis spans the whole kernel.
    pub rank_ok: Option<bool>,
}

/// Checks every move against the design matrix.  A nonzero kernel residual
/// is an error naming the offending move; for lattice bases the report also
/// records whether the span has full kernel rank.
pub fn validate_basis(a: &DesignMatrix, basis: &MoveBasis) -> Result<BasisValidation> {
    let mut checks = Vec::with_capacity(basis.len());
    for (i, mv) in basis.moves().iter().enumerate() {
        if mv.len() != a.cols() {
            return Err(FiberError::DimensionMismatch {
                context: "move length",
                expected: a.cols(),
                got: mv.len(),
            });
        }
        let residual = a.multiply(mv.delta())?;
        let linf = residual.iter().map(|&v| v.abs()).max().unwrap_or(0);
        if linf != 0 {
            return Err(FiberError::InvalidBasis(format!(
                "move {i} is not in the kernel: margin residual {linf}"
            )));
        }
        checks.push(MoveCheck {
            index: i,
            residual_linf: linf,
        });
    }
    let matrix_rank = linalg::rank(a.rows(), a.cols(), a.entries());
    let kernel_dim = a.cols() - matrix_rank;
    let (span_rank, rank_ok) = if basis.kind() == BasisKind::Lattice {
        let vectors: Vec<Vec<i64>> = basis.moves().iter().map(|m| m.delta().to_vec()).collect();
        let span = linalg::rank_of_vectors(&vectors);
        (Some(span), Some(span == kernel_dim))
    } else {
        (None, None)
    };
    Ok(BasisValidation {
        checks,
        matrix_rank,
        kernel_dim,
        span_rank,
        rank_ok,
    })
}

/// Lattice basis of the integer kernel of `A`: `n - rank(A)` primitive
/// vectors (entry gcd 1, first nonzero positive) from exact elimination.
pub fn lattice_basis(a: &DesignMatrix) -> Result<MoveBasis> {
    let vectors = linalg::integer_kernel_basis(a.rows(), a.cols(), a.entries())?;
    let moves: Result<Vec<Move>> = vectors.into_iter().map(Move::new).collect();
    MoveBasis::new(moves?, BasisKind::Lattice)
}

/// The Markov basis of the r x c independence model: one basic move per
/// pair of rows and pair of columns, `C(r,2) * C(c,2)` in all.  Cells are
/// flattened row-major, `(i, j) -> i*c + j`.
pub fn basic_moves_independence(r: usize, c: usize) -> Result<MoveBasis> {
    if r < 2 || c < 2 {
        return Err(FiberError::InvalidArgument(
            "independence moves need at least a 2x2 table".into(),
        ));
    }
    let mut moves = Vec::with_capacity(r * (r - 1) * c * (c - 1) / 4);
    for i1 in 0..r {
        for i2 in (i1 + 1)..r {
            for j1 in 0..c {
                for j2 in (j1 + 1)..c {
                    let mut delta = vec![0i64; r * c];
                    delta[i1 * c + j1] = 1;
                    delta[i1 * c + j2] = -1;
                    delta[i2 * c + j1] = -1;
                    delta[i2 * c + j2] = 1;
                    moves.push(Move::new(delta)?);
                }
            }
        }
    }
    MoveBasis::new(moves, BasisKind::Markov)
}

/// The Markov basis of the 2x2xK no-three-factor-interaction model: one
/// move per pair of levels of the third variable, `C(K,2)` in all, each
/// with eight +-1 cells.  Cells are flattened `(x, y, z) -> 4z + 2(y-1) +
/// (x-1)` to match the bundled design matrix.
pub fn basic_moves_no3factor(levels: usize) -> Result<MoveBasis> {
    if levels < 2 {
        return Err(FiberError::InvalidArgument(
            "no-three-factor moves need at least two levels".into(),
        ));
    }
    // Sign pattern over one 2x2 slice, in cell order (1,1), (2,1), (1,2), (2,2).
    const SLICE: [i64; 4] = [1, -1, -1, 1];
    let mut moves = Vec::with_capacity(levels * (levels - 1) / 2);
    for z1 in 0..levels {
        for z2 in (z1 + 1)..levels {
            let mut delta = vec![0i64; 4 * levels];
            for (w, &s) in SLICE.iter().enumerate() {
                delta[4 * z1 + w] = s;
                delta[4 * z2 + w] = -s;
            }
            moves.push(Move::new(delta)?);
        }
    }
    MoveBasis::new(moves, BasisKind::Markov)
}

/// Loads a basis from the shared text format (one move per row) and
/// validates it against `A`.  Loaded bases carry kind [`BasisKind::Custom`].
pub fn load_basis(path: &Path, a: &DesignMatrix) -> Result<MoveBasis> {
    let matrix = textio::read_matrix(path)?;
    if matrix.cols != a.cols() {
        return Err(FiberError::DimensionMismatch {
            context: "basis file columns",
            expected: a.cols(),
            got: matrix.cols,
        });
    }
    let mut moves = Vec::with_capacity(matrix.rows);
    for r in 0..matrix.rows {
        let delta = matrix.entries[r * matrix.cols..(r + 1) * matrix.cols].to_vec();
        moves.push(Move::new(delta)?);
    }
    let basis = MoveBasis::new(moves, BasisKind::Custom)?;
    validate_basis(a, &basis)?;
    Ok(basis)
}

/// Writes a basis in the shared text format, one move per row.
pub fn save_basis(path: &Path, basis: &MoveBasis) -> Result<()> {
    if basis.is_empty() {
        return Err(FiberError::Empty("basis"));
    }
    let cols = basis.moves()[0].len();
    let flat: Vec<i64> = basis
        .moves()
        .iter()
        .flat_map(|m| m.delta().iter().copied())
        .collect();
    textio::write_matrix(path, basis.len(), cols, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{hemmecke_design, independence_design, no3factor_design};

    #[test]
    fn survey_move_is_a_valid_markov_member() {
        let a = independence_design(4, 4);
        let mut delta = vec![0i64; 16];
        delta[0] = 1;
        delta[1] = -1;
        delta[4] = -1;
        delta[5] = 1;
        let basis = MoveBasis::new(vec![Move::new(delta).unwrap()], BasisKind::Markov).unwrap();
        let report = validate_basis(&a, &basis).unwrap();
        assert_eq!(report.checks[0].residual_linf, 0);
        assert_eq!(report.matrix_rank, 7);
        assert_eq!(report.kernel_dim, 9);
    }

    #[test]
    fn rejects_vectors_outside_the_kernel() {
        let a = independence_design(2, 2);
        let mut delta = vec![0i64; 4];
        delta[0] = 1;
        let basis = MoveBasis::new(vec![Move::new(delta).unwrap()], BasisKind::Custom).unwrap();
        assert!(matches!(
            validate_basis(&a, &basis),
            Err(FiberError::InvalidBasis(_))
        ));
    }

    #[test]
    fn rejects_zero_moves_and_duplicates() {
        assert!(Move::new(vec![0, 0]).is_err());
        let m = Move::new(vec![1, -1]).unwrap();
        let neg = Move::new(vec![-1, 1]).unwrap();
        assert!(matches!(
            MoveBasis::new(vec![m, neg], BasisKind::Custom),
            Err(FiberError::InvalidBasis(_))
        ));
    }

    #[test]
    fn lattice_basis_of_two_by_two_independence() {
        let a = independence_design(2, 2);
        let basis = lattice_basis(&a).unwrap();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis.moves()[0].delta(), &[1, -1, -1, 1]);
    }

    #[test]
    fn lattice_basis_of_identity_is_empty() {
        let a = DesignMatrix::new(3, 3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        let basis = lattice_basis(&a).unwrap();
        assert!(basis.is_empty());
    }

    #[test]
    fn lattice_basis_dimensions_for_benchmarks() {
        let a = independence_design(4, 4);
        let basis = lattice_basis(&a).unwrap();
        assert_eq!(basis.len(), 9);
        let report = validate_basis(&a, &basis).unwrap();
        assert_eq!(report.rank_ok, Some(true));

        let h = hemmecke_design(1);
        let basis = lattice_basis(&h).unwrap();
        assert_eq!(basis.len(), 3);
        let report = validate_basis(&h, &basis).unwrap();
        assert_eq!(report.span_rank, Some(3));
    }

    #[test]
    fn independence_move_counts() {
        assert_eq!(basic_moves_independence(2, 2).unwrap().len(), 1);
        let basis = basic_moves_independence(4, 4).unwrap();
        assert_eq!(basis.len(), 36);
        let a = independence_design(4, 4);
        validate_basis(&a, &basis).unwrap();
        for mv in basis.moves() {
            assert_eq!(mv.support().len(), 4);
        }
    }

    #[test]
    fn no3factor_move_counts_and_shape() {
        assert_eq!(basic_moves_no3factor(2).unwrap().len(), 1);
        let basis = basic_moves_no3factor(5).unwrap();
        assert_eq!(basis.len(), 10);
        let a = no3factor_design(5);
        validate_basis(&a, &basis).unwrap();
        for mv in basis.moves() {
            assert_eq!(mv.support().len(), 8);
            assert!(mv.delta().iter().all(|&d| d.abs() <= 1));
        }
    }

    #[test]
    fn save_and_load_round_trip() {
        let a = independence_design(3, 3);
        let basis = basic_moves_independence(3, 3).unwrap();
        let dir = std::env::temp_dir().join(format!("fibersample-basis-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.txt");
        save_basis(&path, &basis).unwrap();
        let loaded = load_basis(&path, &a).unwrap();
        assert_eq!(loaded.len(), basis.len());
        for (a_mv, b_mv) in loaded.moves().iter().zip(basis.moves()) {
            assert_eq!(a_mv.delta(), b_mv.delta());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_rejects_malformed_and_invalid_files() {
        let a = independence_design(2, 2);
        let dir = std::env::temp_dir().join(format!("fibersample-badbasis-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();

        let bad_shape = dir.join("short.txt");
        std::fs::write(&bad_shape, "2 4\n1 -1 -1 1\n").unwrap();
        assert!(matches!(
            load_basis(&bad_shape, &a),
            Err(FiberError::Parse { .. })
        ));

        let not_kernel = dir.join("notkernel.txt");
        std::fs::write(&not_kernel, "1 4\n1 0 0 0\n").unwrap();
        assert!(matches!(
            load_basis(&not_kernel, &a),
            Err(FiberError::InvalidBasis(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bundled_basis_files_match_generators() {
        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let a = independence_design(4, 4);
        let bundled = load_basis(&data.join("jobsat4x4.basis.txt"), &a).unwrap();
        let generated = basic_moves_independence(4, 4).unwrap();
        assert_eq!(bundled.len(), generated.len());
        for (l, g) in bundled.moves().iter().zip(generated.moves()) {
            assert_eq!(l.delta(), g.delta());
        }

        let a = no3factor_design(5);
        let bundled = load_basis(&data.join("no3factor225.basis.txt"), &a).unwrap();
        let generated = basic_moves_no3factor(5).unwrap();
        assert_eq!(bundled.len(), generated.len());
        for (l, g) in bundled.moves().iter().zip(generated.moves()) {
            assert_eq!(l.delta(), g.delta());
        }
    }
}
