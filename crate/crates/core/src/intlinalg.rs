//! Exact integer and rational linear algebra.
//!
//! The homology layer needs three exact primitives, all on desk-scale
//! matrices (a handful of rows and columns):
//!
//! * Smith normal form over ℤ, used to decide whether a set of integer
//!   vectors generates the ambient lattice (all invariant factors 1).
//! * An integer kernel basis, read off the column transform of the Smith
//!   reduction.
//! * Exact rational elimination, used to build a left inverse of a
//!   full-column-rank integer matrix together with a basis of its left
//!   kernel (for consistency checks when solving period systems).
//!
//! Entries are carried in `i128`; intermediate growth on the small inputs
//! this crate sees stays far below the overflow range. The rational
//! routines use arbitrary-precision rationals and cannot overflow.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<i128>,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Build from rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<i128>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i128 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i128) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<i128> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Matrix-vector product `A·x`.
    pub fn mul_vec(&self, x: &[i128]) -> Vec<i128> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            let (x, y) = (self.get(a, c), self.get(b, c));
            self.set(a, c, y);
            self.set(b, c, x);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            let (x, y) = (self.get(r, a), self.get(r, b));
            self.set(r, a, y);
            self.set(r, b, x);
        }
    }

    /// row[a] -= q * row[b]
    fn row_sub(&mut self, a: usize, b: usize, q: i128) {
        for c in 0..self.cols {
            let v = self.get(a, c) - q * self.get(b, c);
            self.set(a, c, v);
        }
    }

    /// col[a] -= q * col[b]
    fn col_sub(&mut self, a: usize, b: usize, q: i128) {
        for r in 0..self.rows {
            let v = self.get(r, a) - q * self.get(r, b);
            self.set(r, a, v);
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            let v = -self.get(r, c);
            self.set(r, c, v);
        }
    }
}

/// Smith normal form `P·A·Q = diag(d_1, …, d_r, 0, …)` with `d_i | d_{i+1}`.
/// Only the diagonal and the column transform `Q` are retained; `Q`'s
/// trailing columns (past `rank`) form a basis of `ker(A)` as a lattice.
#[derive(Debug, Clone)]
pub struct Smith {
    pub diag: Vec<i128>,
    pub rank: usize,
    pub q: IntMat,
}

impl Smith {
    /// All invariant factors equal 1: the rows of `A` span the full lattice
    /// `ℤ^rank` exactly when this holds together with `rank == target`.
    pub fn unit_invariant_factors(&self) -> bool {
        self.diag[..self.rank].iter().all(|d| d.abs() == 1)
    }
}

/// Compute the Smith normal form by elementary row/column operations.
pub fn smith_normal_form(a: &IntMat) -> Smith {
    let mut b = a.clone();
    let mut q = IntMat::identity(a.cols);
    let n = a.rows.min(a.cols);
    let mut k = 0;

    while k < n {
        // Find the smallest-magnitude nonzero entry in the trailing block.
        let mut pivot: Option<(usize, usize)> = None;
        for r in k..b.rows {
            for c in k..b.cols {
                let v = b.get(r, c).abs();
                if v != 0 && pivot.is_none_or(|(pr, pc)| v < b.get(pr, pc).abs()) {
                    pivot = Some((r, c));
                }
            }
        }
        let Some((pr, pc)) = pivot else { break };
        b.swap_rows(k, pr);
        b.swap_cols(k, pc);
        q.swap_cols(k, pc);

        // Clear row k and column k; restart whenever a remainder shrinks the
        // pivot. Terminates because |b[k][k]| strictly decreases otherwise.
        'reduce: loop {
            for r in k + 1..b.rows {
                let v = b.get(r, k);
                if v != 0 {
                    let quot = v.div_euclid(b.get(k, k));
                    b.row_sub(r, k, quot);
                    if b.get(r, k) != 0 {
                        b.swap_rows(k, r);
                        continue 'reduce;
                    }
                }
            }
            for c in k + 1..b.cols {
                let v = b.get(k, c);
                if v != 0 {
                    let quot = v.div_euclid(b.get(k, k));
                    b.col_sub(c, k, quot);
                    q.col_sub(c, k, quot);
                    if b.get(k, c) != 0 {
                        b.swap_cols(k, c);
                        q.swap_cols(k, c);
                        continue 'reduce;
                    }
                }
            }
            // Divisibility: every trailing entry must be divisible by the
            // pivot; if not, mix that row in and reduce again.
            for r in k + 1..b.rows {
                for c in k + 1..b.cols {
                    if b.get(r, c) % b.get(k, k) != 0 {
                        b.row_sub(k, r, -1); // row k += row r
                        continue 'reduce;
                    }
                }
            }
            break;
        }

        if b.get(k, k) < 0 {
            b.negate_col(k);
            q.negate_col(k);
        }
        k += 1;
    }

    let mut diag: Vec<i128> = (0..n).map(|i| b.get(i, i)).collect();
    let rank = diag.iter().filter(|d| **d != 0).count();
    diag.truncate(n);
    Smith { diag, rank, q }
}

/// Lattice basis of `ker(A) ⊂ ℤ^cols`: the trailing columns of `Q`.
pub fn kernel_basis(a: &IntMat) -> Vec<Vec<i128>> {
    let s = smith_normal_form(a);
    (s.rank..a.cols).map(|c| s.q.column(c)).collect()
}

fn ratio(v: i128) -> BigRational {
    BigRational::from(BigInt::from(v))
}

/// Exact rational row reduction of `[A | I]` for an integer matrix `A`
/// (rows×cols, full column rank expected). Returns `(L, K)` where
/// `L·A = I_cols` (cols×rows) and the rows of `K` span the left kernel
/// (`K·A = 0`). `L` is `None` when `A` does not have full column rank.
pub fn left_inverse_and_kernel(a: &IntMat) -> (Option<Vec<Vec<BigRational>>>, Vec<Vec<BigRational>>) {
    let rows = a.rows;
    let cols = a.cols;
    // Augmented rational matrix [A | I].
    let mut m: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let mut row: Vec<BigRational> = (0..cols).map(|c| ratio(a.get(r, c))).collect();
            row.extend((0..rows).map(|j| if j == r { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();

    let mut pivot_row = 0usize;
    for col in 0..cols {
        let Some(p) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(pivot_row, p);
        let inv = m[pivot_row][col].recip();
        for v in m[pivot_row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..rows {
            if r != pivot_row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..cols + rows {
                    let delta = &f * &m[pivot_row][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == rows {
            break;
        }
    }

    let rank = pivot_row;
    let kernel: Vec<Vec<BigRational>> = (rank..rows).map(|r| m[r][cols..].to_vec()).collect();
    if rank < cols {
        return (None, kernel);
    }
    // Row i of the reduced block expresses e_i = Σ L[i][j]·(row j of A).
    let l: Vec<Vec<BigRational>> = (0..cols).map(|r| m[r][cols..].to_vec()).collect();
    (Some(l), kernel)
}

/// Does the set `gens` generate the lattice spanned by `basis` (a basis of a
/// saturated sublattice of ℤ^n, e.g. a kernel lattice)? Decided exactly:
/// write each generator in the basis, then check the coordinate matrix is
/// onto ℤ^k via its Smith form.
pub fn generates_lattice(gens: &[Vec<i128>], basis: &[Vec<i128>]) -> bool {
    let k = basis.len();
    if k == 0 {
        return true; // the zero lattice is generated by anything
    }
    if gens.is_empty() {
        return false;
    }
    let n = basis[0].len();
    // Solve basis·c = gen for each generator (exact; n×k system).
    let bmat = IntMat::from_rows(
        &(0..n)
            .map(|r| (0..k).map(|c| basis[c][r]).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    );
    let (l, _) = left_inverse_and_kernel(&bmat);
    let Some(l) = l else { return false };
    let mut coord_rows: Vec<Vec<i128>> = Vec::with_capacity(gens.len());
    for g in gens {
        assert_eq!(g.len(), n, "generator length mismatch");
        let mut coords = Vec::with_capacity(k);
        for lrow in &l {
            let mut acc = BigRational::zero();
            for (lv, gv) in lrow.iter().zip(g.iter()) {
                acc += lv * &ratio(*gv);
            }
            if !acc.is_integer() {
                return false; // not even in the lattice
            }
            let v: BigInt = acc.to_integer();
            let Some(v) = i128::try_from(&v).ok() else {
                return false;
            };
            coords.push(v);
        }
        // Confirm the generator really lies in the lattice (basis·c == g).
        let back = bmat.mul_vec(&coords);
        if back != *g {
            return false;
        }
        coord_rows.push(coords);
    }
    let cmat = IntMat::from_rows(&coord_rows);
    let s = smith_normal_form(&cmat);
    s.rank == k && s.unit_invariant_factors()
}

/// Greatest common divisor of all 2×2 minors of a 2-row matrix; the rows
/// span ℤ² exactly when this is 1 (and some minor is nonzero). Used as an
/// independent small-case oracle for the Smith-form surjectivity test.
pub fn gcd_of_2x2_minors(a: &IntMat) -> i128 {
    assert_eq!(a.rows, 2);
    let mut g: i128 = 0;
    for i in 0..a.cols {
        for j in i + 1..a.cols {
            let det = a.get(0, i) * a.get(1, j) - a.get(0, j) * a.get(1, i);
            g = gcd(g, det.abs());
        }
    }
    g
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_of_identity_permutation() {
        let a = IntMat::from_rows(&[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.rank, 3);
        assert_eq!(s.diag, vec![1, 1, 1]);
        assert!(s.unit_invariant_factors());
    }

    #[test]
    fn smith_catches_index_two_sublattice() {
        let a = IntMat::from_rows(&[vec![2, 0], vec![0, 1]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.rank, 2);
        assert!(!s.unit_invariant_factors());
        assert_eq!(s.diag, vec![1, 2]);
    }

    #[test]
    fn smith_divisibility_chain() {
        let a = IntMat::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        let s = smith_normal_form(&a);
        for i in 1..s.rank {
            assert_eq!(s.diag[i] % s.diag[i - 1], 0, "diag {:?}", s.diag);
        }
        assert!(s.diag[..s.rank].iter().all(|d| *d > 0));
    }

    #[test]
    fn kernel_vectors_annihilate() {
        // Rank-1 map (1, -1): kernel spanned by (1, 1).
        let a = IntMat::from_rows(&[vec![1, -1]]);
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 1);
        for v in &k {
            assert_eq!(a.mul_vec(v), vec![0]);
        }
        // Row map ι on three edges all hitting the same generator.
        let a = IntMat::from_rows(&[vec![1, 1, 1]]);
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(a.mul_vec(v), vec![0]);
        }
    }

    #[test]
    fn left_inverse_recovers_identity() {
        // 4×2 full-column-rank matrix.
        let a = IntMat::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1], vec![2, -1]]);
        let (l, kern) = left_inverse_and_kernel(&a);
        let l = l.expect("full column rank");
        assert_eq!(l.len(), 2);
        assert_eq!(kern.len(), 2);
        // L·A = I exactly.
        for (i, lrow) in l.iter().enumerate() {
            for j in 0..2 {
                let mut acc = BigRational::zero();
                for (r, lv) in lrow.iter().enumerate() {
                    acc += lv * &ratio(a.get(r, j));
                }
                let expect = if i == j { BigRational::one() } else { BigRational::zero() };
                assert_eq!(acc, expect);
            }
        }
        // K·A = 0 exactly.
        for krow in &kern {
            for j in 0..2 {
                let mut acc = BigRational::zero();
                for (r, kv) in krow.iter().enumerate() {
                    acc += kv * &ratio(a.get(r, j));
                }
                assert!(acc.is_zero());
            }
        }
    }

    #[test]
    fn lattice_generation_detects_proper_sublattice() {
        // Kernel of (1,1,1): basis {(1,-1,0), (0,1,-1)}.
        let basis = vec![vec![1, -1, 0], vec![0, 1, -1]];
        assert!(generates_lattice(&[vec![1, -1, 0], vec![1, 0, -1]], &basis));
        // Same rank but index 2: {2a, b}.
        assert!(!generates_lattice(&[vec![2, -2, 0], vec![0, 1, -1]], &basis));
        // Too few generators.
        assert!(!generates_lattice(&[vec![1, -1, 0]], &basis));
    }

    #[test]
    fn minor_gcd_oracle_examples() {
        // Columns (2,0),(0,1),(3,1): no ±1 minor, yet the gcd is 1.
        let a = IntMat::from_rows(&[vec![2, 0, 3], vec![0, 1, 1]]);
        assert_eq!(gcd_of_2x2_minors(&a), 1);
        let s = smith_normal_form(&a);
        assert!(s.rank == 2 && s.unit_invariant_factors());
        // Doubled lattice.
        let b = IntMat::from_rows(&[vec![2, 0], vec![0, 2]]);
        assert_eq!(gcd_of_2x2_minors(&b), 4);
    }
}
