//! Small dense real linear algebra, generic over the floating scalar.
//!
//! Everything here operates on desk-scale systems (tens of rows at most):
//! row reduction with partial pivoting for nullspaces and affine charts,
//! one-sided Jacobi for singular values, and a direct solver for the tiny
//! square systems that appear in vertex enumeration.
//!
//! Numerical rank is decided from singular values with a relative
//! threshold; the default threshold used by callers is 1e-9 of the largest
//! singular value.

use crate::scalar::Real;

/// Reduced row echelon form in place with partial pivoting.
/// Entries below `tol_rel · max|entry|` are treated as zero.
/// Returns the pivot columns in increasing order.
pub fn rref<T: Real>(m: &mut [Vec<T>], tol_rel: T) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut scale = T::zero();
    for row in m.iter() {
        for v in row {
            scale = scale.max(v.abs());
        }
    }
    if scale == T::zero() {
        return vec![];
    }
    let tol = tol_rel * scale;

    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // Partial pivot: largest magnitude in column c at rows r...
        let (best, best_val) = (r..rows)
            .map(|i| (i, m[i][c].abs()))
            .fold((r, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= tol {
            continue;
        }
        m.swap(r, best);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v = *v * inv;
        }
        m[r][c] = T::one(); // exact pivot
        for i in 0..rows {
            if i != r {
                let f = m[i][c];
                if f != T::zero() {
                    for j in 0..cols {
                        let upd = m[i][j] - f * m[r][j];
                        m[i][j] = upd;
                    }
                    m[i][c] = T::zero(); // exact elimination in pivot column
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Nullspace basis of `A` (rows×cols): one vector per free column, with a
/// 1 in its free coordinate. Deterministic and edge-aligned, which keeps
/// downstream charts readable.
pub fn nullspace<T: Real>(a: &[Vec<T>], tol_rel: T) -> Vec<Vec<T>> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<T>> = a.to_vec();
    let pivots = rref(&mut m, tol_rel);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f];
            }
            v
        })
        .collect()
}

/// Solution set of the affine system `A·x = b` as `x = x0 + N·q`.
/// `None` when the system is inconsistent at the given tolerance.
pub struct AffineSolution<T> {
    /// Particular solution (free coordinates zero).
    pub x0: Vec<T>,
    /// One column per free coordinate; `free[k]` is its index.
    pub directions: Vec<Vec<T>>,
    pub free: Vec<usize>,
}

pub fn solve_affine<T: Real>(a: &[Vec<T>], b: &[T], tol_rel: T) -> Option<AffineSolution<T>> {
    let rows = a.len();
    assert_eq!(rows, b.len());
    let cols = a.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let pivots = rref(&mut m, tol_rel);
    if pivots.contains(&cols) {
        return None; // pivot in the augmented column: inconsistent
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut x0 = vec![T::zero(); cols];
    for (r, &p) in pivots.iter().enumerate() {
        x0[p] = m[r][cols];
    }
    let directions: Vec<Vec<T>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f];
            }
            v
        })
        .collect();
    Some(AffineSolution { x0, directions, free })
}

/// Solve the square system `A·x = b` by Gaussian elimination with partial
/// pivoting. `None` when the pivot falls below `tol_abs`.
pub fn solve_square<T: Real>(a: &[Vec<T>], b: &[T], tol_abs: T) -> Option<Vec<T>> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, &rhs)| {
            debug_assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for c in 0..n {
        let (best, best_val) = (c..n)
            .map(|i| (i, m[i][c].abs()))
            .fold((c, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_val <= tol_abs {
            return None;
        }
        m.swap(c, best);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            if f != T::zero() {
                for j in c..=n {
                    let upd = m[i][j] - f * m[c][j];
                    m[i][j] = upd;
                }
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for j in i + 1..n {
            acc = acc - m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    Some(x)
}

/// Singular values (descending) by one-sided Jacobi orthogonalization.
/// Exact enough for rank decisions on the small matrices used here.
pub fn singular_values<T: Real>(a: &[Vec<T>]) -> Vec<T> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return vec![];
    }
    // Work on the version with rows >= cols (singular values are shared).
    let (r, c, mut b): (usize, usize, Vec<Vec<T>>) = if rows >= cols {
        (rows, cols, a.to_vec())
    } else {
        (
            cols,
            rows,
            (0..cols)
                .map(|j| (0..rows).map(|i| a[i][j]).collect())
                .collect(),
        )
    };
    let eps = T::epsilon() * T::of(16.0);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for row in b.iter().take(r) {
                    alpha = alpha + row[p] * row[p];
                    beta = beta + row[q] * row[q];
                    gamma = gamma + row[p] * row[q];
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cos = (T::one() + t * t).sqrt().recip();
                let sin = cos * t;
                for row in b.iter_mut().take(r) {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = cos * vp - sin * vq;
                    row[q] = sin * vp + cos * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..c)
        .map(|j| {
            let mut s = T::zero();
            for row in b.iter().take(r) {
                s = s + row[j] * row[j];
            }
            s.sqrt()
        })
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Numerical rank: singular values above `tol_rel` times the largest.
pub fn rank<T: Real>(a: &[Vec<T>], tol_rel: T) -> usize {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == T::zero() {
        return 0;
    }
    sv.iter().filter(|s| **s > tol_rel * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_nullspace_align_to_free_columns() {
        // x1 - x2 = 0 on four coordinates.
        let a: Vec<Vec<f64>> = vec![vec![1.0, -1.0, 0.0, 0.0]];
        let ns = nullspace(&a, 1e-12);
        assert_eq!(ns.len(), 3);
        for v in &ns {
            assert!((v[0] - v[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_solve_gives_particular_plus_directions() {
        // x1 = 1, x1 - x2 = 0 → x = (1, 1, q).
        let a: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 0.0], vec![1.0, -1.0, 0.0]];
        let b = vec![1.0, 0.0];
        let s = solve_affine(&a, &b, 1e-12).unwrap();
        assert_eq!(s.free, vec![2]);
        assert!((s.x0[0] - 1.0).abs() < 1e-14 && (s.x0[1] - 1.0).abs() < 1e-14);
        assert_eq!(s.directions.len(), 1);
        assert_eq!(s.directions[0][2], 1.0);
    }

    #[test]
    fn inconsistent_system_detected() {
        let a: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let b = vec![0.0, 1.0];
        assert!(solve_affine(&a, &b, 1e-12).is_none());
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a: Vec<Vec<f64>> = vec![vec![3.0, 0.0], vec![0.0, -2.0], vec![0.0, 0.0]];
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 2.0).abs() < 1e-12);
        assert_eq!(rank(&a, 1e-9), 2);
    }

    #[test]
    fn rank_of_rank_deficient_matrix() {
        let a: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(rank(&a, 1e-9), 1);
        let z: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(rank(&z, 1e-9), 0);
    }

    #[test]
    fn square_solver_matches_hand_solution() {
        let a: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![5.0, 10.0];
        let x = solve_square(&a, &b, 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        let sing = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(solve_square(&sing, &b, 1e-14).is_none());
    }
}
