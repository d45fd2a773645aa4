//! Exact rational linear solving. Two paths: a sparse row-echelon solver
//! used by the primitive finder, and a dense Gaussian elimination used by
//! the brute-force oracle (no structural shortcuts).

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::Zero;

/// Sparse row: column -> coefficient, nonzero entries only.
pub type SparseRow = BTreeMap<usize, BigRational>;

/// Solves A x = b over the rationals. Columns are eliminated in ascending
/// index order and free variables are set to zero, so the particular
/// solution is the deterministic minimal-support representative under the
/// caller's column order. Returns `None` when the system is inconsistent.
pub fn solve_sparse(rows: &[SparseRow], rhs: &[BigRational], ncols: usize) -> Option<Vec<BigRational>> {
    let mut work: Vec<(SparseRow, BigRational)> =
        rows.iter().cloned().zip(rhs.iter().cloned()).collect();
    let mut pivots: Vec<(usize, SparseRow, BigRational)> = Vec::new();

    for col in 0..ncols {
        // find a row with a nonzero entry in this column
        let Some(at) = work.iter().position(|(r, _)| r.get(&col).is_some_and(|v| !v.is_zero()))
        else {
            continue;
        };
        let (mut prow, mut pval) = work.swap_remove(at);
        let lead = prow.get(&col).unwrap().clone();
        for v in prow.values_mut() {
            *v /= &lead;
        }
        pval /= &lead;
        // eliminate from remaining rows
        for (r, v) in work.iter_mut() {
            if let Some(f) = r.get(&col).cloned() {
                if f.is_zero() {
                    continue;
                }
                for (c, pv) in &prow {
                    let delta = pv * &f;
                    let entry = r.entry(*c).or_insert_with(BigRational::zero);
                    *entry -= delta;
                    if entry.is_zero() {
                        r.remove(c);
                    }
                }
                let dv = &pval * &f;
                *v -= dv;
            }
        }
        work.retain(|(r, v)| !(r.is_empty() && v.is_zero()));
        pivots.push((col, prow, pval));
    }

    // inconsistent leftover rows?
    if work.iter().any(|(r, v)| r.is_empty() && !v.is_zero()) {
        return None;
    }
    debug_assert!(work.iter().all(|(r, _)| r.is_empty()));

    // back substitution with free variables at zero
    let mut x = vec![BigRational::zero(); ncols];
    for (col, row, val) in pivots.iter().rev() {
        let mut acc = val.clone();
        for (c, coeff) in row {
            if c > col {
                let xc = &x[*c];
                if !xc.is_zero() {
                    acc -= coeff * xc;
                }
            }
        }
        x[*col] = acc;
    }
    Some(x)
}

/// Dense Gaussian elimination over the rationals; same free-variable
/// convention. Used only by the oracle path.
pub fn solve_dense(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let nrows = a.len();
    let ncols = if nrows == 0 { 0 } else { a[0].len() };
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut used = vec![false; nrows];

    for col in 0..ncols {
        let Some(pr) = (0..nrows).find(|&r| !used[r] && !a[r][col].is_zero()) else {
            continue;
        };
        used[pr] = true;
        pivot_of_col[col] = Some(pr);
        let lead = a[pr][col].clone();
        for c in 0..ncols {
            a[pr][c] /= &lead;
        }
        b[pr] /= &lead;
        for r in 0..nrows {
            if r != pr && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..ncols {
                    let d = &a[pr][c] * &f;
                    a[r][c] -= d;
                }
                let d = &b[pr] * &f;
                b[r] -= d;
            }
        }
    }

    for r in 0..nrows {
        if !used[r] && !b[r].is_zero() && a[r].iter().all(|v| v.is_zero()) {
            return None;
        }
    }

    let mut x = vec![BigRational::zero(); ncols];
    for col in 0..ncols {
        if let Some(pr) = pivot_of_col[col] {
            x[col] = b[pr].clone();
        }
    }
    Some(x)
}
