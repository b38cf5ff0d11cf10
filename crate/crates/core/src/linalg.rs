use crate::scalar::{Mode, Scalar};

/// Solves `A x = b` by Gaussian elimination. Rationals pivot on the first
/// nonzero entry; floats use partial pivoting. Returns `None` when `A` is
/// singular.
pub fn solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let pivot = match S::MODE {
            Mode::Rational => (col..n).find(|&r| !a[r][col].is_zero())?,
            Mode::Float => {
                let r = (col..n).max_by(|&i, &j| {
                    a[i][col].abs_val().partial_cmp(&a[j][col].abs_val()).unwrap_or(std::cmp::Ordering::Equal)
                })?;
                if a[r][col].is_zero_tol(1e-300) {
                    return None;
                }
                r
            }
        };
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = S::one() / a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() * inv.clone();
            for c in col..n {
                let v = a[col][c].clone();
                if !v.is_zero() {
                    a[r][c] = a[r][c].clone() - f.clone() * v;
                }
            }
            b[r] = b[r].clone() - f * b[col].clone();
        }
    }
    let mut x = vec![S::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            if !a[r][c].is_zero() {
                acc = acc - a[r][c].clone() * x[c].clone();
            }
        }
        x[r] = acc / a[r][r].clone();
    }
    Some(x)
}
