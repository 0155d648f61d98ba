//! Dense symmetric positive-definite solves for the kernel regression.

/// In-place Cholesky of a row-major `n x n` matrix into its lower factor.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
    let floor = max_diag * 1e-14;
    for j in 0..n {
        let mut pivot = a[j * n + j];
        for k in 0..j {
            pivot -= a[j * n + k] * a[j * n + k];
        }
        if !(pivot > floor) {
            return false;
        }
        let l_jj = pivot.sqrt();
        a[j * n + j] = l_jj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l_jj;
        }
    }
    true
}

fn substitute(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Solves `A x = b` for symmetric positive-definite `A`.
///
/// On a failed factorisation the diagonal is jittered by
/// `1e-10 * trace(A) / n` and the factorisation retried once. `None` means
/// the system is singular.
pub(crate) fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut factor = a.to_vec();
    if cholesky(&mut factor, n) {
        return Some(substitute(&factor, b, n));
    }
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let jitter = 1e-10 * trace / n as f64;
    if !(jitter > 0.0) {
        return None;
    }
    factor.copy_from_slice(a);
    for i in 0..n {
        factor[i * n + i] += jitter;
    }
    cholesky(&mut factor, n).then(|| substitute(&factor, b, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [[4, 2], [2, 3]] x = [2, 1] -> x = [0.5, 0]
        let x = solve_spd(&[4.0, 2.0, 2.0, 3.0], &[2.0, 1.0], 2).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && x[1].abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_singular() {
        assert!(solve_spd(&[0.0; 4], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn rank_deficient_is_rescued_by_jitter() {
        let x = solve_spd(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0], 2).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
