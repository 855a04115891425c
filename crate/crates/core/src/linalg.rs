//! Least squares by Householder QR with column-norm pivoting.

use crate::error::{Error, Result};

/// Columns whose pivoted diagonal falls below this fraction of the leading
/// diagonal are treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `min ||A x - b||` for column-major `A`, failing when `A` is
/// numerically rank deficient.
pub fn lstsq(columns: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let m = columns.len();
    let n = b.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    debug_assert!(columns.iter().all(|c| c.len() == n));
    if n < m {
        return Err(Error::SingularMatrix {
            rank: n,
            cols: m,
            ratio: 0.0,
        });
    }

    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut diag = vec![0.0; m];
    let mut v = vec![0.0; n];

    for j in 0..m {
        // pivot on the largest remaining column norm
        let (p, _) =
            (j..m)
                .map(|c| (c, dot(&a[c][j..], &a[c][j..])))
                .fold(
                    (j, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        a.swap(j, p);
        perm.swap(j, p);

        let x = &a[j][j..];
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let len = n - j;
        v[..len].copy_from_slice(x);
        v[0] -= alpha;
        let beta = dot(&v[..len], &v[..len]);
        diag[j] = alpha;
        a[j][j] = alpha;
        for r in j + 1..n {
            a[j][r] = 0.0;
        }
        if beta == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j + 1) {
            let s = 2.0 * dot(&v[..len], &col[j..]) / beta;
            for (c, vi) in col[j..].iter_mut().zip(&v[..len]) {
                *c -= s * vi;
            }
        }
        let s = 2.0 * dot(&v[..len], &rhs[j..]) / beta;
        for (c, vi) in rhs[j..].iter_mut().zip(&v[..len]) {
            *c -= s * vi;
        }
    }

    let lead = diag[0].abs();
    let min_ratio = if lead > 0.0 {
        diag.iter()
            .map(|d| d.abs() / lead)
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    if !(min_ratio >= RANK_TOLERANCE) {
        let rank = if lead > 0.0 {
            diag.iter()
                .filter(|d| d.abs() / lead >= RANK_TOLERANCE)
                .count()
        } else {
            0
        };
        return Err(Error::SingularMatrix {
            rank,
            cols: m,
            ratio: min_ratio,
        });
    }

    // back substitution on R z = (Q^T b)[..m]
    let mut z = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = rhs[i];
        for (k, zk) in z.iter().enumerate().skip(i + 1) {
            s -= a[k][i] * zk;
        }
        z[i] = s / a[i][i];
    }
    let mut x = vec![0.0; m];
    for (j, &p) in perm.iter().enumerate() {
        x[p] = z[j];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // [[2, 1], [1, 3]] x = [3, 5] -> x = [0.8, 1.4]
        let x = lstsq(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 1 + 2t fitted with noise-free points
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 + 2.0 * t).collect();
        let x = lstsq(&[vec![1.0; 10], t], &y).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_of_inconsistent_system() {
        // mean of the targets
        let x = lstsq(&[vec![1.0; 4]], &[1.0, 2.0, 3.0, 6.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn detects_rank_deficiency() {
        let c = vec![1.0, 2.0, 3.0];
        let err = lstsq(&[c.clone(), c.clone()], &[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::SingularMatrix {
                rank: 1,
                cols: 2,
                ..
            }
        ));
        assert!(lstsq(&[vec![0.0; 3]], &[1.0, 1.0, 1.0]).is_err());
        assert!(lstsq(&[vec![1.0], vec![2.0]], &[1.0]).is_err());
    }

    #[test]
    fn pivoting_handles_column_order() {
        let a = vec![1e-3, 2e-3, 5e-3, 1e-3];
        let b = vec![100.0, -3.0, 2.0, 8.0];
        let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| 4.0 * a - 0.5 * b).collect();
        let x = lstsq(&[a, b], &y).unwrap();
        assert!((x[0] - 4.0).abs() < 1e-9 && (x[1] + 0.5).abs() < 1e-12);
    }
}
