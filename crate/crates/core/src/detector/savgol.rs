//! Savitzky–Golay smoothing with mirror padding.

use crate::error::{Error, Result};

/// Convolution weights that evaluate, at the window center, the least-squares
/// polynomial of degree `order` fitted over `window` equally spaced points.
pub fn savgol_coefficients(window: usize, order: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) {
        return Err(Error::invalid("savgol_window", "must be odd"));
    }
    if window <= order {
        return Err(Error::invalid("savgol_window", "must exceed savgol_order"));
    }
    let half = (window / 2) as i64;
    let scale = if half > 0 { 1.0 / half as f64 } else { 1.0 };
    let m = order + 1;
    let powers = |j: i64| -> Vec<f64> {
        let u = j as f64 * scale;
        (0..m)
            .scan(1.0, |p, _| {
                let out = *p;
                *p *= u;
                Some(out)
            })
            .collect()
    };
    // Normal equations (A^T A) y = e0; weight for offset j is sum_q y_q u_j^q.
    let mut a = vec![vec![0.0; m + 1]; m];
    for j in -half..=half {
        let p = powers(j);
        for r in 0..m {
            for c in 0..m {
                a[r][c] += p[r] * p[c];
            }
        }
    }
    a[0][m] = 1.0;
    let y = solve(a)?;
    Ok((-half..=half)
        .map(|j| powers(j).iter().zip(&y).map(|(p, y)| p * y).sum())
        .collect())
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::invalid(
                "savgol_order",
                "least-squares system is singular",
            ));
        }
        a.swap(col, pivot);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..=m {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][m] - s) / a[r][r];
    }
    Ok(x)
}

/// Smooths `x`, reflecting about the end samples (`x[-i] = x[i]`) at the edges.
pub fn savgol_smooth(x: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    let coeffs = savgol_coefficients(window, order)?;
    if x.len() < window {
        return Err(Error::invalid(
            "savgol_window",
            format!(
                "window {window} is longer than the {}-point profile",
                x.len()
            ),
        ));
    }
    let n = x.len() as i64;
    let half = (window / 2) as i64;
    let at = |i: i64| -> f64 {
        let i = if i < 0 {
            -i
        } else if i >= n {
            2 * (n - 1) - i
        } else {
            i
        };
        x[i as usize]
    };
    Ok((0..n)
        .map(|i| {
            if i >= half && i + half < n {
                let s = (i - half) as usize;
                coeffs
                    .iter()
                    .zip(&x[s..s + window])
                    .map(|(c, v)| c * v)
                    .sum()
            } else {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * at(i + j as i64 - half))
                    .sum()
            }
        })
        .collect())
}
