//! Exact reference value of `min { y^T X y : e^T y = 1, y >= 0 }` by
//! enumerating supports.
//!
//! For every nonempty support `S` the stationarity system
//! `2 X_SS y_S = lambda e, e^T y_S = 1` is solved; nonnegative solutions
//! are candidates, as are all vertices. A support whose reduced system is
//! singular only contributes its vertices: the minimum over that face is
//! then attained on a smaller face, which is enumerated separately.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::SymMatrix;

/// Enumeration costs `2^d - 1` linear solves.
pub const MAX_ENUMERATION_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationError {
    pub dim: usize,
}

impl fmt::Display for EnumerationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "support enumeration limited to d <= {MAX_ENUMERATION_DIM}, got {}",
            self.dim
        )
    }
}

impl core::error::Error for EnumerationError {}

/// Global minimum of `y^T X y` over the standard simplex and a minimizer.
pub fn brute_force_simplex_min(x: &SymMatrix) -> Result<(f64, Vec<f64>), EnumerationError> {
    let d = x.dim();
    if d > MAX_ENUMERATION_DIM {
        return Err(EnumerationError { dim: d });
    }
    let mut best_value = f64::INFINITY;
    let mut best_y = vec![0.0; d];
    for i in 0..d {
        if x.get(i, i) < best_value {
            best_value = x.get(i, i);
            best_y.iter_mut().for_each(|v| *v = 0.0);
            best_y[i] = 1.0;
        }
    }
    let scale = x.max_abs().max(f64::MIN_POSITIVE);
    let mut support = Vec::with_capacity(d);
    for mask in 1u32..(1u32 << d) {
        if mask.count_ones() < 2 {
            continue;
        }
        support.clear();
        support.extend((0..d).filter(|i| mask & (1 << i) != 0));
        let Some(ys) = stationary_point(x, &support, scale) else {
            continue;
        };
        if ys.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let mut y = vec![0.0; d];
        let total: f64 = ys.iter().map(|v| v.max(0.0)).sum();
        for (k, &i) in support.iter().enumerate() {
            y[i] = ys[k].max(0.0) / total;
        }
        let value = x.quad_form(&y);
        if value < best_value {
            best_value = value;
            best_y = y;
        }
    }
    Ok((best_value, best_y))
}

/// Solves `[2 X_SS  -e; e^T  0] [y; lambda] = [0; 1]` with partial pivoting.
fn stationary_point(x: &SymMatrix, support: &[usize], scale: f64) -> Option<Vec<f64>> {
    let k = support.len();
    let n = k + 1;
    let mut a = vec![0.0; n * (n + 1)];
    let w = n + 1;
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r * w + c] = 2.0 * x.get(i, j);
        }
        a[r * w + k] = -1.0;
    }
    for c in 0..k {
        a[k * w + c] = 1.0;
    }
    a[k * w + n] = 1.0;

    for c in 0..n {
        let p = (c..n)
            .max_by(|&r, &s| a[r * w + c].abs().total_cmp(&a[s * w + c].abs()))
            .unwrap_or(c);
        if a[p * w + c].abs() <= 1e-12 * scale {
            return None;
        }
        if p != c {
            for t in 0..w {
                a.swap(p * w + t, c * w + t);
            }
        }
        for r in (c + 1)..n {
            let f = a[r * w + c] / a[c * w + c];
            if f != 0.0 {
                for t in c..w {
                    a[r * w + t] -= f * a[c * w + t];
                }
            }
        }
    }
    let mut sol = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = a[r * w + n];
        for t in (r + 1)..n {
            s -= a[r * w + t] * sol[t];
        }
        sol[r] = s / a[r * w + r];
    }
    sol.truncate(k);
    Some(sol)
}
