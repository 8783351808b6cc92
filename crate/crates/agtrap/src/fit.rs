//! Deterministic fitting primitives: golden-section search and small dense
//! least-squares solves.
//!
//! Every routine here is direct (no stochastic restarts, fixed iteration
//! caps), so identical inputs give bit-identical outputs on any thread
//! count — a requirement inherited by all downstream metrics.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Golden-section minimization of `f` on `[a, b]`.
///
/// Runs until the bracket shrinks below `x_tol` (absolute) or 200
/// iterations, then returns the bracket midpoint and its value.  `f` must be
/// unimodal on the bracket for a guaranteed global result; all callers
/// arrange this by construction or by a preceding coarse scan.
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, x_tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Golden-section maximization; see [`golden_min`].
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, x_tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|t| -f(t), a, b, x_tol);
    (x, -v)
}

/// Solve the square system `a · x = b` by Gaussian elimination with partial
/// pivoting.  Intended for the small (≤ 8 unknown) systems produced by the
/// fitting routines; callers are responsible for reasonable scaling.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("linear system shape mismatch".into()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular linear system in fit".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Unweighted linear least squares: find `c` minimizing `‖Σ c_j·cols[j] − y‖²`
/// via the normal equations.  Callers normalize their abscissae so the small
/// normal systems stay well conditioned.
pub fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = cols.len();
    let n = y.len();
    if k == 0 || cols.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "least-squares design shape mismatch".into(),
        ));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least {k} points, got {n}"
        )));
    }
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            ata[i][j] = s;
            ata[j][i] = s;
        }
        aty[i] = cols[i].iter().zip(y).map(|(a, b)| a * b).sum();
    }
    solve_linear(ata, aty)
}
