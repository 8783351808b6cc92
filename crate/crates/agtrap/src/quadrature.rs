//! Adaptive Gauss–Legendre quadrature (nested 7/15-point rule).
//!
//! This is the independent numerical oracle the series evaluations are
//! validated against, so it deliberately shares no code with them.  Panels
//! are estimated with a 7-point and a 15-point Gauss–Legendre rule; the
//! difference drives bisection, with the error budget halved per split so
//! the accumulated error stays below the requested absolute tolerance.
//!
//! Nodes and weights are computed at first use by Newton iteration on the
//! Legendre recurrence (no hard-coded tables) and cached for the process
//! lifetime; the computation is deterministic.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Output space of an integrand: the reals or the complex plane.
pub trait QuadOutput: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    /// Magnitude used for error control.
    fn norm(self) -> f64;
}

impl QuadOutput for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadOutput for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.re.abs() + self.im.abs()
    }
}

/// Adaptive integral of a real-valued function over `[a, b]` to absolute
/// tolerance `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    integrate_generic(&f, a, b, abs_tol)
}

/// Adaptive integral of a complex-valued function over `[a, b]`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Complex64> {
    integrate_generic(&f, a, b, abs_tol)
}

fn integrate_generic<V: QuadOutput, F: Fn(f64) -> V>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<V> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(
            "quadrature limits must be finite".into(),
        ));
    }
    if a == b {
        return Ok(V::zero());
    }
    if abs_tol <= 0.0 {
        return Err(Error::InvalidArgument(
            "quadrature tolerance must be positive".into(),
        ));
    }
    let rules = rules();
    let mut total = V::zero();
    // (lo, hi, panel tolerance)
    let mut stack: Vec<(f64, f64, f64)> = vec![(a, b, abs_tol)];
    let mut panels = 0usize;
    while let Some((lo, hi, tol)) = stack.pop() {
        panels += 1;
        if panels > 20_000 {
            return Err(Error::Numerical(format!(
                "quadrature failed to converge on [{a}, {b}] at tolerance {abs_tol:e}"
            )));
        }
        let coarse = fixed_rule(f, lo, hi, &rules.x7, &rules.w7);
        let fine = fixed_rule(f, lo, hi, &rules.x15, &rules.w15);
        let err = fine.sub(coarse).norm();
        // Relative floor: once a panel is converged to machine precision
        // relative to its own magnitude, splitting further only adds noise.
        if err <= tol || err <= 1e-15 * fine.norm() || (hi - lo).abs() < 1e-15 * (b - a).abs() {
            total = total.add(fine);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * tol));
            stack.push((mid, hi, 0.5 * tol));
        }
    }
    Ok(total)
}

fn fixed_rule<V: QuadOutput, F: Fn(f64) -> V>(f: &F, a: f64, b: f64, x: &[f64], w: &[f64]) -> V {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = V::zero();
    for (&xi, &wi) in x.iter().zip(w) {
        acc = acc.add(f(mid + half * xi).scale(wi));
    }
    acc.scale(half)
}

struct Rules {
    x7: Vec<f64>,
    w7: Vec<f64>,
    x15: Vec<f64>,
    w15: Vec<f64>,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let (x7, w7) = gauss_legendre(7);
        let (x15, w15) = gauss_legendre(15);
        Rules { x7, w7, x15, w15 }
    })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut xi = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, xi);
            let step = p / dp;
            xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, xi);
        x[i] = xi;
        w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    (x, w)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
