//! Bessel functions of the first kind (orders 0 and 1) and their zeros.
//!
//! The toolkit needs `J0`/`J1` over roughly `x ∈ [0, 60]` at close to machine
//! precision: the aperture-diffraction integrals, the iris transmission
//! factors, and the dark-trap condition all reduce to these two functions.
//! Two classical evaluation regimes are used:
//!
//! * `|x| < 18`: the ascending power series.  The alternating sum loses at
//!   most `~e^|x| / √(2π|x|) · ε` absolute accuracy, which stays below
//!   `1e-9` on this interval and below `1e-12` for `|x| ≤ 12` where the
//!   high-accuracy callers (trap conditions, zone radii) operate.
//! * `|x| ≥ 18`: the Hankel asymptotic expansion
//!   `J_ν(x) = √(2/(πx)) · (P cos ω − Q sin ω)`, `ω = x − νπ/2 − π/4`,
//!   truncated at its smallest term.  At `x ≥ 18` the smallest term is far
//!   below `1e-15`, so the expansion is effectively exact there.
//!
//! Zeros are found by Newton refinement of McMahon's asymptotic estimate;
//! both derivatives are closed-form (`J0' = −J1`, `J1' = J0 − J1/x`).

/// Bessel function of the first kind, order zero.
pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        j_series(0, ax)
    } else {
        j_asymptotic(0, ax)
    }
}

/// Bessel function of the first kind, order one.
pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        j_series(1, ax)
    } else {
        j_asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `n`-th positive zero of `J_order` (`order ∈ {0, 1}`, `n ≥ 1`), accurate to
/// better than `1e-12` relative.
///
/// # Panics
/// Panics if `order > 1` or `n == 0`; both are programming errors, not data
/// errors, in every caller.
pub fn bessel_zero(order: u8, n: u32) -> f64 {
    assert!(order <= 1, "only orders 0 and 1 are supported");
    assert!(n >= 1, "zeros are indexed from 1");
    let nu = order as f64;
    let mu = 4.0 * nu * nu;
    // McMahon's expansion about beta = (n + nu/2 - 1/4)·pi.
    let beta = (n as f64 + 0.5 * nu - 0.25) * std::f64::consts::PI;
    let e8 = 8.0 * beta;
    let mut x = beta - (mu - 1.0) / e8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e8.powi(3));
    // Newton refinement; the starting error is < 1e-3 even for n = 1.
    for _ in 0..8 {
        let (f, df) = match order {
            0 => (j0(x), -j1(x)),
            _ => (j1(x), j0(x) - j1(x) / x),
        };
        let step = f / df;
        x -= step;
        if step.abs() < 1e-14 * x {
            break;
        }
    }
    x
}

/// First zero of `J1` — the canonical Fourier-plane iris radius in
/// `k·a·b/f` units.
pub fn x1_j1() -> f64 {
    bessel_zero(1, 1)
}

/// First zero of `J0` — the iris radius that darkens an opaque-disk mask.
pub fn x1_j0() -> f64 {
    bessel_zero(0, 1)
}

const SERIES_LIMIT: f64 = 18.0;

/// Ascending power series for `J0`/`J1` at `x ≥ 0`.
fn j_series(order: u8, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut sum) = match order {
        0 => (1.0, 1.0),
        _ => (0.5 * x, 0.5 * x),
    };
    let shift = order as f64;
    for k in 0..200u32 {
        let kf = k as f64;
        term *= -q / ((kf + 1.0) * (kf + 1.0 + shift));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion for `x ≥ SERIES_LIMIT`.
fn j_asymptotic(order: u8, x: f64) -> f64 {
    let nu = order as f64;
    let mu = 4.0 * nu * nu;
    // a_m = prod_{j=1..m} (mu - (2j-1)^2) / (8j); P collects even m with
    // alternating sign, Q collects odd m.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut pow = 1.0;
    let mut prev = f64::INFINITY;
    for m in 1..=50u32 {
        let mf = m as f64;
        let odd = 2.0 * mf - 1.0;
        a *= (mu - odd * odd) / (8.0 * mf);
        pow /= x;
        let term = a * pow;
        if term.abs() > prev {
            break; // smallest term reached: truncate the asymptotic series
        }
        prev = term.abs();
        // sign (-1)^k with k = m/2 (even m -> P) or k = (m-1)/2 (odd m -> Q)
        let k = m / 2;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        if m % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    let omega = x - nu * std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}
