//! Closed-form model of apertured-Gaussian ("aG") trap arrays.
//!
//! A periodic amplitude mask — circular holes of radius `a` on pitch `d`,
//! complex transmissions `t_a` inside the holes and `t_b` between them — sits
//! at the input of a 4f relay with focal lengths `f1`, `f2`.  A circular iris
//! of radius `b` in the shared Fourier plane clips each hole's diffraction
//! pattern; with the iris at the first Airy minimum the re-imaged field near
//! each site reduces to one-dimensional Bessel integrals in the dimensionless
//! iris argument `X = k·a·b/f1`:
//!
//! * radial:  `A(v) ∝ t_b + (t_a − t_b)·∫₀^X J0(v·t)·J1(t) dt`, `v = ρ/a_img`
//! * axial:   `A(ζ) ∝ t_b + (t_a − t_b)·∫₀^X J1(t)·e^{−i·ζ·t²/2} dt`,
//!   `ζ = z / (k·a_img²)`
//!
//! where `a_img = a·f2/f1` is the demagnified hole radius.  Everything in
//! this module evaluates those integrals and the design quantities built on
//! them: trap depths and efficiencies, series expansions of the trap wells,
//! equivalent Gaussian parameters, thermal confinement, mask throughput,
//! dual-species balancing, and annular-zone filter variants.

use crate::error::{Error, Result};
use crate::fit::{golden_max, least_squares, solve_linear};
use crate::quadrature::{integrate, integrate_complex};
use crate::scalar::C64;
use crate::special::{bessel_zero, j0, j1};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Default truncation order of the double series behind
/// [`finite_bessel_integral`].
pub const DEFAULT_J_MAX: u32 = 40;

/// First zero of J1 — iris argument placing the iris edge at the first Airy
/// minimum of a hole (standard bright/dark-scaled configuration).
fn j11() -> f64 {
    bessel_zero(1, 1)
}

/// First zero of J0 — iris argument that nulls the site center with an
/// opaque hole (`t_a = 0`).
fn j01() -> f64 {
    bessel_zero(0, 1)
}

// ---------------------------------------------------------------------------
// System and mask descriptions
// ---------------------------------------------------------------------------

/// 4f relay geometry: first and second focal lengths and the working
/// wavelength, all in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub f1: f64,
    pub f2: f64,
    pub lambda: f64,
}

impl SystemSpec {
    pub fn new(f1: f64, f2: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("f1", f1), ("f2", f2), ("lambda", lambda)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { f1, f2, lambda })
    }

    /// Vacuum wavenumber `k = 2π/λ`.
    pub fn k(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda
    }

    /// Transverse magnification `f2/f1` of the relay.
    pub fn magnification(&self) -> f64 {
        self.f2 / self.f1
    }

    /// Re-imaged hole radius `a·f2/f1`.
    pub fn image_radius(&self, a: f64) -> f64 {
        a * self.f2 / self.f1
    }

    /// Dimensionless iris argument `X = k·a·b/f1` of a physical iris radius.
    pub fn iris_argument(&self, a: f64, b: f64) -> f64 {
        self.k() * a * b / self.f1
    }

    /// Physical iris radius realizing a given argument `X`.
    pub fn iris_radius(&self, a: f64, x_iris: f64) -> f64 {
        x_iris * self.f1 / (self.k() * a)
    }

    /// Iris radius whose edge sits at the first Airy minimum of a hole of
    /// radius `a` (`X = j_{1,1} ≈ 3.8317`).
    pub fn standard_iris_radius(&self, a: f64) -> f64 {
        self.iris_radius(a, j11())
    }

    /// Axial scale `k·a_img²` converting image-space `z` to the
    /// dimensionless coordinate `ζ = z/(k·a_img²)`.
    pub fn axial_scale(&self, a: f64) -> f64 {
        let a_img = self.image_radius(a);
        self.k() * a_img * a_img
    }
}

/// One unit cell of the input mask: hole radius `a`, pitch `d`, and complex
/// transmissions inside (`t_a`) and outside (`t_b`) the hole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskParams {
    pub a: f64,
    pub d: f64,
    pub t_a: C64,
    pub t_b: C64,
    /// Relative phase `arg(t_a) − arg(t_b)`, frozen at construction.
    pub phi_ab: f64,
}

impl MaskParams {
    pub fn new(a: f64, d: f64, t_a: C64, t_b: C64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "hole radius must be positive, got {a}"
            )));
        }
        if !(d.is_finite() && d >= 2.0 * a) {
            return Err(Error::InvalidArgument(format!(
                "pitch {d} must be at least one hole diameter {}",
                2.0 * a
            )));
        }
        for (name, t) in [("t_a", t_a), ("t_b", t_b)] {
            if !t.re.is_finite() || !t.im.is_finite() || t.norm() > 1.0 + 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a passive transmission (|t| <= 1), got {t}"
                )));
            }
        }
        let phi_ab = if t_b.norm() > 0.0 {
            (t_a * t_b.conj()).arg()
        } else {
            t_a.arg()
        };
        Ok(Self { a, d, t_a, t_b, phi_ab })
    }

    /// Bright-site mask: transparent holes in an opaque background.
    pub fn bright(a: f64, d: f64) -> Result<Self> {
        Self::new(a, d, C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    /// Dark-site mask: transmission `t_a_mag·e^{i·phi}` in the holes, clear
    /// background.
    pub fn dark(a: f64, d: f64, t_a_mag: f64, phi: f64) -> Result<Self> {
        Self::new(a, d, C64::from_polar(t_a_mag, phi), C64::new(1.0, 0.0))
    }

    /// Transmission contrast `t_a − t_b` driving the site field.
    pub fn delta(&self) -> C64 {
        self.t_a - self.t_b
    }
}

/// The three canonical single-species trap configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapKind {
    /// Transparent hole, opaque background, iris at the first Airy minimum.
    Bright,
    /// Clear background, hole transmission lowered to the dark condition
    /// (≈ 0.287), iris at the first Airy minimum.
    Dark287,
    /// Clear background, opaque hole, iris argument at the first zero of J0.
    DarkOpaque,
}

impl TrapKind {
    /// Iris argument `X` of the standard configuration for this kind.
    pub fn iris_argument(self) -> f64 {
        match self {
            TrapKind::Bright | TrapKind::Dark287 => j11(),
            TrapKind::DarkOpaque => j01(),
        }
    }

    /// Standard hole/background transmissions for this kind.
    pub fn mask_transmissions(self) -> (C64, C64) {
        match self {
            TrapKind::Bright => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            TrapKind::Dark287 => {
                let x = j11();
                let t = -j0(x) / (1.0 - j0(x));
                (C64::new(t, 0.0), C64::new(1.0, 0.0))
            }
            TrapKind::DarkOpaque => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        }
    }

    pub fn is_dark(self) -> bool {
        !matches!(self, TrapKind::Bright)
    }

    /// Leading radial dependence of the trap bottom: dark sites confine
    /// quartically (the quadratic field term cancels at the dark condition),
    /// bright sites harmonically.
    pub fn potential_shape(self) -> PotentialShape {
        match self {
            TrapKind::Bright => PotentialShape::Harmonic,
            TrapKind::Dark287 | TrapKind::DarkOpaque => PotentialShape::Quartic,
        }
    }
}

// ---------------------------------------------------------------------------
// Core integrals
// ---------------------------------------------------------------------------

/// `∫₀^b J0(c·z)·J1(d·z) dz` by a truncated double power series, falling
/// back to adaptive quadrature when the series cannot reach ~1e-9 relative
/// precision (large arguments, or heavy cancellation).
///
/// `j_max` bounds the outer (J1) series order; the default is
/// [`DEFAULT_J_MAX`].  Requires `c, d, b_upper ≥ 0` and `j_max ≥ 1`;
/// `b_upper = 0` returns 0.
pub fn finite_bessel_integral(c: f64, d: f64, b_upper: f64, j_max: u32) -> Result<f64> {
    validate_fbi_args(c, d, b_upper)?;
    if j_max == 0 {
        return Err(Error::InvalidArgument("j_max must be at least 1".into()));
    }
    if b_upper == 0.0 {
        return Ok(0.0);
    }
    match fbi_series(c, d, b_upper, j_max) {
        Ok(v) => Ok(v),
        Err(_) => finite_bessel_integral_by_quadrature(c, d, b_upper),
    }
}

/// Reference evaluation of the same integral by adaptive quadrature; used as
/// the series fallback and as an independent cross-check in tests.
pub fn finite_bessel_integral_by_quadrature(c: f64, d: f64, b_upper: f64) -> Result<f64> {
    validate_fbi_args(c, d, b_upper)?;
    if b_upper == 0.0 {
        return Ok(0.0);
    }
    integrate(
        |z| j0(c * z) * j1(d * z),
        0.0,
        b_upper,
        1e-11 * (1.0 + b_upper),
    )
}

fn validate_fbi_args(c: f64, d: f64, b_upper: f64) -> Result<()> {
    for (name, v) in [("c", c), ("d", d), ("b_upper", b_upper)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    Ok(())
}

/// Double series: expand J1(d·z) term-wise and integrate each moment of
/// J0(c·z) as its own power series.  The combined term is
/// `(−1)^{m+n}·(d/2)^{2m+1}·(c/2)^{2n}·b^{2m+2n+2} / (m!(m+1)!(n!)²(2m+2n+2))`.
/// Errors when the outer terms are still growing near `j_max` or the largest
/// intermediate term eats the precision target through cancellation.
fn fbi_series(c: f64, d: f64, b: f64, j_max: u32) -> Result<f64> {
    let q_inner = (0.5 * c * b) * (0.5 * c * b);
    let half_d = 0.5 * d;
    let b2 = b * b;
    let mut base = half_d; // (d/2)^{2m+1} / (m!·(m+1)!) at m = 0
    let mut total = 0.0_f64;
    let mut max_mag = 0.0_f64;
    let mut prev_outer = f64::INFINITY;
    let mut m = 0u32;
    loop {
        // Inner sum over the J0 series: S_m = Σ_n (−1)^n g_n with
        // g_0 = b^{2m+2}/(2m+2).
        let mut g = b2.powi(m as i32 + 1) / (2 * m + 2) as f64;
        let mut s = 0.0_f64;
        let mut sign = 1.0_f64;
        let mut n = 0u32;
        loop {
            s += sign * g;
            let mag = (base * g).abs();
            if mag > max_mag {
                max_mag = mag;
            }
            if g.abs() <= 1e-18 * (1.0 + s.abs()) && n >= 2 {
                break;
            }
            n += 1;
            if n > 300 {
                return Err(Error::Numerical(
                    "inner Bessel series did not converge".into(),
                ));
            }
            g *= q_inner * (2 * m + 2 * n) as f64 / ((n * n) as f64 * (2 * m + 2 * n + 2) as f64);
            sign = -sign;
        }
        let outer = if m % 2 == 0 { base * s } else { -base * s };
        total += outer;
        let mag = outer.abs();
        if m >= 3 && mag <= 1e-16 * total.abs().max(1e-300) {
            break;
        }
        if m >= j_max {
            if mag > 1e-12 * total.abs().max(1e-30) {
                return Err(Error::Numerical(
                    "outer Bessel series truncated before convergence".into(),
                ));
            }
            break;
        }
        if m > j_max / 2 && mag > prev_outer {
            return Err(Error::Numerical(
                "outer Bessel series terms growing; arguments outside series domain".into(),
            ));
        }
        prev_outer = mag;
        m += 1;
        base *= half_d * half_d / ((m * (m + 1)) as f64);
    }
    if max_mag * f64::EPSILON > 0.5e-9 * total.abs().max(1e-300) {
        return Err(Error::Numerical(
            "Bessel series cancellation exceeds the precision target".into(),
        ));
    }
    Ok(total)
}

/// Radial iris kernel `G(v; X) = ∫₀^X J0(v·t)·J1(t) dt`.
///
/// `G(0; X) = 1 − J0(X)`; for the standard iris `X = j_{1,1}` this is the
/// bright-site amplitude gain ≈ 1.403.
pub fn aperture_kernel(v: f64, x_iris: f64) -> Result<f64> {
    finite_bessel_integral(v.abs(), 1.0, x_iris, DEFAULT_J_MAX)
}

/// Axial iris kernel `W(ζ; X) = ∫₀^X J1(t)·e^{−i·ζ·t²/2} dt`.
pub fn axial_kernel(zeta: f64, x_iris: f64) -> Result<C64> {
    if !zeta.is_finite() || !(x_iris.is_finite() && x_iris >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "axial kernel needs finite zeta and non-negative iris argument, got ({zeta}, {x_iris})"
        )));
    }
    integrate_complex(
        |t| C64::from_polar(1.0, -0.5 * zeta * t * t) * j1(t),
        0.0,
        x_iris,
        1e-12,
    )
}

// ---------------------------------------------------------------------------
// Site fields
// ---------------------------------------------------------------------------

/// Focal-plane field of one mask site at reduced radius `v = ρ/a_img`,
/// normalized so the re-imaged uniform background has unit amplitude
/// (magnification factored out):  `A(v) = −[t_b + (t_a − t_b)·G(v; X)]`.
pub fn mask_field_radial(t_a: C64, t_b: C64, x_iris: f64, v: f64) -> Result<C64> {
    let g = aperture_kernel(v, x_iris)?;
    Ok(-(t_b + (t_a - t_b) * g))
}

/// On-axis field of one mask site at reduced defocus `ζ = z/(k·a_img²)`,
/// same normalization as [`mask_field_radial`]:
/// `A(ζ) = −[t_b + (t_a − t_b)·W(ζ; X)]`.
pub fn mask_field_axial(t_a: C64, t_b: C64, x_iris: f64, zeta: f64) -> Result<C64> {
    let w = axial_kernel(zeta, x_iris)?;
    Ok(-(t_b + (t_a - t_b) * w))
}

/// Relative radial intensity `|A(v)|²` of a canonical trap kind, in units of
/// the input (background) intensity.
pub fn trap_radial_intensity(kind: TrapKind, v: f64) -> Result<f64> {
    let (t_a, t_b) = kind.mask_transmissions();
    Ok(mask_field_radial(t_a, t_b, kind.iris_argument(), v)?.norm_sqr())
}

/// Relative on-axis intensity `|A(ζ)|²` of a canonical trap kind.
pub fn trap_axial_intensity(kind: TrapKind, zeta: f64) -> Result<f64> {
    let (t_a, t_b) = kind.mask_transmissions();
    Ok(mask_field_axial(t_a, t_b, kind.iris_argument(), zeta)?.norm_sqr())
}

/// Focal field of a bright site including the relay magnification:
/// `A2/A0 = −(f1/f2)·G(ρ2/a_img; X)`.  With `b_iris = None` the iris sits at
/// the standard first-Airy-minimum radius.
pub fn ag_field_focus(rho2: f64, sys: &SystemSpec, a: f64, b_iris: Option<f64>) -> Result<C64> {
    let x = resolve_iris(sys, a, b_iris)?;
    let v = rho2.abs() / sys.image_radius(a);
    let g = aperture_kernel(v, x)?;
    Ok(C64::new(-sys.f1 / sys.f2 * g, 0.0))
}

/// On-axis field of a bright site versus image-space defocus `z2`:
/// `A(z2)/A0 = −(f1/f2)·W(z2/(k·a_img²); X)`.
pub fn ag_field_axial(z2: f64, sys: &SystemSpec, a: f64, b_iris: Option<f64>) -> Result<C64> {
    let x = resolve_iris(sys, a, b_iris)?;
    let zeta = z2 / sys.axial_scale(a);
    let w = axial_kernel(zeta, x)?;
    Ok(-(C64::new(sys.f1 / sys.f2, 0.0)) * w)
}

fn resolve_iris(sys: &SystemSpec, a: f64, b_iris: Option<f64>) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hole radius must be positive, got {a}"
        )));
    }
    match b_iris {
        None => Ok(j11()),
        Some(b) => {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "iris radius must be positive, got {b}"
                )));
            }
            Ok(sys.iris_argument(a, b))
        }
    }
}

/// Exact center field of a masked site behind an iris of radius `b`:
/// `A(0) = −[t_b + (t_a − t_b)·(1 − J0(X))]`, `X = k·a·b/f1`.
pub fn dark_center_field(mask: &MaskParams, sys: &SystemSpec, b: f64) -> C64 {
    let x = sys.iris_argument(mask.a, b);
    -(mask.t_b + mask.delta() * (1.0 - j0(x)))
}

/// Real hole transmission that nulls the site center for a clear background
/// (`t_b = 1`) and iris radius `b`:  `t_a = −J0(X)/(1 − J0(X))`.
///
/// Errors when `1 − J0(X)` vanishes (iris too small to carry the balancing
/// diffracted wave).
pub fn dark_condition_ta(b: f64, sys: &SystemSpec, a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) || !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidArgument(
            "dark condition needs positive hole and iris radii".into(),
        ));
    }
    let x = sys.iris_argument(a, b);
    let denom = 1.0 - j0(x);
    if denom.abs() < 1e-9 {
        return Err(Error::Infeasible(format!(
            "dark condition singular at iris argument X = {x:.6}: 1 − J0(X) ≈ 0"
        )));
    }
    Ok(-j0(x) / denom)
}

// ---------------------------------------------------------------------------
// Efficiencies, throughput, balancing
// ---------------------------------------------------------------------------

/// Intensity gain of a trap.
///
/// Bright: center intensity over input intensity,
/// `(1 − J0(X))²·(f1/f2)²` — about `1.97·(f1/f2)²` at the standard iris.
/// Dark kinds: height of the crest ringing the dark site relative to the
/// re-imaged background (magnification-independent), found numerically on
/// the radial profile.
pub fn efficiency(kind: TrapKind, sys: &SystemSpec) -> Result<f64> {
    match kind {
        TrapKind::Bright => {
            let g0 = aperture_kernel(0.0, j11())?;
            let m = sys.f1 / sys.f2;
            Ok(g0 * g0 * m * m)
        }
        _ => Ok(dark_crest(kind)?.1),
    }
}

/// Position (units of `a_img`) and relative intensity of the bright crest
/// surrounding a dark site.
pub fn dark_crest(kind: TrapKind) -> Result<(f64, f64)> {
    if !kind.is_dark() {
        return Err(Error::InvalidArgument(
            "crest search applies to dark trap kinds only".into(),
        ));
    }
    // Coarse scan to isolate the global crest, then golden-section refine.
    let mut best = (0.0, f64::MIN);
    for jj in 1..=80 {
        let v = 0.05 * jj as f64;
        let val = trap_radial_intensity(kind, v)?;
        if val > best.1 {
            best = (v, val);
        }
    }
    let f = |v: f64| trap_radial_intensity(kind, v).unwrap_or(f64::MIN);
    let (v, val) = golden_max(f, best.0 - 0.06, best.0 + 0.06, 1e-10);
    Ok((v, val))
}

/// Power fraction of an iris of argument `X` on one hole's Airy pattern:
/// `η(X) = 1 − J0²(X) − J1²(X)`.
pub fn iris_transmission(x_iris: f64) -> f64 {
    let (c0, c1) = (j0(x_iris), j1(x_iris));
    1.0 - c0 * c0 - c1 * c1
}

/// Optical power delivered to the image plane per unit cell, as a fraction
/// of the power incident on the cell:
/// `η(X)·(|t_b|²·(d² − π·a²) + |t_a|²·π·a²)/d²`.
pub fn power_throughput(mask: &MaskParams, x_iris: f64) -> Result<f64> {
    if !(x_iris.is_finite() && x_iris > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "iris argument must be positive, got {x_iris}"
        )));
    }
    let eta = iris_transmission(x_iris);
    let cell = mask.d * mask.d;
    let hole = std::f64::consts::PI * mask.a * mask.a;
    Ok(eta * (mask.t_b.norm_sqr() * (cell - hole) + mask.t_a.norm_sqr() * hole) / cell)
}

/// Variant of the dark mask used alongside bright sites in a dual-species
/// design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DarkMaskVariant {
    /// Dark sites at the scaled transmission (≈ 0.287·t_b), same iris as the
    /// bright sites; crest height equals the background (ε = 1).
    TaScaled,
    /// Opaque dark holes at the J0-zero iris; crest height ε ≈ 1.17 above
    /// background.
    Opaque,
}

/// Background transmission `t_b` that equalizes bright-site and dark-site
/// trap depths for two species with polarizability ratio
/// `R = |alpha_dark/alpha_bright|`:
///
/// `t_b = M0 / (√(1 + R·ε) + M0 − 1)`, `M0 = 1 − J0(j_{1,1})`,
///
/// where `ε` is the dark-crest height of the chosen variant.  Derived from
/// equating `α_b·[(M0 − (M0−1)·t_b)² − t_b²]` (bright depth over the
/// residual background) with `|α_d|·ε·t_b²` (dark crest height).
pub fn dual_species_balance(
    alpha_bright: f64,
    alpha_dark: f64,
    variant: DarkMaskVariant,
) -> Result<f64> {
    if !(alpha_bright.is_finite() && alpha_dark.is_finite()) || alpha_bright == 0.0 {
        return Err(Error::InvalidArgument(
            "polarizabilities must be finite and alpha_bright nonzero".into(),
        ));
    }
    let r = (alpha_dark / alpha_bright).abs();
    let eps = match variant {
        DarkMaskVariant::TaScaled => 1.0,
        DarkMaskVariant::Opaque => dark_crest(TrapKind::DarkOpaque)?.1,
    };
    let m0 = aperture_kernel(0.0, j11())?;
    Ok(m0 / ((1.0 + r * eps).sqrt() + m0 - 1.0))
}

// ---------------------------------------------------------------------------
// Series expansions of the trap wells
// ---------------------------------------------------------------------------

/// Intensity scale of expansion coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Relative to the input (background) intensity — natural for dark
    /// wells, whose center intensity vanishes.
    InputIntensity,
    /// Relative to the trap's own peak — natural for bright wells.
    Peak,
}

/// Even-power expansions of a trap well, radially and axially, in both the
/// native reduced coordinates and equivalent-Gaussian units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    pub kind: TrapKind,
    pub normalization: Normalization,
    /// `I(v) ≈ Σ_j radial_native[j]·v^{2j}`, `v = ρ/a_img`.
    pub radial_native: Vec<f64>,
    /// Same well in waist units: coefficients of `(ρ/w0)^{2j}`.
    pub radial_waist: Vec<f64>,
    /// `I(ζ) ≈ Σ_j axial_native[j]·ζ^{2j}`, `ζ = z/(k·a_img²)`.
    pub axial_native: Vec<f64>,
    /// Same well in Rayleigh units: coefficients of `(z/z_R)^{2j}`.  For the
    /// scaled dark well these are an effective quadratic/quartic pair fitted
    /// over the Rayleigh window rather than a pure Taylor rescale (see
    /// [`expansion_coeffs`]).
    pub axial_rayleigh: Vec<f64>,
    /// Equivalent waist over `a_img` used for `radial_waist`.
    pub w0_over_a: f64,
    /// Rayleigh range in `ζ` units (`= w0_over_a²/2`) used for
    /// `axial_rayleigh`.
    pub zr_native: f64,
}

/// Abscissa cap of the Taylor sampling used for coefficient extraction.
const TAYLOR_V_MAX: f64 = 0.8;
/// Extra even orders carried to absorb truncation error.
const TAYLOR_EXTRA: usize = 4;

/// Extract leading even Taylor coefficients `[c2, c4, …]` of an even
/// function around 0 by sampling `n_terms + TAYLOR_EXTRA` nodes and solving
/// the through-origin Vandermonde system in `u = v²`; the extra orders
/// absorb higher-order truncation (a generalized Richardson elimination).
fn even_taylor(f: &dyn Fn(f64) -> Result<f64>, n_terms: usize) -> Result<Vec<f64>> {
    let m = n_terms + TAYLOR_EXTRA;
    let f0 = f(0.0)?;
    let mut a = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for jj in 1..=m {
        let v = TAYLOR_V_MAX * jj as f64 / m as f64;
        let u = (jj as f64 / m as f64) * (jj as f64 / m as f64);
        a.push((1..=m as i32).map(|p| u.powi(p)).collect::<Vec<_>>());
        rhs.push(f(v)? - f0);
    }
    let c = solve_linear(a, rhs)?;
    Ok((0..n_terms)
        .map(|i| c[i] / TAYLOR_V_MAX.powi(2 * (i as i32 + 1)))
        .collect())
}

/// Effective `(c2, c4)` of `f(z) − f(0) ≈ c2·z² + c4·z⁴` by least squares
/// over `z ∈ [0, window]` (81 uniform samples, basis through the origin).
fn windowed_even_pair(f: &dyn Fn(f64) -> Result<f64>, window: f64) -> Result<(f64, f64)> {
    let n = 80usize;
    let f0 = f(0.0)?;
    let mut s2 = Vec::with_capacity(n + 1);
    let mut s4 = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    for jj in 0..=n {
        let t = jj as f64 / n as f64;
        let z = window * t;
        s2.push(t * t);
        s4.push(t * t * t * t);
        ys.push(f(z)? - f0);
    }
    let c = least_squares(&[s2, s4], &ys)?;
    Ok((c[0] / (window * window), c[1] / window.powi(4)))
}

/// Curvature-matched Gaussian waist of the bright well in units of `a_img`:
/// `w_q = 1/√β2`, `β2 = m2/(4·m0)` with `m_{2j} = ∫₀^{j_{1,1}} t^{2j}·J1 dt`.
fn curvature_waist_units() -> Result<f64> {
    static CACHE: OnceLock<f64> = OnceLock::new();
    if let Some(v) = CACHE.get() {
        return Ok(*v);
    }
    let x = j11();
    let m0 = integrate(|t| j1(t), 0.0, x, 1e-12)?;
    let m2 = integrate(|t| t * t * j1(t), 0.0, x, 1e-12)?;
    let w = 1.0 / (m2 / (4.0 * m0)).sqrt();
    Ok(*CACHE.get_or_init(|| w))
}

/// Calibrated inverted-Gaussian waist of the scaled dark well in units of
/// `a_img`, obtained by fitting `C·(1 − e^{−r²/w²})²` to the analytic radial
/// profile out to just past the crest (≈ 0.944).  Both dark kinds are
/// expressed in this shared unit so their expansions compare directly.
fn dark_fitted_waist_units() -> Result<f64> {
    static CACHE: OnceLock<f64> = OnceLock::new();
    if let Some(v) = CACHE.get() {
        return Ok(*v);
    }
    let n = 335usize;
    let dv = 0.01;
    let radii: Vec<f64> = (0..=n).map(|i| i as f64 * dv).collect();
    let mut values = Vec::with_capacity(n + 1);
    for &v in &radii {
        values.push(trap_radial_intensity(TrapKind::Dark287, v)?);
    }
    let profile = crate::grid::RadialProfile {
        radii,
        values,
        center: (0.0, 0.0),
    };
    let w = crate::metrics::fit_gaussian_waist(&profile)?;
    Ok(*CACHE.get_or_init(|| w))
}

/// Window (fraction of the Rayleigh range) over which the scaled dark well's
/// effective axial pair is fitted for display units.
const DARK_AXIAL_WINDOW_ZR: f64 = 0.85;

/// Even-power expansions of a canonical trap well up to the given order
/// (2, 4, or 6 — the highest power of the reduced coordinate).
///
/// Conventions:
/// * Bright wells are peak-normalized; dark wells are in background units.
/// * The waist behind `radial_waist` is the curvature-matched Gaussian waist
///   for bright (≈ 0.974·a_img); for the scaled dark well the quartic-unit
///   waist `(1/c4)^{1/4}` (analytically the same value); for the opaque dark
///   well the calibrated inverted-Gaussian waist of the scaled dark well
///   (≈ 0.944·a_img), the shared display unit for dark kinds.
/// * `axial_rayleigh` is a pure Taylor rescale by `z_R = w0_over_a²/2`
///   except for [`TrapKind::Dark287`], whose strongly anharmonic well is
///   summarized by an effective quadratic/quartic pair fitted over
///   `0.85·z_R` (entries beyond the quartic are zero).
pub fn expansion_coeffs(kind: TrapKind, order: u32) -> Result<ExpansionCoeffs> {
    if !matches!(order, 2 | 4 | 6) {
        return Err(Error::InvalidArgument(format!(
            "expansion order must be 2, 4 or 6, got {order}"
        )));
    }
    let n_out = (order / 2) as usize;
    let fr = |v: f64| trap_radial_intensity(kind, v);
    let fz = |z: f64| trap_axial_intensity(kind, z);
    let radial_full = even_taylor(&fr, 3)?;
    let axial_full = even_taylor(&fz, 3)?;
    let i0 = trap_radial_intensity(kind, 0.0)?;
    let (normalization, scale) = match kind {
        TrapKind::Bright => (Normalization::Peak, i0),
        _ => (Normalization::InputIntensity, 1.0),
    };
    let mut radial_native = vec![i0 / scale];
    radial_native.extend(radial_full.iter().map(|c| c / scale));
    let mut axial_native = vec![i0 / scale];
    axial_native.extend(axial_full.iter().map(|c| c / scale));

    let w0_over_a = match kind {
        TrapKind::Bright => curvature_waist_units()?,
        TrapKind::Dark287 => {
            let c4 = radial_native[2];
            if !(c4 > 0.0) {
                return Err(Error::Numerical(
                    "scaled dark well lost its quartic confinement".into(),
                ));
            }
            (1.0 / c4).powf(0.25)
        }
        TrapKind::DarkOpaque => dark_fitted_waist_units()?,
    };
    let zr_native = 0.5 * w0_over_a * w0_over_a;

    let radial_waist: Vec<f64> = radial_native
        .iter()
        .enumerate()
        .map(|(jj, c)| c * w0_over_a.powi(2 * jj as i32))
        .collect();
    let axial_rayleigh: Vec<f64> = match kind {
        TrapKind::Dark287 => {
            let (c2, c4) = windowed_even_pair(&fz, DARK_AXIAL_WINDOW_ZR * zr_native)?;
            let mut v = vec![0.0; n_out + 1];
            if n_out >= 1 {
                v[1] = c2 * zr_native * zr_native;
            }
            if n_out >= 2 {
                v[2] = c4 * zr_native.powi(4);
            }
            v
        }
        _ => axial_native
            .iter()
            .enumerate()
            .map(|(jj, c)| c * zr_native.powi(2 * jj as i32))
            .collect(),
    };

    radial_native.truncate(n_out + 1);
    axial_native.truncate(n_out + 1);
    let mut radial_waist = radial_waist;
    radial_waist.truncate(n_out + 1);
    let mut axial_rayleigh = axial_rayleigh;
    axial_rayleigh.truncate(n_out + 1);

    Ok(ExpansionCoeffs {
        kind,
        normalization,
        radial_native,
        radial_waist,
        axial_native,
        axial_rayleigh,
        w0_over_a,
        zr_native,
    })
}

// ---------------------------------------------------------------------------
// Equivalent Gaussian and thermal confinement
// ---------------------------------------------------------------------------

/// Equivalent-Gaussian summary of a trap: calibrated waist `w0`, axial
/// curvature scale `z_r`, and divergence parameter `h`.
///
/// `w0` calibrates the transverse intensity shape.  `z_r` is the Rayleigh
/// range of the curvature-matched waist — for dark wells this can differ
/// slightly from `π·w0²/λ` because the shape-calibrated and
/// curvature-matched waists differ.  The effective axial well scale is
/// `h·z_r`: a true Gaussian gives `h = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussEquiv {
    pub w0: f64,
    pub z_r: f64,
    pub h: f64,
}

/// Equivalent-Gaussian parameters of a canonical trap for hole radius `a`.
///
/// Bright: `w0 ≈ 0.974·a_img`, `h ≈ 1.31`.  Dark kinds: `w0 ≈ 0.944·a_img`
/// (the scaled dark well's inverted-Gaussian calibration, shared by both),
/// with `h` fitted over half a Rayleigh range around the well bottom
/// (`h ≈ 1.00` for the scaled dark well).
pub fn best_fit_waist(kind: TrapKind, a: f64, sys: &SystemSpec) -> Result<GaussEquiv> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hole radius must be positive, got {a}"
        )));
    }
    let a_img = sys.image_radius(a);
    let fz = |z: f64| trap_axial_intensity(kind, z);
    let (w_shape_units, w_curv_units, h) = match kind {
        TrapKind::Bright => {
            let w = curvature_waist_units()?;
            let zr = 0.5 * w * w;
            let c2_native = even_taylor(&fz, 2)?[0];
            let i0 = trap_axial_intensity(kind, 0.0)?;
            let c2_zr = -c2_native / i0 * zr * zr;
            if !(c2_zr > 0.0) {
                return Err(Error::Numerical(
                    "bright well has no axial confinement".into(),
                ));
            }
            (w, w, 1.0 / c2_zr.sqrt())
        }
        TrapKind::Dark287 | TrapKind::DarkOpaque => {
            let w_shape = dark_fitted_waist_units()?;
            let w_curv = match kind {
                TrapKind::Dark287 => curvature_waist_units()?,
                _ => w_shape,
            };
            let zr = 0.5 * w_curv * w_curv;
            // Well bottom in unit-background normalization: fit the
            // curvature over half a Rayleigh range.
            let (c2, _) = windowed_even_pair(&fz, 0.5 * zr)?;
            let c2_zr = c2 * zr * zr;
            if !(c2_zr > 0.0) {
                return Err(Error::Numerical(
                    "dark well has no axial confinement".into(),
                ));
            }
            (w_shape, w_curv, 1.0 / c2_zr.sqrt())
        }
    };
    let w0 = w_shape_units * a_img;
    let w_curv = w_curv_units * a_img;
    Ok(GaussEquiv {
        w0,
        z_r: std::f64::consts::PI * w_curv * w_curv / sys.lambda,
        h,
    })
}

/// Leading-order shape of the radial potential near a trap bottom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialShape {
    Harmonic,
    Quartic,
}

/// Thermal confinement of a trapped atom.
///
/// `omega_rho` is defined only for harmonic radial wells; quartic wells
/// report `None` (no single radial frequency exists) together with the
/// quartic thermal radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementResult {
    /// Thermal radial extent (standard deviation), m.
    pub sigma_rho: f64,
    /// Thermal axial extent (standard deviation), m.
    pub sigma_z: f64,
    /// Radial angular frequency `2/w0·√(U0/m)`, rad/s — harmonic wells only.
    pub omega_rho: Option<f64>,
    /// Axial angular frequency `√(2·U0/m)/(h·z_R)`, rad/s.
    pub omega_z: f64,
}

/// Thermal position spreads and oscillation frequencies for a trap of depth
/// `depth` (J) at temperature `temperature` (K) holding an atom of mass
/// `mass` (kg).
///
/// Harmonic radial: `σ_ρ = w0·√(k_B·T/(2·U0))`.
/// Quartic radial: `σ_ρ = (w0/2)·(k_B·T/U0)^{1/4}`.
/// Axial (always harmonic to leading order): `σ_z = h·z_R·√(k_B·T/(2·U0))`.
pub fn confinement(
    shape: PotentialShape,
    gauss: &GaussEquiv,
    depth: f64,
    temperature: f64,
    mass: f64,
) -> Result<ConfinementResult> {
    for (name, v) in [
        ("depth", depth),
        ("temperature", temperature),
        ("mass", mass),
        ("w0", gauss.w0),
        ("z_r", gauss.z_r),
        ("h", gauss.h),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let ratio = BOLTZMANN * temperature / (2.0 * depth);
    let sigma_z = gauss.h * gauss.z_r * ratio.sqrt();
    let omega_z = (2.0 * depth / mass).sqrt() / (gauss.h * gauss.z_r);
    let (sigma_rho, omega_rho) = match shape {
        PotentialShape::Harmonic => (
            gauss.w0 * ratio.sqrt(),
            Some(2.0 / gauss.w0 * (depth / mass).sqrt()),
        ),
        PotentialShape::Quartic => (
            0.5 * gauss.w0 * (BOLTZMANN * temperature / depth).powf(0.25),
            None,
        ),
    };
    Ok(ConfinementResult {
        sigma_rho,
        sigma_z,
        omega_rho,
        omega_z,
    })
}

// ---------------------------------------------------------------------------
// Array-scale quantities
// ---------------------------------------------------------------------------

/// Self-imaging (Talbot) length of a periodic array of pitch `d_image`:
/// `z_T = 2·d²/λ`.
pub fn talbot_length(d_image: f64, lambda: f64) -> Result<f64> {
    if !(d_image.is_finite() && d_image > 0.0) || !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(
            "Talbot length needs positive pitch and wavelength".into(),
        ));
    }
    Ok(2.0 * d_image * d_image / lambda)
}

/// Spectral half-width over which a masked array stays dark, in two common
/// conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralHalfwidth {
    /// `(π·λ/2)·(a²/d²)·(f2²/f1²)` — hole/pitch of the physical mask with
    /// the relay demagnification applied.
    pub with_magnification: f64,
    /// `(π·λ/2)·(a²/d²)` — pure hole-to-pitch ratio (identical at mask and
    /// image plane).
    pub pitch_ratio_only: f64,
}

/// Wavelength detuning half-width of the dark condition for a mask in a
/// given relay.
pub fn spectral_halfwidth(mask: &MaskParams, sys: &SystemSpec) -> SpectralHalfwidth {
    let base = 0.5 * std::f64::consts::PI * sys.lambda * (mask.a / mask.d) * (mask.a / mask.d);
    let m = sys.magnification();
    SpectralHalfwidth {
        with_magnification: base * m * m,
        pitch_ratio_only: base,
    }
}

/// Physical radii of an annular-zone Fourier filter for hole radius `a`:
/// the central disk `(0, b1)` plus `n_rings` annuli `(b_{2n}, b_{2n+1})`
/// with edges at consecutive zeros of J1 (`b_j = j_{1,j}·f1/(a·k)`).
pub fn zone_filter_radii(a: f64, sys: &SystemSpec, n_rings: u32) -> Result<Vec<(f64, f64)>> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hole radius must be positive, got {a}"
        )));
    }
    let unit = sys.f1 / (a * sys.k());
    let mut out = vec![(0.0, bessel_zero(1, 1) * unit)];
    for n in 1..=n_rings {
        out.push((
            bessel_zero(1, 2 * n) * unit,
            bessel_zero(1, 2 * n + 1) * unit,
        ));
    }
    Ok(out)
}

/// Gains of an annular-zone filter over the single-disk iris for a bright
/// trap, all expressed as ratios zone/standard.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneEnhancement {
    /// Center-intensity gain ratio.
    pub efficiency_ratio: f64,
    /// Radial tightening `w_std/w_zone` (equal-depth thermal σ ratio).
    pub radial_sigma_ratio: f64,
    /// Axial tightening: ratio of axial curvature lengths.
    pub axial_sigma_ratio: f64,
}

/// Compare a bright trap formed through an annular-zone filter (central disk
/// plus `n_rings` in-phase Airy rings) against the standard single-disk
/// iris.  `n_rings = 0` returns unit ratios.
pub fn zone_enhancement(n_rings: u32) -> Result<ZoneEnhancement> {
    if n_rings == 0 {
        return Ok(ZoneEnhancement {
            efficiency_ratio: 1.0,
            radial_sigma_ratio: 1.0,
            axial_sigma_ratio: 1.0,
        });
    }
    let mut segments = vec![(0.0, bessel_zero(1, 1))];
    for n in 1..=n_rings {
        segments.push((bessel_zero(1, 2 * n), bessel_zero(1, 2 * n + 1)));
    }
    // Aperture moments q_{2j} = ∫ t^{2j}·J1(t) dt over the pass segments give
    // the peak-normalized curvatures exactly:
    //   radial  I(v) ≈ 1 − v²·q2/(2·q0)
    //   axial   I(ζ) ≈ 1 − ζ²·(q0·q4 − q2²)/(4·q0²)
    let moments = |segs: &[(f64, f64)]| -> Result<[f64; 3]> {
        let mut q = [0.0; 3];
        for &(lo, hi) in segs {
            for (jj, slot) in q.iter_mut().enumerate() {
                let tol = 1e-12 * hi.powi(2 * jj as i32).max(1.0);
                *slot += integrate(|t| t.powi(2 * jj as i32) * j1(t), lo, hi, tol)?;
            }
        }
        Ok(q)
    };
    let [q0_zone, q2_zone, q4_zone] = moments(&segments)?;
    let [q0_std, q2_std, q4_std] = moments(&[(0.0, j11())])?;
    let efficiency_ratio = (q0_zone / q0_std) * (q0_zone / q0_std);
    let c2r_zone = q2_zone / (2.0 * q0_zone);
    let c2r_std = q2_std / (2.0 * q0_std);
    let c2z_zone = (q0_zone * q4_zone - q2_zone * q2_zone) / (4.0 * q0_zone * q0_zone);
    let c2z_std = (q0_std * q4_std - q2_std * q2_std) / (4.0 * q0_std * q0_std);

    if !(c2r_zone > 0.0 && c2r_std > 0.0 && c2z_zone > 0.0 && c2z_std > 0.0) {
        return Err(Error::Numerical(
            "zone filter comparison lost confining curvature".into(),
        ));
    }
    Ok(ZoneEnhancement {
        efficiency_ratio,
        radial_sigma_ratio: (c2r_zone / c2r_std).sqrt(),
        axial_sigma_ratio: (c2z_zone / c2z_std).sqrt(),
    })
}
