//! Per-site trap metrics extracted from sampled intensity data: darkness
//! scores, waist and power-law fits, the axial divergence parameter, and
//! correlation/revival helpers for periodic self-imaging scans.
//!
//! Everything here operates on plain profiles or arrays and is independent of
//! how the data was produced (closed-form evaluation or numerical
//! propagation), so the same extraction runs against both engines.

use crate::error::{Error, Result};
use crate::fit::{golden_min, least_squares};
use crate::grid::{AxialProfile, RadialProfile};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

/// Window for the dark-trap waist fit, as a multiple of the crest radius.
///
/// The inverted-Gaussian model is only meaningful out to just past the first
/// bright crest surrounding a dark site; beyond it the profile rolls over
/// into ring structure the model cannot follow.  The factor corresponds to
/// fitting out to where the model curve itself has essentially saturated.
const DARK_WINDOW_OVER_CREST: f64 = 1.1305;

/// Fraction of the profile maximum defining the core of a bright-trap fit.
const BRIGHT_CORE_FRACTION: f64 = std::f64::consts::E; // core: I >= peak / e

/// Fit an equivalent Gaussian waist to a radial intensity profile.
///
/// The profile type is detected from its center value: if the innermost bin
/// holds at least half the profile maximum the site is treated as bright and
/// fit with a Gaussian `A·exp(−2r²/w²)` (in the log domain, with a quartic
/// correction term so the near-core deviation does not bias the waist);
/// otherwise it is treated as dark and fit with an inverted-Gaussian
/// intensity `C·(1 − exp(−r²/w²))²` out to just past the first crest.
///
/// Returns the waist in the same units as `profile.radii`.
///
/// Errors: fewer than 8 bins, non-positive data, or a profile whose core
/// leaves fewer points than the model parameters.
pub fn fit_gaussian_waist(profile: &RadialProfile) -> Result<f64> {
    let n = profile.radii.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "waist fit needs at least 8 radial bins, got {n}"
        )));
    }
    let vmax = profile.values.iter().cloned().fold(f64::MIN, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::InvalidArgument(
            "waist fit needs a positive profile maximum".into(),
        ));
    }
    if profile.values[0] >= 0.5 * vmax {
        fit_bright_waist(profile)
    } else {
        fit_dark_waist(profile)
    }
}

fn fit_bright_waist(profile: &RadialProfile) -> Result<f64> {
    let peak = profile.values[0];
    let cut = peak / BRIGHT_CORE_FRACTION;
    // Contiguous core from the center out: bins with I >= peak/e.
    let mut core = 0usize;
    while core < profile.values.len() && profile.values[core] >= cut {
        core += 1;
    }
    if core < 4 {
        return Err(Error::InvalidArgument(format!(
            "bright waist fit needs at least 4 bins inside the 1/e core, got {core}"
        )));
    }
    let scale = profile.radii[core - 1];
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(
            "bright waist fit core has zero radius".into(),
        ));
    }
    let xs: Vec<f64> = profile.radii[..core]
        .iter()
        .map(|&r| (r / scale) * (r / scale))
        .collect();
    let ys: Vec<f64> = profile.values[..core].iter().map(|&v| v.ln()).collect();
    let cols = vec![
        vec![1.0; core],
        xs.clone(),
        xs.iter().map(|&x| x * x).collect(),
    ];
    let c = least_squares(&cols, &ys)?;
    if c[1] >= 0.0 {
        return Err(Error::Numerical(
            "bright waist fit: profile does not decay from the center".into(),
        ));
    }
    Ok(scale * (-2.0 / c[1]).sqrt())
}

fn fit_dark_waist(profile: &RadialProfile) -> Result<f64> {
    let n = profile.values.len();
    let i_crest = profile
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if i_crest == 0 {
        return Err(Error::InvalidArgument(
            "dark waist fit: profile maximum at the center".into(),
        ));
    }
    // Fit window: out to just past the crest; a profile still rising at its
    // outer edge (no interior crest) is fit over its whole extent.
    let window_r = if i_crest == n - 1 {
        profile.radii[n - 1]
    } else {
        DARK_WINDOW_OVER_CREST * profile.radii[i_crest]
    };
    let pts: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&profile.values)
        .filter(|(&r, _)| r <= window_r)
        .map(|(&r, &v)| (r, v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "dark waist fit needs at least 8 bins inside the crest window, got {}",
            pts.len()
        )));
    }
    let r_hi = pts.iter().map(|p| p.0).fold(0.0_f64, f64::max);
    // For each candidate waist the amplitude C is solved linearly; the outer
    // 1-D search over w is golden-section on the residual.
    let sse = |w: f64| -> f64 {
        let mut gg = 0.0;
        let mut gi = 0.0;
        for &(r, _) in &pts {
            let g = 1.0 - (-r * r / (w * w)).exp();
            gg += (g * g) * (g * g);
        }
        for &(r, v) in &pts {
            let g = 1.0 - (-r * r / (w * w)).exp();
            gi += g * g * v;
        }
        let c = if gg > 0.0 { gi / gg } else { 0.0 };
        pts.iter()
            .map(|&(r, v)| {
                let g = 1.0 - (-r * r / (w * w)).exp();
                let m = c * g * g;
                (v - m) * (v - m)
            })
            .sum()
    };
    let (w, _) = golden_min(sse, 0.05 * r_hi, 1.2 * r_hi, 1e-10 * r_hi);
    Ok(w)
}

/// Axial divergence parameter `h` of a trap, from a scanned on-axis
/// intensity profile and the trap's equivalent waist.
///
/// `h` rescales the Rayleigh range `z_R = π·w0²/λ` so that near its axial
/// extremum the profile behaves as `1 ∓ (z−z0)²/(h·z_R)²` relative to the
/// local intensity scale; a true Gaussian focus gives `h = 1`, broader axial
/// wells give `h > 1`.
///
/// Procedure: the profile is classified as a dipped well (fit around the
/// global minimum) or a focused peak (fit around the global maximum) by
/// whichever extremum lies strictly inside the scan; if both do, it counts
/// as dipped when it falls below half its maximum (a dark or displaced
/// well).  The position is refined parabolically, then `q0 + q2·u + q4·u²`
/// (u = (z−z0)²) is fit over `|z−z0| ≤ 0.4·z_R`.  The curvature is
/// normalized by the peak value for bright profiles and by the well bottom
/// for dipped profiles — unless the bottom is essentially zero (below 0.5 %
/// of the maximum), in which case the profile is assumed normalized to a
/// unit background and the scale 1 is used.
///
/// Errors: scan not covering `±0.3·z_R` around the extremum, extremum on the
/// scan edge, or non-confining curvature.
pub fn divergence_parameter(axial: &AxialProfile, w0: f64, lambda: f64) -> Result<f64> {
    if !(w0 > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidArgument(
            "divergence parameter needs positive waist and wavelength".into(),
        ));
    }
    let n = axial.z_values.len();
    if n < 9 {
        return Err(Error::InvalidArgument(format!(
            "divergence parameter needs at least 9 axial samples, got {n}"
        )));
    }
    let zr = std::f64::consts::PI * w0 * w0 / lambda;
    let vmax = axial.values.iter().cloned().fold(f64::MIN, f64::max);
    let vmin = axial.values.iter().cloned().fold(f64::MAX, f64::min);
    if !(vmax > 0.0) {
        return Err(Error::InvalidArgument(
            "divergence parameter needs positive intensities".into(),
        ));
    }
    let i_min = axial
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let i_max = axial
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let interior = |i: usize| i != 0 && i != n - 1;
    let dipped = match (interior(i_min), interior(i_max)) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => vmin < 0.5 * vmax,
        (false, false) => {
            return Err(Error::Range(
                "axial extremum lies on the scan edge; extend the scan".into(),
            ))
        }
    };
    let i0 = if dipped { i_min } else { i_max };
    let z0 = refine_vertex(
        &axial.z_values[i0 - 1..=i0 + 1],
        &axial.values[i0 - 1..=i0 + 1],
    )
    .0;
    if (axial.z_values[n - 1] - z0) < 0.3 * zr || (z0 - axial.z_values[0]) < 0.3 * zr {
        return Err(Error::Range(format!(
            "axial scan must cover at least ±0.3·z_R = ±{:.3e} around the extremum",
            0.3 * zr
        )));
    }
    let window = 0.4 * zr;
    let mut us = Vec::new();
    let mut ys = Vec::new();
    let (mut n_left, mut n_right) = (0usize, 0usize);
    for (z, v) in axial.z_values.iter().zip(&axial.values) {
        let dz = z - z0;
        if dz.abs() <= window {
            us.push((dz / window) * (dz / window));
            ys.push(*v);
            if dz < 0.0 {
                n_left += 1;
            } else {
                n_right += 1;
            }
        }
    }
    if n_left < 3 || n_right < 3 {
        return Err(Error::Range(
            "too few axial samples inside the curvature window".into(),
        ));
    }
    let cols = vec![
        vec![1.0; us.len()],
        us.clone(),
        us.iter().map(|&u| u * u).collect(),
    ];
    let c = least_squares(&cols, &ys)?;
    let q0 = c[0];
    let q2 = c[1] / (window * window);
    let c2 = if dipped {
        let scale = if q0 >= 0.005 * vmax { q0 } else { 1.0 };
        if q2 <= 0.0 {
            return Err(Error::Numerical(
                "axial profile has no confining curvature at its minimum".into(),
            ));
        }
        q2 * zr * zr / scale
    } else {
        if q0 <= 0.0 || q2 >= 0.0 {
            return Err(Error::Numerical(
                "axial profile has no confining curvature at its peak".into(),
            ));
        }
        -q2 * zr * zr / q0
    };
    Ok(1.0 / c2.sqrt())
}

/// Fit `I(r) ≈ A·r^α + B` to the low-intensity region of a radial profile
/// and return the exponent `α`.
///
/// Only bins with `I ≤ clip_fraction · max(I)` enter the fit (default choice
/// in callers: 1/e), isolating the confining core of a dark site from its
/// crest and wings.  For each candidate exponent the amplitude and offset
/// are solved linearly; the exponent itself is found by golden-section
/// search on `α ∈ [0.25, 8.5]`.
///
/// Errors: `clip_fraction` outside (0, 1], or fewer than 8 bins below the
/// clip level.
pub fn fit_power_law(profile: &RadialProfile, clip_fraction: f64) -> Result<f64> {
    if !(clip_fraction > 0.0 && clip_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "clip fraction must lie in (0, 1], got {clip_fraction}"
        )));
    }
    let vmax = profile.values.iter().cloned().fold(f64::MIN, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::InvalidArgument(
            "power-law fit needs a positive profile maximum".into(),
        ));
    }
    let cut = clip_fraction * vmax;
    let pts: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&profile.values)
        .filter(|(_, &v)| v <= cut)
        .map(|(&r, &v)| (r, v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "power-law fit needs at least 8 bins below the clip level, got {}",
            pts.len()
        )));
    }
    let r_scale = pts.iter().map(|p| p.0).fold(0.0_f64, f64::max);
    if !(r_scale > 0.0) {
        return Err(Error::InvalidArgument(
            "power-law fit needs points at nonzero radius".into(),
        ));
    }
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let sse = |alpha: f64| -> f64 {
        let basis: Vec<f64> = pts.iter().map(|p| (p.0 / r_scale).powf(alpha)).collect();
        let cols = vec![basis.clone(), vec![1.0; basis.len()]];
        match least_squares(&cols, &ys) {
            Ok(c) => pts
                .iter()
                .zip(&basis)
                .map(|(&(_, v), &g)| {
                    let m = c[0] * g + c[1];
                    (v - m) * (v - m)
                })
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let (alpha, _) = golden_min(sse, 0.25, 8.5, 1e-7);
    Ok(alpha)
}

/// Residual-intensity score of a dark site: mean intensity inside a probe
/// disk divided by the median intensity in a reference annulus of radii
/// `[2, 2.5] × site_radius` around the same center.
///
/// `center` is in meters, in the same centered coordinates as
/// [`crate::grid::Field`] (pixel `(ix, iy)` sits at
/// `((ix − nx/2)·dx, (iy − ny/2)·dy)`).  The median reference makes the
/// score robust against the bright crests that ring a dark site.
///
/// Errors: probe touching the reference annulus (`probe_radius ≥
/// 2·site_radius`), an empty probe or annulus, or a vanishing reference.
pub fn site_darkness(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    probe_radius: f64,
    site_radius: f64,
) -> Result<f64> {
    if !(probe_radius > 0.0 && site_radius > 0.0) {
        return Err(Error::InvalidArgument(
            "site darkness needs positive probe and site radii".into(),
        ));
    }
    if probe_radius >= 2.0 * site_radius {
        return Err(Error::InvalidArgument(format!(
            "probe radius {probe_radius:.3e} reaches the reference annulus (inner radius {:.3e})",
            2.0 * site_radius
        )));
    }
    let (ny, nx) = intensity.dim();
    let (r_in, r_out) = (2.0 * site_radius, 2.5 * site_radius);
    let mut probe_sum = 0.0;
    let mut probe_n = 0usize;
    let mut annulus = Vec::new();
    for iy in 0..ny {
        let y = (iy as f64 - (ny / 2) as f64) * dy - center.1;
        for ix in 0..nx {
            let x = (ix as f64 - (nx / 2) as f64) * dx - center.0;
            let r = (x * x + y * y).sqrt();
            if r <= probe_radius {
                probe_sum += intensity[[iy, ix]];
                probe_n += 1;
            } else if r >= r_in && r <= r_out {
                annulus.push(intensity[[iy, ix]]);
            }
        }
    }
    if probe_n == 0 {
        return Err(Error::Range("probe disk contains no pixels".into()));
    }
    if annulus.len() < 8 {
        return Err(Error::Range(format!(
            "reference annulus contains only {} pixels; need at least 8",
            annulus.len()
        )));
    }
    annulus.sort_by(f64::total_cmp);
    let m = annulus.len();
    let reference = if m % 2 == 1 {
        annulus[m / 2]
    } else {
        0.5 * (annulus[m / 2 - 1] + annulus[m / 2])
    };
    if !(reference > 0.0) {
        return Err(Error::Numerical(
            "reference annulus intensity is not positive".into(),
        ));
    }
    Ok(probe_sum / probe_n as f64 / reference)
}

/// Zero-mean normalized cross-correlation of two equally shaped images.
///
/// Returns a value in `[−1, 1]`; errors if the shapes differ or either image
/// has zero variance.
pub fn ncc(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidArgument(format!(
            "ncc shape mismatch: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let n = a.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (u, v) = (x - ma, y - mb);
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::Numerical(
            "ncc undefined for a constant image".into(),
        ));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Parabolic vertex through three points `(x[i], y[i])`.  Returns `(x*, y*)`.
/// Degenerate (collinear) points return the middle sample unchanged.
fn refine_vertex(x: &[f64], y: &[f64]) -> (f64, f64) {
    debug_assert_eq!(x.len(), 3);
    debug_assert_eq!(y.len(), 3);
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv.abs() < 1e-300 {
        return (x1, y1);
    }
    let xv = 0.5 * (x0 + x1 - d01 / curv);
    let xv = xv.clamp(x0, x2);
    let yv = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
    (xv, yv)
}

/// Locate the revival of a similarity score along a scan: the global maximum
/// of `score` refined parabolically against its neighbors.
///
/// Returns `(z*, score*)`.  Errors if the maximum sits on the scan edge
/// (the scan window must bracket the revival) or the inputs are degenerate.
pub fn locate_revival(z: &[f64], score: &[f64]) -> Result<(f64, f64)> {
    if z.len() != score.len() || z.len() < 3 {
        return Err(Error::InvalidArgument(
            "revival scan needs equally sized z and score lists of length >= 3".into(),
        ));
    }
    let imax = score
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if imax == 0 || imax == z.len() - 1 {
        return Err(Error::Range(
            "similarity maximum lies on the scan edge; widen the scan range".into(),
        ));
    }
    Ok(refine_vertex(
        &z[imax - 1..=imax + 1],
        &score[imax - 1..=imax + 1],
    ))
}

/// Peak-to-valley modulation contrast `(max − min)/(max + min)` of a sampled
/// curve.  Errors on empty input or a non-positive `max + min`.
pub fn modulation_contrast(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "contrast of an empty curve is undefined".into(),
        ));
    }
    let vmax = values.iter().cloned().fold(f64::MIN, f64::max);
    let vmin = values.iter().cloned().fold(f64::MAX, f64::min);
    if vmax + vmin <= 0.0 {
        return Err(Error::Numerical(
            "contrast undefined: max + min is not positive".into(),
        ));
    }
    Ok((vmax - vmin) / (vmax + vmin))
}

/// Per-site summary written by the simulation front end.  Fields that a
/// given trap type does not define (e.g. a radial frequency for a quartic
/// well) are stored as NaN and serialized as empty CSV cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapMetrics {
    pub center_x: f64,
    pub center_y: f64,
    pub darkness: f64,
    pub w0_fit: f64,
    pub alpha_fit: f64,
    pub h_fit: f64,
    pub u0_uk: f64,
    pub omega_rho_hz: f64,
    pub omega_z_hz: f64,
}

/// Write per-site metrics as CSV with a fixed header; NaN fields become
/// empty cells.  Output is byte-deterministic for identical inputs.
pub fn write_metrics_csv(path: &Path, rows: &[TrapMetrics]) -> Result<()> {
    let mut out = String::from(
        "center_x,center_y,darkness,w0_fit,alpha_fit,h_fit,U0_uK,omega_rho_Hz,omega_z_Hz\n",
    );
    for r in rows {
        let fields = [
            r.center_x,
            r.center_y,
            r.darkness,
            r.w0_fit,
            r.alpha_fit,
            r.h_fit,
            r.u0_uk,
            r.omega_rho_hz,
            r.omega_z_hz,
        ];
        let cells: Vec<String> = fields
            .iter()
            .map(|v| {
                if v.is_finite() {
                    format!("{v:e}")
                } else {
                    String::new()
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn profile_from_fn(f: impl Fn(f64) -> f64, r_max: f64, n: usize) -> RadialProfile {
        let radii: Vec<f64> = (0..n).map(|i| i as f64 * r_max / (n - 1) as f64).collect();
        let values = radii.iter().map(|&r| f(r)).collect();
        RadialProfile {
            radii,
            values,
            center: (0.0, 0.0),
        }
    }

    #[test]
    fn bright_waist_recovers_gaussian() {
        let w = 0.974e-6;
        let p = profile_from_fn(|r| 2.0 * (-2.0 * r * r / (w * w)).exp(), 3e-6, 120);
        let fitted = fit_gaussian_waist(&p).unwrap();
        assert_abs_diff_eq!(fitted, w, epsilon = 1e-4 * w);
    }

    #[test]
    fn dark_waist_recovers_inverted_gaussian() {
        let w = 0.943e-6;
        let p = profile_from_fn(
            |r| {
                let g = 1.0 - (-r * r / (w * w)).exp();
                1.06 * g * g
            },
            3.2e-6,
            160,
        );
        let fitted = fit_gaussian_waist(&p).unwrap();
        assert_abs_diff_eq!(fitted, w, epsilon = 1e-3 * w);
    }

    #[test]
    fn waist_fit_rejects_tiny_profiles() {
        let p = profile_from_fn(|r| (-r * r).exp(), 1.0, 5);
        assert!(fit_gaussian_waist(&p).is_err());
    }

    #[test]
    fn power_law_recovers_monomials() {
        for &alpha in &[2.0, 4.0, 6.0] {
            let p = profile_from_fn(|r| r.powf(alpha), 1.0, 200);
            let fitted = fit_power_law(&p, 1.0 / std::f64::consts::E).unwrap();
            assert_abs_diff_eq!(fitted, alpha, epsilon = 2e-3);
        }
    }

    #[test]
    fn power_law_needs_points_below_clip() {
        // Clip so aggressive that fewer than 8 bins qualify.
        let p = profile_from_fn(|r| r * r, 1.0, 100);
        let err = fit_power_law(&p, 1e-9).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn divergence_parameter_is_one_for_gaussian_focus() {
        let w0 = 1.0e-6;
        let lambda = 808e-9;
        let zr = std::f64::consts::PI * w0 * w0 / lambda;
        let n = 201;
        let z_values: Vec<f64> = (0..n)
            .map(|i| (i as f64 / (n - 1) as f64 - 0.5) * 2.0 * 0.8 * zr)
            .collect();
        let values = z_values
            .iter()
            .map(|&z| 1.0 / (1.0 + (z / zr) * (z / zr)))
            .collect();
        let p = AxialProfile::new(z_values, values).unwrap();
        let h = divergence_parameter(&p, w0, lambda).unwrap();
        assert_abs_diff_eq!(h, 1.0, epsilon = 0.01);
    }

    #[test]
    fn divergence_parameter_handles_displaced_minimum() {
        let w0 = 1.0e-6;
        let lambda = 808e-9;
        let zr = std::f64::consts::PI * w0 * w0 / lambda;
        let z0 = -0.2 * zr;
        let n = 221;
        let z_values: Vec<f64> = (0..n)
            .map(|i| (i as f64 / (n - 1) as f64 - 0.5) * 2.0 * 0.9 * zr)
            .collect();
        // Quadratic well with a bottom well above the zero-background cut.
        let bottom = 0.04;
        let curv = 3.0 / (zr * zr);
        let values = z_values
            .iter()
            .map(|&z| bottom + curv * (z - z0) * (z - z0))
            .collect();
        let p = AxialProfile::new(z_values, values).unwrap();
        let h = divergence_parameter(&p, w0, lambda).unwrap();
        // c2 = curv·zr²/bottom = 3/0.04 = 75 → h = 1/√75.
        assert_abs_diff_eq!(h, 1.0 / 75.0_f64.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn divergence_parameter_needs_span() {
        let w0 = 1.0e-6;
        let lambda = 808e-9;
        let zr = std::f64::consts::PI * w0 * w0 / lambda;
        let n = 31;
        let z_values: Vec<f64> = (0..n)
            .map(|i| (i as f64 / (n - 1) as f64 - 0.5) * 0.2 * zr)
            .collect();
        let values = z_values.iter().map(|&z| 1.0 - (z / zr) * (z / zr)).collect();
        let p = AxialProfile::new(z_values, values).unwrap();
        assert!(matches!(
            divergence_parameter(&p, w0, lambda),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn site_darkness_scores_synthetic_site() {
        let n = 128;
        let dx = 0.1e-6;
        let a_img = 1.0e-6;
        let mut img = Array2::zeros((n, n));
        for iy in 0..n {
            for ix in 0..n {
                let x = (ix as f64 - (n / 2) as f64) * dx;
                let y = (iy as f64 - (n / 2) as f64) * dx;
                let r = (x * x + y * y).sqrt();
                // Unit background with a clean dark hole of radius a_img.
                img[[iy, ix]] = if r < a_img { 0.01 } else { 1.0 };
            }
        }
        let d = site_darkness(&img, dx, dx, (0.0, 0.0), 0.5 * a_img, a_img).unwrap();
        assert_abs_diff_eq!(d, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn site_darkness_rejects_probe_touching_annulus() {
        let img = Array2::from_elem((32, 32), 1.0);
        let err = site_darkness(&img, 1.0, 1.0, (0.0, 0.0), 2.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn ncc_of_identical_images_is_one() {
        let a = Array2::from_shape_fn((16, 16), |(i, j)| (i * 31 + j * 7) as f64);
        assert_abs_diff_eq!(ncc(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let b = a.mapv(|v| 3.0 * v + 10.0);
        assert_abs_diff_eq!(ncc(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ncc_rejects_constant_image() {
        let a = Array2::from_elem((8, 8), 2.0);
        let b = Array2::from_shape_fn((8, 8), |(i, _)| i as f64);
        assert!(ncc(&a, &b).is_err());
    }

    #[test]
    fn revival_location_is_refined() {
        let z: Vec<f64> = (0..21).map(|i| i as f64 * 0.1).collect();
        let score: Vec<f64> = z.iter().map(|&x| 1.0 - (x - 1.03) * (x - 1.03)).collect();
        let (zstar, sstar) = locate_revival(&z, &score).unwrap();
        assert_abs_diff_eq!(zstar, 1.03, epsilon = 1e-9);
        assert_abs_diff_eq!(sstar, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn contrast_of_modulated_curve() {
        let v = [1.0, 3.0, 1.0, 3.0];
        assert_abs_diff_eq!(modulation_contrast(&v).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn metrics_csv_is_deterministic_and_handles_nan() {
        let rows = vec![TrapMetrics {
            center_x: 1.0e-6,
            center_y: -2.0e-6,
            darkness: 1e-3,
            w0_fit: 0.97e-6,
            alpha_fit: f64::NAN,
            h_fit: 1.3,
            u0_uk: 100.0,
            omega_rho_hz: 2.0e4,
            omega_z_hz: 3.0e3,
        }];
        let dir = std::env::temp_dir().join(format!("agtrap-metrics-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("metrics.csv");
        write_metrics_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "center_x,center_y,darkness,w0_fit,alpha_fit,h_fit,U0_uK,omega_rho_Hz,omega_z_Hz\n"
        ));
        assert!(text.contains(",,"), "NaN should serialize as empty cell");
        write_metrics_csv(&path, &rows).unwrap();
        let text2 = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, text2);
        std::fs::remove_dir_all(&dir).ok();
    }
}
