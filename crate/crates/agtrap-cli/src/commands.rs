//! Command implementations: orchestration, measurement, artifact writing.
//!
//! Exit-code contract: configuration and validation problems surface as
//! [`CliError::Config`] (exit 2) before any file is created; everything after
//! validation — propagation, fitting, artifact I/O — surfaces as
//! [`CliError::Runtime`] (exit 3).

use std::fmt::Write as _;
use std::path::Path;

use agtrap::analytic::{
    best_fit_waist, confinement, dark_condition_ta, dual_species_balance, efficiency,
    iris_transmission, talbot_length, trap_radial_intensity, ag_field_focus, DarkMaskVariant,
    GaussEquiv, MaskParams, PotentialShape, SystemSpec, TrapKind, BOLTZMANN,
};
use agtrap::grid::{radial_profile, AxialProfile, Field, RadialProfile};
use agtrap::incoherent::{incoherent_volume, spectral_components, SourceSpec};
use agtrap::metrics::{
    divergence_parameter, fit_gaussian_waist, fit_power_law, locate_revival, ncc, site_darkness,
    write_metrics_csv, TrapMetrics,
};
use agtrap::optics::{axial_scan, propagate_4f, render_mask};
use agtrap::special::bessel_zero;
use agtrap::sweep::darkness_map;
use agtrap::io;
use ndarray::{s, Array2};
use serde::Serialize;

use crate::config::{
    self, FilterBlock, MaskBlock, MaskKind, SimulateConfig, SourceMode, SweepConfig, TalbotConfig,
};
use crate::RunArgs;

/// Atomic mass unit, kg (CODATA 2022).
const AMU: f64 = 1.660_539_068_92e-27;

/// Failure channel of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments — exit 2, nothing written.
    Config(String),
    /// Numerical or I/O failure after validation — exit 3.
    Runtime(String),
}

pub type CmdResult = Result<(), CliError>;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &str,
    cfg: &C,
    seed: u64,
    verify_fft: bool,
) -> CmdResult {
    let manifest = serde_json::json!({
        "command": command,
        "toolkit_version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "verify_fft": verify_fft,
        "config": cfg,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
    std::fs::write(dir.join("manifest.json"), text + "\n").map_err(runtime)?;
    Ok(())
}

/// Lattice-vs-grid sanity shared by `simulate` and `talbot`: every hole must
/// fit inside the raster with margin and span at least a few samples.
fn check_fit(mask: &MaskBlock, grid: &config::GridBlock) -> CmdResult {
    let pitch = grid.pitch();
    if mask.a_m < 4.0 * pitch {
        return Err(CliError::Config(format!(
            "mask.a_m ({:.3e} m) spans fewer than 4 grid samples at pitch {:.3e} m; \
             raise grid.n or shrink grid.extent_m",
            mask.a_m, pitch
        )));
    }
    let n_max = mask.nx_sites.max(mask.ny_sites) as f64;
    let half_span = 0.5 * (n_max - 1.0) * mask.d_m + mask.a_m;
    if half_span > 0.475 * grid.extent_m {
        return Err(CliError::Config(format!(
            "mask lattice (half span {half_span:.3e} m) does not fit inside \
             grid.extent_m = {:.3e} m with margin",
            grid.extent_m
        )));
    }
    Ok(())
}

/// Image-side trap centers, site by site in mask row-major order.  The 4f
/// relay inverts the image, so a mask site at `c` lands at `−(f2/f1)·c`.
fn image_site_centers(mask: &MaskBlock, mag: f64) -> Vec<(f64, f64)> {
    let (nxs, nys) = (mask.nx_sites as usize, mask.ny_sites as usize);
    let mut out = Vec::with_capacity(nxs * nys);
    for iy in 0..nys {
        for ix in 0..nxs {
            let cx = (ix as f64 - 0.5 * (nxs - 1) as f64) * mask.d_m;
            let cy = (iy as f64 - 0.5 * (nys - 1) as f64) * mask.d_m;
            out.push((-mag * cx, -mag * cy));
        }
    }
    out
}

/// Square sub-image of half-width `half_m` about `center`, with the center's
/// residual offset expressed in the crop's own centered coordinates.  `None`
/// when the window would leave the grid or holds too few samples.
fn crop_around(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    half_m: f64,
) -> Option<(Array2<f64>, (f64, f64))> {
    let (ny, nx) = intensity.dim();
    let icx = (center.0 / dx).round() as isize + (nx / 2) as isize;
    let icy = (center.1 / dy).round() as isize + (ny / 2) as isize;
    let hx = (half_m / dx).floor() as isize;
    let hy = (half_m / dy).floor() as isize;
    if hx < 4 || hy < 4 {
        return None;
    }
    let (x0, x1) = (icx - hx, icx + hx);
    let (y0, y1) = (icy - hy, icy + hy);
    if x0 < 0 || y0 < 0 || x1 >= nx as isize || y1 >= ny as isize {
        return None;
    }
    let crop = intensity
        .slice(s![y0 as usize..=y1 as usize, x0 as usize..=x1 as usize])
        .to_owned();
    let cx_res = center.0 - (icx - (nx / 2) as isize) as f64 * dx;
    let cy_res = center.1 - (icy - (ny / 2) as isize) as f64 * dy;
    Some((crop, (cx_res, cy_res)))
}

/// Azimuthal profile restricted to one site's neighborhood (out to the
/// calibration window of ~3.35 hole radii, or half the lattice pitch when
/// neighbors are closer).
fn site_profile(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    a_img: f64,
    d_img: Option<f64>,
) -> Option<RadialProfile> {
    let mut half = 3.35 * a_img;
    if let Some(d) = d_img {
        half = half.min(0.48 * d);
    }
    let (crop, res) = crop_around(intensity, dx, dy, center, half)?;
    let n_bins = ((half / dx).floor() as usize).clamp(8, 1024);
    radial_profile(&crop, dx, dy, res, n_bins).ok()
}

/// Mean intensity over the disk `r ≤ radius` about `center`; falls back to
/// the nearest sample when the disk is narrower than the raster.
fn probe_mean(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    radius: f64,
) -> f64 {
    let (ny, nx) = intensity.dim();
    let (mut sum, mut n) = (0.0, 0usize);
    for iy in 0..ny {
        let y = (iy as f64 - (ny / 2) as f64) * dy - center.1;
        if y.abs() > radius {
            continue;
        }
        for ix in 0..nx {
            let x = (ix as f64 - (nx / 2) as f64) * dx - center.0;
            if x * x + y * y <= radius * radius {
                sum += intensity[[iy, ix]];
                n += 1;
            }
        }
    }
    if n > 0 {
        return sum / n as f64;
    }
    let ix = ((center.0 / dx).round() as isize + (nx / 2) as isize).clamp(0, nx as isize - 1);
    let iy = ((center.1 / dy).round() as isize + (ny / 2) as isize).clamp(0, ny as isize - 1);
    intensity[[iy as usize, ix as usize]]
}

fn disk_max(intensity: &Array2<f64>, dx: f64, dy: f64, center: (f64, f64), radius: f64) -> f64 {
    let (ny, nx) = intensity.dim();
    let mut best = f64::NEG_INFINITY;
    for iy in 0..ny {
        let y = (iy as f64 - (ny / 2) as f64) * dy - center.1;
        if y.abs() > radius {
            continue;
        }
        for ix in 0..nx {
            let x = (ix as f64 - (nx / 2) as f64) * dx - center.0;
            if x * x + y * y <= radius * radius {
                best = best.max(intensity[[iy, ix]]);
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        probe_mean(intensity, dx, dy, center, radius)
    }
}

/// Median intensity over the annulus `lo ≤ r ≤ hi` about `center`; NaN when
/// the annulus misses the raster.
fn annulus_median(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    lo: f64,
    hi: f64,
) -> f64 {
    let (ny, nx) = intensity.dim();
    let mut vals = Vec::new();
    for iy in 0..ny {
        let y = (iy as f64 - (ny / 2) as f64) * dy - center.1;
        if y.abs() > hi {
            continue;
        }
        for ix in 0..nx {
            let x = (ix as f64 - (nx / 2) as f64) * dx - center.0;
            let r2 = x * x + y * y;
            if r2 >= lo * lo && r2 <= hi * hi {
                vals.push(intensity[[iy, ix]]);
            }
        }
    }
    if vals.is_empty() {
        f64::NAN
    } else {
        median(vals)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Square crop of half-width `half` samples about the central sample.
fn center_crop(img: &Array2<f64>, half: usize) -> Array2<f64> {
    let (ny, nx) = img.dim();
    let (cy, cx) = (ny / 2, nx / 2);
    let half = half.min(cy.saturating_sub(1)).min(cx.saturating_sub(1));
    img.slice(s![cy - half..=cy + half, cx - half..=cx + half])
        .to_owned()
}

/// Lattice modulation at one defocus plane: median probe intensity at
/// plaquette midpoints against median probe intensity at site centers
/// (interior sites only once the lattice is at least 3×3), as
/// `(mid − site)/(mid + site)`.
fn lattice_contrast(
    plane: &Array2<f64>,
    dx: f64,
    dy: f64,
    d_img: f64,
    nx_sites: usize,
    ny_sites: usize,
    probe: f64,
) -> f64 {
    let inner = |n: usize| if n >= 3 { 1..n - 1 } else { 0..n };
    let at = |i: usize, n: usize| (i as f64 - 0.5 * (n - 1) as f64) * d_img;
    let mut sites = Vec::new();
    for iy in inner(ny_sites) {
        for ix in inner(nx_sites) {
            let c = (at(ix, nx_sites), at(iy, ny_sites));
            sites.push(probe_mean(plane, dx, dy, c, probe));
        }
    }
    let mut mids = Vec::new();
    let mid_range = |n: usize| {
        if n >= 4 {
            1..n - 2
        } else {
            0..n - 1
        }
    };
    for iy in mid_range(ny_sites) {
        for ix in mid_range(nx_sites) {
            let c = (
                at(ix, nx_sites) + 0.5 * d_img,
                at(iy, ny_sites) + 0.5 * d_img,
            );
            mids.push(probe_mean(plane, dx, dy, c, probe));
        }
    }
    let ms = median(sites);
    let mm = median(mids);
    (mm - ms) / (mm + ms)
}

fn nearest_index(z_values: &[f64], z: f64) -> usize {
    let mut best = 0;
    for (i, &zi) in z_values.iter().enumerate() {
        if (zi - z).abs() < (z_values[best] - z).abs() {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn simulate(args: &RunArgs) -> CmdResult {
    let cfg: SimulateConfig = config::load(&args.config).map_err(CliError::Config)?;
    cfg.validate().map_err(CliError::Config)?;
    let sys = cfg.system.resolve().map_err(CliError::Config)?;
    let filter = cfg.filter.resolve(&sys, &cfg.mask).map_err(CliError::Config)?;
    check_fit(&cfg.mask, &cfg.grid)?;
    if args.verify_fft {
        let standard_iris = matches!(
            cfg.filter,
            FilterBlock::Iris { b_over_standard } if (b_over_standard - 1.0).abs() < 1e-12
        );
        if cfg.mask.kind == MaskKind::Custom || !standard_iris {
            return Err(CliError::Config(
                "--verify-fft compares against the canonical closed forms and needs a \
                 named mask kind with the standard iris (filter iris, b_over_standard = 1)"
                    .into(),
            ));
        }
    }

    // Relay the mask to the image plane.
    let n = cfg.grid.n as usize;
    let pitch = cfg.grid.pitch();
    let input: Field<f64> =
        render_mask(&cfg.mask.mask_spec(), n, n, pitch, pitch).map_err(runtime)?;
    let image = propagate_4f(&input, &sys, &filter).map_err(runtime)?;
    let intensity = image.intensity();
    let (dxi, dyi) = (image.dx(), image.dy());
    let mag = sys.magnification();
    let a_img = sys.image_radius(cfg.mask.a_m);
    let d_img = if cfg.mask.n_sites() > 1 {
        Some(cfg.mask.d_m * mag)
    } else {
        None
    };

    let volume = match &cfg.axial {
        Some(ax) => Some(axial_scan(&image, sys.lambda, &ax.z_values()).map_err(runtime)?),
        None => None,
    };

    let dark_sites = match cfg.mask.kind.trap_kind() {
        Some(kind) => kind.is_dark(),
        None => {
            let (t_hole, t_bg) = cfg.mask.transmissions();
            t_hole.norm() <= t_bg.norm()
        }
    };

    let sites = image_site_centers(&cfg.mask, mag);
    let central = sites
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let ra = a.1 .0 * a.1 .0 + a.1 .1 * a.1 .1;
            let rb = b.1 .0 * b.1 .0 + b.1 .1 * b.1 .1;
            ra.total_cmp(&rb)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);

    // Canonical equivalent-Gaussian parameters (None for custom masks).  The
    // divergence parameter h is defined against the curvature-waist Rayleigh
    // range stored in z_r, so the fit below is referenced to that waist.
    let base_gauss = cfg
        .mask
        .kind
        .trap_kind()
        .map(|k| best_fit_waist(k, cfg.mask.a_m, &sys))
        .transpose()
        .map_err(runtime)?;
    let w_curv = base_gauss.map(|g| (g.z_r * sys.lambda / std::f64::consts::PI).sqrt());

    let mut rows = Vec::with_capacity(sites.len());
    let mut central_radial: Option<RadialProfile> = None;
    let mut central_axial: Option<AxialProfile> = None;
    for (idx, &(cx, cy)) in sites.iter().enumerate() {
        let profile = site_profile(&intensity, dxi, dyi, (cx, cy), a_img, d_img);
        let w0_fit = profile
            .as_ref()
            .and_then(|p| fit_gaussian_waist(p).ok())
            .unwrap_or(f64::NAN);
        // The power-law exponent describes a well rising from a null, so it
        // is only meaningful for dark sites.
        let alpha_fit = profile
            .as_ref()
            .filter(|_| dark_sites)
            .and_then(|p| fit_power_law(p, (-1.0f64).exp()).ok())
            .unwrap_or(f64::NAN);

        let darkness = if dark_sites {
            let probe = (0.15 * a_img).max(1.5 * dxi.max(dyi));
            site_darkness(&intensity, dxi, dyi, (cx, cy), probe, a_img).unwrap_or(f64::NAN)
        } else {
            // Peak intensity relative to the input level, which the relay
            // rescales by (f1/f2)².
            disk_max(&intensity, dxi, dyi, (cx, cy), a_img) * mag * mag
        };

        // The divergence fit normalizes dipped wells to a unit background,
        // so dark-site scans are rescaled by the measured background level.
        let bg_scale = if dark_sites {
            let bg = annulus_median(&intensity, dxi, dyi, (cx, cy), 2.0 * a_img, 2.5 * a_img);
            if bg > 0.0 {
                bg.recip()
            } else {
                f64::NAN
            }
        } else {
            1.0
        };
        let axial_profile = volume.as_ref().and_then(|vol| {
            if !bg_scale.is_finite() {
                return None;
            }
            let (iy, ix) = image.index_near(cx, cy)?;
            let vals: Vec<f64> = vol
                .planes
                .iter()
                .map(|p| p[[iy, ix]] * bg_scale)
                .collect();
            AxialProfile::new(vol.z_values.clone(), vals).ok()
        });
        let h_ref_w0 = w_curv.unwrap_or(w0_fit);
        let h_fit = axial_profile
            .as_ref()
            .filter(|_| h_ref_w0.is_finite() && h_ref_w0 > 0.0)
            .and_then(|p| divergence_parameter(p, h_ref_w0, sys.lambda).ok())
            .unwrap_or(f64::NAN);

        let (u0_uk, omega_rho_hz, omega_z_hz) =
            thermal_columns(&cfg, &base_gauss, w0_fit, h_fit)
                .unwrap_or((f64::NAN, f64::NAN, f64::NAN));

        if idx == central {
            central_radial = profile.clone();
            central_axial = axial_profile;
        }
        rows.push(TrapMetrics {
            center_x: cx,
            center_y: cy,
            darkness,
            w0_fit,
            alpha_fit,
            h_fit,
            u0_uk,
            omega_rho_hz,
            omega_z_hz,
        });
    }

    // The radial CSV must always exist: fall back to a grid-wide profile
    // about the central site when its neighborhood window is too tight.
    let (ccx, ccy) = sites[central];
    let central_radial = match central_radial {
        Some(p) => p,
        None => radial_profile(&intensity, dxi, dyi, (ccx, ccy), 256).map_err(runtime)?,
    };

    let verify_note = if args.verify_fft {
        Some(verify_simulate(
            &cfg, &sys, &intensity, dxi, dyi, (ccx, ccy), a_img, d_img,
        )?)
    } else {
        None
    };

    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    write_manifest(&args.out, "simulate", &cfg, args.seed, args.verify_fft)?;
    io::write_field(&args.out.join("focal_field.tfld"), &image).map_err(runtime)?;
    io::write_pgm(&args.out.join("intensity.pgm"), &intensity).map_err(runtime)?;
    io::write_radial_csv(&args.out.join("radial_profile.csv"), &central_radial)
        .map_err(runtime)?;
    if let Some(ax) = &central_axial {
        io::write_axial_csv(&args.out.join("axial_profile.csv"), ax).map_err(runtime)?;
    }
    write_metrics_csv(&args.out.join("metrics.csv"), &rows).map_err(runtime)?;

    if let Some(note) = verify_note {
        println!("{note}");
    }
    println!(
        "simulate: {} site(s) measured; artifacts in {}",
        rows.len(),
        args.out.display()
    );
    Ok(())
}

fn thermal_columns(
    cfg: &SimulateConfig,
    base_gauss: &Option<GaussEquiv>,
    w0_fit: f64,
    h_fit: f64,
) -> Option<(f64, f64, f64)> {
    let th = cfg.thermal.as_ref()?;
    let kind = match cfg.mask.kind.trap_kind() {
        Some(k) => k,
        None => return Some((th.depth_uk, f64::NAN, f64::NAN)),
    };
    let base = match base_gauss {
        Some(g) => *g,
        None => return Some((th.depth_uk, f64::NAN, f64::NAN)),
    };
    let gauss = GaussEquiv {
        w0: if w0_fit.is_finite() { w0_fit } else { base.w0 },
        z_r: base.z_r,
        h: if h_fit.is_finite() { h_fit } else { base.h },
    };
    let depth = th.depth_uk * 1e-6 * BOLTZMANN;
    let temperature = th.temperature_uk * 1e-6;
    let mass = th.mass_amu * AMU;
    match confinement(kind.potential_shape(), &gauss, depth, temperature, mass) {
        Ok(c) => Some((
            th.depth_uk,
            c.omega_rho
                .map(|w| w / std::f64::consts::TAU)
                .unwrap_or(f64::NAN),
            c.omega_z / std::f64::consts::TAU,
        )),
        Err(_) => Some((th.depth_uk, f64::NAN, f64::NAN)),
    }
}

/// Inline FFT-vs-closed-form cross-check on the central site; gates the run
/// at 1% rms (bright, absolute) or 1.5% rms (dark, per fitted background).
#[allow(clippy::too_many_arguments)]
fn verify_simulate(
    cfg: &SimulateConfig,
    sys: &SystemSpec,
    intensity: &Array2<f64>,
    dxi: f64,
    dyi: f64,
    center: (f64, f64),
    a_img: f64,
    d_img: Option<f64>,
) -> Result<String, CliError> {
    let kind = cfg.mask.kind.trap_kind().expect("checked before compute");
    let mut half = 2.6 * a_img;
    if let Some(d) = d_img {
        half = half.min(0.48 * d);
    }
    let (crop, res) = crop_around(intensity, dxi, dyi, center, half).ok_or_else(|| {
        CliError::Config(
            "--verify-fft needs a clear window of 2.6 hole radii around the central site; \
             enlarge grid.extent_m or grid.n"
                .into(),
        )
    })?;
    let n_bins = ((half / dxi).floor() as usize).clamp(8, 1024);
    let prof = radial_profile(&crop, dxi, dyi, res, n_bins).map_err(runtime)?;
    let window: Vec<(f64, f64)> = prof
        .radii
        .iter()
        .zip(&prof.values)
        .filter(|&(&r, _)| r <= 2.0 * a_img)
        .map(|(&r, &v)| (r, v))
        .collect();
    if window.len() < 6 {
        return Err(CliError::Config(
            "--verify-fft window holds too few radial bins; raise grid.n".into(),
        ));
    }

    let (rms, gate) = match kind {
        TrapKind::Bright => {
            let mut sq = 0.0;
            let mut peak: f64 = 0.0;
            let mut preds = Vec::with_capacity(window.len());
            for &(r, _) in &window {
                let p = ag_field_focus(r, sys, cfg.mask.a_m, None)
                    .map_err(runtime)?
                    .norm_sqr();
                peak = peak.max(p);
                preds.push(p);
            }
            for ((_, v), p) in window.iter().zip(&preds) {
                sq += (v - p) * (v - p);
            }
            ((sq / window.len() as f64).sqrt() / peak, 0.01)
        }
        _ => {
            // Dark wells are compared in shape: the background level is
            // fitted by least squares before taking the residual.
            let mut preds = Vec::with_capacity(window.len());
            for &(r, _) in &window {
                preds.push(trap_radial_intensity(kind, r / a_img).map_err(runtime)?);
            }
            let num: f64 = window.iter().zip(&preds).map(|((_, v), p)| v * p).sum();
            let den: f64 = preds.iter().map(|p| p * p).sum();
            if den <= 0.0 {
                return Err(runtime("degenerate closed-form profile"));
            }
            let scale = num / den;
            let peak = preds.iter().cloned().fold(0.0f64, f64::max) * scale;
            let sq: f64 = window
                .iter()
                .zip(&preds)
                .map(|((_, v), p)| {
                    let d = v - scale * p;
                    d * d
                })
                .sum();
            ((sq / window.len() as f64).sqrt() / peak, 0.015)
        }
    };
    if !(rms <= gate) {
        return Err(CliError::Runtime(format!(
            "verify-fft failed: radial rms {:.2}% exceeds the {:.1}% gate",
            100.0 * rms,
            100.0 * gate
        )));
    }
    Ok(format!(
        "verify-fft: closed form vs FFT radial rms {:.2}% (gate {:.1}%)",
        100.0 * rms,
        100.0 * gate
    ))
}

// ---------------------------------------------------------------------------
// talbot
// ---------------------------------------------------------------------------

pub fn talbot(args: &RunArgs) -> CmdResult {
    let cfg: TalbotConfig = config::load(&args.config).map_err(CliError::Config)?;
    cfg.validate().map_err(CliError::Config)?;
    let sys = cfg.system.resolve().map_err(CliError::Config)?;
    let filter = cfg.filter.resolve(&sys, &cfg.mask).map_err(CliError::Config)?;
    check_fit(&cfg.mask, &cfg.grid)?;

    let mag = sys.magnification();
    let a_img = sys.image_radius(cfg.mask.a_m);
    let d_img = cfg.mask.d_m * mag;
    let z_t = talbot_length(d_img, sys.lambda).map_err(|e| CliError::Config(e.to_string()))?;
    if !(cfg.scan.z_min_m <= z_t && z_t <= cfg.scan.z_max_m) {
        return Err(CliError::Config(format!(
            "scan window [{:.4e}, {:.4e}] m excludes the Talbot revival at \
             2·d_img²/λ = {:.4e} m",
            cfg.scan.z_min_m, cfg.scan.z_max_m, z_t
        )));
    }
    let z_values = cfg.scan.z_values();
    let want_coherent = matches!(cfg.source.mode, SourceMode::Coherent | SourceMode::Both);
    let want_ensemble = matches!(cfg.source.mode, SourceMode::Ensemble | SourceMode::Both);

    let n = cfg.grid.n as usize;
    let pitch = cfg.grid.pitch();
    let mask_spec = cfg.mask.mask_spec();
    let probe = 0.15 * a_img;
    let (nxs, nys) = (cfg.mask.nx_sites as usize, cfg.mask.ny_sites as usize);
    let k_t = nearest_index(&z_values, z_t);

    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    write_manifest(&args.out, "talbot", &cfg, args.seed, args.verify_fft)?;

    let mut coherent_report: Option<serde_json::Value> = None;
    let mut contrast_coherent: Option<f64> = None;
    if want_coherent {
        let input: Field<f64> = render_mask(&mask_spec, n, n, pitch, pitch).map_err(runtime)?;
        let image = propagate_4f(&input, &sys, &filter).map_err(runtime)?;
        let vol = axial_scan(&image, sys.lambda, &z_values).map_err(runtime)?;
        io::write_volume(
            &args.out.join("volume_coherent.tvol"),
            &args.out.join("volume_coherent.json"),
            &vol,
        )
        .map_err(runtime)?;

        // Revival search: similarity of each plane to the focal pattern over
        // a ±2-pitch central crop.
        let crop_half = ((2.0 * d_img / vol.dx).round() as usize).max(8);
        let focal = center_crop(&image.intensity(), crop_half);
        let mut scores = Vec::with_capacity(vol.planes.len());
        for plane in &vol.planes {
            scores.push(ncc(&center_crop(plane, crop_half), &focal).map_err(runtime)?);
        }
        // When the scan reaches back to the focal plane, each plane near z = 0
        // matches the focal pattern trivially; search for the revival only in
        // the outer half of the expected period.
        let i0 = z_values
            .iter()
            .position(|&z| z >= 0.5 * z_t)
            .unwrap_or(0);
        let (z_rev, s_rev) =
            locate_revival(&z_values[i0..], &scores[i0..]).map_err(runtime)?;
        let k_rev = nearest_index(&z_values, z_rev);
        io::write_pgm(
            &args.out.join("talbot_plane_coherent.pgm"),
            &vol.planes[k_rev],
        )
        .map_err(runtime)?;
        let contrast = lattice_contrast(&vol.planes[k_t], vol.dx, vol.dy, d_img, nxs, nys, probe);
        contrast_coherent = Some(contrast);
        coherent_report = Some(serde_json::json!({
            "z_revival_m": z_rev,
            "revival_ncc": s_rev,
            "ncc_at_z_talbot": scores[k_t],
            "revival_offset_relative": (z_rev - z_t) / z_t,
            "contrast_at_z_talbot": contrast,
        }));
        println!(
            "talbot: coherent revival at {:.4e} m (formula {:.4e} m), NCC {:.3}",
            z_rev, z_t, s_rev
        );
    }

    let mut ensemble_report: Option<serde_json::Value> = None;
    let mut contrast_ensemble: Option<f64> = None;
    if want_ensemble {
        let e = cfg.source.ensemble.expect("validated");
        let source = SourceSpec {
            lambda0: sys.lambda,
            fwhm: e.fwhm_m,
            n_components: e.n_components as usize,
            waist: e.waist_m,
            n_modes: e.n_modes as usize,
        };
        let vol = incoherent_volume(
            &mask_spec, &sys, &filter, &source, n, n, pitch, pitch, &z_values, args.seed,
        )
        .map_err(runtime)?;
        io::write_volume(
            &args.out.join("volume_ensemble.tvol"),
            &args.out.join("volume_ensemble.json"),
            &vol,
        )
        .map_err(runtime)?;
        io::write_pgm(
            &args.out.join("talbot_plane_ensemble.pgm"),
            &vol.planes[k_t],
        )
        .map_err(runtime)?;

        let contrast = lattice_contrast(&vol.planes[k_t], vol.dx, vol.dy, d_img, nxs, nys, probe);
        contrast_ensemble = Some(contrast);
        // Focal residual at dark sites, when the scan includes z ≈ 0.
        let dz = (z_values[1] - z_values[0]).abs();
        let k0 = nearest_index(&z_values, 0.0);
        let focal_darkness = if z_values[k0].abs() <= 0.5 * dz {
            let inner = |m: usize| if m >= 3 { 1..m - 1 } else { 0..m };
            let at = |i: usize, m: usize| (i as f64 - 0.5 * (m - 1) as f64) * d_img;
            let mut vals = Vec::new();
            for iy in inner(nys) {
                for ix in inner(nxs) {
                    let c = (at(ix, nxs), at(iy, nys));
                    if let Ok(v) = site_darkness(
                        &vol.planes[k0],
                        vol.dx,
                        vol.dy,
                        c,
                        probe.max(1.5 * vol.dx),
                        a_img,
                    ) {
                        vals.push(v);
                    }
                }
            }
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        } else {
            None
        };

        let components = spectral_components(sys.lambda, e.fwhm_m, e.n_components as usize)
            .map_err(runtime)?;
        let listing: Vec<serde_json::Value> = components
            .iter()
            .map(|&(lam, w)| serde_json::json!({"lambda_m": lam, "weight": w}))
            .collect();
        let ensemble_json = serde_json::json!({
            "seed": args.seed,
            "n_modes": e.n_modes,
            "components": listing,
        });
        std::fs::write(
            args.out.join("ensemble.json"),
            serde_json::to_string_pretty(&ensemble_json).map_err(runtime)? + "\n",
        )
        .map_err(runtime)?;

        ensemble_report = Some(serde_json::json!({
            "contrast_at_z_talbot": contrast,
            "focal_darkness": focal_darkness,
        }));
        println!(
            "talbot: ensemble contrast at z_T = {:.3}{}",
            contrast,
            focal_darkness
                .map(|d| format!(", focal darkness {d:.2e}"))
                .unwrap_or_default()
        );
    }

    let suppression_ratio = match (contrast_coherent, contrast_ensemble) {
        (Some(c), Some(e)) if c > 0.0 => Some(e / c),
        _ => None,
    };
    let report = serde_json::json!({
        "schema_version": 1,
        "z_talbot_m": z_t,
        "coherent": coherent_report,
        "ensemble": ensemble_report,
        "suppression_ratio": suppression_ratio,
    });
    std::fs::write(
        args.out.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(runtime)? + "\n",
    )
    .map_err(runtime)?;
    if let Some(r) = suppression_ratio {
        println!("talbot: suppression ratio {r:.3}");
    }
    println!("talbot: artifacts in {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn sweep(args: &RunArgs) -> CmdResult {
    let cfg: SweepConfig = config::load(&args.config).map_err(CliError::Config)?;
    cfg.validate().map_err(CliError::Config)?;
    let grid = darkness_map(
        cfg.hole_transmission_magnitude,
        &cfg.phi_values_rad(),
        &cfg.b_values(),
    )
    .map_err(runtime)?;

    std::fs::create_dir_all(&args.out).map_err(runtime)?;
    write_manifest(&args.out, "sweep", &cfg, args.seed, args.verify_fft)?;
    grid.write_csv(&args.out.join("sweep.csv")).map_err(runtime)?;
    grid.write_json(&args.out.join("sweep.json")).map_err(runtime)?;
    let (phi, b_hat, darkness) = grid.argmin();
    if cfg.mark_optimum {
        let optimum = serde_json::json!({
            "phi_rad": phi,
            "phi_deg": phi.to_degrees(),
            "b_hat": b_hat,
            "darkness": darkness,
        });
        std::fs::write(
            args.out.join("optimum.json"),
            serde_json::to_string_pretty(&optimum).map_err(runtime)? + "\n",
        )
        .map_err(runtime)?;
    }
    println!(
        "sweep: {}×{} map, minimum {:.3e} at phi = {:.1}°, b̂ = {:.3}; artifacts in {}",
        grid.phi_values.len(),
        grid.b_values.len(),
        darkness,
        phi.to_degrees(),
        b_hat,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

pub fn constants() -> CmdResult {
    let table = constants_csv().map_err(runtime)?;
    print!("{table}");
    Ok(())
}

/// Live-computed calibration table: every value is evaluated through the
/// library at call time (nothing is hard-coded), so the rows double as a
/// self-test of the installed binary.
fn constants_csv() -> agtrap::error::Result<String> {
    // Unit-magnification relay: lengths in units of the hole radius.
    let unit = SystemSpec::new(1.0, 1.0, 825e-9)?;
    let bright = best_fit_waist(TrapKind::Bright, 1.0, &unit)?;
    let dark = best_fit_waist(TrapKind::Dark287, 1.0, &unit)?;
    let b_std = unit.standard_iris_radius(1.0);
    let t_star = dark_condition_ta(b_std, &unit, 1.0)?;
    let x11 = bessel_zero(1, 1);

    // Table-1 style thermal example: λ = 808 nm, w0 = 1 µm, k_B·T/U0 = 1/10.
    let (lambda, w0) = (808e-9, 1e-6);
    let z_r = std::f64::consts::PI * w0 * w0 / lambda;
    let temperature = 1e-6;
    let depth = 10.0 * BOLTZMANN * temperature;
    let mass = 87.0 * AMU;
    let gauss = GaussEquiv { w0, z_r, h: 1.0 };
    let harmonic = confinement(PotentialShape::Harmonic, &gauss, depth, temperature, mass)?;
    let gauss_bright = GaussEquiv { h: bright.h, ..gauss };
    let harmonic_bright = confinement(
        PotentialShape::Harmonic,
        &gauss_bright,
        depth,
        temperature,
        mass,
    )?;
    let quartic = confinement(PotentialShape::Quartic, &gauss, depth, temperature, mass)?;

    let rows: Vec<(&str, f64, &str)> = vec![
        ("bright_efficiency", efficiency(TrapKind::Bright, &unit)?, "peak_over_input"),
        ("bright_waist", bright.w0, "a_img"),
        ("bright_divergence_h", bright.h, "dimensionless"),
        ("dark_waist", dark.w0, "a_img"),
        ("dark_divergence_h", dark.h, "dimensionless"),
        ("dark_ta", t_star, "amplitude"),
        ("dark_ta_power", t_star * t_star, "power"),
        ("iris_transmission_airy", iris_transmission(x11), "power_fraction"),
        (
            "iris_transmission_j0_zero",
            iris_transmission(bessel_zero(0, 1)),
            "power_fraction",
        ),
        (
            "throughput_bright_d3a",
            agtrap::analytic::power_throughput(&MaskParams::bright(1.0, 3.0)?, x11)?,
            "power_fraction",
        ),
        (
            // Opaque holes run at their own canonical iris, the first J0 zero.
            "throughput_dark_opaque_d3a",
            agtrap::analytic::power_throughput(
                &MaskParams::dark(1.0, 3.0, 0.0, 0.0)?,
                bessel_zero(0, 1),
            )?,
            "power_fraction",
        ),
        (
            "throughput_dark_scaled_d3a",
            agtrap::analytic::power_throughput(&MaskParams::dark(1.0, 3.0, t_star, 0.0)?, x11)?,
            "power_fraction",
        ),
        (
            "dual_background_equal_alpha",
            dual_species_balance(1.0, -1.0, DarkMaskVariant::TaScaled)?,
            "amplitude",
        ),
        (
            "dual_background_847_m433",
            dual_species_balance(847.0, -433.0, DarkMaskVariant::TaScaled)?,
            "amplitude",
        ),
        (
            "dual_background_opaque_847_m433",
            dual_species_balance(847.0, -433.0, DarkMaskVariant::Opaque)?,
            "amplitude",
        ),
        ("sigma_rho_harmonic", harmonic.sigma_rho * 1e6, "um"),
        ("sigma_z_harmonic", harmonic.sigma_z * 1e6, "um"),
        ("sigma_z_bright", harmonic_bright.sigma_z * 1e6, "um"),
        ("sigma_rho_quartic", quartic.sigma_rho * 1e6, "um"),
    ];

    let mut out = String::from("name,value,units\n");
    for (name, value, units) in rows {
        writeln!(out, "{name},{value:.6},{units}").expect("string write");
    }
    Ok(out)
}
