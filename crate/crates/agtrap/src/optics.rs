//! Numerical diffraction engine: rasterized masks and Fourier-plane filters,
//! single-lens Fourier transforms, 4f relay propagation, and angular-spectrum
//! defocus scans.
//!
//! This path shares no formulas with [`crate::analytic`] beyond the lens
//! Fourier relationship itself, so agreement between the two is a meaningful
//! cross-check of both.
//!
//! Conventions: a lens of focal length `f` maps a centered field to
//! `−i·(dx·dy/(λ·f))·DFT` on a centered grid of pitch `λ·f/(N·dx)`; two
//! cascaded lenses therefore produce the image amplitude `−(f1/f2)` with a
//! parity flip, with no further bookkeeping.  Defocus from the image plane
//! uses the exact angular-spectrum kernel with clamped evanescent decay.

use crate::analytic::SystemSpec;
use crate::error::{Error, Result};
use crate::fft2::{fft2_inplace, fftshift2, ifftshift2};
use crate::grid::Field;
use crate::scalar::{Real, Scalar, C, C64};
use ndarray::Array2;
use rayon::prelude::*;

/// One circular site of an input mask: center (m), radius (m), and complex
/// transmission inside the disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteSpec {
    pub center: (f64, f64),
    pub radius: f64,
    pub t: C64,
}

/// Rasterizable input mask: a uniform background transmission with circular
/// sites punched into it.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSpec {
    pub background: C64,
    pub sites: Vec<SiteSpec>,
}

impl MaskSpec {
    pub fn uniform(background: C64) -> Self {
        Self {
            background,
            sites: Vec::new(),
        }
    }

    /// Square lattice of identical sites: `nx × ny` disks of radius `a` and
    /// transmission `t`, pitch `d`, centered on `offset`.
    pub fn square_lattice(
        background: C64,
        t: C64,
        a: f64,
        d: f64,
        nx: usize,
        ny: usize,
        offset: (f64, f64),
    ) -> Self {
        let mut sites = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let cx = (ix as f64 - 0.5 * (nx as f64 - 1.0)) * d + offset.0;
                let cy = (iy as f64 - 0.5 * (ny as f64 - 1.0)) * d + offset.1;
                sites.push(SiteSpec {
                    center: (cx, cy),
                    radius: a,
                    t,
                });
            }
        }
        Self { background, sites }
    }

    /// Add sites from another layout (for composing e.g. interleaved bright
    /// and dark sublattices over one background).
    pub fn with_sites(mut self, sites: &[SiteSpec]) -> Self {
        self.sites.extend_from_slice(sites);
        self
    }
}

/// Fourier-plane amplitude filter: a clear disk or a set of clear annular
/// zones `(inner, outer)` in an opaque screen.  Radii in meters.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterSpec {
    Disk { radius: f64 },
    Zones { rings: Vec<(f64, f64)> },
}

impl FilterSpec {
    fn validate(&self) -> Result<()> {
        match self {
            FilterSpec::Disk { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "filter disk radius must be positive, got {radius}"
                    )));
                }
            }
            FilterSpec::Zones { rings } => {
                if rings.is_empty() {
                    return Err(Error::InvalidArgument(
                        "zone filter needs at least one ring".into(),
                    ));
                }
                let mut prev_outer = -1.0;
                for &(lo, hi) in rings {
                    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
                        return Err(Error::InvalidArgument(format!(
                            "zone ring ({lo}, {hi}) is not an ordered non-negative pair"
                        )));
                    }
                    if lo < prev_outer {
                        return Err(Error::InvalidArgument(
                            "zone rings must be disjoint and sorted by radius".into(),
                        ));
                    }
                    prev_outer = hi;
                }
            }
        }
        Ok(())
    }

    fn passes(&self, r: f64) -> bool {
        match self {
            FilterSpec::Disk { radius } => r <= *radius,
            FilterSpec::Zones { rings } => rings.iter().any(|&(lo, hi)| r >= lo && r <= hi),
        }
    }

    fn min_feature(&self) -> f64 {
        match self {
            FilterSpec::Disk { radius } => *radius,
            FilterSpec::Zones { rings } => rings
                .iter()
                .map(|&(lo, hi)| if lo == 0.0 { hi } else { hi - lo })
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Rasterize a mask onto an `nx × ny` grid of pitch `(dx, dy)` meters.
///
/// Disk membership is decided by the sample center (hard edge).
/// Preconditions: every site diameter must span at least 8 samples, sites
/// must not overlap, and the site array (including radii) must fit inside
/// the central half of the grid so that diffraction from the array edge
/// stays off the sites.
pub fn render_mask<T: Scalar>(
    spec: &MaskSpec,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
) -> Result<Field<T>> {
    let step = dx.max(dy);
    for s in &spec.sites {
        if !(s.radius.is_finite() && s.radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "site radius must be positive, got {}",
                s.radius
            )));
        }
        if 2.0 * s.radius < 8.0 * step {
            return Err(Error::Geometry(format!(
                "site diameter {:.3e} spans fewer than 8 samples at pitch {:.3e}",
                2.0 * s.radius,
                step
            )));
        }
    }
    for (i, s) in spec.sites.iter().enumerate() {
        for t in &spec.sites[i + 1..] {
            let ddx = s.center.0 - t.center.0;
            let ddy = s.center.1 - t.center.1;
            if (ddx * ddx + ddy * ddy).sqrt() < s.radius + t.radius {
                return Err(Error::Geometry(format!(
                    "sites at ({:.3e}, {:.3e}) and ({:.3e}, {:.3e}) overlap",
                    s.center.0, s.center.1, t.center.0, t.center.1
                )));
            }
        }
    }
    let half_x = 0.5 * nx as f64 * dx;
    let half_y = 0.5 * ny as f64 * dy;
    for s in &spec.sites {
        if s.center.0.abs() + s.radius > 0.5 * half_x || s.center.1.abs() + s.radius > 0.5 * half_y
        {
            return Err(Error::Geometry(format!(
                "site at ({:.3e}, {:.3e}) leaves the central half of the grid; \
                 enlarge the extent to keep edge diffraction off the array",
                s.center.0, s.center.1
            )));
        }
    }
    let bg = C::new(T::of(spec.background.re), T::of(spec.background.im));
    let mut field = Field::filled(nx, ny, T::of(dx), T::of(dy), bg)?;
    let (ox, oy) = ((nx / 2) as f64, (ny / 2) as f64);
    for s in &spec.sites {
        let t = C::new(T::of(s.t.re), T::of(s.t.im));
        let ix_lo = ((s.center.0 - s.radius) / dx + ox).floor().max(0.0) as usize;
        let ix_hi = (((s.center.0 + s.radius) / dx + ox).ceil() as usize).min(nx - 1);
        let iy_lo = ((s.center.1 - s.radius) / dy + oy).floor().max(0.0) as usize;
        let iy_hi = (((s.center.1 + s.radius) / dy + oy).ceil() as usize).min(ny - 1);
        let r2 = s.radius * s.radius;
        let data = field.data_mut();
        for iy in iy_lo..=iy_hi {
            let y = (iy as f64 - oy) * dy - s.center.1;
            for ix in ix_lo..=ix_hi {
                let x = (ix as f64 - ox) * dx - s.center.0;
                if x * x + y * y <= r2 {
                    data[[iy, ix]] = t;
                }
            }
        }
    }
    Ok(field)
}

/// Rasterize a Fourier-plane filter as a binary (0/1) transmission field on
/// an `nx × ny` grid of pitch `(dx, dy)` meters.
///
/// Precondition: the narrowest feature (disk/central-zone radius or ring
/// width) must span at least 2 samples.
pub fn render_filter<T: Scalar>(
    spec: &FilterSpec,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
) -> Result<Field<T>> {
    spec.validate()?;
    let step = dx.max(dy);
    if spec.min_feature() < 2.0 * step {
        return Err(Error::Geometry(format!(
            "filter feature {:.3e} spans fewer than 2 samples at pitch {:.3e}",
            spec.min_feature(),
            step
        )));
    }
    let one = C::new(T::one(), T::zero());
    let zero = C::new(T::zero(), T::zero());
    Field::from_fn(nx, ny, T::of(dx), T::of(dy), |x, y| {
        let r = (x.f64().powi(2) + y.f64().powi(2)).sqrt();
        if spec.passes(r) {
            one
        } else {
            zero
        }
    })
}

/// True if any sample above 1e-12 of the peak amplitude sits outside
/// `±limit_x, ±limit_y` — the lens transform's aliasing guard.
fn occupied_beyond<T: Scalar>(field: &Field<T>, limit_x: f64, limit_y: f64) -> bool {
    let data = field.data();
    let peak = data
        .iter()
        .map(|c| c.norm_sqr().f64())
        .fold(0.0_f64, f64::max);
    if peak == 0.0 {
        return false;
    }
    let cut = 1e-24 * peak; // intensity threshold = (1e-12 amplitude)²
    let (ny, nx) = data.dim();
    let (dx, dy) = (field.dx().f64(), field.dy().f64());
    let (ox, oy) = ((nx / 2) as f64, (ny / 2) as f64);
    for iy in 0..ny {
        let y = (iy as f64 - oy) * dy;
        for ix in 0..nx {
            if data[[iy, ix]].norm_sqr().f64() > cut {
                let x = (ix as f64 - ox) * dx;
                if x.abs() > limit_x || y.abs() > limit_y {
                    return true;
                }
            }
        }
    }
    false
}

/// Focal-plane field behind a thin lens of focal length `f`:
/// `out = −i·(dx·dy/(λ·f))·DFT(in)` on a centered grid of pitch
/// `λ·f/(N·dx)`.
///
/// Guards against transform aliasing: the occupied support of the input
/// (samples above 1e-12 of the peak amplitude) must stay within
/// `±λ·f/(2·dx)` of the axis.  Use [`lens_fourier_unchecked`] for the second
/// lens of a 4f relay, where the Fourier-plane field fills its grid by
/// construction and the image window is pinned by the pitch algebra instead.
pub fn lens_fourier<T: Scalar>(field: &Field<T>, f: f64, lambda: f64) -> Result<Field<T>> {
    let limit_x = lambda * f / (2.0 * field.dx().f64());
    let limit_y = lambda * f / (2.0 * field.dy().f64());
    if occupied_beyond(field, limit_x, limit_y) {
        return Err(Error::Geometry(format!(
            "input occupies space beyond ±{limit_x:.3e} m; the lens transform would alias \
             (increase the grid extent or decrease the pitch)"
        )));
    }
    lens_fourier_unchecked(field, f, lambda)
}

/// [`lens_fourier`] without the occupied-support guard.
pub fn lens_fourier_unchecked<T: Scalar>(
    field: &Field<T>,
    f: f64,
    lambda: f64,
) -> Result<Field<T>> {
    if !(f.is_finite() && f > 0.0 && lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lens needs positive focal length and wavelength, got ({f}, {lambda})"
        )));
    }
    let (nx, ny) = (field.nx(), field.ny());
    let (dx, dy) = (field.dx().f64(), field.dy().f64());
    let mut data = ifftshift2(field.data());
    fft2_inplace(&mut data, true);
    let mut data = fftshift2(&data);
    let scale = C::new(T::zero(), -T::of(dx * dy / (lambda * f)));
    data.mapv_inplace(|c| c * scale);
    let dxi = lambda * f / (nx as f64 * dx);
    let deta = lambda * f / (ny as f64 * dy);
    Field::from_data(T::of(dxi), T::of(deta), data)
}

/// Propagate an input field through a 4f relay with a Fourier-plane filter.
///
/// The filter is rasterized on the Fourier-plane grid (pitch
/// `λ·f1/(N·dx)`).  The returned image field has pitch `dx·f2/f1` and the
/// parity flip of a two-lens relay; with a pass-all filter it equals the
/// input flipped and scaled by `−f1/f2`.
pub fn propagate_4f<T: Scalar>(
    input: &Field<T>,
    sys: &SystemSpec,
    filter: &FilterSpec,
) -> Result<Field<T>> {
    let mut fourier = lens_fourier(input, sys.f1, sys.lambda)?;
    let filt: Field<T> = render_filter(
        filter,
        fourier.nx(),
        fourier.ny(),
        fourier.dx().f64(),
        fourier.dy().f64(),
    )?;
    fourier.modulate(&filt)?;
    lens_fourier_unchecked(&fourier, sys.f2, sys.lambda)
}

/// Intensity stack over a set of defocus planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T: Real> {
    pub dx: f64,
    pub dy: f64,
    pub z_values: Vec<f64>,
    pub planes: Vec<Array2<T>>,
}

impl<T: Real> Volume<T> {
    pub fn new(dx: f64, dy: f64, z_values: Vec<f64>, planes: Vec<Array2<T>>) -> Result<Self> {
        if z_values.len() != planes.len() || z_values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "volume needs matching, non-empty plane lists ({} z, {} planes)",
                z_values.len(),
                planes.len()
            )));
        }
        let first = planes[0].dim();
        if planes.iter().any(|p| p.dim() != first) {
            return Err(Error::InvalidArgument(
                "volume planes must share one shape".into(),
            ));
        }
        Ok(Self {
            dx,
            dy,
            z_values,
            planes,
        })
    }
}

/// Precomputed angular spectrum of a field, for repeated defocus evaluation.
///
/// The forward FFT runs once; each requested plane costs one kernel multiply
/// and one inverse FFT.  `z = 0` returns the stored input exactly
/// (bit-for-bit), so a scan through focus is anchored to its source plane.
pub struct AngularSpectrum<T: Scalar> {
    original: Field<T>,
    spectrum: Array2<C<T>>,
    kx2: Vec<f64>,
    ky2: Vec<f64>,
    k: f64,
    /// Power fraction carried by evanescent spatial frequencies.
    pub evanescent_fraction: f64,
}

impl<T: Scalar> AngularSpectrum<T> {
    pub fn new(field: &Field<T>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {lambda}"
            )));
        }
        let (nx, ny) = (field.nx(), field.ny());
        let mut spectrum = ifftshift2(field.data());
        fft2_inplace(&mut spectrum, true);
        let k = 2.0 * std::f64::consts::PI / lambda;
        let freq = |i: usize, n: usize, step: f64| -> f64 {
            let ii = if i < n.div_ceil(2) {
                i as f64
            } else {
                i as f64 - n as f64
            };
            2.0 * std::f64::consts::PI * ii / (n as f64 * step)
        };
        let kx2: Vec<f64> = (0..nx)
            .map(|i| {
                let v = freq(i, nx, field.dx().f64());
                v * v
            })
            .collect();
        let ky2: Vec<f64> = (0..ny)
            .map(|i| {
                let v = freq(i, ny, field.dy().f64());
                v * v
            })
            .collect();
        let mut total = 0.0;
        let mut evanescent = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                let p = spectrum[[iy, ix]].norm_sqr().f64();
                total += p;
                if kx2[ix] + ky2[iy] > k * k {
                    evanescent += p;
                }
            }
        }
        let evanescent_fraction = if total > 0.0 { evanescent / total } else { 0.0 };
        Ok(Self {
            original: field.clone(),
            spectrum,
            kx2,
            ky2,
            k,
            evanescent_fraction,
        })
    }

    /// Field at defocus `z` (meters; positive away from the lens).
    ///
    /// Propagating waves get the exact kernel
    /// `exp(i·z·(√(k² − k_t²) − k))` (the carrier `e^{ikz}` is factored
    /// out); evanescent waves decay as `exp(−|z|·√(k_t² − k²))`.
    pub fn at(&self, z: f64) -> Field<T> {
        if z == 0.0 {
            return self.original.clone();
        }
        let (ny, nx) = self.spectrum.dim();
        let mut work = self.spectrum.clone();
        let k = self.k;
        {
            let slice = work.as_slice_mut().expect("spectrum is contiguous");
            slice.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
                let ky2 = self.ky2[iy];
                for (ix, v) in row.iter_mut().enumerate() {
                    let kz2 = k * k - ky2 - self.kx2[ix];
                    let factor = if kz2 >= 0.0 {
                        C64::from_polar(1.0, z * (kz2.sqrt() - k))
                    } else {
                        C64::new((-z.abs() * (-kz2).sqrt()).exp(), 0.0)
                    };
                    *v = *v * C::new(T::of(factor.re), T::of(factor.im));
                }
            });
        }
        fft2_inplace(&mut work, false);
        let norm = T::of(1.0 / (nx as f64 * ny as f64));
        let mut data = fftshift2(&work);
        data.mapv_inplace(|c| c * norm);
        Field::from_data(self.original.dx(), self.original.dy(), data)
            .expect("shape preserved by the transform")
    }
}

/// Intensity volume of a field scanned over defocus planes `z_values`.
///
/// Errors when more than 1 % of the field power sits in evanescent spatial
/// frequencies — a sign the transverse sampling is too coarse for the
/// requested wavelength and the defocus model would silently misbehave.
pub fn axial_scan<T: Scalar>(field: &Field<T>, lambda: f64, z_values: &[f64]) -> Result<Volume<T>> {
    let asp = AngularSpectrum::new(field, lambda)?;
    if asp.evanescent_fraction > 1e-2 {
        return Err(Error::Numerical(format!(
            "{:.1}% of the field power is evanescent; refine the transverse sampling",
            100.0 * asp.evanescent_fraction
        )));
    }
    let planes = z_values.iter().map(|&z| asp.at(z).intensity()).collect();
    Volume::new(
        field.dx().f64(),
        field.dy().f64(),
        z_values.to_vec(),
        planes,
    )
}
