//! Partially coherent illumination: Hermite–Gauss speckle realizations and
//! broadband (finite-linewidth) ensemble averaging through the 4f relay.
//!
//! Spatial incoherence is modeled by random-phase superpositions of
//! orthonormal Hermite–Gauss modes; temporal incoherence by a discrete,
//! Lorentzian-weighted wavelength comb.  Every random draw derives from a
//! keyed counter RNG, so results are reproducible bit-for-bit for a given
//! seed regardless of thread count.

use crate::analytic::SystemSpec;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::optics::{propagate_4f, render_mask, AngularSpectrum, FilterSpec, MaskSpec, Volume};
use crate::scalar::C64;
use ndarray::Array2;
use rayon::prelude::*;

/// An extended, partially coherent source.
///
/// `lambda0` (m) is the center wavelength, `fwhm` (m) the full width at half
/// maximum of its Lorentzian line, sampled at `n_components` equally spaced
/// wavelengths; `waist` (m) is the 1/e² radius of the fundamental spatial
/// mode at the mask and `n_modes` the number of Hermite–Gauss modes summed
/// per speckle realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSpec {
    pub lambda0: f64,
    pub fwhm: f64,
    pub n_components: usize,
    pub waist: f64,
    pub n_modes: usize,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "center wavelength must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.fwhm.is_finite() && self.fwhm >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spectral width must be non-negative, got {}",
                self.fwhm
            )));
        }
        if self.n_components == 0 || self.n_modes == 0 {
            return Err(Error::InvalidArgument(
                "source needs at least one spectral component and one mode".into(),
            ));
        }
        if self.n_components > 1 && self.fwhm == 0.0 {
            return Err(Error::InvalidArgument(
                "multiple spectral components need a positive spectral width".into(),
            ));
        }
        if self.fwhm >= self.lambda0 {
            return Err(Error::InvalidArgument(
                "spectral width must be well below the center wavelength".into(),
            ));
        }
        if !(self.waist.is_finite() && self.waist > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "source waist must be positive, got {}",
                self.waist
            )));
        }
        Ok(())
    }
}

/// Hermite–Gauss index pairs `(m, n)` in order of increasing total order
/// `s = m + n`; within a given `s`, `(s, 0), (s−1, 1), …, (0, s)`.
pub fn mode_indices(n_modes: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n_modes);
    let mut s = 0usize;
    while v.len() < n_modes {
        for i in 0..=s {
            v.push((s - i, i));
            if v.len() == n_modes {
                break;
            }
        }
        s += 1;
    }
    v
}

/// One-dimensional normalized Hermite–Gauss functions `u_0 … u_max_order`
/// evaluated at the given positions, for a fundamental waist `w`
/// (1/e² intensity radius): `u_n(x) = (√2/w)^{1/2}·h_n(√2·x/w)` with
/// `h_n` the orthonormal Hermite functions.  `∫ u_m u_n dx = δ_{mn}`.
pub fn hg_table(max_order: usize, xs: &[f64], waist: f64) -> Vec<Vec<f64>> {
    let norm = (std::f64::consts::SQRT_2 / waist).sqrt();
    let mut table = vec![vec![0.0; xs.len()]; max_order + 1];
    let quarter_pi = std::f64::consts::PI.powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        let xi = std::f64::consts::SQRT_2 * x / waist;
        let mut prev = quarter_pi * (-0.5 * xi * xi).exp();
        table[0][i] = norm * prev;
        if max_order == 0 {
            continue;
        }
        let mut cur = std::f64::consts::SQRT_2 * xi * prev;
        table[1][i] = norm * cur;
        for n in 1..max_order {
            let next = (2.0 / (n as f64 + 1.0)).sqrt() * xi * cur
                - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            table[n + 1][i] = norm * cur;
        }
    }
    table
}

fn splitmix64_round(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic uniform phase in `[0, 2π)` keyed by
/// `(seed, spectral component, draw, mode)`.  Chaining one mixer round per
/// key decorrelates nearby keys without any shared mutable state, so phases
/// can be generated in any order (or in parallel) with identical results.
pub fn keyed_phase(seed: u64, spectral: u64, draw: u64, mode: u64) -> f64 {
    let mut s = splitmix64_round(seed);
    s = splitmix64_round(s ^ spectral);
    s = splitmix64_round(s ^ draw);
    s = splitmix64_round(s ^ mode);
    let unit = (s >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * std::f64::consts::PI * unit
}

fn max_total_order(n_modes: usize) -> usize {
    mode_indices(n_modes)
        .last()
        .map(|&(m, n)| m + n)
        .unwrap_or(0)
}

/// One speckle realization: `ψ = Σ_k e^{iθ_k}·Φ_k/√n_modes` over the first
/// `n_modes` Hermite–Gauss modes, with phases keyed by
/// `(seed, spectral, draw, k)`.  Because the modes are orthonormal, the
/// realization carries unit total power (up to discretization).
///
/// Precondition: the grid half-extent must contain the largest mode,
/// `waist·√(max_order + 1)`.
pub fn sample_speckle(
    source: &SourceSpec,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    seed: u64,
    spectral: u64,
    draw: u64,
) -> Result<Field<f64>> {
    source.validate()?;
    let s_max = max_total_order(source.n_modes);
    let mode_radius = source.waist * ((s_max + 1) as f64).sqrt();
    let half_extent = 0.5 * (nx as f64 * dx).min(ny as f64 * dy);
    if mode_radius > half_extent {
        return Err(Error::Geometry(format!(
            "largest source mode (radius {mode_radius:.3e} m) exceeds the grid half-extent \
             {half_extent:.3e} m"
        )));
    }
    let modes = mode_indices(source.n_modes);
    let inv_sqrt = 1.0 / (source.n_modes as f64).sqrt();
    let phases: Vec<C64> = (0..source.n_modes)
        .map(|k| C64::from_polar(inv_sqrt, keyed_phase(seed, spectral, draw, k as u64)))
        .collect();
    let xs: Vec<f64> = (0..nx).map(|i| (i as f64 - (nx / 2) as f64) * dx).collect();
    let ys: Vec<f64> = (0..ny).map(|i| (i as f64 - (ny / 2) as f64) * dy).collect();
    let tx = hg_table(s_max, &xs, source.waist);
    let ty = hg_table(s_max, &ys, source.waist);

    let mut data = Array2::from_elem((ny, nx), C64::new(0.0, 0.0));
    {
        let slice = data.as_slice_mut().expect("fresh array is contiguous");
        slice.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for (k, &(m, n)) in modes.iter().enumerate() {
                let c = phases[k] * ty[n][iy];
                let ux = &tx[m];
                for (ix, v) in row.iter_mut().enumerate() {
                    *v += c * ux[ix];
                }
            }
        });
    }
    Field::from_data(dx, dy, data)
}

/// Discrete spectral comb: `n` equally spaced wavelengths spanning
/// `λ0 ± fwhm/2`, with normalized Lorentzian weights of half-width
/// `γ = fwhm/2`.  Returns `(wavelength, weight)` pairs; `n = 1` collapses to
/// the center wavelength with unit weight.
pub fn spectral_components(lambda0: f64, fwhm: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "center wavelength must be positive, got {lambda0}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one spectral component".into(),
        ));
    }
    if n == 1 {
        return Ok(vec![(lambda0, 1.0)]);
    }
    if !(fwhm.is_finite() && fwhm > 0.0 && fwhm < lambda0) {
        return Err(Error::InvalidArgument(format!(
            "spectral width must be positive and below the center wavelength, got {fwhm}"
        )));
    }
    let gamma = 0.5 * fwhm;
    let mut comps: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let lam = lambda0 - 0.5 * fwhm + fwhm * i as f64 / (n as f64 - 1.0);
            let detune = lam - lambda0;
            (lam, 1.0 / (detune * detune + gamma * gamma))
        })
        .collect();
    let total: f64 = comps.iter().map(|&(_, w)| w).sum();
    for c in &mut comps {
        c.1 /= total;
    }
    Ok(comps)
}

/// Ensemble-averaged intensity volume for a partially coherent source.
///
/// The mask is rasterized once (its geometry is wavelength independent);
/// for each spectral component a fresh speckle realization illuminates it,
/// the 4f relay (whose Fourier-plane filter is re-rasterized at that
/// wavelength's focal-plane pitch) forms the image, and an angular-spectrum
/// scan over `z_values` accumulates Lorentzian-weighted intensity.  The
/// image-plane pitch `dx·f2/f1` is wavelength independent, so all
/// components share one output grid.
///
/// Deterministic for a given `(seed, source, geometry)` regardless of
/// thread count.
#[allow(clippy::too_many_arguments)]
pub fn incoherent_volume(
    mask: &MaskSpec,
    sys: &SystemSpec,
    filter: &FilterSpec,
    source: &SourceSpec,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    z_values: &[f64],
    seed: u64,
) -> Result<Volume<f64>> {
    source.validate()?;
    if z_values.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one defocus plane".into(),
        ));
    }
    let mask_field: Field<f64> = render_mask(mask, nx, ny, dx, dy)?;
    let comps = spectral_components(source.lambda0, source.fwhm, source.n_components)?;
    let mut planes: Vec<Array2<f64>> = vec![Array2::zeros((ny, nx)); z_values.len()];
    let mut image_pitch: Option<(f64, f64)> = None;
    for (i, &(lam, weight)) in comps.iter().enumerate() {
        let mut illum = sample_speckle(source, nx, ny, dx, dy, seed, i as u64, 0)?;
        illum.modulate(&mask_field)?;
        let comp_sys = SystemSpec::new(sys.f1, sys.f2, lam)?;
        let image = propagate_4f(&illum, &comp_sys, filter)?;
        match image_pitch {
            None => image_pitch = Some((image.dx(), image.dy())),
            Some((px, py)) => {
                // The pitch is computed through λ-dependent factors that
                // cancel analytically, so allow last-ulp rounding but reject
                // any genuine grid mismatch between components.
                let off = ((image.dx() - px) / px)
                    .abs()
                    .max(((image.dy() - py) / py).abs());
                if off > 1e-9 {
                    return Err(Error::Numerical(format!(
                        "image-plane pitch drifted across spectral components \
                         (relative offset {off:.2e})"
                    )));
                }
            }
        }
        let asp = AngularSpectrum::new(&image, lam)?;
        if asp.evanescent_fraction > 1e-2 {
            return Err(Error::Numerical(format!(
                "{:.1}% of the image power is evanescent at λ = {lam:.4e} m; \
                 refine the transverse sampling",
                100.0 * asp.evanescent_fraction
            )));
        }
        for (plane, &z) in planes.iter_mut().zip(z_values) {
            let p = asp.at(z).intensity();
            plane.zip_mut_with(&p, |acc, &v| *acc += weight * v);
        }
    }
    let (pdx, pdy) = image_pitch.expect("at least one component");
    Volume::new(pdx, pdy, z_values.to_vec(), planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mode_indices_enumerate_by_total_order() {
        assert_eq!(
            mode_indices(6),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        assert_eq!(mode_indices(200).len(), 200);
        assert_eq!(max_total_order(200), 19); // 190 modes fill s ≤ 18; 200th sits at s = 19
    }

    #[test]
    fn hg_modes_are_orthonormal() {
        let w = 1.0;
        let dx = 0.02;
        let xs: Vec<f64> = (-600..=600).map(|i| i as f64 * dx).collect();
        let t = hg_table(5, &xs, w);
        for m in 0..=5 {
            for n in 0..=5 {
                let dot: f64 = xs
                    .iter()
                    .enumerate()
                    .map(|(i, _)| t[m][i] * t[n][i] * dx)
                    .sum();
                let expect = if m == n { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn keyed_phase_is_deterministic_and_sensitive() {
        let p = keyed_phase(42, 3, 0, 17);
        assert_eq!(p, keyed_phase(42, 3, 0, 17));
        assert!((0.0..2.0 * std::f64::consts::PI).contains(&p));
        assert_ne!(p, keyed_phase(43, 3, 0, 17));
        assert_ne!(p, keyed_phase(42, 4, 0, 17));
        assert_ne!(p, keyed_phase(42, 3, 1, 17));
        assert_ne!(p, keyed_phase(42, 3, 0, 18));
    }

    fn test_source() -> SourceSpec {
        SourceSpec {
            lambda0: 825e-9,
            fwhm: 3e-9,
            n_components: 3,
            waist: 1.0,
            n_modes: 50,
        }
    }

    #[test]
    fn speckle_is_deterministic_with_unit_power() {
        let src = test_source();
        let n = 128;
        let dx = 0.1;
        let a = sample_speckle(&src, n, n, dx, dx, 7, 0, 0).unwrap();
        let b = sample_speckle(&src, n, n, dx, dx, 7, 0, 0).unwrap();
        assert_eq!(a.data(), b.data());
        assert_abs_diff_eq!(a.power(), 1.0, epsilon = 1e-3);
        let c = sample_speckle(&src, n, n, dx, dx, 8, 0, 0).unwrap();
        assert!(a.data().iter().zip(c.data().iter()).any(|(x, y)| x != y));
    }

    #[test]
    fn speckle_extent_guard() {
        let src = SourceSpec {
            waist: 10.0,
            ..test_source()
        };
        assert!(matches!(
            sample_speckle(&src, 64, 64, 0.1, 0.1, 1, 0, 0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn spectral_comb_is_normalized_and_symmetric() {
        let c = spectral_components(825e-9, 3e-9, 1).unwrap();
        assert_eq!(c, vec![(825e-9, 1.0)]);
        let c = spectral_components(825e-9, 3e-9, 5).unwrap();
        assert_eq!(c.len(), 5);
        let total: f64 = c.iter().map(|&(_, w)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[0].0, 825e-9 - 1.5e-9, epsilon = 1e-18);
        assert_abs_diff_eq!(c[4].0, 825e-9 + 1.5e-9, epsilon = 1e-18);
        assert_abs_diff_eq!(c[0].1, c[4].1, epsilon = 1e-12);
        assert!(c[2].1 > c[0].1);
        // Lorentzian at ±γ is half the center value.
        assert_abs_diff_eq!(c[0].1, 0.5 * c[2].1, epsilon = 1e-12);
    }

    #[test]
    fn ensemble_volume_is_deterministic() {
        let a = 100e-6;
        let mask = MaskSpec::uniform(C64::new(0.0, 0.0)).with_sites(&[crate::optics::SiteSpec {
            center: (0.0, 0.0),
            radius: a,
            t: C64::new(1.0, 0.0),
        }]);
        let sys = SystemSpec::new(0.1, 0.1, 825e-9).unwrap();
        let filter = FilterSpec::Disk {
            radius: sys.standard_iris_radius(a),
        };
        let src = SourceSpec {
            lambda0: 825e-9,
            fwhm: 3e-9,
            n_components: 3,
            waist: 0.3e-3,
            n_modes: 20,
        };
        let n = 128;
        let dx = a / 8.0;
        let zs = [0.0, 20e-6];
        let v1 = incoherent_volume(&mask, &sys, &filter, &src, n, n, dx, dx, &zs, 11).unwrap();
        let v2 = incoherent_volume(&mask, &sys, &filter, &src, n, n, dx, dx, &zs, 11).unwrap();
        assert_eq!(v1.planes, v2.planes);
        assert!(v1
            .planes
            .iter()
            .all(|p| p.iter().all(|&x| x.is_finite() && x >= 0.0)));
        assert!(v1.planes[0].iter().any(|&x| x > 0.0));
        let v3 = incoherent_volume(&mask, &sys, &filter, &src, n, n, dx, dx, &zs, 12).unwrap();
        assert!(v1.planes[0] != v3.planes[0]);
    }
}
