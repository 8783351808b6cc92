//! Shared fixtures for the integration suites: canonical relay builders and
//! small probe/statistics utilities used by several test binaries.
#![allow(dead_code)]

use agtrap::analytic::SystemSpec;
use agtrap::grid::{radial_profile, Field, RadialProfile};
use agtrap::optics::{propagate_4f, render_mask, FilterSpec, MaskSpec};
use ndarray::{s, Array2};

/// Canonical mask hole radius used across the FFT fixtures (m).
pub const A_HOLE: f64 = 100e-6;

/// Render `mask` at pitch `dx` on an `n × n` grid and push it through the
/// relay with a single clear-disk iris of radius `b_iris` (m).
pub fn relay_image(
    mask: &MaskSpec,
    sys: &SystemSpec,
    n: usize,
    dx: f64,
    b_iris: f64,
) -> Field<f64> {
    let input: Field<f64> = render_mask(mask, n, n, dx, dx).expect("mask raster");
    propagate_4f(&input, sys, &FilterSpec::Disk { radius: b_iris }).expect("4f relay")
}

/// Azimuthal intensity profile about the grid origin.
pub fn origin_profile(image: &Field<f64>, n_bins: usize) -> RadialProfile {
    radial_profile(
        &image.intensity(),
        image.dx(),
        image.dy(),
        (0.0, 0.0),
        n_bins,
    )
    .expect("radial profile")
}

fn for_disk(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    lo: f64,
    hi: f64,
    mut visit: impl FnMut(f64),
) {
    let (ny, nx) = intensity.dim();
    for iy in 0..ny {
        let y = (iy as f64 - (ny / 2) as f64) * dy - center.1;
        for ix in 0..nx {
            let x = (ix as f64 - (nx / 2) as f64) * dx - center.0;
            let r = (x * x + y * y).sqrt();
            if r >= lo && r <= hi {
                visit(intensity[[iy, ix]]);
            }
        }
    }
}

/// Mean intensity over the disk `r ≤ radius` about `center` (same centered
/// origin convention as [`Field`]).
pub fn probe_mean(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    radius: f64,
) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for_disk(intensity, dx, dy, center, 0.0, radius, |v| {
        sum += v;
        n += 1;
    });
    assert!(n > 0, "probe disk contains no pixels");
    sum / n as f64
}

/// Median intensity over the annulus `lo ≤ r ≤ hi` about `center`.
pub fn annulus_median(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    lo: f64,
    hi: f64,
) -> f64 {
    let mut vals = Vec::new();
    for_disk(intensity, dx, dy, center, lo, hi, |v| vals.push(v));
    assert!(!vals.is_empty(), "annulus contains no pixels");
    median(vals)
}

/// Maximum intensity within `r ≤ radius` of `center`.
pub fn disk_max(
    intensity: &Array2<f64>,
    dx: f64,
    dy: f64,
    center: (f64, f64),
    radius: f64,
) -> f64 {
    let mut best = f64::MIN;
    for_disk(intensity, dx, dy, center, 0.0, radius, |v| {
        best = best.max(v);
    });
    assert!(best > f64::MIN, "search disk contains no pixels");
    best
}

/// Square crop of half-width `half` samples about the central sample.
pub fn center_crop(img: &Array2<f64>, half: usize) -> Array2<f64> {
    let (ny, nx) = img.dim();
    let (cy, cx) = (ny / 2, nx / 2);
    assert!(half < cy && half < cx, "crop larger than the grid");
    img.slice(s![cy - half..=cy + half, cx - half..=cx + half])
        .to_owned()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Root-mean-square of the elementwise difference between two slices.
pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sq / a.len() as f64).sqrt()
}
