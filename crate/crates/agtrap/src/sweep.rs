//! Design-space sweeps for dark sites: center-darkness maps over hole phase
//! and iris size, per-phase optimal-iris search, and dual-species mask
//! design.
//!
//! The map uses the closed-form center field of a filtered site,
//! `|1 + (t_a·e^{iφ} − 1)·(1 − J0(x₁·b̂))|²`, where `b̂` is the iris radius
//! as a fraction of the standard (first-Airy-minimum) iris and `x₁` the
//! first J1 zero — evaluation is microseconds per point, so dense maps are
//! cheap.

use crate::analytic::{dual_species_balance, DarkMaskVariant};
use crate::error::{Error, Result};
use crate::fit::golden_min;
use crate::scalar::C64;
use crate::special::{bessel_zero, j0};
use serde::Serialize;
use std::io::Write as _;
use std::path::Path;

/// Smallest iris fraction searched by [`find_darkest_b`]; below it the
/// filter passes essentially nothing and the map is flat at 1.
pub const MIN_IRIS_FRACTION: f64 = 1e-3;

fn check_hole_transmission(t_a: f64) -> Result<()> {
    if !(t_a.is_finite() && (0.0..=1.0 + 1e-9).contains(&t_a)) {
        return Err(Error::InvalidArgument(format!(
            "hole transmission magnitude must lie in [0, 1], got {t_a}"
        )));
    }
    Ok(())
}

/// Relative center intensity ("darkness") of a filtered dark site whose hole
/// transmits `t_a·e^{iφ}` relative to a unit background, behind an iris of
/// `b̂` standard radii.  0 is a perfect null; 1 matches the background.
pub fn center_darkness(t_a: f64, phi: f64, b_hat: f64) -> f64 {
    let g = 1.0 - j0(bessel_zero(1, 1) * b_hat);
    let hole = C64::from_polar(t_a, phi);
    (C64::new(1.0, 0.0) + (hole - C64::new(1.0, 0.0)) * g).norm_sqr()
}

/// Dense darkness map over `(φ, b̂)` for one hole transmission magnitude.
///
/// Rows follow `phi_values`, columns `b_values`; `schema_version` tags the
/// serialized layout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub schema_version: u32,
    pub t_a: f64,
    /// Hole phases in radians.
    pub phi_values: Vec<f64>,
    /// Iris radii in units of the standard iris.
    pub b_values: Vec<f64>,
    /// `darkness[i_phi][i_b]`.
    pub darkness: Vec<Vec<f64>>,
}

/// Evaluate the darkness map on the outer product of `phi_values` (radians)
/// and `b_values` (standard-iris fractions).
pub fn darkness_map(t_a: f64, phi_values: &[f64], b_values: &[f64]) -> Result<SweepGrid> {
    check_hole_transmission(t_a)?;
    if phi_values.is_empty() || b_values.is_empty() {
        return Err(Error::InvalidArgument(
            "darkness map needs non-empty phase and iris lists".into(),
        ));
    }
    if b_values.iter().any(|&b| !(b.is_finite() && b >= 0.0))
        || phi_values.iter().any(|p| !p.is_finite())
    {
        return Err(Error::InvalidArgument(
            "darkness map axes must be finite (and iris fractions non-negative)".into(),
        ));
    }
    let darkness = phi_values
        .iter()
        .map(|&phi| {
            b_values
                .iter()
                .map(|&b| center_darkness(t_a, phi, b))
                .collect()
        })
        .collect();
    Ok(SweepGrid {
        schema_version: 1,
        t_a,
        phi_values: phi_values.to_vec(),
        b_values: b_values.to_vec(),
        darkness,
    })
}

impl SweepGrid {
    /// `(φ, b̂, darkness)` of the smallest map entry (first hit on ties).
    pub fn argmin(&self) -> (f64, f64, f64) {
        let mut best = (self.phi_values[0], self.b_values[0], f64::INFINITY);
        for (i, row) in self.darkness.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (self.phi_values[i], self.b_values[j], v);
                }
            }
        }
        best
    }

    /// Matrix CSV with axis header rows: a comment row carrying `t_a`, a
    /// header row listing the `b_hat` axis, then one row per phase whose
    /// leading cell is `phi_rad` and whose remaining cells are darkness.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "# t_a = {:e}", self.t_a)?;
        write!(out, "phi_rad\\b_hat")?;
        for &b in &self.b_values {
            write!(out, ",{b:e}")?;
        }
        writeln!(out)?;
        for (i, row) in self.darkness.iter().enumerate() {
            write!(out, "{:e}", self.phi_values[i])?;
            for &v in row {
                write!(out, ",{v:e}")?;
            }
            writeln!(out)?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Self-describing JSON twin of the CSV (same data, with axes and
    /// schema version embedded).
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Iris fraction minimizing the center darkness at fixed hole transmission
/// and phase; returns `(b̂*, darkness)`.
///
/// The map is unimodal in `b̂` (it is a parabola in the monotone quantity
/// `1 − J0(x₁·b̂)`), so golden-section search is exact.  When the optimum
/// sits on the search boundary (`b̂ = 1` or the lower cutoff) the result is
/// reported as [`Error::BoundarySolution`] carrying the edge position and
/// value, because a larger iris (or a different phase) would keep improving.
pub fn find_darkest_b(t_a: f64, phi: f64) -> Result<(f64, f64)> {
    check_hole_transmission(t_a)?;
    if !phi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "hole phase must be finite, got {phi}"
        )));
    }
    let f = |b: f64| center_darkness(t_a, phi, b);
    let (b, value) = golden_min(f, MIN_IRIS_FRACTION, 1.0, 1e-9);
    let edge = 1e-6;
    if b >= 1.0 - edge {
        return Err(Error::BoundarySolution {
            b: 1.0,
            value: f(1.0),
        });
    }
    if b <= MIN_IRIS_FRACTION + edge {
        return Err(Error::BoundarySolution {
            b: MIN_IRIS_FRACTION,
            value: f(MIN_IRIS_FRACTION),
        });
    }
    Ok((b, value))
}

/// A mask design hosting bright and dark sites of two atomic species on one
/// background.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualMaskDesign {
    /// Background transmission `t_b` balancing the two trap depths.
    pub background: f64,
    /// Bright-hole transmission (always 1: fully open).
    pub bright_hole: f64,
    /// Dark-hole transmission (`≈0.287·t_b` for the scaled variant, 0 for
    /// the opaque variant).
    pub dark_hole: f64,
    /// Iris argument `X = k·a·b/f1` the dark sites are designed for.
    pub dark_iris_argument: f64,
    pub variant: DarkMaskVariant,
}

/// Choose the background transmission (and dark-hole transmission) so that
/// bright-site depth times `|α_bright|` matches dark-site crest height times
/// `|α_dark|`, for species of polarizability `α_bright` (trapped at bright
/// sites) and `α_dark` (repelled, held at dark sites).
pub fn design_dual_mask(
    alpha_bright: f64,
    alpha_dark: f64,
    variant: DarkMaskVariant,
) -> Result<DualMaskDesign> {
    let background = dual_species_balance(alpha_bright, alpha_dark, variant)?;
    let x1 = bessel_zero(1, 1);
    let (dark_hole, dark_iris_argument) = match variant {
        DarkMaskVariant::TaScaled => {
            // Null condition fixes the hole-to-background ratio.
            let t_star = -j0(x1) / (1.0 - j0(x1));
            (t_star * background, x1)
        }
        DarkMaskVariant::Opaque => (0.0, bessel_zero(0, 1)),
    };
    Ok(DualMaskDesign {
        background,
        bright_hole: 1.0,
        dark_hole,
        dark_iris_argument,
        variant,
    })
}
