//! JSON run-configuration schema, validation, and resolution into library
//! types.
//!
//! Conventions: every length field name carries `_m` (meters) and every
//! angle `_deg` (degrees); each file starts with `"schema_version": 1`.
//! Unknown fields are rejected so typos fail loudly.  All validation happens
//! before any artifact is created; validation failures map to exit code 2.

use agtrap::analytic::{zone_filter_radii, SystemSpec, TrapKind};
use agtrap::optics::{FilterSpec, MaskSpec};
use agtrap::C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Read and parse a JSON config file; parse errors keep serde's
/// line/column anchor.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn check_schema_version(v: u32) -> Result<(), String> {
    if v != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {v} (this build reads version {SCHEMA_VERSION})"
        ));
    }
    Ok(())
}

fn finite_positive(name: &str, v: f64) -> Result<(), String> {
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("{name} must be finite and positive, got {v}"));
    }
    Ok(())
}

/// Evenly spaced samples from `lo` to `hi` inclusive (`n = 1` gives `[lo]`).
pub fn linspace(lo: f64, hi: f64, n: u32) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Shared blocks
// ---------------------------------------------------------------------------

/// 4f relay geometry and illumination wavelength.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub f1_m: f64,
    pub f2_m: f64,
    pub lambda_m: f64,
}

impl SystemBlock {
    pub fn resolve(&self) -> Result<SystemSpec, String> {
        SystemSpec::new(self.f1_m, self.f2_m, self.lambda_m).map_err(|e| format!("system: {e}"))
    }
}

/// A complex transmission in polar form.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexBlock {
    pub magnitude: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

impl ComplexBlock {
    pub fn value(&self) -> C64 {
        C64::from_polar(self.magnitude, self.phase_deg.to_radians())
    }

    fn validate(&self, name: &str) -> Result<(), String> {
        if !(self.magnitude.is_finite() && (0.0..=1.0).contains(&self.magnitude)) {
            return Err(format!(
                "{name}.magnitude must lie in [0, 1], got {}",
                self.magnitude
            ));
        }
        if !self.phase_deg.is_finite() {
            return Err(format!("{name}.phase_deg must be finite"));
        }
        Ok(())
    }
}

/// Canonical trap-mask kinds plus fully custom transmissions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    /// Transparent holes in an opaque background.
    Bright,
    /// Clear background, hole transmission at the dark condition (≈ 0.287).
    ScaledDark,
    /// Clear background, opaque holes, iris at the first J0 zero.
    OpaqueDark,
    /// Explicit hole/background transmissions.
    Custom,
}

impl MaskKind {
    pub fn trap_kind(self) -> Option<TrapKind> {
        match self {
            MaskKind::Bright => Some(TrapKind::Bright),
            MaskKind::ScaledDark => Some(TrapKind::Dark287),
            MaskKind::OpaqueDark => Some(TrapKind::DarkOpaque),
            MaskKind::Custom => None,
        }
    }
}

/// The hole array: kind, hole radius, pitch, and lattice extent.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskBlock {
    pub kind: MaskKind,
    pub a_m: f64,
    /// Site pitch; must exceed one hole diameter when the lattice holds more
    /// than one site (ignored for a single site).
    #[serde(default)]
    pub d_m: f64,
    #[serde(default = "default_one")]
    pub nx_sites: u32,
    #[serde(default = "default_one")]
    pub ny_sites: u32,
    /// Hole transmission — custom masks only.
    #[serde(default)]
    pub hole_transmission: Option<ComplexBlock>,
    /// Background transmission — custom masks only.
    #[serde(default)]
    pub background_transmission: Option<ComplexBlock>,
}

fn default_one() -> u32 {
    1
}

impl MaskBlock {
    pub fn validate(&self) -> Result<(), String> {
        finite_positive("mask.a_m", self.a_m)?;
        if self.nx_sites == 0 || self.ny_sites == 0 {
            return Err("mask lattice needs at least one site per axis".into());
        }
        if self.n_sites() > 1 && !(self.d_m.is_finite() && self.d_m > 2.0 * self.a_m) {
            return Err(format!(
                "mask.d_m must exceed one hole diameter ({:.3e} m) for a multi-site lattice, got {}",
                2.0 * self.a_m,
                self.d_m
            ));
        }
        match self.kind {
            MaskKind::Custom => {
                let (h, b) = match (&self.hole_transmission, &self.background_transmission) {
                    (Some(h), Some(b)) => (h, b),
                    _ => {
                        return Err("custom masks need both mask.hole_transmission and \
                                    mask.background_transmission"
                            .into())
                    }
                };
                h.validate("mask.hole_transmission")?;
                b.validate("mask.background_transmission")?;
            }
            _ => {
                if self.hole_transmission.is_some() || self.background_transmission.is_some() {
                    return Err(format!(
                        "mask.kind {:?} fixes its transmissions; remove the explicit \
                         transmission blocks or use kind \"custom\"",
                        self.kind
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> u64 {
        self.nx_sites as u64 * self.ny_sites as u64
    }

    /// Hole and background transmissions (canonical values for named kinds).
    pub fn transmissions(&self) -> (C64, C64) {
        match self.kind.trap_kind() {
            Some(k) => k.mask_transmissions(),
            None => (
                self.hole_transmission.expect("validated").value(),
                self.background_transmission.expect("validated").value(),
            ),
        }
    }

    /// Iris argument of this mask's canonical filter (first Airy minimum
    /// except for the opaque-dark kind, which uses the first J0 zero).
    pub fn canonical_iris_argument(&self) -> f64 {
        self.kind
            .trap_kind()
            .unwrap_or(TrapKind::Bright)
            .iris_argument()
    }

    /// Renderable mask description centered on the grid.
    pub fn mask_spec(&self) -> MaskSpec {
        let (t_hole, t_bg) = self.transmissions();
        MaskSpec::square_lattice(
            t_bg,
            t_hole,
            self.a_m,
            self.d_m,
            self.nx_sites as usize,
            self.ny_sites as usize,
            (0.0, 0.0),
        )
    }
}

/// Fourier-plane filter selection.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FilterBlock {
    /// Circular iris scaled from the mask kind's canonical radius.
    Iris { b_over_standard: f64 },
    /// Central disk plus `n_rings` in-phase annular Airy zones.
    Zone { n_rings: u32 },
}

impl Default for FilterBlock {
    fn default() -> Self {
        FilterBlock::Iris {
            b_over_standard: 1.0,
        }
    }
}

impl FilterBlock {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            FilterBlock::Iris { b_over_standard } => {
                finite_positive("filter.b_over_standard", b_over_standard)
            }
            FilterBlock::Zone { .. } => Ok(()),
        }
    }

    pub fn resolve(&self, sys: &SystemSpec, mask: &MaskBlock) -> Result<FilterSpec, String> {
        match *self {
            FilterBlock::Iris { b_over_standard } => {
                let radius =
                    b_over_standard * sys.iris_radius(mask.a_m, mask.canonical_iris_argument());
                Ok(FilterSpec::Disk { radius })
            }
            FilterBlock::Zone { n_rings } => {
                let rings = zone_filter_radii(mask.a_m, sys, n_rings)
                    .map_err(|e| format!("filter: {e}"))?;
                Ok(FilterSpec::Zones { rings })
            }
        }
    }
}

/// Simulation raster: `n × n` samples spanning `extent_m` per side.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: u32,
    pub extent_m: f64,
}

impl GridBlock {
    pub fn validate(&self) -> Result<(), String> {
        if !(64..=8192).contains(&self.n) {
            return Err(format!("grid.n must lie in [64, 8192], got {}", self.n));
        }
        finite_positive("grid.extent_m", self.extent_m)
    }

    pub fn pitch(&self) -> f64 {
        self.extent_m / self.n as f64
    }
}

/// Optional symmetric defocus scan around the image plane.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxialBlock {
    pub z_half_range_m: f64,
    pub n_planes: u32,
}

impl AxialBlock {
    pub fn validate(&self) -> Result<(), String> {
        finite_positive("axial.z_half_range_m", self.z_half_range_m)?;
        if self.n_planes < 3 {
            return Err(format!(
                "axial.n_planes must be at least 3, got {}",
                self.n_planes
            ));
        }
        Ok(())
    }

    pub fn z_values(&self) -> Vec<f64> {
        linspace(-self.z_half_range_m, self.z_half_range_m, self.n_planes)
    }
}

/// Optional atom/beam context for thermal-confinement columns.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalBlock {
    pub depth_uk: f64,
    pub temperature_uk: f64,
    pub mass_amu: f64,
}

impl ThermalBlock {
    pub fn validate(&self) -> Result<(), String> {
        finite_positive("thermal.depth_uk", self.depth_uk)?;
        finite_positive("thermal.temperature_uk", self.temperature_uk)?;
        finite_positive("thermal.mass_amu", self.mass_amu)
    }
}

// ---------------------------------------------------------------------------
// Per-command configs
// ---------------------------------------------------------------------------

/// `simulate`: relay one mask to the image plane and measure its traps.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub system: SystemBlock,
    pub mask: MaskBlock,
    #[serde(default)]
    pub filter: FilterBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub axial: Option<AxialBlock>,
    #[serde(default)]
    pub thermal: Option<ThermalBlock>,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.mask.validate()?;
        self.filter.validate()?;
        self.grid.validate()?;
        if let Some(ax) = &self.axial {
            ax.validate()?;
        }
        if let Some(th) = &self.thermal {
            th.validate()?;
        }
        Ok(())
    }
}

/// Defocus scan window for `talbot`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub z_min_m: f64,
    pub z_max_m: f64,
    pub n_planes: u32,
}

impl ScanBlock {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.z_min_m.is_finite() && self.z_max_m.is_finite() && self.z_min_m < self.z_max_m) {
            return Err(format!(
                "scan needs z_min_m < z_max_m, got [{}, {}]",
                self.z_min_m, self.z_max_m
            ));
        }
        if self.n_planes < 5 {
            return Err(format!(
                "scan.n_planes must be at least 5, got {}",
                self.n_planes
            ));
        }
        Ok(())
    }

    pub fn z_values(&self) -> Vec<f64> {
        linspace(self.z_min_m, self.z_max_m, self.n_planes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    Coherent,
    Ensemble,
    Both,
}

/// Broadband multimode source parameters (`lambda` comes from the system
/// block; the linewidth is full width at half maximum).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub fwhm_m: f64,
    pub n_components: u32,
    pub waist_m: f64,
    pub n_modes: u32,
}

impl EnsembleBlock {
    pub fn validate(&self) -> Result<(), String> {
        finite_positive("source.ensemble.fwhm_m", self.fwhm_m)?;
        finite_positive("source.ensemble.waist_m", self.waist_m)?;
        if self.n_components == 0 || self.n_modes == 0 {
            return Err("source.ensemble needs at least one spectral component and one mode".into());
        }
        Ok(())
    }
}

/// Illumination model for `talbot`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub mode: SourceMode,
    #[serde(default)]
    pub ensemble: Option<EnsembleBlock>,
}

impl SourceBlock {
    pub fn validate(&self) -> Result<(), String> {
        match (self.mode, &self.ensemble) {
            (SourceMode::Coherent, Some(_)) => {
                Err("source.mode \"coherent\" takes no ensemble block".into())
            }
            (SourceMode::Coherent, None) => Ok(()),
            (_, None) => Err(format!(
                "source.mode {:?} needs a source.ensemble block",
                self.mode
            )),
            (_, Some(e)) => e.validate(),
        }
    }
}

/// `talbot`: scan a lattice image along the axis and find the revival plane.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TalbotConfig {
    pub schema_version: u32,
    pub system: SystemBlock,
    pub mask: MaskBlock,
    #[serde(default)]
    pub filter: FilterBlock,
    pub grid: GridBlock,
    pub scan: ScanBlock,
    pub source: SourceBlock,
}

impl TalbotConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.mask.validate()?;
        self.filter.validate()?;
        self.grid.validate()?;
        self.scan.validate()?;
        self.source.validate()?;
        if self.mask.nx_sites < 2 || self.mask.ny_sites < 2 {
            return Err(
                "talbot needs a lattice of at least 2×2 sites to form a revival".into(),
            );
        }
        Ok(())
    }
}

/// `sweep`: center darkness over hole phase and iris size at fixed |t_a|.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub hole_transmission_magnitude: f64,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    pub n_phi: u32,
    /// Iris radii in units of the standard (first-Airy-minimum) iris.
    pub b_min: f64,
    pub b_max: f64,
    pub n_b: u32,
    /// Also write the map minimum as `optimum.json`.
    #[serde(default)]
    pub mark_optimum: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        if !(self.hole_transmission_magnitude.is_finite()
            && (0.0..=1.0).contains(&self.hole_transmission_magnitude))
        {
            return Err(format!(
                "hole_transmission_magnitude must lie in [0, 1], got {}",
                self.hole_transmission_magnitude
            ));
        }
        if !(self.phi_min_deg.is_finite()
            && self.phi_max_deg.is_finite()
            && self.phi_max_deg >= self.phi_min_deg)
        {
            return Err("sweep needs finite phi_max_deg >= phi_min_deg".into());
        }
        if self.n_phi == 0 || self.n_b == 0 {
            return Err("sweep ranges must be non-empty (n_phi >= 1 and n_b >= 1)".into());
        }
        if !(self.b_min.is_finite() && self.b_max.is_finite() && self.b_min >= 0.0) {
            return Err("sweep iris fractions must be finite and non-negative".into());
        }
        if self.b_max < self.b_min {
            return Err(format!(
                "sweep needs b_max >= b_min, got [{}, {}]",
                self.b_min, self.b_max
            ));
        }
        Ok(())
    }

    pub fn phi_values_rad(&self) -> Vec<f64> {
        linspace(
            self.phi_min_deg.to_radians(),
            self.phi_max_deg.to_radians(),
            self.n_phi,
        )
    }

    pub fn b_values(&self) -> Vec<f64> {
        linspace(self.b_min, self.b_max, self.n_b)
    }
}
