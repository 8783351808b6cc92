//! Passive Fourier-filtered optical trap arrays: design and simulation.
//!
//! A binary amplitude mask (an array of holes) sits in the front focal plane
//! of a 4f relay; an iris or zone filter in the shared Fourier plane strips
//! the interfering diffraction orders; the back focal plane then carries an
//! array of diffraction-engineered optical traps — bright spots, dark nulls
//! in a uniform background, or both at once for two atomic species.
//!
//! The crate offers two independent evaluation paths and the tooling to
//! compare them:
//!
//! * [`analytic`] — closed-form center fields, radial/axial trap profiles
//!   via finite Bessel integrals, Taylor expansions, efficiencies,
//!   throughput, dual-species balancing, confinement statistics, zone
//!   filters, and Talbot/spectral scales.
//! * [`optics`] — an FFT diffraction engine (rasterized masks, lens
//!   transforms, 4f relay, angular-spectrum defocus) sharing no formulas
//!   with the analytic path beyond the lens Fourier relationship.
//! * [`incoherent`] — partially coherent sources: Hermite–Gauss speckle
//!   realizations and Lorentzian-weighted broadband ensembles.
//! * [`metrics`] — waist/power-law/divergence fits, site darkness,
//!   correlation-based revival location, and trap report tables.
//! * [`sweep`] — darkness maps over hole phase and iris size, optimal-iris
//!   search, dual-species mask design.
//!
//! Supporting layers: [`grid`] (sampled fields and profiles), [`fft2`]
//! (centered 2-D FFTs), [`special`] (Bessel functions and zeros),
//! [`quadrature`] (adaptive Gauss–Kronrod), [`fit`] (golden-section and
//! linear least squares), [`io`] (binary field, PGM, and CSV writers).
//!
//! Lengths are in meters, angles in radians, intensities relative to the
//! illumination unless a function documents otherwise.  Everything is
//! deterministic: equal inputs (including seeds) produce byte-identical
//! outputs regardless of thread count.

pub mod analytic;
pub mod error;
pub mod fft2;
pub mod fit;
pub mod grid;
pub mod incoherent;
pub mod io;
pub mod metrics;
pub mod optics;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar, C, C64};
