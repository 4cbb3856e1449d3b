//! Physical constants shared by every module.
//!
//! Values follow the 2019 SI redefinition (h, e, k_B exact); derived
//! constants are written out to full double precision so that all modules
//! agree bit for bit.

/// Planck constant h (J s), exact.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant ħ = h / 2π (J s).
pub const HBAR: f64 = 1.054_571_817_646_156_4e-34;

/// Boltzmann constant k_B (J/K), exact.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Elementary charge e (C), exact.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Magnetic flux quantum ϕ₀ = h / 2e (Wb).
pub const FLUX_QUANTUM: f64 = 2.067_833_848_461_929e-15;
