//! Simulation and analysis toolkit for a current-biased Josephson junction
//! operated as a switching detector of pulsed microwave photons.
//!
//! The crate covers the full chain from device physics to extracted
//! detector figures:
//!
//! - [`junction`] — washboard potential, plasma frequency, photon/level
//!   bookkeeping and unit conversions;
//! - [`escape`] — Kramers thermal escape rates and the Poisson model for
//!   finite-width pulse switching;
//! - [`langevin`] — stochastic phase dynamics with thermal noise and RF
//!   drive, Monte Carlo escape rates, and switching-boundary maps;
//! - [`protocol`] — synthetic switching-time datasets that follow the
//!   ramp/hold/trigger measurement cycle with timeout censoring;
//! - [`analysis`] — histogram fits (exponential and RF-modified), efficiency
//!   extraction, Kramers curve fits, and the pulse-duration fit;
//! - [`report`] — sweep orchestration, CSV/JSON/SVG report bundles, and the
//!   configuration schema used by the `cbjj` command-line tool.
//!
//! The `examples/` directory holds one runnable example per capability;
//! `cbjj --help` lists the equivalent command-line entry points.

pub mod analysis;
pub mod constants;
pub mod dataset;
pub mod error;
pub mod escape;
pub mod junction;
pub mod langevin;
pub mod protocol;
pub mod report;
pub mod seeding;

pub use error::{Error, Result};
pub use escape::{RateCurve, ThermalEnvironment};
pub use junction::{JunctionParams, OperatingPoint, RfPulse};
pub use protocol::{BiasWaveform, ProtocolConfig, SwitchingDataset, SwitchingRecord};
