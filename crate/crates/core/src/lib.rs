//! Dual-downlink entanglement-based QKD mission modelling.
//!
//! The crate simulates a satellite distributing entangled photon pairs to
//! two optical ground stations during an overpass and evaluates how many
//! composably secure key bits the BBM92 protocol extracts from it:
//!
//! 1. [`geometry`] - circular-orbit overpass sampling: slant ranges,
//!    elevations, joint-visibility window;
//! 2. [`channel`] - per-link optical efficiency from diffraction,
//!    atmospheric attenuation, and fixed intrinsic loss;
//! 3. [`counts`] - coincidence and error statistics including background,
//!    dark counts, and afterpulsing;
//! 4. [`finitekey`] - composable finite-key engine: QBER-threshold block
//!    construction and the reduced grid search for the key length;
//! 5. [`mission`] - system-level studies: parameter sweeps, maximum
//!    viewable station separation, and the annual key yield;
//! 6. [`scenario`] - flat key-value scenario files tying it all together.
//!
//! All numerical kernels are generic over the [`real::Real`] scalar;
//! production entry points use the [`Scalar`] (`f64`) instantiation.

// Validators use `!(x > 0)` so NaN fails validation; `x <= 0` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod constants;
pub mod counts;
pub mod error;
pub mod finitekey;
pub mod geometry;
pub mod interp;
pub mod mission;
pub mod quad;
pub mod real;
pub mod scenario;
pub mod special;
pub mod vec3;

pub use error::{Error, Result};
pub use real::Real;

/// Working scalar for the production pipeline.
pub type Scalar = f64;

/// Concrete aliases for the common pipeline types.
pub type OverpassGeometry = geometry::OverpassGeometry<Scalar>;
pub type LinkProfile = geometry::LinkProfile<Scalar>;
pub type OpticalSystem = channel::OpticalSystem<Scalar>;
pub type AtmosphereTable = channel::AtmosphereTable<Scalar>;
pub type LossProfile = channel::LossProfile<Scalar>;
pub type DetectorModel = counts::DetectorModel<Scalar>;
pub type SourceModel = counts::SourceModel<Scalar>;
pub type RadianceModel = counts::RadianceModel<Scalar>;
pub type CountsProfile = counts::CountsProfile<Scalar>;
pub type SecurityConfig = finitekey::SecurityConfig<Scalar>;
pub type BlockStats = finitekey::BlockStats<Scalar>;
pub type SklResult = finitekey::SklResult<Scalar>;
pub type Scenario = scenario::Scenario;
