//! Physical constants (SI units).

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Mean Earth radius, m.
pub const EARTH_RADIUS_M: f64 = 6_371.0e3;

/// Standard gravitational parameter of Earth, m³/s².
pub const MU_EARTH: f64 = 3.986_004_418e14;

/// Seconds per Julian year (365.25 days).
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;
