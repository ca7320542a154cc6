//! Overpass geometry for a circular-orbit satellite and two ground stations.
//!
//! Frame convention: Earth-centred Cartesian axes with +z through the North
//! Pole. The two optical ground stations (OGSs) sit on the y-z great circle,
//! symmetrically displaced from the pole by the half-separation angle
//! `alpha = d / 2R`, so the OGS baseline plane is x = 0. The reference orbit
//! is polar and lies in the baseline plane; the track/baseline intersection
//! angle `phi` rotates the orbital plane about the polar axis and the tilt
//! `xi` rotates it about the +y axis (the equator/baseline intersection),
//! which displaces the ground track sideways from the stations.
//!
//! With `phi = xi = 0` the satellite passes through the zenith of both
//! stations consecutively; large tilts remove any window of joint
//! visibility entirely.

use crate::error::{Error, Result};
use crate::real::{cast, Real};
use crate::vec3::Vec3;

/// Orbit and station configuration for a single overpass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverpassGeometry<T> {
    /// Orbital altitude above the mean Earth surface, m.
    pub altitude_m: T,
    /// Great-circle separation of the two ground stations, m.
    pub separation_m: T,
    /// Track/baseline intersection angle, degrees.
    pub phi_deg: T,
    /// Orbital-plane tilt, degrees.
    pub xi_deg: T,
    /// Minimum usable elevation for either link, degrees.
    pub theta_min_deg: T,
    /// Mean Earth radius, m.
    pub earth_radius_m: T,
    /// Gravitational parameter of the central body, m³/s².
    pub mu: T,
    /// Time-bin duration for overpass sampling, s.
    pub bin_width_s: T,
}

impl<T: Real> Default for OverpassGeometry<T> {
    fn default() -> Self {
        Self {
            altitude_m: cast(500.0e3),
            separation_m: cast(500.0e3),
            phi_deg: T::zero(),
            xi_deg: T::zero(),
            theta_min_deg: cast(10.0),
            earth_radius_m: cast(crate::constants::EARTH_RADIUS_M),
            mu: cast(crate::constants::MU_EARTH),
            bin_width_s: T::one(),
        }
    }
}

impl<T: Real> OverpassGeometry<T> {
    /// Collect every violated invariant; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.altitude_m > T::zero()) {
            v.push(format!("altitude_m must be > 0, got {}", self.altitude_m));
        }
        if !(self.separation_m >= T::zero()) {
            v.push(format!(
                "ogs_separation_m must be >= 0, got {}",
                self.separation_m
            ));
        }
        if !(self.earth_radius_m > T::zero()) {
            v.push(format!(
                "earth radius must be > 0, got {}",
                self.earth_radius_m
            ));
        }
        if !(self.separation_m < T::PI() * self.earth_radius_m) {
            v.push(format!(
                "ogs_separation_m must be < pi*R (antipodal limit), got {}",
                self.separation_m
            ));
        }
        if !(self.theta_min_deg >= T::zero() && self.theta_min_deg < cast(90.0)) {
            v.push(format!(
                "theta_min_deg must lie in [0, 90), got {}",
                self.theta_min_deg
            ));
        }
        if !(self.mu > T::zero()) {
            v.push(format!("mu must be > 0, got {}", self.mu));
        }
        if !(self.bin_width_s > T::zero()) {
            v.push(format!("bin_width_s must be > 0, got {}", self.bin_width_s));
        }
        if !self.phi_deg.is_finite() || !self.xi_deg.is_finite() {
            v.push("phi_deg and xi_deg must be finite".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(v))
        }
    }

    /// Orbital radius R + h, m.
    pub fn orbit_radius(&self) -> T {
        self.earth_radius_m + self.altitude_m
    }

    /// Circular Keplerian angular rate `omega = sqrt(mu / (R+h)^3)`, rad/s.
    pub fn angular_rate(&self) -> T {
        (self.mu / self.orbit_radius().powi(3)).sqrt()
    }

    /// Orbital period, s.
    pub fn period(&self) -> T {
        cast::<T>(2.0) * T::PI() / self.angular_rate()
    }
}

/// Sideways ground-track displacement produced by the orbital tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTrackOffset<T> {
    /// Polar ground-track shift `d_xi = R * pi * xi / 180`, m.
    pub d_xi: T,
    /// Baseline-midpoint offset `delta = |d_xi / sin(phi)|`, m.
    ///
    /// Undefined (`None`) when the track runs parallel to the baseline
    /// (`sin(phi) = 0`) with a non-zero shift.
    pub delta: Option<T>,
}

/// Ground-track shift and baseline offset for a tilt/intersection pair.
pub fn ground_track_offset<T: Real>(xi_deg: T, phi_deg: T, earth_radius_m: T) -> GroundTrackOffset<T> {
    let d_xi = earth_radius_m * T::PI() * xi_deg / cast(180.0);
    let sin_phi = phi_deg.to_radians().sin();
    let delta = if sin_phi == T::zero() {
        if d_xi == T::zero() {
            Some(T::zero())
        } else {
            None
        }
    } else {
        Some((d_xi / sin_phi).abs())
    };
    GroundTrackOffset { d_xi, delta }
}

/// Satellite position at time `t` seconds from the baseline crossing of the
/// untilted reference orbit, m.
///
/// The orbit is the baseline-plane polar circle rotated by `xi` about +y
/// and then by `phi` about +z; `|r_sat| = R + h` holds exactly for every
/// `(t, phi, xi)`.
pub fn satellite_position<T: Real>(t: T, geom: &OverpassGeometry<T>) -> Vec3<T> {
    let r = geom.orbit_radius();
    let wt = geom.angular_rate() * t;
    let (sin_wt, cos_wt) = (wt.sin(), wt.cos());
    let (sin_phi, cos_phi) = {
        let p = geom.phi_deg.to_radians();
        (p.sin(), p.cos())
    };
    let (sin_xi, cos_xi) = {
        let x = geom.xi_deg.to_radians();
        (x.sin(), x.cos())
    };
    Vec3::new(
        r * (cos_wt * sin_xi * cos_phi + sin_wt * sin_phi),
        r * (cos_wt * sin_xi * sin_phi - sin_wt * cos_phi),
        r * cos_wt * cos_xi,
    )
}

/// Station positions for a great-circle separation `d`, m.
///
/// Both stations lie on the baseline great circle (x = 0) at colatitude
/// `alpha = d / 2R` on opposite sides of the pole.
pub fn ogs_positions<T: Real>(separation_m: T, earth_radius_m: T) -> (Vec3<T>, Vec3<T>) {
    let alpha = separation_m / (cast::<T>(2.0) * earth_radius_m);
    let (s, c) = (alpha.sin(), alpha.cos());
    (
        Vec3::new(T::zero(), earth_radius_m * s, earth_radius_m * c),
        Vec3::new(T::zero(), -(earth_radius_m * s), earth_radius_m * c),
    )
}

/// Slant range (m) and local-horizon elevation (degrees) of a satellite
/// seen from a ground station.
///
/// `sin(elevation) = ((r_sat - r_ogs) . r_ogs_hat) / |r_sat - r_ogs|`.
pub fn link_state<T: Real>(r_sat: Vec3<T>, r_ogs: Vec3<T>) -> (T, T) {
    let los = r_sat - r_ogs;
    let range = los.norm();
    let sin_elev = (los.dot(r_ogs.normalized()) / range)
        .max(-T::one())
        .min(T::one());
    (range, sin_elev.asin().to_degrees())
}

/// Time-resolved ranges, elevations, and joint-visibility flags for one
/// overpass.
#[derive(Debug, Clone)]
pub struct LinkProfile<T> {
    /// Bin midpoints, s, with t = 0 at the ground-track/baseline crossing.
    pub times: Vec<T>,
    /// Slant range to station A per bin, m.
    pub range_a: Vec<T>,
    /// Slant range to station B per bin, m.
    pub range_b: Vec<T>,
    /// Elevation at station A per bin, degrees.
    pub elev_a: Vec<T>,
    /// Elevation at station B per bin, degrees.
    pub elev_b: Vec<T>,
    /// True where both elevations reach the minimum elevation.
    pub visible: Vec<bool>,
    /// Bin duration, s.
    pub bin_width_s: T,
}

impl<T: Real> LinkProfile<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices of jointly visible bins.
    pub fn visible_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.visible[i]).collect()
    }

    /// Total joint-visibility time, s.
    pub fn joint_visibility_duration(&self) -> T {
        let n = self.visible.iter().filter(|&&v| v).count();
        cast::<T>(n as f64) * self.bin_width_s
    }
}

/// Sample a full pass at `bin_width` spacing.
///
/// Bins span plus/minus half an orbital period around the instant the
/// ground track crosses the baseline great circle, so asymmetric passes
/// stay centred on the station region. The visible flag is true exactly
/// where both elevations reach `theta_min`; a large tilt produces an
/// empty visible set.
pub fn sample_overpass<T: Real>(geom: &OverpassGeometry<T>) -> LinkProfile<T> {
    let omega = geom.angular_rate();
    // Baseline-plane crossing nearest the stations: x(t) = 0 with cos(wt) > 0.
    // For a track parallel to the baseline (sin(phi) = 0, xi != 0) no useful
    // crossing exists and the reference anchor t = 0 is kept.
    let phi = geom.phi_deg.to_radians();
    let xi = geom.xi_deg.to_radians();
    let t_cross = if phi.sin() == T::zero() {
        T::zero()
    } else {
        (-(xi.sin() * phi.cos()) / phi.sin()).atan() / omega
    };

    let half_bins = {
        let half_period = geom.period() / cast::<T>(2.0);
        (half_period / geom.bin_width_s)
            .floor()
            .to_usize()
            .unwrap_or(0)
    };
    let (ogs_a, ogs_b) = ogs_positions(geom.separation_m, geom.earth_radius_m);

    let n = 2 * half_bins + 1;
    let mut profile = LinkProfile {
        times: Vec::with_capacity(n),
        range_a: Vec::with_capacity(n),
        range_b: Vec::with_capacity(n),
        elev_a: Vec::with_capacity(n),
        elev_b: Vec::with_capacity(n),
        visible: Vec::with_capacity(n),
        bin_width_s: geom.bin_width_s,
    };
    for k in -(half_bins as i64)..=(half_bins as i64) {
        let tau = cast::<T>(k as f64) * geom.bin_width_s;
        let r_sat = satellite_position(tau + t_cross, geom);
        let (ra, ea) = link_state(r_sat, ogs_a);
        let (rb, eb) = link_state(r_sat, ogs_b);
        profile.times.push(tau);
        profile.range_a.push(ra);
        profile.range_b.push(rb);
        profile.elev_a.push(ea);
        profile.elev_b.push(eb);
        profile
            .visible
            .push(ea >= geom.theta_min_deg && eb >= geom.theta_min_deg);
    }
    profile
}
