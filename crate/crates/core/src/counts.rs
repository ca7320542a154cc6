//! Coincidence and error statistics for the dual downlink.
//!
//! Converts per-bin link efficiencies into the expected simultaneous-click
//! rate `D_t` and error rate `e_t`, combining signal pairs with extraneous
//! detector clicks (dark counts and sky background, inflated by
//! afterpulsing). Multi-pair SPDC emissions are negligible for CW pumping
//! at the operating squeezing and are not folded into `D_t`/`e_t`; the
//! pair-number distribution is provided as a standalone utility, and a
//! non-negligible source can be absorbed as an additive intrinsic-QBER
//! term of about `multi_pair_probability(r) / 2`.

use crate::channel::{parse_two_column_csv, LossProfile, OpticalSystem};
use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::interp::LinearTable;
use crate::real::{cast, Real};

/// Detector and receiver-noise parameters, shared by both stations.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel<T> {
    /// Dark-count probability per coincidence window.
    pub p_dark: T,
    /// Afterpulse probability per detection.
    pub p_afterpulse: T,
    /// Coincidence window, s.
    pub coincidence_window_s: T,
    /// Receiver field of view, sr.
    pub fov_sr: T,
    /// Spectral filter bandwidth, nm.
    pub filter_bandwidth_nm: T,
    /// Common background scaling factor f (1 = moonless night, 10 = new
    /// moon, 100 = full moon, 1e3..1.5e4 = twilight).
    pub background_scale: T,
}

impl<T: Real> Default for DetectorModel<T> {
    fn default() -> Self {
        Self {
            p_dark: cast(5.0e-7),
            p_afterpulse: cast(1.0e-3),
            coincidence_window_s: cast(5.0e-9),
            fov_sr: cast(5.0e-8),
            filter_bandwidth_nm: cast(10.0),
            background_scale: T::one(),
        }
    }
}

impl<T: Real> DetectorModel<T> {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, p) in [("p_dark", self.p_dark), ("p_afterpulse", self.p_afterpulse)] {
            if !(p >= T::zero() && p <= T::one()) {
                v.push(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, x) in [
            ("coincidence_window_s", self.coincidence_window_s),
            ("fov_sr", self.fov_sr),
            ("filter_bandwidth_nm", self.filter_bandwidth_nm),
        ] {
            if !(x > T::zero()) {
                v.push(format!("{name} must be > 0, got {x}"));
            }
        }
        if !(self.background_scale >= T::zero()) {
            v.push(format!(
                "background_scale must be >= 0, got {}",
                self.background_scale
            ));
        }
        v
    }
}

/// Entangled-pair source parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel<T> {
    /// Pair generation rate, pairs/s.
    pub pair_rate_hz: T,
    /// Intrinsic QBER floor from imperfect Bell-state preparation.
    pub qber_intrinsic: T,
    /// Two-mode squeezing parameter (pair-number utility only).
    pub squeezing: T,
}

impl<T: Real> Default for SourceModel<T> {
    fn default() -> Self {
        Self {
            pair_rate_hz: cast(2.0e8),
            qber_intrinsic: cast(1.0e-3),
            squeezing: cast(0.01),
        }
    }
}

impl<T: Real> SourceModel<T> {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.pair_rate_hz > T::zero()) {
            v.push(format!("pair_rate_hz must be > 0, got {}", self.pair_rate_hz));
        }
        if !(self.qber_intrinsic >= T::zero() && self.qber_intrinsic < cast(0.5)) {
            v.push(format!(
                "qber_intrinsic must lie in [0, 0.5), got {}",
                self.qber_intrinsic
            ));
        }
        if !(self.squeezing >= T::zero()) {
            v.push(format!("squeezing must be >= 0, got {}", self.squeezing));
        }
        v
    }
}

/// Sky radiance seen by one station, W cm^-2 sr^-1 nm^-1.
#[derive(Debug, Clone)]
pub enum RadianceModel<T> {
    /// Elevation-independent total radiance.
    Scalar(T),
    /// Elevation-dependent radiance table (degrees -> radiance).
    Table(LinearTable<T>),
}

/// Bundled night-sky radiance, W cm^-2 sr^-1 nm^-1, calibrated so the
/// reference receiver (70 cm aperture, 5e-8 sr, 10 nm filter, 5 ns window,
/// 785 nm) sees a baseline background click probability of 1e-7.
pub const BUNDLED_NIGHT_RADIANCE: f64 = 2.630154e-15;

impl<T: Real> RadianceModel<T> {
    pub fn bundled_default() -> Self {
        Self::Scalar(cast(BUNDLED_NIGHT_RADIANCE))
    }

    /// Parse `elevation_deg,radiance_w_cm2_sr_nm` CSV text.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (xs, ys) = parse_two_column_csv(text, "elevation_deg", "radiance_w_cm2_sr_nm")?;
        if ys.iter().any(|&y| y < T::zero()) {
            return Err(Error::Table("radiance must be >= 0".into()));
        }
        Ok(Self::Table(LinearTable::new(xs, ys)?))
    }

    pub fn at_elevation(&self, elevation_deg: T) -> Result<T> {
        match self {
            Self::Scalar(h) => Ok(*h),
            Self::Table(t) => t.eval(elevation_deg),
        }
    }
}

/// Photon-pair number distribution of a two-mode squeezed SPDC source:
/// `P(n, r) = tanh(r)^(2n) / cosh(r)^2`.
pub fn pair_number_probability<T: Real>(n: u32, r: T) -> T {
    let cosh2 = r.cosh() * r.cosh();
    if n == 0 {
        return T::one() / cosh2;
    }
    r.tanh().powi(2 * n as i32) / cosh2
}

/// Cumulative probability of emitting more than one pair,
/// `1 - P(0, r) - P(1, r)`.
pub fn multi_pair_probability<T: Real>(r: T) -> T {
    (T::one() - pair_number_probability(0, r) - pair_number_probability(1, r)).max(T::zero())
}

/// Probability of detecting a background photon in one coincidence window:
/// `p_bg = (dtau / E_nu) * H_tot * A_rx * Omega_fov * dnu * f`, clamped to
/// [0, 1]. `H_tot` is in W cm^-2 sr^-1 nm^-1 and the receiver area uses the
/// aperture diameter, `A = pi (R_X/2)^2`, converted to cm^2.
pub fn background_click_prob<T: Real>(
    h_tot: T,
    det: &DetectorModel<T>,
    rx_diameter_m: T,
    wavelength_m: T,
) -> T {
    if h_tot <= T::zero() {
        return T::zero();
    }
    let photon_energy = cast::<T>(PLANCK * SPEED_OF_LIGHT) / wavelength_m;
    let radius_cm = rx_diameter_m / cast::<T>(2.0) * cast::<T>(100.0);
    let area_cm2 = T::PI() * radius_cm * radius_cm;
    let p = det.coincidence_window_s / photon_energy
        * h_tot
        * area_cm2
        * det.fov_sr
        * det.filter_bandwidth_nm
        * det.background_scale;
    p.max(T::zero()).min(T::one())
}

/// Probability of an extraneous click from dark counts or background:
/// `p_ec = p_dc + p_bg - p_dc p_bg`.
pub fn extraneous_prob<T: Real>(p_dc: T, p_bg: T) -> T {
    p_dc + p_bg - p_dc * p_bg
}

/// Expected simultaneous-click probability per window:
///
/// `D_t = (1 + p_ap^2) (eta_A eta_B + eta_A (1-eta_B) p_ec^B
///        + eta_B (1-eta_A) p_ec^A + (1 - eta_A eta_B) p_ec^A p_ec^B)`.
pub fn coincidence_rate<T: Real>(eta_a: T, eta_b: T, p_ec_a: T, p_ec_b: T, p_ap: T) -> T {
    let eta_t = eta_a * eta_b;
    (T::one() + p_ap * p_ap)
        * (eta_t
            + eta_a * (T::one() - eta_b) * p_ec_b
            + eta_b * (T::one() - eta_a) * p_ec_a
            + (T::one() - eta_t) * p_ec_a * p_ec_b)
}

/// Expected erroneous-coincidence probability per window:
///
/// `e_t = eta_A (1-eta_B)(1-p_ec^A) p_ec^B + eta_B (1-eta_A)(1-p_ec^B) p_ec^A
///        + (1 - eta_A eta_B) p_ec^A p_ec^B + p_ap^2 D_t / 2
///        + QBER_I eta_A eta_B`.
#[allow(clippy::too_many_arguments)]
pub fn error_rate<T: Real>(
    eta_a: T,
    eta_b: T,
    p_ec_a: T,
    p_ec_b: T,
    p_ap: T,
    qber_intrinsic: T,
    d_t: T,
) -> T {
    let eta_t = eta_a * eta_b;
    eta_a * (T::one() - eta_b) * (T::one() - p_ec_a) * p_ec_b
        + eta_b * (T::one() - eta_a) * (T::one() - p_ec_b) * p_ec_a
        + (T::one() - eta_t) * p_ec_a * p_ec_b
        + p_ap * p_ap * d_t / cast::<T>(2.0)
        + qber_intrinsic * eta_t
}

/// Per-bin coincidence and error statistics for a pass.
#[derive(Debug, Clone)]
pub struct CountsProfile<T> {
    /// Bin midpoints copied from the loss profile, s.
    pub times: Vec<T>,
    /// Joint-visibility flags; non-visible bins carry zeroed statistics.
    pub visible: Vec<bool>,
    /// Extraneous-click probability per station per bin.
    pub p_ec_a: Vec<T>,
    pub p_ec_b: Vec<T>,
    /// Simultaneous-click probability per window.
    pub d_t: Vec<T>,
    /// Erroneous-coincidence probability per window.
    pub e_t: Vec<T>,
    /// Instantaneous QBER `e_t / D_t` (zero where `D_t` vanishes).
    pub qber_t: Vec<T>,
    /// Expected coincidences in the bin, `f_s D_t dt` (pre-sifting).
    pub coincidence_counts: Vec<T>,
    /// Expected error coincidences in the bin, `f_s e_t dt` (pre-sifting).
    pub error_counts: Vec<T>,
    pub pair_rate_hz: T,
    pub bin_width_s: T,
}

impl<T: Real> CountsProfile<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Visible bins with non-zero coincidence probability; only these can
    /// contribute to a key block.
    pub fn usable_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.visible[i] && self.d_t[i] > T::zero())
            .collect()
    }

    /// Range of instantaneous QBERs over usable bins.
    pub fn qber_range(&self) -> Option<(T, T)> {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in self.usable_indices() {
            lo = lo.min(self.qber_t[i]);
            hi = hi.max(self.qber_t[i]);
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// Evaluate the per-bin statistics of a pass.
///
/// Extraneous probabilities are computed per site from the local radiance
/// at the bin's elevation; `e_t <= D_t` and `D_t <= 1 + p_ap^2` are
/// enforced on every visible bin.
pub fn build_counts<T: Real>(
    loss: &LossProfile<T>,
    det: &DetectorModel<T>,
    src: &SourceModel<T>,
    optics_a: &OpticalSystem<T>,
    radiance_a: &RadianceModel<T>,
    optics_b: &OpticalSystem<T>,
    radiance_b: &RadianceModel<T>,
) -> Result<CountsProfile<T>> {
    let n = loss.len();
    let mut out = CountsProfile {
        times: loss.times.clone(),
        visible: loss.visible.clone(),
        p_ec_a: vec![T::zero(); n],
        p_ec_b: vec![T::zero(); n],
        d_t: vec![T::zero(); n],
        e_t: vec![T::zero(); n],
        qber_t: vec![T::zero(); n],
        coincidence_counts: vec![T::zero(); n],
        error_counts: vec![T::zero(); n],
        pair_rate_hz: src.pair_rate_hz,
        bin_width_s: loss.bin_width_s,
    };
    let p_ap = det.p_afterpulse;
    let sifted_cap = T::one() + p_ap * p_ap;
    for i in 0..n {
        if !loss.visible[i] {
            continue;
        }
        let pec = |optics: &OpticalSystem<T>, radiance: &RadianceModel<T>, elev: T| -> Result<T> {
            let h_tot = radiance.at_elevation(elev)?;
            let p_bg = background_click_prob(h_tot, det, optics.rx_diameter_m, optics.wavelength_m);
            Ok(extraneous_prob(det.p_dark, p_bg))
        };
        let p_ec_a = pec(optics_a, radiance_a, loss.elev_a[i])?;
        let p_ec_b = pec(optics_b, radiance_b, loss.elev_b[i])?;
        let (eta_a, eta_b) = (loss.eta_a[i], loss.eta_b[i]);
        let d = coincidence_rate(eta_a, eta_b, p_ec_a, p_ec_b, p_ap);
        let e = error_rate(eta_a, eta_b, p_ec_a, p_ec_b, p_ap, src.qber_intrinsic, d);
        if e > d * (T::one() + cast(1e-12)) {
            return Err(Error::Infeasible(format!(
                "error rate {e} exceeds coincidence rate {d} at bin {i}"
            )));
        }
        if d > sifted_cap {
            return Err(Error::Infeasible(format!(
                "coincidence rate {d} exceeds 1 + p_ap^2 at bin {i}"
            )));
        }
        out.p_ec_a[i] = p_ec_a;
        out.p_ec_b[i] = p_ec_b;
        out.d_t[i] = d;
        out.e_t[i] = e.min(d);
        out.qber_t[i] = if d > T::zero() {
            out.e_t[i] / d
        } else {
            T::zero()
        };
        out.coincidence_counts[i] = src.pair_rate_hz * d * loss.bin_width_s;
        out.error_counts[i] = src.pair_rate_hz * out.e_t[i] * loss.bin_width_s;
    }
    Ok(out)
}
