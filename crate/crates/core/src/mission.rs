//! System-level studies: single passes, parameter sweeps, and the annual
//! key yield.
//!
//! A single pass chains geometry -> channel -> counts -> threshold sweep.
//! Sweeps evaluate the pass over a Cartesian grid of altitudes,
//! separations, track angles, tilts, and background scales; cells are
//! independent jobs with deterministic output ordering. The annual yield
//! integrates the per-pass key length over the distribution of overpass
//! geometries traced out during a year: for stations symmetric about the
//! pole under a polar orbit, the crossing longitude maps to the track
//! angle directly (zero midpoint offset), and
//!
//! `SKL_year = N_orbits/2pi * integral_0^2pi SKL[gamma] dgamma`
//!
//! is evaluated by trapezoidal quadrature over the track angle, using the
//! gamma <-> -gamma symmetry to sample a half turn (or a quarter turn
//! with the symmetry flag).

use rayon::prelude::*;

use crate::channel::{link_efficiency, LossProfile};
use crate::constants::SECONDS_PER_YEAR;
use crate::counts::{build_counts, CountsProfile};
use crate::error::Result;
use crate::finitekey::{threshold_sweep, SklResult, ThresholdPoint};
use crate::geometry::{sample_overpass, LinkProfile};
use crate::scenario::Scenario;

/// Maximum station separation with the satellite simultaneously above both
/// horizons: `2 R arccos(R / (R + h))` (minimum elevation ignored).
pub fn max_viewable_distance(altitude_m: f64, earth_radius_m: f64) -> f64 {
    2.0 * earth_radius_m * (earth_radius_m / (earth_radius_m + altitude_m)).acos()
}

/// Every intermediate product of a single-pass evaluation.
#[derive(Debug, Clone)]
pub struct PassOutput {
    pub profile: LinkProfile<f64>,
    pub loss: LossProfile<f64>,
    pub counts: CountsProfile<f64>,
    /// Best result over the threshold sweep.
    pub best: SklResult<f64>,
    /// Full block-size/key-length curve.
    pub curve: Vec<ThresholdPoint<f64>>,
}

/// Run the full pipeline for one overpass.
pub fn single_pass(scenario: &Scenario) -> Result<PassOutput> {
    scenario.validate()?;
    let profile = sample_overpass(&scenario.geometry);
    let loss = link_efficiency(
        &scenario.optics_a,
        &scenario.atmosphere,
        &scenario.optics_b,
        &scenario.atmosphere,
        &profile,
    )?;
    let counts = build_counts(
        &loss,
        &scenario.detector,
        &scenario.source,
        &scenario.optics_a,
        &scenario.radiance_a,
        &scenario.optics_b,
        &scenario.radiance_b,
    )?;
    let (best, curve) = threshold_sweep(&counts, &scenario.security);
    Ok(PassOutput {
        profile,
        loss,
        counts,
        best,
        curve,
    })
}

/// Pass-optimal secret key length for a scenario.
pub fn single_pass_skl(scenario: &Scenario) -> Result<SklResult<f64>> {
    Ok(single_pass(scenario)?.best)
}

/// Axes of a Cartesian sweep. Empty axes default to the baseline value.
#[derive(Debug, Clone, Default)]
pub struct SweepSpec {
    pub altitudes_m: Vec<f64>,
    pub separations_m: Vec<f64>,
    pub phis_deg: Vec<f64>,
    pub xis_deg: Vec<f64>,
    pub background_scales: Vec<f64>,
}

impl SweepSpec {
    fn axis(values: &[f64], baseline: f64) -> Vec<f64> {
        if values.is_empty() {
            vec![baseline]
        } else {
            values.to_vec()
        }
    }

    /// Materialise the axes against a baseline scenario.
    pub fn resolved(&self, base: &Scenario) -> ResolvedAxes {
        ResolvedAxes {
            altitudes_m: Self::axis(&self.altitudes_m, base.geometry.altitude_m),
            separations_m: Self::axis(&self.separations_m, base.geometry.separation_m),
            phis_deg: Self::axis(&self.phis_deg, base.geometry.phi_deg),
            xis_deg: Self::axis(&self.xis_deg, base.geometry.xi_deg),
            background_scales: Self::axis(
                &self.background_scales,
                base.detector.background_scale,
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedAxes {
    pub altitudes_m: Vec<f64>,
    pub separations_m: Vec<f64>,
    pub phis_deg: Vec<f64>,
    pub xis_deg: Vec<f64>,
    pub background_scales: Vec<f64>,
}

/// One sweep cell: the axis values plus the outcome. Failures are recorded
/// per cell without aborting the sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub altitude_m: f64,
    pub separation_m: f64,
    pub phi_deg: f64,
    pub xi_deg: f64,
    pub background_scale: f64,
    pub outcome: std::result::Result<SklResult<f64>, String>,
}

/// Evaluate the Cartesian product of the axes. Cells are independent and
/// the output order is the row-major axis order, independent of the
/// worker count.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec) -> Vec<SweepCell> {
    let axes = spec.resolved(base);
    let mut cells = Vec::new();
    for &h in &axes.altitudes_m {
        for &d in &axes.separations_m {
            for &phi in &axes.phis_deg {
                for &xi in &axes.xis_deg {
                    for &f in &axes.background_scales {
                        cells.push((h, d, phi, xi, f));
                    }
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(h, d, phi, xi, f)| {
            let mut scenario = base.clone();
            scenario.geometry.altitude_m = h;
            scenario.geometry.separation_m = d;
            scenario.geometry.phi_deg = phi;
            scenario.geometry.xi_deg = xi;
            scenario.detector.background_scale = f;
            SweepCell {
                altitude_m: h,
                separation_m: d,
                phi_deg: phi,
                xi_deg: xi,
                background_scale: f,
                outcome: single_pass_skl(&scenario).map_err(|e| e.to_string()),
            }
        })
        .collect()
}

/// Configuration of the annual-yield quadrature.
#[derive(Debug, Clone)]
pub struct AnnualConfig {
    /// Samples of the track angle over [0, 180] degrees (default 181,
    /// one per degree).
    pub gamma_samples: usize,
    /// Exploit the gamma <-> 180-gamma symmetry and evaluate only
    /// [0, 90] degrees. Requires an odd sample count; exact for
    /// symmetric scenarios.
    pub quarter_symmetry: bool,
    /// Optional gating: only passes with gamma inside [lo, hi] degrees
    /// (taken modulo 360, symmetric counterpart included) generate key.
    pub gamma_mask_deg: Option<(f64, f64)>,
}

impl Default for AnnualConfig {
    fn default() -> Self {
        Self {
            gamma_samples: 181,
            quarter_symmetry: false,
            gamma_mask_deg: None,
        }
    }
}

/// Annual key yield plus the per-sample curve behind it.
#[derive(Debug, Clone)]
pub struct AnnualOutput {
    /// Integrated yearly secret key length, bits/year.
    pub skl_year_bits: f64,
    /// Orbits per year for the scenario's altitude.
    pub orbits_per_year: f64,
    /// Sampled track angles, degrees, with their per-pass results.
    pub samples: Vec<(f64, SklResult<f64>)>,
}

/// Trapezoidal quadrature of `SKL(gamma)` over a half turn, doubled for
/// the full circle. `f` is evaluated at each grid angle in radians.
pub fn annual_quadrature<F: Fn(f64) -> f64>(
    orbits_per_year: f64,
    gamma_samples: usize,
    f: F,
) -> f64 {
    assert!(gamma_samples >= 2, "need at least two quadrature samples");
    let n = gamma_samples;
    let step = std::f64::consts::PI / (n - 1) as f64;
    let mut integral = 0.0;
    for i in 0..n {
        let gamma = step * i as f64;
        let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        integral += weight * f(gamma);
    }
    integral *= step;
    // integral over [0, 2pi] is twice the half turn by symmetry
    orbits_per_year / (2.0 * std::f64::consts::PI) * 2.0 * integral
}

fn masked(gamma_deg: f64, mask: Option<(f64, f64)>) -> bool {
    match mask {
        None => true,
        Some((lo, hi)) => {
            // the half-turn sample stands for gamma and 360 - gamma
            let g = gamma_deg.rem_euclid(360.0);
            let mirror = (360.0 - g).rem_euclid(360.0);
            (g >= lo && g <= hi) || (mirror >= lo && mirror <= hi)
        }
    }
}

/// Integrate the per-pass key length over a year of overpass geometries.
///
/// The default polar-symmetric mapping sets the track angle equal to the
/// crossing longitude with zero midpoint offset.
pub fn annual_skl(cfg: &AnnualConfig, scenario: &Scenario) -> Result<AnnualOutput> {
    scenario.validate()?;
    let period = scenario.geometry.period();
    let orbits_per_year = SECONDS_PER_YEAR / period;
    let n = cfg.gamma_samples.max(2);

    // Sample angles in [0, 180]; with quarter symmetry only [0, 90] runs
    // through the pipeline and the upper half mirrors it.
    let evaluate = |gamma_deg: f64| -> Result<SklResult<f64>> {
        if !masked(gamma_deg, cfg.gamma_mask_deg) {
            return Ok(SklResult::zero());
        }
        let mut s = scenario.clone();
        s.geometry.phi_deg = gamma_deg;
        s.geometry.xi_deg = 0.0;
        single_pass_skl(&s)
    };

    let step = 180.0 / (n - 1) as f64;
    let mut samples: Vec<(f64, SklResult<f64>)> = Vec::with_capacity(n);
    if cfg.quarter_symmetry {
        if n.is_multiple_of(2) {
            return Err(crate::error::Error::InvalidInput(
                "quarter symmetry needs an odd gamma_samples so 90 degrees is a grid point"
                    .into(),
            ));
        }
        let half = n / 2;
        for i in 0..=half {
            let gamma = step * i as f64;
            samples.push((gamma, evaluate(gamma)?));
        }
        for i in half + 1..n {
            let gamma = step * i as f64;
            let mirrored = samples[n - 1 - i].1;
            samples.push((gamma, mirrored));
        }
    } else {
        for i in 0..n {
            let gamma = step * i as f64;
            samples.push((gamma, evaluate(gamma)?));
        }
    }

    let skl_year_bits = annual_quadrature(orbits_per_year, n, |gamma_rad| {
        let idx = (gamma_rad / std::f64::consts::PI * (n - 1) as f64).round() as usize;
        samples[idx].1.ell as f64
    });
    Ok(AnnualOutput {
        skl_year_bits,
        orbits_per_year,
        samples,
    })
}
