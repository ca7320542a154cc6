//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line per clause (run with `--nocapture` to see them on success).
//!
//! Reference anchors come from the published system table and figures;
//! clauses that cannot be met under the Table-1-calibrated model are
//! asserted faithfully and allowed to fail loudly rather than be
//! loosened. `golden_regression_values` freezes the first computed
//! values of this implementation so future drift is caught exactly.
//!
//! Tests serialise on a global mutex so the per-criterion runtime
//! budgets are measured without cross-test core contention.

use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use twinlink_core::channel::{diffraction_loss_db, link_efficiency, AtmosphereTable};
use twinlink_core::counts::{coincidence_rate, error_rate};
use twinlink_core::finitekey::{
    epsilon_pa, epsilon_pe, optimise_key_length, BlockStats, SecurityConfig,
};
use twinlink_core::geometry::sample_overpass;
use twinlink_core::mission::{annual_skl, max_viewable_distance, single_pass, AnnualConfig};
use twinlink_core::{OpticalSystem, Scenario};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|p| p.into_inner())
}

struct Report {
    criterion: &'static str,
    failures: Vec<String>,
}

impl Report {
    fn new(criterion: &'static str) -> Self {
        Self {
            criterion,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, clause: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("ACCEPTANCE {} {clause}: {verdict} ({detail})", self.criterion);
        if !pass {
            self.failures.push(format!("{clause}: {detail}"));
        }
    }

    fn runtime(&mut self, elapsed: Duration, budget: Duration) {
        self.check(
            "runtime",
            elapsed <= budget,
            format!("{:.1}s of {:.0}s budget", elapsed.as_secs_f64(), budget.as_secs_f64()),
        );
    }

    fn finish(self) {
        assert!(
            self.failures.is_empty(),
            "criterion {} failed clauses:\n  {}",
            self.criterion,
            self.failures.join("\n  ")
        );
    }
}

fn min_loss_and_minima(separation_m: f64) -> (f64, usize) {
    let mut scenario = Scenario::default();
    scenario.geometry.separation_m = separation_m;
    let profile = sample_overpass(&scenario.geometry);
    let loss = link_efficiency(
        &scenario.optics_a,
        &scenario.atmosphere,
        &scenario.optics_b,
        &scenario.atmosphere,
        &profile,
    )
    .unwrap();
    (
        loss.min_combined_loss_db().unwrap(),
        loss.combined_loss_minima(0.03),
    )
}

#[test]
fn acceptance_1_table_loss_anchors() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("1");

    let sys = OpticalSystem::default();
    let diffraction = diffraction_loss_db(&sys, 500.0e3).unwrap();
    report.check(
        "zenith diffraction 9.31 +/- 1 dB",
        (diffraction - 9.31).abs() <= 1.0,
        format!("{diffraction:.3} dB"),
    );

    let atm = AtmosphereTable::<f64>::bundled_default();
    let zenith_atm = atm.loss_db(90.0).unwrap();
    report.check(
        "atmospheric zenith 0.73 dB exact",
        (zenith_atm - 0.73).abs() < 1e-9,
        format!("{zenith_atm:.12} dB"),
    );

    let single_channel = diffraction + zenith_atm + sys.intrinsic_loss_db;
    let component_sum = diffraction + 0.73 + 12.0;
    report.check(
        "single channel = diffraction + atmosphere + intrinsic (exact sum)",
        (single_channel - component_sum).abs() < 1e-12,
        format!("{single_channel:.3} dB vs sum {component_sum:.3} dB"),
    );
    report.check(
        "single channel within 1 dB of 22.04 dB",
        (single_channel - 22.04).abs() <= 1.0 + 1e-9,
        format!("{single_channel:.3} dB"),
    );

    report.runtime(started.elapsed(), Duration::from_secs(1));
    report.finish();
}

#[test]
fn acceptance_2_loss_profile_structure() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("2");

    let (min_2000, minima_2000) = min_loss_and_minima(2000.0e3);
    report.check(
        "minimum combined loss 56 +/- 1.5 dB at d=2000 km",
        (min_2000 - 56.0).abs() <= 1.5,
        format!("{min_2000:.3} dB"),
    );
    report.check(
        "two loss minima at d=2000 km",
        minima_2000 == 2,
        format!("{minima_2000} minima"),
    );
    let (_, minima_1500) = min_loss_and_minima(1500.0e3);
    report.check(
        "two loss minima at d=1500 km",
        minima_1500 == 2,
        format!("{minima_1500} minima"),
    );
    let (_, minima_500) = min_loss_and_minima(500.0e3);
    report.check(
        "one loss minimum at d=500 km",
        minima_500 == 1,
        format!("{minima_500} minima"),
    );

    report.runtime(started.elapsed(), Duration::from_secs(5));
    report.finish();
}

#[test]
fn acceptance_3_block_size_regimes() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("3");

    // key length vs block size, ordered by growing block
    let curve = |f: f64| -> Vec<(u64, u64)> {
        let mut s = Scenario::default();
        s.detector.background_scale = f;
        let out = single_pass(&s).unwrap();
        let mut pts: Vec<(u64, u64)> = out
            .curve
            .iter()
            .map(|p| (p.result.m, p.result.ell))
            .collect();
        pts.sort();
        pts.dedup();
        pts
    };

    for f in [1.0, 10.0, 100.0] {
        let pts = curve(f);
        let monotone = pts.windows(2).all(|w| w[1].1 >= w[0].1);
        let grows = pts.last().unwrap().1 > pts.first().unwrap().1;
        report.check(
            &format!("night f={f}: key monotone increasing over block size"),
            monotone && grows,
            format!(
                "{} points, ell {} -> {}",
                pts.len(),
                pts.first().unwrap().1,
                pts.last().unwrap().1
            ),
        );
    }

    for f in [1.0e3, 1.0e4] {
        let pts = curve(f);
        let max_ell = pts.iter().map(|p| p.1).max().unwrap();
        let last_ell = pts.last().unwrap().1;
        let interior_max = max_ell > 0 && last_ell < max_ell;
        report.check(
            &format!("twilight f={f}: interior maximum"),
            interior_max,
            format!("max ell {max_ell}, ell at largest block {last_ell}"),
        );
    }

    report.runtime(started.elapsed(), Duration::from_secs(120));
    report.finish();
}

/// Largest separation with non-zero key at the given altitude, by
/// bisection over the monotone key/no-key transition.
fn zero_key_cutoff_m(altitude_m: f64) -> f64 {
    let skl = |d: f64| -> u64 {
        let mut s = Scenario::default();
        s.geometry.altitude_m = altitude_m;
        s.geometry.separation_m = d;
        twinlink_core::mission::single_pass_skl(&s).unwrap().ell
    };
    let r = twinlink_core::constants::EARTH_RADIUS_M;
    let theta_min = 10.0f64.to_radians();
    // joint visibility vanishes at twice the single-station ground radius
    let beta_max = (r * theta_min.cos() / (r + altitude_m)).acos() - theta_min;
    let mut lo = 100.0e3;
    let mut hi = 2.0 * r * beta_max;
    assert!(skl(lo) > 0, "bracket must start with key");
    assert_eq!(skl(hi), 0, "bracket must end keyless");
    for _ in 0..14 {
        let mid = 0.5 * (lo + hi);
        if skl(mid) > 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn acceptance_4_system_configuration_anchors() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("4");

    let mut baseline = Scenario::default();
    baseline.geometry.separation_m = 1000.0e3;
    let ell = twinlink_core::mission::single_pass_skl(&baseline).unwrap().ell;
    report.check(
        "d=1000 km key in [130k, 300k] bits (quoted 200 kbit)",
        (130_000..=300_000).contains(&ell),
        format!("{ell} bits"),
    );

    let mut micius = Scenario::default();
    micius.geometry.separation_m = 1000.0e3;
    micius.source.pair_rate_hz = 5.9e6;
    for optics in [&mut micius.optics_a, &mut micius.optics_b] {
        optics.tx_diameter_m = 0.13;
        optics.beam_waist_m = 0.065;
        optics.rx_diameter_m = 1.2;
    }
    let ell_micius = twinlink_core::mission::single_pass_skl(&micius).unwrap().ell;
    report.check(
        "Micius-aperture key in [450k, 1030k] bits (quoted 685 kbit)",
        (450_000..=1_030_000).contains(&ell_micius),
        format!("{ell_micius} bits"),
    );

    let cutoff_500 = zero_key_cutoff_m(500.0e3);
    report.check(
        "zero-key cutoff at h=500 km in [1.7e6, 2.0e6] m",
        (1.7e6..=2.0e6).contains(&cutoff_500),
        format!("{:.0} km", cutoff_500 / 1e3),
    );

    let quoted = [(300.0e3, 49.5), (400.0e3, 43.2), (500.0e3, 36.8), (800.0e3, 24.7)];
    for (h, want_pct) in quoted {
        let cutoff = if h == 500.0e3 { cutoff_500 } else { zero_key_cutoff_m(h) };
        let viewable = max_viewable_distance(h, twinlink_core::constants::EARTH_RADIUS_M);
        let pct = 100.0 * cutoff / viewable;
        report.check(
            &format!("h={} km cutoff/viewable within {want_pct}% +/- 3pp", h / 1e3),
            (pct - want_pct).abs() <= 3.0,
            format!("{pct:.1}% (cutoff {:.0} km / viewable {:.0} km)", cutoff / 1e3, viewable / 1e3),
        );
    }

    report.runtime(started.elapsed(), Duration::from_secs(900));
    report.finish();
}

#[test]
fn acceptance_5_annual_yield() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("5");

    let scenario = Scenario::default();
    let out = annual_skl(&AnnualConfig::default(), &scenario).unwrap();
    let mb = out.skl_year_bits / 1e6;
    report.check(
        "annual key within 25% of 870 Mb",
        (652.5..=1087.5).contains(&mb),
        format!("{mb:.1} Mb"),
    );

    // Monotone non-increasing per-pass key over [0, 90] degrees, measured
    // at the model's resolution: the 1 s time-bin quantisation moves the
    // accepted block by up to one bin between neighbouring angles, which
    // shows up as few-bit wiggles (observed 0.002%); 0.1% slack separates
    // that from any real monotonicity violation.
    let rising_quadrant: Vec<u64> = out
        .samples
        .iter()
        .filter(|(g, _)| *g <= 90.0 + 1e-9)
        .map(|(_, r)| r.ell)
        .collect();
    let mut worst_rise = 0.0f64;
    for w in rising_quadrant.windows(2) {
        if w[1] > w[0] {
            worst_rise = worst_rise.max((w[1] - w[0]) as f64 / w[0].max(1) as f64);
        }
    }
    report.check(
        "per-pass key monotone non-increasing in track angle (0.1% bin-quantisation slack)",
        worst_rise <= 1e-3,
        format!(
            "ell(0)={}, ell(45)={}, ell(90)={}, worst rise {:.4}%",
            rising_quadrant.first().unwrap(),
            rising_quadrant[rising_quadrant.len() / 2],
            rising_quadrant.last().unwrap(),
            100.0 * worst_rise
        ),
    );

    report.runtime(started.elapsed(), Duration::from_secs(1800));
    report.finish();
}

#[test]
fn acceptance_6_security_constraint_suite() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("6");

    // 200 random blocks: every returned optimum satisfies the composable
    // budget re-evaluated independently of the search.
    let sec = SecurityConfig::<f64>::default();
    let mut rng = SmallRng::seed_from_u64(0x5ec);
    let mut violations = 0usize;
    let mut keyed = 0usize;
    for _ in 0..200 {
        let m = 10f64.powf(rng.random_range(3.0..8.0)).round() as u64;
        let qber = rng.random_range(0.001..0.11);
        let block = BlockStats {
            m,
            qber,
            weighted_qber: qber,
            bins: Vec::new(),
        };
        let r = optimise_key_length(&block, &sec);
        if r.ell == 0 {
            continue;
        }
        keyed += 1;
        let eps_pe = epsilon_pe(r.m, r.k, r.n, r.delta, r.nu, r.xi).unwrap();
        let eps_pa = epsilon_pa(r.n, r.delta, r.nu, r.ell as f64, &sec);
        let total = (-sec.correctness_t()).exp2() + 2.0 * eps_pe + eps_pa;
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must count as a violation
        if !(total <= sec.eps_qkd() * (1.0 + 1e-12)) {
            violations += 1;
        }
        assert!(r.ell <= r.n && r.n <= r.m);
    }
    report.check(
        "200 random blocks: composable budget holds at every optimum",
        violations == 0,
        format!("{keyed} keyed blocks, {violations} violations"),
    );

    // reduced 3D search equals the 4D brute force on 20 small grids
    let mut mismatches = 0usize;
    let mut rng = SmallRng::seed_from_u64(0xb57);
    for case in 0..20 {
        let grid_n = [8, 12, 16][case % 3];
        let sec = SecurityConfig {
            grid_n,
            ..SecurityConfig::<f64>::default()
        };
        let m = 10f64.powf(rng.random_range(2.5..5.0)).round() as u64;
        let qber = rng.random_range(0.002..0.09);
        let block = BlockStats {
            m,
            qber,
            weighted_qber: qber,
            bins: Vec::new(),
        };
        let reduced = optimise_key_length(&block, &sec).ell;
        let brute = brute_force_4d(&block, &sec);
        if reduced != brute {
            eprintln!("case {case}: m={m} qber={qber}: reduced {reduced} vs brute {brute}");
            mismatches += 1;
        }
    }
    report.check(
        "3D reduced search matches 4D brute force on 20 small grids",
        mismatches == 0,
        format!("{mismatches} mismatches"),
    );

    report.runtime(started.elapsed(), Duration::from_secs(300));
    report.finish();
}

/// Independent four-parameter brute force: for every grid triplet, the
/// largest integer key length satisfying the original security constraint
/// directly (binary search; the privacy-amplification term is monotone in
/// the key length).
fn brute_force_4d(block: &BlockStats<f64>, sec: &SecurityConfig<f64>) -> u64 {
    let m = block.m;
    let delta = block.qber;
    if m == 0 || delta >= 0.5 {
        return 0;
    }
    let base_budget = sec.eps_qkd() - (-sec.correctness_t()).exp2();
    let betas: Vec<f64> = {
        // same grid construction as the implementation
        let lo = 1e-4f64.ln();
        let hi = 0.5f64.ln();
        (0..sec.grid_n)
            .map(|i| (lo + (hi - lo) * i as f64 / (sec.grid_n - 1) as f64).exp())
            .collect()
    };
    let fractions: Vec<f64> = (1..=sec.grid_n)
        .map(|i| i as f64 / (sec.grid_n + 1) as f64)
        .collect();
    let mut best = 0u64;
    for &beta in &betas {
        let k = ((beta * m as f64).floor() as u64).min(m);
        let n = m - k;
        for &f_nu in &fractions {
            let nu = (0.5 - delta) * f_nu;
            for &f_xi in &fractions {
                let xi = nu * f_xi;
                let Ok(eps_pe) = epsilon_pe(m, k, n, delta, nu, xi) else {
                    continue;
                };
                let budget = base_budget - 2.0 * eps_pe;
                if budget <= 0.0 {
                    continue;
                }
                let feasible = |ell: u64| epsilon_pa(n, delta, nu, ell as f64, sec) <= budget;
                if !feasible(0) {
                    continue;
                }
                let (mut lo, mut hi) = (0u64, n);
                while lo < hi {
                    let mid = (lo + hi).div_ceil(2);
                    if feasible(mid) {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                best = best.max(lo);
            }
        }
    }
    best
}

#[test]
fn acceptance_7_monte_carlo_counts_oracle() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("7");

    // Five random parameter points from the operating ranges (efficiencies
    // below 0.1, noise probabilities well below 1), 1e8 windows each.
    let windows: u64 = 100_000_000;
    let mut rng = SmallRng::seed_from_u64(0xc0147);
    let mut worst_d_sigma = 0.0f64;
    let mut worst_e_sigma = 0.0f64;
    for point in 0..5 {
        let eta_a = 10f64.powf(rng.random_range(-4.0..-1.0));
        let eta_b = 10f64.powf(rng.random_range(-4.0..-1.0));
        let p_ec_a = 10f64.powf(rng.random_range(-8.0..-4.0));
        let p_ec_b = 10f64.powf(rng.random_range(-8.0..-4.0));
        let p_ap = 10f64.powf(rng.random_range(-4.0..-2.0));
        let qber_i = rng.random_range(0.0001..0.05);

        let d = coincidence_rate(eta_a, eta_b, p_ec_a, p_ec_b, p_ap);
        let e = error_rate(eta_a, eta_b, p_ec_a, p_ec_b, p_ap, qber_i, d);

        let (d_mc, e_mc) = simulate_clicks(
            windows,
            0xacce97 + point,
            eta_a,
            eta_b,
            p_ec_a,
            p_ec_b,
            p_ap,
            qber_i,
        );
        let sigma_d = (d * (1.0 - d) / windows as f64).sqrt();
        let sigma_e = (e * (1.0 - e) / windows as f64).sqrt();
        worst_d_sigma = worst_d_sigma.max((d_mc - d).abs() / sigma_d);
        worst_e_sigma = worst_e_sigma.max((e_mc - e).abs() / sigma_e);
    }
    report.check(
        "coincidence rate within 3 sigma at 1e8 windows (5 points)",
        worst_d_sigma < 3.0,
        format!("worst {worst_d_sigma:.2} sigma"),
    );
    report.check(
        "error rate within 3 sigma at 1e8 windows (5 points)",
        worst_e_sigma < 3.0,
        format!("worst {worst_e_sigma:.2} sigma"),
    );

    report.runtime(started.elapsed(), Duration::from_secs(300));
    report.finish();
}

/// Per-window Bernoulli click simulator (independent transcription of the
/// count model, mirrored from the counts module's unit oracle).
#[allow(clippy::too_many_arguments)]
fn simulate_clicks(
    windows: u64,
    seed: u64,
    eta_a: f64,
    eta_b: f64,
    p_ec_a: f64,
    p_ec_b: f64,
    p_ap: f64,
    qber_i: f64,
) -> (f64, f64) {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut coincidences = 0u64;
    let mut errors = 0u64;
    for _ in 0..windows {
        let sig_a = rng.random::<f64>() < eta_a;
        let sig_b = rng.random::<f64>() < eta_b;
        let ext_a = rng.random::<f64>() < p_ec_a;
        let ext_b = rng.random::<f64>() < p_ec_b;
        if !((sig_a || ext_a) && (sig_b || ext_b)) {
            continue;
        }
        coincidences += 1;
        if sig_a && sig_b {
            if rng.random::<f64>() < qber_i {
                errors += 1;
            }
        } else {
            errors += 1;
        }
        if rng.random::<f64>() < p_ap * p_ap {
            coincidences += 1;
            if rng.random::<f64>() < 0.5 {
                errors += 1;
            }
        }
    }
    (
        coincidences as f64 / windows as f64,
        errors as f64 / windows as f64,
    )
}

#[test]
fn acceptance_8_deterministic_sweep_output() {
    let _g = gate();
    let started = Instant::now();
    let mut report = Report::new("8");

    let dir = std::env::temp_dir().join(format!("twinlink-acc8-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run_with = |threads: &str, path: &std::path::Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_twinlink"))
            .args([
                "sweep",
                "--separations-m",
                "400e3,1000e3",
                "--background-scales",
                "1,100",
                "--threads",
                threads,
                "--no-meta",
                "--output",
                path.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "sweep failed: {out:?}");
    };
    let csv1 = dir.join("threads1.csv");
    let csv8 = dir.join("threads8.csv");
    run_with("1", &csv1);
    run_with("8", &csv8);
    let b1 = std::fs::read(&csv1).unwrap();
    let b8 = std::fs::read(&csv8).unwrap();
    report.check(
        "sweep CSV byte-identical between 1 and 8 threads",
        b1 == b8,
        format!("{} bytes each", b1.len()),
    );

    report.runtime(started.elapsed(), Duration::from_secs(300));
    report.finish();
}

/// First-computed values of this implementation, frozen as exact
/// regression anchors (independent of the published-figure tolerances
/// above).
#[test]
fn golden_regression_values() {
    let _g = gate();

    let baseline = single_pass(&Scenario::default()).unwrap();
    assert_eq!(baseline.best.ell, 320_300, "baseline d=500 km key length");
    assert_eq!(baseline.best.m, 423_848, "baseline sifted block");

    let mut d1000 = Scenario::default();
    d1000.geometry.separation_m = 1000.0e3;
    let r = twinlink_core::mission::single_pass_skl(&d1000).unwrap();
    assert_eq!(r.ell, 154_461, "d=1000 km key length");

    let (min_2000, _) = min_loss_and_minima(2000.0e3);
    assert!(
        (min_2000 - 58.959).abs() < 0.02,
        "d=2000 km minimum combined loss drifted: {min_2000:.3} dB"
    );

    let sys = OpticalSystem::default();
    let diffraction = diffraction_loss_db(&sys, 500.0e3).unwrap();
    assert!(
        (diffraction - 8.5135).abs() < 0.002,
        "zenith diffraction drifted: {diffraction:.4} dB"
    );

    let mut micius = Scenario::default();
    micius.geometry.separation_m = 1000.0e3;
    micius.source.pair_rate_hz = 5.9e6;
    for optics in [&mut micius.optics_a, &mut micius.optics_b] {
        optics.tx_diameter_m = 0.13;
        optics.beam_waist_m = 0.065;
        optics.rx_diameter_m = 1.2;
    }
    let r = twinlink_core::mission::single_pass_skl(&micius).unwrap();
    assert_eq!(r.ell, 78_791, "Micius-aperture key length");

    // coarse annual quadrature (37 samples agree with 181 to 5 digits)
    let annual = annual_skl(
        &AnnualConfig {
            gamma_samples: 37,
            ..Default::default()
        },
        &Scenario::default(),
    )
    .unwrap();
    assert!(
        (annual.skl_year_bits / 1_689_007_892.54 - 1.0).abs() < 1e-6,
        "annual yield drifted: {}",
        annual.skl_year_bits
    );
    assert!(
        (annual.orbits_per_year / 5567.536383203839 - 1.0).abs() < 1e-12,
        "orbit count drifted: {}",
        annual.orbits_per_year
    );
}
