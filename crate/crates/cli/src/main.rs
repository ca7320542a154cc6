//! Batch front-end: scenario files in, deterministic CSV out.
//!
//! Subcommands mirror the study types: `loss-profile` (per-bin link
//! budget), `pass` (single-overpass key length), `block-sweep` (key
//! length versus block size for a family of background levels), `sweep`
//! (Cartesian parameter grids), and `annual` (yearly key yield).
//!
//! Output bodies are byte-identical for identical inputs regardless of
//! thread count; run metadata (timestamp, parameter hash, runtime) rides
//! in `#`-prefixed header lines that `--no-meta` suppresses.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use twinlink_core::error::Error;
use twinlink_core::finitekey::ThresholdPoint;
use twinlink_core::mission::{
    annual_skl, run_sweep, single_pass, AnnualConfig, SweepCell, SweepSpec,
};
use twinlink_core::{Scalar, Scenario, SklResult};

#[derive(Parser)]
#[command(
    name = "twinlink",
    version,
    about = "Dual-downlink entanglement QKD mission simulator",
    after_help = "Exit codes: 0 success, 1 usage, 2 config/validation, 3 runtime."
)]
struct Cli {
    /// Scenario file (flat sectioned key-value text); omit for the
    /// built-in reference scenario.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Override a scenario key, e.g. --set geometry.ogs_separation_m=1e6
    /// (repeatable, applied after the file).
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    /// Worker-thread cap for the parallel searches.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Suppress the `#` metadata header (timestamp, parameter hash).
    #[arg(long, global = true)]
    no_meta: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-second link ranges, elevations, and losses for one pass.
    LossProfile,
    /// Optimised secret key length for one pass (one CSV row).
    Pass,
    /// Key length versus block size across background scales.
    BlockSweep(BlockSweepArgs),
    /// Cartesian sweep over altitudes, separations, angles, backgrounds.
    Sweep(SweepArgs),
    /// Annual key yield over the distribution of overpass geometries.
    Annual(AnnualArgs),
}

#[derive(Args)]
struct BlockSweepArgs {
    /// Background scales f to sweep, comma separated.
    #[arg(
        long = "background-scale",
        value_delimiter = ',',
        default_value = "1"
    )]
    background_scales: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Orbit altitudes, m, comma separated (default: scenario value).
    #[arg(long, value_delimiter = ',')]
    altitudes_m: Vec<f64>,
    /// Station separations, m, comma separated.
    #[arg(long, value_delimiter = ',')]
    separations_m: Vec<f64>,
    /// Track/baseline angles, degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    phis_deg: Vec<f64>,
    /// Orbital-plane tilts, degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    xis_deg: Vec<f64>,
    /// Background scales f, comma separated.
    #[arg(long, value_delimiter = ',')]
    background_scales: Vec<f64>,
    /// Write a JSON run summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct AnnualArgs {
    /// Track-angle samples over [0, 180] degrees.
    #[arg(long, default_value_t = 181)]
    gamma_samples: usize,
    /// Sample only [0, 90] degrees and mirror (needs an odd sample count).
    #[arg(long)]
    quarter_symmetry: bool,
    /// Gate key generation to crossing longitudes inside LO,HI degrees.
    #[arg(long, value_name = "LO,HI")]
    gamma_range: Option<String>,
    /// Write a JSON run summary here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version also render through clap's error path
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ConfigParse { .. } | Error::ConfigValidation(_) | Error::Table(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }

    let scenario = load_scenario(&cli)?;
    let started = Instant::now();
    let mut meta = MetaBlock::new(&scenario, cli.no_meta);

    let body = match &cli.command {
        Command::LossProfile => loss_profile_csv(&scenario)?,
        Command::Pass => pass_csv(&scenario)?,
        Command::BlockSweep(args) => block_sweep_csv(&scenario, args)?,
        Command::Sweep(args) => {
            let (body, cells) = sweep_csv(&scenario, args)?;
            if let Some(path) = &args.summary {
                let failures = cells
                    .iter()
                    .filter(|c| c.outcome.is_err())
                    .count();
                let summary = json_summary(
                    "sweep",
                    &scenario,
                    started.elapsed().as_secs_f64(),
                    &[
                        ("cells", cells.len().to_string()),
                        ("failures", failures.to_string()),
                    ],
                );
                std::fs::write(path, summary)?;
            }
            body
        }
        Command::Annual(args) => {
            let (body, out) = annual_csv(&scenario, args)?;
            println!("skl_year_bits = {}", out.skl_year_bits);
            println!("orbits_per_year = {}", out.orbits_per_year);
            if let Some(path) = &args.summary {
                let summary = json_summary(
                    "annual",
                    &scenario,
                    started.elapsed().as_secs_f64(),
                    &[
                        ("skl_year_bits", format!("{}", out.skl_year_bits)),
                        ("orbits_per_year", format!("{}", out.orbits_per_year)),
                        ("gamma_samples", args.gamma_samples.to_string()),
                    ],
                );
                std::fs::write(path, summary)?;
            }
            body
        }
    };

    meta.runtime_s = started.elapsed().as_secs_f64();
    let text = format!("{}{body}", meta.render());
    match &cli.output {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            file.write_all(text.as_bytes())?;
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(Error::Io)?;
        }
    }
    Ok(())
}

fn load_scenario(cli: &Cli) -> Result<Scenario, Error> {
    let mut scenario = match &cli.scenario {
        Some(path) => {
            let outcome = Scenario::load(path)?;
            if !outcome.defaulted.is_empty() {
                eprintln!(
                    "notice: {} keys defaulted to reference values ({})",
                    outcome.defaulted.len(),
                    outcome.defaulted.join(", ")
                );
            }
            outcome.scenario
        }
        None => Scenario::default(),
    };
    let base_dir = cli
        .scenario
        .as_ref()
        .and_then(|p| p.parent().map(PathBuf::from));
    for item in &cli.overrides {
        let (key_path, value) = item.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: 0,
            msg: format!("--set expects SECTION.KEY=VALUE, got '{item}'"),
        })?;
        let (section, key) = key_path.split_once('.').ok_or_else(|| Error::ConfigParse {
            line: 0,
            msg: format!("--set key must be SECTION.KEY, got '{key_path}'"),
        })?;
        scenario.set(section.trim(), key.trim(), value.trim())?;
    }
    scenario.load_tables(base_dir.as_deref())?;
    scenario.validate()?;
    Ok(scenario)
}

/// `#`-prefixed metadata header.
struct MetaBlock {
    lines: Vec<String>,
    runtime_s: f64,
    suppressed: bool,
}

impl MetaBlock {
    fn new(scenario: &Scenario, suppressed: bool) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            lines: vec![
                format!("# generator = twinlink {}", env!("CARGO_PKG_VERSION")),
                format!("# timestamp_unix = {timestamp}"),
                format!("# parameter_hash = {:016x}", scenario.parameter_hash()),
                format!("# grid_n = {}", scenario.security.grid_n),
            ],
            runtime_s: 0.0,
            suppressed,
        }
    }

    fn render(&self) -> String {
        if self.suppressed {
            return String::new();
        }
        let mut out = self.lines.join("\n");
        let _ = write!(out, "\n# runtime_s = {:.3}\n", self.runtime_s);
        out
    }
}

fn fmt_db(x: Scalar) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

fn loss_profile_csv(scenario: &Scenario) -> Result<String, Error> {
    let out = single_pass(scenario)?;
    let mut csv = String::from(
        "time_s,range_a_m,range_b_m,elev_a_deg,elev_b_deg,visible,loss_a_db,loss_b_db,loss_combined_db\n",
    );
    let loss = &out.loss;
    let profile = &out.profile;
    for i in 0..profile.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            profile.times[i],
            profile.range_a[i],
            profile.range_b[i],
            profile.elev_a[i],
            profile.elev_b[i],
            u8::from(profile.visible[i]),
            fmt_db(loss.db_a[i]),
            fmt_db(loss.db_b[i]),
            fmt_db(loss.db_combined[i]),
        );
    }
    Ok(csv)
}

const RESULT_COLUMNS: &str = "delta,m_bits,qber,ell_bits,beta,nu,xi,k_bits,n_bits,eps_pe,eps_pa";

fn result_row(r: &SklResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.delta, r.m, r.qber, r.ell, r.beta, r.nu, r.xi, r.k, r.n, r.eps_pe, r.eps_pa
    )
}

fn pass_csv(scenario: &Scenario) -> Result<String, Error> {
    let out = single_pass(scenario)?;
    Ok(format!("{RESULT_COLUMNS}\n{}\n", result_row(&out.best)))
}

fn block_sweep_csv(scenario: &Scenario, args: &BlockSweepArgs) -> Result<String, Error> {
    if args.background_scales.is_empty() {
        return Err(Error::InvalidInput(
            "block-sweep needs at least one background scale".into(),
        ));
    }
    let mut csv = format!("background_scale,threshold,{RESULT_COLUMNS}\n");
    for &f in &args.background_scales {
        let mut s = scenario.clone();
        s.detector.background_scale = f;
        let out = single_pass(&s)?;
        for ThresholdPoint { threshold, result } in &out.curve {
            let _ = writeln!(csv, "{f},{threshold},{}", result_row(result));
        }
    }
    Ok(csv)
}

fn sweep_csv(scenario: &Scenario, args: &SweepArgs) -> Result<(String, Vec<SweepCell>), Error> {
    let spec = SweepSpec {
        altitudes_m: args.altitudes_m.clone(),
        separations_m: args.separations_m.clone(),
        phis_deg: args.phis_deg.clone(),
        xis_deg: args.xis_deg.clone(),
        background_scales: args.background_scales.clone(),
    };
    let cells = run_sweep(scenario, &spec);
    let mut csv =
        format!("altitude_m,separation_m,phi_deg,xi_deg,background_scale,{RESULT_COLUMNS}\n");
    for cell in &cells {
        match &cell.outcome {
            Ok(r) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    cell.altitude_m,
                    cell.separation_m,
                    cell.phi_deg,
                    cell.xi_deg,
                    cell.background_scale,
                    result_row(r)
                );
            }
            Err(msg) => {
                eprintln!(
                    "cell (h={}, d={}, phi={}, xi={}, f={}) failed: {msg}",
                    cell.altitude_m,
                    cell.separation_m,
                    cell.phi_deg,
                    cell.xi_deg,
                    cell.background_scale
                );
            }
        }
    }
    Ok((csv, cells))
}

fn annual_csv(
    scenario: &Scenario,
    args: &AnnualArgs,
) -> Result<(String, twinlink_core::mission::AnnualOutput), Error> {
    let gamma_mask_deg = match &args.gamma_range {
        None => None,
        Some(raw) => {
            let (lo, hi) = raw.split_once(',').ok_or_else(|| {
                Error::InvalidInput(format!("--gamma-range expects LO,HI got '{raw}'"))
            })?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad gamma bound '{s}': {e}")))
            };
            Some((parse(lo)?, parse(hi)?))
        }
    };
    let cfg = AnnualConfig {
        gamma_samples: args.gamma_samples,
        quarter_symmetry: args.quarter_symmetry,
        gamma_mask_deg,
    };
    let out = annual_skl(&cfg, scenario)?;
    let mut csv = format!("gamma_deg,phi_deg,offset_delta_m,{RESULT_COLUMNS}\n");
    for (gamma, r) in &out.samples {
        let _ = writeln!(csv, "{gamma},{gamma},0,{}", result_row(r));
    }
    Ok((csv, out))
}

fn json_summary(
    command: &str,
    scenario: &Scenario,
    runtime_s: f64,
    extra: &[(&str, String)],
) -> String {
    let mut fields = vec![
        ("command".to_string(), format!("\"{command}\"")),
        (
            "parameter_hash".to_string(),
            format!("\"{:016x}\"", scenario.parameter_hash()),
        ),
        ("grid_n".to_string(), scenario.security.grid_n.to_string()),
        ("runtime_s".to_string(), format!("{runtime_s:.3}")),
    ];
    for (k, v) in extra {
        let quoted = if v.parse::<f64>().is_ok() {
            v.clone()
        } else {
            format!("\"{v}\"")
        };
        fields.push(((*k).to_string(), quoted));
    }
    let body: Vec<String> = fields
        .into_iter()
        .map(|(k, v)| format!("  \"{k}\": {v}"))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}
