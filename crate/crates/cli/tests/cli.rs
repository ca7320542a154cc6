//! End-to-end tests of the `twinlink` binary: exit codes, CSV contracts,
//! determinism across thread counts.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twinlink"))
}

/// Fast search settings for pipeline-heavy invocations.
const QUICK: &[&str] = &[
    "--set",
    "finitekey.grid_n=8",
    "--set",
    "finitekey.n_thresholds=4",
];

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twinlink-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn pass_emits_one_row_with_unit_headers() {
    let mut args = vec!["pass", "--no-meta"];
    args.extend_from_slice(QUICK);
    let out = run(&args);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "delta,m_bits,qber,ell_bits,beta,nu,xi,k_bits,n_bits,eps_pe,eps_pa"
    );
    let row = lines.next().unwrap();
    assert_eq!(row.split(',').count(), 11);
    assert!(lines.next().is_none());
    let ell: u64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(ell > 0, "reference scenario produces key");
}

#[test]
fn metadata_header_is_separable() {
    let mut with_meta = vec!["pass"];
    with_meta.extend_from_slice(QUICK);
    let out_meta = stdout_str(&run(&with_meta));
    assert!(out_meta.starts_with("# generator = twinlink"));
    assert!(out_meta.contains("# parameter_hash = "));
    assert!(out_meta.contains("# timestamp_unix = "));

    let mut no_meta = vec!["pass", "--no-meta"];
    no_meta.extend_from_slice(QUICK);
    let out_plain = stdout_str(&run(&no_meta));
    assert!(!out_plain.contains('#'));

    let stripped: String = out_meta
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    assert_eq!(stripped, out_plain, "metadata must not alter the body");
}

#[test]
fn loss_profile_has_per_bin_rows() {
    let out = run(&["loss-profile", "--no-meta"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time_s,range_a_m,range_b_m,elev_a_deg,elev_b_deg,visible,loss_a_db,loss_b_db,loss_combined_db"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 5000, "full pass window expected");
    assert!(rows.iter().any(|r| r.contains(",1,")), "visible bins");
    assert!(rows.iter().any(|r| r.ends_with("inf")), "non-visible bins");
}

#[test]
fn sweep_is_byte_identical_across_thread_counts() {
    let dir = tmpdir("det");
    let csv1 = dir.join("t1.csv");
    let csv4 = dir.join("t4.csv");
    for (threads, path) in [("1", &csv1), ("4", &csv4)] {
        let mut args = vec![
            "sweep",
            "--separations-m",
            "400e3,900e3",
            "--background-scales",
            "1,10",
            "--threads",
            threads,
            "--no-meta",
            "--output",
            path.to_str().unwrap(),
        ];
        args.extend_from_slice(QUICK);
        let out = run(&args);
        assert!(out.status.success());
    }
    let b1 = std::fs::read(&csv1).unwrap();
    let b4 = std::fs::read(&csv4).unwrap();
    assert_eq!(b1, b4, "sweep CSV differs between 1 and 4 threads");
}

#[test]
fn block_sweep_emits_curve_per_background_scale() {
    let mut args = vec!["block-sweep", "--background-scale", "1,100", "--no-meta"];
    args.extend_from_slice(QUICK);
    let out = run(&args);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "background_scale,threshold,delta,m_bits,qber,ell_bits,beta,nu,xi,k_bits,n_bits,eps_pe,eps_pa"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8, "4 thresholds x 2 scales");
    assert_eq!(rows.iter().filter(|r| r.starts_with("1,")).count(), 4);
    assert_eq!(rows.iter().filter(|r| r.starts_with("100,")).count(), 4);
}

#[test]
fn annual_reports_yearly_yield() {
    let mut args = vec!["annual", "--gamma-samples", "5", "--no-meta"];
    args.extend_from_slice(QUICK);
    let out = run(&args);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.contains("skl_year_bits = "));
    assert!(text.contains("gamma_deg,phi_deg,offset_delta_m,"));
    assert_eq!(
        text.lines()
            .filter(|l| !l.contains('=') && !l.starts_with("gamma_deg"))
            .count(),
        5
    );
}

#[test]
fn scenario_file_and_overrides_compose() {
    let dir = tmpdir("scenario");
    let path = dir.join("wide.cfg");
    std::fs::write(&path, "[geometry]\nogs_separation_m = 900e3\n").unwrap();
    let mut args = vec![
        "sweep",
        "--scenario",
        path.to_str().unwrap(),
        "--set",
        "geometry.phi_deg=15",
        "--no-meta",
    ];
    args.extend_from_slice(QUICK);
    let out = run(&args);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1], "900000", "separation from file");
    assert_eq!(cols[2], "15", "phi from --set");
}

#[test]
fn summary_json_carries_run_metadata() {
    let dir = tmpdir("summary");
    let json = dir.join("run.json");
    let csv = dir.join("out.csv");
    let mut args = vec![
        "sweep",
        "--no-meta",
        "--summary",
        json.to_str().unwrap(),
        "--output",
        csv.to_str().unwrap(),
    ];
    args.extend_from_slice(QUICK);
    assert!(run(&args).status.success());
    let text = std::fs::read_to_string(&json).unwrap();
    for key in ["parameter_hash", "grid_n", "runtime_s", "cells"] {
        assert!(text.contains(key), "summary missing {key}: {text}");
    }
}

#[test]
fn usage_errors_exit_1() {
    let out = run(&["pass", "--does-not-exist"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_2() {
    let dir = tmpdir("badcfg");
    let bad_value = dir.join("bad_value.cfg");
    std::fs::write(&bad_value, "[geometry]\naltitude_m = -5\n").unwrap();
    let out = run(&["pass", "--scenario", bad_value.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let bad_key = dir.join("bad_key.cfg");
    std::fs::write(&bad_key, "[geometry]\naltitude_km = 500\n").unwrap();
    let out = run(&["pass", "--scenario", bad_key.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["pass", "--set", "geometry.not_a_key=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    let mut args = vec!["pass", "--output", "/nonexistent-dir/out.csv"];
    args.extend_from_slice(QUICK);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_scenario_file_exits_nonzero() {
    let out = run(&["pass", "--scenario", "/does/not/exist.cfg"]);
    assert_eq!(out.status.code(), Some(3), "io error is a runtime error");
}

#[test]
fn data_dir_env_var_resolves_table_paths() {
    let dir = tmpdir("datadir");
    let config_dir = dir.join("configs");
    let data_dir = dir.join("data");
    std::fs::create_dir_all(&config_dir).unwrap();
    std::fs::create_dir_all(&data_dir).unwrap();
    // table lives only in the data dir, not next to the config
    std::fs::write(
        data_dir.join("atm.csv"),
        "elevation_deg,transmissivity\n0,0.002\n45,0.7\n90,0.845\n",
    )
    .unwrap();
    let cfg = config_dir.join("scenario.cfg");
    std::fs::write(&cfg, "[channel]\natmosphere_table_path = atm.csv\n").unwrap();

    let mut args = vec!["pass", "--no-meta", "--scenario"];
    let cfg_str = cfg.to_str().unwrap().to_string();
    args.push(&cfg_str);
    args.extend_from_slice(QUICK);

    // without the env var the relative path cannot resolve
    let out = bin().args(&args).env_remove("TWINLINK_DATA_DIR").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(&args)
        .env("TWINLINK_DATA_DIR", data_dir.to_str().unwrap())
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
}
