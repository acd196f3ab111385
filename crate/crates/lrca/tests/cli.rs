//! End-to-end checks of the command line interface, run in process.

use lrca::cli::run;
use lrca::models::arch::{arch_simulate, ArchParams};
use lrca::montecarlo::replication_rng;
use lrca::montecarlo::RejectionTable;
use std::fs;
use std::path::Path;

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{"dgp":"dgp1","n":100,"replications":40,"master_seed":11,"levels":[0.05],"tests":["lrc-alpha"],"info":"hessian"}"#,
    )
    .unwrap();
    path
}

fn lrca(args: &[&str]) -> i32 {
    run(std::iter::once("lrca").chain(args.iter().copied()))
}

#[test]
fn simulate_writes_round_trippable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let code = lrca(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("rejection.csv")).unwrap();
    assert!(csv.starts_with("dgp,n,test,level,rate,failures\n"));
    let table = RejectionTable::from_csv(&csv).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].dgp, "dgp1");
    assert!(out.join("rejection.md").exists());
}

#[test]
fn reruns_are_byte_identical_and_seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed) in [(&a, None), (&b, None), (&c, Some("7"))] {
        let mut args = vec!["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        assert_eq!(lrca(&args), 0);
    }
    let read = |p: &Path| fs::read(p.join("rejection.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn workers_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let (a, b) = (dir.path().join("w1"), dir.path().join("w4"));
    for (out, w) in [(&a, "1"), (&b, "4")] {
        assert_eq!(
            lrca(&["simulate", "--config", cfg.to_str().unwrap(), "--workers", w, "--out", out.to_str().unwrap()]),
            0
        );
    }
    assert_eq!(fs::read(a.join("rejection.csv")).unwrap(), fs::read(b.join("rejection.csv")).unwrap());
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(lrca(&["frobnicate"]), 1);
    assert_eq!(lrca(&[]), 1);
}

#[test]
fn describe_commands() {
    assert_eq!(lrca(&["describe", "arch"]), 0);
    assert_eq!(lrca(&["describe", "weibull"]), 0);
    assert_eq!(lrca(&["describe", "error-components"]), 0);
    assert_eq!(lrca(&["describe", "xyz"]), 1);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"dgp":"dgp1"}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        lrca(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]),
        1
    );
    assert_eq!(
        lrca(&["simulate", "--config", dir.path().join("missing.json").to_str().unwrap(), "--out", out.to_str().unwrap()]),
        1
    );
}

fn write_arch_csv(dir: &Path) -> std::path::PathBuf {
    let truth = ArchParams::new(1.0, vec![0.1, 0.05]).unwrap();
    let mut rng = replication_rng(5, 0);
    let series = arch_simulate(&truth, 500, 0, &mut rng).unwrap();
    let path = dir.join("series.csv");
    let mut text = String::from("x\n");
    for v in series {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn test_command_on_arch_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_arch_csv(dir.path());
    let data = data.to_str().unwrap();
    assert_eq!(lrca(&["test", "--model", "arch", "--data", data, "--lags", "2", "--restrict", "alpha2=0"]), 0);
    // linear combination form
    assert_eq!(
        lrca(&["test", "--model", "arch", "--data", data, "--lags", "2", "--restrict", "1*alpha1+1*alpha2=0.15"]),
        0
    );
    // usage errors: unknown parameter, malformed spec, unknown model
    assert_eq!(lrca(&["test", "--model", "arch", "--data", data, "--restrict", "alpha9=0"]), 1);
    assert_eq!(lrca(&["test", "--model", "arch", "--data", data, "--restrict", "alpha1"]), 1);
    assert_eq!(lrca(&["test", "--model", "nope", "--data", data, "--restrict", "alpha1=0"]), 1);
}

#[test]
fn ci_command_on_arch_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_arch_csv(dir.path());
    let data = data.to_str().unwrap();
    assert_eq!(lrca(&["ci", "--model", "arch", "--data", data, "--lags", "2", "--param", "alpha1"]), 0);
    assert_eq!(
        lrca(&["ci", "--model", "arch", "--data", data, "--lags", "2", "--param", "alpha1", "--method", "t"]),
        0
    );
    assert_eq!(lrca(&["ci", "--model", "arch", "--data", data, "--param", "sigma2_v"]), 1);
}

#[test]
fn calibrate_and_power_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(lrca(&["calibrate", "--config", cfg.to_str().unwrap()]), 0);

    let pcfg = dir.path().join("power.json");
    fs::write(
        &pcfg,
        r#"{"dgp":"weibull-power","n":60,"replications":10,"master_seed":3,"levels":[0.05],"tests":["lrc-alpha"],"info":"hessian"}"#,
    )
    .unwrap();
    let out = dir.path().join("pout");
    assert_eq!(
        lrca(&["power", "--config", pcfg.to_str().unwrap(), "--grid", "-6:1:-4", "--out", out.to_str().unwrap()]),
        0
    );
    let csv = fs::read_to_string(out.join("power.csv")).unwrap();
    assert!(csv.starts_with("grid,test,rate\n"));
    assert_eq!(csv.lines().count(), 4, "3 grid points plus header: {csv}");
    // malformed grid is a usage error
    assert_eq!(
        lrca(&["power", "--config", pcfg.to_str().unwrap(), "--grid", "oops", "--out", out.to_str().unwrap()]),
        1
    );
}
