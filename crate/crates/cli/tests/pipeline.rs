use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use cfdkit::expost::evaluate_ensemble;
use cfdkit::scenario_sim::build_ensemble;
use cfdkit_cli::commands::{expost, init_toy, load_ensemble, report, simulate, strike};
use cfdkit_cli::store;
use cfdkit_cli::{ingest_timeseries, CliError, Overrides, Study, StudyConfig};

const HOURS: usize = 96;

fn toy(dir: &Path) -> PathBuf {
    init_toy(dir, HOURS, 7).unwrap()
}

fn study(config: &Path, overrides: Overrides) -> Study {
    Study::load(config, &overrides).unwrap()
}

fn run_all(s: &Study) {
    simulate(s).unwrap();
    strike(s).unwrap();
    expost(s).unwrap();
    report(s).unwrap();
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let s = study(&toy(dir.path()), Overrides::default());
    run_all(&s);
    let out = &s.out_dir;
    for f in ["strikes.csv", "taylor_diagnostics.csv", "payments.csv", "expost.csv", "consumer.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    for f in [
        "summary_cost_recovery.csv",
        "summary_consumer.csv",
        "summary_prices.csv",
        "summary_strike_components.csv",
        "cv_cost_recovery.csv",
        "cv_consumer.csv",
    ] {
        assert!(out.join("report").join(f).is_file(), "{f}");
    }
    assert_eq!(load_ensemble(&s).unwrap().len(), 36);
    // 6 plants x 3 types.
    assert_eq!(store::read_strikes(&store::strikes_path(out)).unwrap().len(), 18);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = study(&toy(a.path()), Overrides::default());
    let sb = study(&toy(b.path()), Overrides::default());
    run_all(&sa);
    run_all(&sb);
    let fa = files(a.path());
    let fb = files(b.path());
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (path, bytes) in &fa {
        assert!(bytes == &fb[path], "{} differs", path.display());
    }
}

#[test]
fn stages_name_their_prerequisite() {
    let dir = tempfile::tempdir().unwrap();
    let s = study(&toy(dir.path()), Overrides::default());
    let err = strike(&s).unwrap_err();
    assert!(matches!(err, CliError::Prerequisite { command: "simulate", .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("cfdkit simulate"));

    simulate(&s).unwrap();
    let err = expost(&s).unwrap_err();
    assert!(matches!(err, CliError::Prerequisite { command: "strike", .. }), "{err}");
    let err = report(&s).unwrap_err();
    assert!(matches!(err, CliError::Prerequisite { command: "strike", .. }), "{err}");
    strike(&s).unwrap();
    let err = report(&s).unwrap_err();
    assert!(matches!(err, CliError::Prerequisite { command: "expost", .. }), "{err}");
}

#[test]
fn outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = study(&toy(dir.path()), Overrides::default());
    simulate(&s).unwrap();
    let in_memory = build_ensemble(&s.market_config().unwrap()).unwrap();
    let reread = load_ensemble(&s).unwrap();
    assert!(reread == in_memory, "re-read ensemble differs");

    let strikes = strike(&s).unwrap();
    assert_eq!(store::read_strikes(&store::strikes_path(&s.out_dir)).unwrap(), strikes);

    expost(&s).unwrap();
    let outcome = evaluate_ensemble(&strikes, &s.reference, &in_memory).unwrap();
    assert_eq!(store::read_expost(&store::expost_path(&s.out_dir)).unwrap(), outcome.results);
    assert_eq!(store::read_consumer(&store::consumer_path(&s.out_dir)).unwrap(), outcome.consumer);
    assert_eq!(store::read_payments(&store::payments_path(&s.out_dir)).unwrap(), outcome.payments);

    // Hourly outputs go through the same ingester as the inputs.
    let first = &in_memory.scenarios()[0];
    let prices = ingest_timeseries(&store::scenarios_dir(&s.out_dir).join(&first.id).join("prices.csv"), HOURS).unwrap();
    assert_eq!(&prices, first.prices());
}

#[test]
fn dropping_a_weather_year_recomputes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy(dir.path());
    run_all(&study(&config, Overrides::default()));

    let dropped = study(
        &config,
        Overrides {
            drop_weather_years: vec!["2010".into()],
            ..Overrides::default()
        },
    );
    let e = load_ensemble(&dropped).unwrap();
    assert_eq!(e.len(), 24);
    assert!(e.scenarios().iter().all(|s| !s.id.contains("__2010__")));
    let total: f64 = e.weights().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);

    strike(&dropped).unwrap();
    expost(&dropped).unwrap();
    report(&dropped).unwrap();
    let summary = fs::read_to_string(dropped.out_dir.join("report/summary_cost_recovery.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(3).unwrap(), "24");

    let unknown = Study::load(
        &config,
        &Overrides {
            drop_weather_years: vec!["1999".into()],
            ..Overrides::default()
        },
    )
    .unwrap_err();
    assert_eq!(unknown.exit_code(), 2);
}

/// The toy study with peakers removed and half the turbines, so that
/// scarcity prices occur even on a short horizon.
fn scarce(dir: &Path) -> PathBuf {
    let path = toy(dir);
    let mut config = StudyConfig::from_toml(&fs::read_to_string(&path).unwrap()).unwrap();
    for mix in &mut config.invest_variants {
        mix.units.retain(|u| !u.id.ends_with("_peaker"));
        for u in mix.units.iter_mut().filter(|u| u.efficiency.is_some()) {
            u.capacity *= 0.5;
        }
    }
    fs::write(&path, config.to_toml().unwrap()).unwrap();
    path
}

#[test]
fn removing_the_cap_only_raises_capped_hours() {
    let dir = tempfile::tempdir().unwrap();
    let config = scarce(dir.path());
    let capped = study(&config, Overrides::default());
    let uncapped = study(
        &config,
        Overrides {
            no_price_cap: true,
            out: Some(dir.path().join("uncapped")),
            ..Overrides::default()
        },
    );
    simulate(&capped).unwrap();
    simulate(&uncapped).unwrap();
    let a = load_ensemble(&capped).unwrap();
    let b = load_ensemble(&uncapped).unwrap();
    let cap = capped.config.market.price_cap;
    let mut above = 0;
    for (sa, sb) in a.scenarios().iter().zip(b.scenarios()) {
        for (zone, pa) in sa.prices() {
            for (&x, &y) in pa.iter().zip(sb.price(zone).unwrap()) {
                assert!(y >= x);
                if y < cap {
                    assert_eq!(x, y);
                } else {
                    assert_eq!(x, cap);
                    above += usize::from(y > cap);
                }
            }
        }
    }
    assert!(above > 0, "toy study never exceeds the cap");
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_cfdkit");
    let dir = tempfile::tempdir().unwrap();

    let missing = Process::new(exe)
        .args(["--config", dir.path().join("nope.toml").to_str().unwrap(), "simulate"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let init = Process::new(exe)
        .args(["init-toy", "--dir", dir.path().to_str().unwrap(), "--hours", "24"])
        .output()
        .unwrap();
    assert!(init.status.success());
    let config = dir.path().join("study.toml");

    let early = Process::new(exe).args(["--config", config.to_str().unwrap(), "strike"]).output().unwrap();
    assert_eq!(early.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&early.stderr).contains("cfdkit simulate"));

    // Corrupt one weather file: a data error.
    let cf = dir.path().join("weather/2015/demand.csv");
    let text = fs::read_to_string(&cf).unwrap().replacen(",DK,", ",DK,x", 1);
    fs::write(&cf, text).unwrap();
    let bad = Process::new(exe).args(["--config", config.to_str().unwrap(), "simulate"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("hour 0") && stderr.contains("`DK`"), "{stderr}");
}
