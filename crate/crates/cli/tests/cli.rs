use std::path::Path;
use std::process::{Command, Output};

fn ancs(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ancs"));
    cmd.args(args).env_remove("ANCS_SEED");
    if let Some(s) = seed_env {
        cmd.env("ANCS_SEED", s);
    }
    cmd.output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: [&str; 6] = ["--set", "n=40", "--set", "m=16", "--set", "t=4"];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL).collect()
}

#[test]
fn run_prints_a_single_csv_row() {
    let text = ok(&ancs(&with_small(&["run", "--trials", "2", "--seed", "3"]), None));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("scenario_id,swept_param"));
    assert!(lines[1].starts_with("run,none,0.0,ancs,l1,2,"));
}

#[test]
fn config_file_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "n = 40\nm = 16\nt = 4\ntrials = 2\nsampler = \"uniform\"\n").unwrap();
    let out = dir.path().join("run.json");
    let args = ["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"];
    assert_eq!(ok(&ancs(&args, None)), "");
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows[0]["sampler"], "uniform");
    assert_eq!(rows[0]["trials"], 2);
}

#[test]
fn custom_sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let mut args = with_small(&["sweep", "--param", "snr_db", "--values", "10,20", "--methods", "l1", "--trials", "2"]);
    args.extend(["--out", out.to_str().unwrap()]);
    ok(&ancs(&args, None));
    let table = ancs_core::harness::output::load(Path::new(&out), ancs_core::harness::Format::Csv).unwrap();
    assert_eq!(table.rows.len(), 4);
    assert!(table.rows.iter().all(|r| r.swept_param == "snr_db"));
}

#[test]
fn seed_precedence_flag_then_env() {
    let base = with_small(&["run", "--trials", "2"]);
    let from_env = ok(&ancs(&base, Some("5")));
    let mut flagged = base.clone();
    flagged.extend(["--seed", "5"]);
    assert_eq!(ok(&ancs(&flagged, None)), from_env);
    let mut overriding = base.clone();
    overriding.extend(["--seed", "6"]);
    assert_ne!(ok(&ancs(&overriding, Some("5"))), from_env);
    assert_ne!(ok(&ancs(&base, None)), from_env);
}

#[test]
fn inspect_dumps_posteriors_per_step() {
    let text = ok(&ancs(&with_small(&["inspect", "--trial", "1"]), None));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["trial_seed"], 1);
    let posts = doc["posteriors"].as_array().unwrap();
    assert_eq!(posts.len(), 4);
    assert_eq!(posts[0]["cbar"].as_array().unwrap().len(), 40);
    assert!(doc["steps"][0]["cbar"].as_array().unwrap().iter().all(|c| c == 0.5));
}

#[test]
fn errors_exit_non_zero() {
    for args in [
        vec!["sweep", "--preset", "fig9"],
        vec!["sweep"],
        vec!["run", "--set", "m=0"],
        vec!["run", "--set", "bogus=1"],
        vec!["run", "--config", "/nonexistent/ancs.toml"],
        vec!["run", "--format", "xml"],
        vec!["run", "--threads", "0"],
    ] {
        let out = ancs(&args, None);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}
