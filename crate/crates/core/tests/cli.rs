use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renewal-coupling"))
        .args(args)
        .env("RAYON_NUM_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn malformed_spec_is_a_usage_error() {
    for spec in ["gama(shape=2,rate=1)", "exp(rate=-1)", "exp(rate=1"] {
        let o = run(&["bound", "--dist", spec]);
        assert_eq!(o.status.code(), Some(2), "{spec}");
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error:"), "{err}");
    }
    let o = run(&["bound", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn infeasible_alpha_is_reported() {
    let o = run(&["bound", "--dist", "pareto(xm=1,alpha=3)", "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn bound_reports_theta_and_optimum() {
    let o = run(&["bound", "--dist", "exp(rate=1)", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let theta = text.lines().find(|l| l.starts_with("Theta")).expect("Theta line");
    assert_eq!(theta.split('=').nth(1).unwrap().trim(), "2");
    assert!(text.lines().any(|l| l.starts_with("R_star")));
    assert!(text.contains("t,bound"));
}

#[test]
fn bound_json_has_named_constants() {
    let o = run(&["bound", "--dist", "gamma(shape=2,rate=1)", "--R", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["R", "pi_R", "P_R", "kappa_R", "q_R", "K1", "K2", "K_alpha_b1"] {
        assert!(v["bound"][key].is_number(), "{key}");
    }
    assert_eq!(v["bound"]["R"], 5.0);
}

#[test]
fn couple_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("tau{i}.csv"))).collect();
    let mut summaries = Vec::new();
    for p in &paths {
        let o = run(&[
            "couple",
            "--dist",
            "gamma(shape=2,rate=1)",
            "--b2",
            "3",
            "--R",
            "5",
            "--runs",
            "500",
            "--seed",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        summaries.push(stdout(&o));
    }
    assert_eq!(summaries[0], summaries[1]);
    assert!(summaries[0].contains("non_coupled=0"), "{}", summaries[0]);
    let (a, b) = (std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("run,tau,attempts,coupled\n"));
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn seed_changes_the_sample() {
    let args = |seed: &'static str| ["couple", "--dist", "exp(rate=1)", "--b2", "1", "--R", "3", "--runs", "50", "--seed", seed];
    assert_ne!(stdout(&run(&args("1"))), stdout(&run(&args("2"))));
}

#[test]
fn shrunken_bound_fails_verify() {
    let common = ["verify", "--dist", "exp(rate=1)", "--b1", "5", "--alpha", "2", "--paths", "5000", "--runs", "2000"];
    let ok = run(&common);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let mut args = common.to_vec();
    args.extend(["--scale-bound", "1e-9"]);
    let bad = run(&args);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL"));
}

#[test]
fn verify_passes_for_uniform() {
    let o = run(&[
        "verify",
        "--dist",
        "uniform(lo=0,hi=1)",
        "--R",
        "0.9",
        "--paths",
        "5000",
        "--runs",
        "2000",
        "--t-start",
        "0.5",
        "--t-stop",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: PASS"));
}

#[test]
fn config_file_feeds_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# experiment\ndist = uniform(lo=0,hi=1)\nalpha = 1\nR = 0.8\n").unwrap();
    let o = run(&["bound", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("uniform"));
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(run(&["bound", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
