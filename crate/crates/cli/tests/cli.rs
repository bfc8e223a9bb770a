use std::process::{Command, Output};

fn dirac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirac")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json report")
}

#[test]
fn kernel_scan_reports_radius() {
    let o = dirac(&["kernel-scan", "--group", "SU2", "--label", "1"]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["payload"]["supports"][0]["radius"], 3.0);
    assert_eq!(r["payload"]["supports"][0]["kernel_dim"], 2);
}

#[test]
fn verlinde_level_zero_has_one_class() {
    let r = json(&dirac(&["verlinde", "--k", "0"]));
    assert_eq!(r["payload"]["classes"].as_array().unwrap().len(), 1);
    assert_eq!(r["payload"]["classes"][0]["a0"], "-1/4");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dirac(&["verlinde", "--k", "-1"]).status.code(), Some(2));
    assert_eq!(dirac(&["kernel-scan", "--group", "SU2", "--label", "1", "--grid", "0:1:0"]).status.code(), Some(2));
    assert_eq!(dirac(&["irrep", "--group", "SO3", "--label", "1/2"]).status.code(), Some(2));
    assert_eq!(dirac(&["irrep", "--group", "E8", "--label", "0"]).status.code(), Some(2));
    assert_eq!(dirac(&["check", "--suite", "12"]).status.code(), Some(2));
    assert_eq!(dirac(&["nonsense"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_dirac"))
        .args(["verlinde", "--k", "1"])
        .env("DIRACFAM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let a = dirac(&["kernel-scan", "--group", "SO3", "--label", "1"]);
    let b = dirac(&["kernel-scan", "--group", "SO3", "--label", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let c = dirac(&["check", "--suite", "1,2,5,9,10", "--seed", "3"]);
    let d = dirac(&["check", "--suite", "1,2,5,9,10", "--seed", "3"]);
    assert!(c.status.success());
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn flags_override_config_and_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "group = \"SU2\"\nlabel = \"1/2\"\ngrid = \"0:3:0.01\"\n").unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("scan.csv");
    let o = dirac(&[
        "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "kernel-scan", "--label", "3/2", "--grid", "0:5:0.01", "--csv", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["payload"]["supports"][0]["radius"], 4.0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("parameter,sigma_min,kernel_dim\n"));
    let kdim = r["payload"]["supports"][0]["kernel_dim"].as_u64().unwrap();
    assert!(text.lines().any(|l| l.ends_with(&format!(",{kdim}"))));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "colour = 3\n").unwrap();
    assert_eq!(dirac(&["--config", bad.to_str().unwrap(), "verlinde", "--k", "1"]).status.code(), Some(2));
}

#[test]
fn gamma_and_loop_commands() {
    let r = json(&dirac(&["gamma", "--dim", "1"]));
    assert_eq!(r["payload"]["gammas"][0][0][1], serde_json::json!([0.0, 1.0]));
    let o = dirac(&["loop-spectrum", "--group", "SU2", "--k", "1", "--label", "0", "--cutoff", "1", "--points", "100"]);
    assert!(o.status.success());
    let r = json(&o);
    assert_eq!(r["payload"]["supports"][0]["kappa_value"], -1.0);
    let r = json(&dirac(&["phi-map", "--k", "3"]));
    assert_eq!(r["payload"]["rank"], 4);
}
