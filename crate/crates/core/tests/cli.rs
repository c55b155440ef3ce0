use std::path::Path;
use std::process::{Command, Output};

fn mwde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwde"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn filters_list_includes_every_family() {
    let out = mwde(&["filters", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["haar", "db10", "sym7", "coif5", "dghm", "cl2", "cl3", "stt"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{name},"))),
            "{name} missing"
        );
    }
}

#[test]
fn densities_list() {
    let out = mwde(&["densities", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("double-claw,"));
}

#[test]
fn cascade_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dghm.csv");
    let status = mwde(&[
        "cascade",
        "--filter",
        "dghm",
        "--depth",
        "6",
        "--out",
        path(&out),
    ]);
    assert!(status.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,phi_1,phi_2,psi_1,psi_2");
    assert_eq!(text.lines().count(), 1 + 2 * 64 + 1);
}

#[test]
fn estimate_from_density_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.csv");
    let status = mwde(&[
        "estimate",
        "--filter",
        "dghm",
        "--level",
        "1",
        "--density",
        "bimodal",
        "--n",
        "2000",
        "--seed",
        "4",
        "--domain",
        "-4:4",
        "--grid",
        "257",
        "--normalize",
        "--out",
        path(&out),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 258);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("est.csv.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["coefficient_count"], 2 * (16 + 2 + 1));
    assert_eq!(sidecar["translates"], serde_json::json!([-10, 8]));
    let mass = sidecar["normalization"]["mass"].as_f64().unwrap();
    assert!((mass - 1.0).abs() <= 1e-6);
    assert_eq!(sidecar["coefficients"].as_array().unwrap().len(), 19);
}

#[test]
fn estimate_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("x.txt");
    std::fs::write(&samples, "0.1\n0.25\n\n-0.4\n0.9\n").unwrap();
    let out = dir.path().join("est.csv");
    let status = mwde(&[
        "estimate",
        "--filter",
        "db3",
        "--level",
        "0",
        "--samples",
        path(&samples),
        "--domain",
        "-1:1",
        "--grid",
        "65",
        "--out",
        path(&out),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("est.csv.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["sample_size"], 4);
    assert!(sidecar.get("normalization").is_none());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"densities":["normal"],"families":["db2"],"resolutions":[2,1]}"#,
    )
    .unwrap();
    let out = mwde(&["benchmark", "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(1));

    let out = mwde(&[
        "cascade",
        "--filter",
        "nope",
        "--out",
        path(&dir.path().join("t.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let samples = dir.path().join("x.txt");
    std::fs::write(&samples, "0.5\n7.0\n").unwrap();
    let out = mwde(&[
        "estimate",
        "--filter",
        "db2",
        "--level",
        "0",
        "--samples",
        path(&samples),
        "--out",
        path(&dir.path().join("e.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('7'));
}

#[test]
fn numerical_failure_exits_with_two() {
    // Orthogonal with unit sum, but its cascade diverges.
    let dir = tempfile::tempdir().unwrap();
    let filters = dir.path().join("filters");
    std::fs::create_dir(&filters).unwrap();
    let (s, c) = 2.1f64.sin_cos();
    let r = 2.0 * std::f64::consts::SQRT_2;
    let taps = [
        (1.0 - c + s) / r,
        (1.0 + c + s) / r,
        (1.0 + c - s) / r,
        (1.0 - c - s) / r,
    ]
    .map(|v| format!("[[{v:?}]]"))
    .join(",");
    std::fs::write(
        filters.join("divergent.json"),
        format!(r#"{{"name":"divergent","multiplicity":1,"support":[0,3],"lowpass":[{taps}]}}"#),
    )
    .unwrap();
    let out = mwde(&[
        "--filter-dir",
        path(&filters),
        "cascade",
        "--filter",
        "divergent",
        "--out",
        path(&dir.path().join("t.csv")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"densities":["normal"],"families":["divergent","db2"],"resolutions":[0,0],"sample_size":200}"#,
    )
    .unwrap();
    let results = dir.path().join("r.csv");
    let out = mwde(&[
        "--filter-dir",
        path(&filters),
        "benchmark",
        "--config",
        path(&config),
        "--out",
        path(&results),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(results).unwrap();
    assert!(text
        .lines()
        .any(|l| l.contains("divergent") && l.contains("error")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("normal,db2,") && l.ends_with(",ok")));
}

#[test]
fn estimate_from_mixture_file() {
    let dir = tempfile::tempdir().unwrap();
    let mixture = dir.path().join("m.json");
    std::fs::write(
        &mixture,
        r#"{"weights":[0.3,0.7],"means":[-1,1],"stddevs":[0.4,0.6],"domain":[-3,3]}"#,
    )
    .unwrap();
    let out = dir.path().join("est.csv");
    let status = mwde(&[
        "estimate",
        "--filter",
        "stt",
        "--level",
        "1",
        "--density",
        path(&mixture),
        "--n",
        "500",
        "--domain",
        "-3:3",
        "--grid",
        "129",
        "--normalize",
        "--out",
        path(&out),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,p_hat");
    assert!(lines.all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 0.0));

    std::fs::write(
        &mixture,
        r#"{"weights":[0.3,0.6],"means":[-1,1],"stddevs":[0.4,0.6]}"#,
    )
    .unwrap();
    let status = mwde(&[
        "estimate",
        "--filter",
        "stt",
        "--level",
        "1",
        "--density",
        path(&mixture),
        "--out",
        path(&out),
    ]);
    assert_eq!(status.status.code(), Some(1));
}
