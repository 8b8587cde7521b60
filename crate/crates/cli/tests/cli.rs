use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vdd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdd"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn node(id: u32, level: u32, p: (f64, f64, f64), c0: &str, c1: &str) -> String {
    format!(
        r#"{{"id": {id}, "level": {level}, "r": {}, "omega": {}, "phi": {}, "child0": {c0}, "child1": {c1}}}"#,
        p.0, p.1, p.2
    )
}

/// Three-qubit accordion graph with distinct parameters on every node.
fn accordion3() -> String {
    let t = "\"terminal\"";
    format!(
        r#"{{"version": 1, "num_qubits": 3, "global_phase": 0.0, "root_child": 1, "nodes": [{}, {}, {}, {}]}}"#,
        node(1, 1, (0.6, 0.3, 0.5), "2", "3"),
        node(2, 2, (0.8, -0.2, 1.1), "4", "4"),
        node(3, 2, (0.7, 0.9, 0.0), "4", "4"),
        node(4, 3, (0.5, 0.4, 1.3), t, t),
    )
}

#[test]
fn eigen_prints_ground_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vdd(
        &["eigen", "--model", "tfim", "--n", "5", "--g", "0"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "-4.0");
    let o = vdd(&["eigen", "--model", "heisenberg", "--n", "2"], tmp.path());
    assert_eq!(stdout(&o).trim(), "-3.0");
}

#[test]
fn amplitude_of_worked_example() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("g.json"), accordion3()).unwrap();
    let o = vdd(
        &["amplitude", "--vdd", "g.json", "--bits", "001"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "modulus 0.41569219\nphase 1.4\n");
}

#[test]
fn amplitude_rejects_wrong_length() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("g.json"), accordion3()).unwrap();
    let o = vdd(
        &["amplitude", "--vdd", "g.json", "--bits", "01"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`bits`"));
}

#[test]
fn validate_reports_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("ok.json"), accordion3()).unwrap();
    let o = vdd(&["validate", "--vdd", "ok.json"], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("valid: 3 qubits, 4 nodes, 12 parameters"));

    let broken = accordion3().replace(r#""level": 3"#, r#""level": 2"#);
    fs::write(tmp.path().join("bad.json"), broken).unwrap();
    let o = vdd(&["validate", "--vdd", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("invalid:"));
}

#[test]
fn heisenberg_training_writes_one_row_per_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "train",
        "--model",
        "heisenberg",
        "--n",
        "10",
        "--epochs",
        "10000",
        "--seed",
        "7",
        "--output-dir",
        "run",
    ];
    let o = vdd(&args, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("run");
    let trace = fs::read_to_string(run.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("epoch,loss,energy,relative_error,grad_norm")
    );
    assert_eq!(lines.count(), 10_000);
    let g = fs::read_to_string(run.join("final_vdd.json")).unwrap();
    let v = Command::new(env!("CARGO_BIN_EXE_vdd"))
        .args(["validate", "--vdd"])
        .arg(run.join("final_vdd.json"))
        .output()
        .unwrap();
    assert!(v.status.success(), "{g}");
    let resolved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("resolved_config.json")).unwrap())
            .unwrap();
    assert_eq!(resolved["seed"], 7);
    assert_eq!(resolved["lr"], 0.01);
    assert_eq!(resolved["optimizer"], "adam");
    assert_eq!(resolved["param_mode"], "trig");
    assert_eq!(resolved["boundary"], "open");
}

#[test]
fn generated_seed_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vdd(
        &["train", "--model", "tfim", "--n", "3", "--epochs", "5"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/resolved_config.json")).unwrap(),
    )
    .unwrap();
    let seed = resolved["seed"].as_u64().expect("seed recorded");
    assert!(stderr(&o).contains(&seed.to_string()));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.json"),
        r#"{"model": "tfim", "n": 3, "g": 0.0, "epochs": 4, "seed": 1, "output_dir": "a"}"#,
    )
    .unwrap();
    let o = vdd(
        &["train", "--config", "run.json", "--epochs", "6"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(tmp.path().join("a/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 7);
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.json"),
        r#"{"model": "tfim", "n": 3, "learning_rate": 1}"#,
    )
    .unwrap();
    let o = vdd(&["train", "--config", "run.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`learning_rate`"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn bad_values_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (
            &[
                "train", "--model", "tfim", "--n", "3", "--lr", "-1", "--seed", "0",
            ],
            "`lr`",
        ),
        (
            &[
                "train",
                "--model",
                "tfim",
                "--n",
                "3",
                "--optimizer",
                "rmsprop",
                "--seed",
                "0",
            ],
            "`optimizer`",
        ),
        (
            &[
                "train", "--model", "tfim", "--n", "3", "--loss", "bce", "--seed", "0",
            ],
            "`dataset`",
        ),
        (
            &["amplitude", "--vdd", "missing.json", "--bits", "0"],
            "`vdd`",
        ),
    ];
    for (args, key) in cases {
        let o = vdd(args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(key), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(vdd(&["frobnicate"], tmp.path()).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vdd(&["eigen", "--model", "tfim", "--n", "16"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    fs::write(
        tmp.path().join("run.json"),
        r#"{"g_values": [], "n": 4, "seed": 0}"#,
    )
    .unwrap();
    let o = vdd(&["g-sweep", "--config", "run.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failed_runs_leave_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("g.json"), accordion3()).unwrap();
    let args = [
        "sample",
        "--vdd",
        "g.json",
        "--model",
        "tfim",
        "--n",
        "4",
        "--seed",
        "1",
        "--output-dir",
        "partial",
    ];
    let o = vdd(&args, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("partial").exists());
}

#[test]
fn sampling_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("g.json"), accordion3()).unwrap();
    let o = vdd(
        &["sample", "--vdd", "g.json", "--count", "20", "--seed", "3"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("out/samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1).unwrap().len() == 3));

    let again = vdd(
        &[
            "sample",
            "--vdd",
            "g.json",
            "--count",
            "20",
            "--seed",
            "3",
            "--output-dir",
            "b",
        ],
        tmp.path(),
    );
    assert!(again.status.success());
    assert_eq!(
        fs::read_to_string(tmp.path().join("b/samples.csv")).unwrap(),
        text
    );

    let o = vdd(
        &[
            "sample",
            "--vdd",
            "g.json",
            "--model",
            "z1z2",
            "--count",
            "50",
            "--seed",
            "3",
            "--output-dir",
            "m",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("energy "));
    let batch = fs::read_to_string(tmp.path().join("m/batch.csv")).unwrap();
    assert!(batch.starts_with("sample_index,bitstring,local_value_re,local_value_im\n"));
    assert_eq!(batch.lines().count(), 51);
}

#[test]
fn statevector_is_normalized() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("g.json"), accordion3()).unwrap();
    let o = vdd(&["statevector", "--vdd", "g.json"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("out/statevector.csv")).unwrap();
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    let row = text.lines().nth(2).unwrap();
    assert!(row.starts_with("1,001,"));
}

#[test]
fn build_then_train_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vdd(&["build", "--n", "4", "--seed", "5"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = vdd(
        &[
            "train",
            "--vdd",
            "out/vdd.json",
            "--model",
            "z1z2",
            "--n",
            "4",
            "--epochs",
            "3",
            "--seed",
            "0",
            "--output-dir",
            "t",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(tmp.path().join("t/trace.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
}

#[test]
fn dataset_training() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("d.csv"),
        "bitstring,label\n000,1\n111,1\n010,0\n",
    )
    .unwrap();
    let o = vdd(
        &[
            "train",
            "--model",
            "z1z2",
            "--n",
            "3",
            "--loss",
            "bce",
            "--dataset",
            "d.csv",
            "--epochs",
            "20",
            "--seed",
            "2",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(tmp.path().join("out/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 21);
}

#[test]
fn variance_scan_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "variance-scan",
        "--model",
        "tfim",
        "--g",
        "1",
        "--n-values",
        "2,3,4",
        "--num-seeds",
        "8",
        "--tracked-params",
        "r1,omega5,phi-1",
        "--base-seed",
        "4",
    ];
    let o = vdd(&args, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(tmp.path().join("out/variance.csv")).unwrap();
    assert!(rows.starts_with("model,g,n,param,variance,num_seeds\n"));
    assert!(stderr(&o).contains("omega5"));
    let fits = fs::read_to_string(tmp.path().join("out/fits.csv")).unwrap();
    assert!(fits.starts_with("model,g,param,slope,intercept,r2\n"));
    assert!(fits.lines().any(|l| l.contains(",r1,")));

    let again = vdd(&[&args[..], &["--output-dir", "b"]].concat(), tmp.path());
    assert!(again.status.success());
    assert_eq!(
        fs::read_to_string(tmp.path().join("b/variance.csv")).unwrap(),
        rows
    );
}

#[test]
fn g_sweep_writes_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vdd(
        &[
            "g-sweep",
            "--g-values",
            "0,2",
            "--n",
            "4",
            "--epochs",
            "30",
            "--seed",
            "0",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("out/sweep.csv")).unwrap();
    assert!(text.starts_with("g,final_energy,e0,relative_error"));
    assert_eq!(text.lines().count(), 3);
}

fn polyline_ys(svg: &str) -> Vec<f64> {
    let start = svg.find("<polyline points=\"").unwrap() + "<polyline points=\"".len();
    let end = start + svg[start..].find('"').unwrap();
    svg[start..end]
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn plot_of_converging_run_trends_down() {
    let tmp = tempfile::tempdir().unwrap();
    let o = vdd(
        &[
            "train", "--model", "tfim", "--n", "6", "--g", "0", "--epochs", "2000", "--seed", "0",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let args = [
        "plot",
        "--csv",
        "out/trace.csv",
        "--x",
        "epoch",
        "--y",
        "relative_error",
        "--log-y",
    ];
    let o = vdd(&args, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(tmp.path().join("out/relative_error.svg")).unwrap();
    let ys = polyline_ys(&svg);
    let q = ys.len() / 4;
    let early = ys[..q].iter().sum::<f64>() / q as f64;
    let late = ys[ys.len() - q..].iter().sum::<f64>() / q as f64;
    assert!(late > early + 100.0, "early {early}, late {late}");

    vdd(&[&args[..], &["--out", "again.svg"]].concat(), tmp.path());
    assert_eq!(
        fs::read_to_string(tmp.path().join("again.svg")).unwrap(),
        svg
    );
}

#[test]
fn plot_input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("empty.csv"), "").unwrap();
    fs::write(tmp.path().join("text.csv"), "epoch,loss\n1,high\n").unwrap();
    for (file, y) in [
        ("empty.csv", "loss"),
        ("text.csv", "loss"),
        ("text.csv", "energy"),
    ] {
        let o = vdd(
            &["plot", "--csv", file, "--x", "epoch", "--y", y],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(2), "{file} {y}");
    }
    assert!(!tmp.path().join("out").exists());
}
