use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nldp")).args(args).output().unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Ingests the Covertype-shaped fixture into `dir`.
fn ingest(dir: &Path) -> (PathBuf, PathBuf) {
    let (train, test) = (dir.join("train.csv"), dir.join("test.csv"));
    let out = nldp(&[
        "ingest",
        "--spec",
        s(&data("covertype_like/ingest.toml")),
        "--out-train",
        s(&train),
        "--out-test",
        s(&test),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    (train, test)
}

#[test]
fn ingest_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ta, sa) = ingest(a.path());
    let (tb, sb) = ingest(b.path());
    assert_eq!(std::fs::read(&ta).unwrap(), std::fs::read(tb).unwrap());
    assert_eq!(std::fs::read(&sa).unwrap(), std::fs::read(sb).unwrap());
    let header = std::fs::read_to_string(&ta).unwrap();
    assert!(header.lines().next().unwrap().ends_with(",y"));
}

#[test]
fn estimate_prints_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = ingest(dir.path());
    let out = nldp(&[
        "estimate", "--mode", "glm", "--link", "logistic", "--epsilon", "inf", "--private", s(&train), "--public",
        s(&test),
    ]);
    // The fixture is small; calibration may legitimately find no root.
    let stdout = String::from_utf8_lossy(&out.stdout);
    let record: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(record["mode"], "glm");
    assert_eq!(record["epsilon"], "inf");
    assert!(record["delta"].is_null());
    match out.status.code() {
        Some(0) => {
            assert_eq!(record["w_final"].as_array().unwrap().len(), record["p"].as_u64().unwrap() as usize);
            assert!(record["calib_residual"].as_f64().unwrap().abs() <= 1e-10);
        }
        Some(1) => assert!(record["error"]["stage"].is_string()),
        other => panic!("exit {other:?}"),
    }

    let out = nldp(&[
        "estimate", "--mode", "glm", "--link", "logistic", "--epsilon", "5", "--delta", "0.001", "--private",
        s(&train), "--public", s(&test), "--augment",
    ]);
    let record: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(record["delta"], 0.001);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
}

#[test]
fn estimate_on_synthetic_files_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = nldp_core::synth::SynthSpec {
        design: nldp_core::synth::Design::Bernoulli,
        p: 4,
        w_star: nldp_core::synth::SynthSpec::uniform_w_star(4),
        label_model: nldp_core::synth::LabelModel::Logistic,
        n_private: 20_000,
        m_public: 20_000,
        seed: 5,
    };
    let (private, public) = nldp_core::synth::synthesize(&spec);
    let names: Vec<String> = (0..4).map(|j| format!("x{j}")).collect();
    let (pp, qp) = (dir.path().join("private.csv"), dir.path().join("public.csv"));
    nldp::ingest::write_dataset(&pp, &names, &private).unwrap();
    nldp::ingest::write_dataset(&qp, &names, &public).unwrap();
    let out = nldp(&["estimate", "--mode", "glm", "--link", "logistic", "--epsilon", "inf", "--private", s(&pp), "--public", s(&qp)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let record: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(record["n"], 20_000);
    assert_eq!(record["calib_method"], "newton");
}

#[test]
fn sweep_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "mode = \"glm\"\nlink = \"logistic\"\ndesign = \"bernoulli\"\nepsilon = [\"inf\"]\nn = [2000]\np = [5]\ntrials = 2\nmetrics = [\"rel_inf\"]\n",
    )
    .unwrap();
    let out_csv = dir.path().join("out.csv");
    let out = nldp(&["sweep", "--config", s(&cfg), "--out", s(&out_csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cells=1 trials=2"));
    assert_eq!(std::fs::read_to_string(&out_csv).unwrap().lines().count(), 3);
    assert_eq!(std::fs::read_to_string(dir.path().join("out.csv.agg.csv")).unwrap().lines().count(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Unreadable config: I/O error.
    let missing = dir.path().join("missing.toml");
    assert_eq!(nldp(&["sweep", "--config", s(&missing), "--out", "x.csv"]).status.code(), Some(3));
    // Malformed config: config error.
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "mode = \"glm\"\nlink = \"logistic\"\n").unwrap();
    assert_eq!(nldp(&["sweep", "--config", s(&bad), "--out", "x.csv"]).status.code(), Some(2));
    // Unwritable output: I/O error.
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "mode = \"glm\"\nlink = \"logistic\"\ndesign = \"bernoulli\"\nepsilon = \"inf\"\nn = 100\np = 2\ntrials = 1\n").unwrap();
    let nowhere = dir.path().join("no/such/dir/out.csv");
    assert_eq!(nldp(&["sweep", "--config", s(&good), "--out", s(&nowhere)]).status.code(), Some(3));
    // Bad arguments.
    assert_eq!(nldp(&["estimate", "--mode", "glm"]).status.code(), Some(2));
    assert_eq!(
        nldp(&["estimate", "--mode", "glm", "--link", "logistic", "--epsilon", "-3", "--private", "a", "--public", "b"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nldp(&["estimate", "--mode", "glm", "--link", "nope", "--epsilon", "1", "--private", "a", "--public", "b"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nldp(&["estimate", "--mode", "glm", "--link", "logistic", "--epsilon", "1", "--private", "a", "--public", "b"])
            .status
            .code(),
        Some(3)
    );
    // Parse error in a data file.
    let spec = dir.path().join("ingest.toml");
    std::fs::write(
        &spec,
        format!("path = {:?}\nlabel_column = \"label\"\npositive_class = \"1\"\n", data("bad_cell/bad_cell.csv")),
    )
    .unwrap();
    let out = nldp(&["ingest", "--spec", s(&spec), "--out-train", "a.csv", "--out-test", "b.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2, column b"));
}

#[test]
fn verify_constants_reports_each_check() {
    let out = nldp(&["verify-constants", "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 6);
    assert!(stdout.lines().all(|l| l.starts_with("PASS") && l.contains("se ")));
}
