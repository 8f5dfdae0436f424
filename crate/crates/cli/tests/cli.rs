use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mhc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhc")).args(args).output().expect("run mhc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn codegen_prints_code_json() {
    let o = mhc(&["codegen", "--profile", "D64", "--self-test"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 24);
    assert_eq!(v["k"], 8);
}

#[test]
fn encode_writes_circuit_and_census() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhc(&["encode", "--profile", "D44", "--variant", "proposed", "--out-dir", path(dir.path()), "--self-test"]);
    assert!(o.status.success(), "{o:?}");
    let circuit = fs::read_to_string(dir.path().join("D44_proposed.circuit")).unwrap();
    assert!(circuit.starts_with("QUBITS 24"));
    let census: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("D44_proposed.census.json")).unwrap()).unwrap();
    assert_eq!(census["total"], 24);
}

#[test]
fn memory_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mem.csv");
    let o = mhc(&[
        "simulate-memory",
        "--profiles",
        "D4,D44",
        "--noise",
        "bitflip",
        "--p",
        "0.05,0.1",
        "--shots",
        "2000",
        "--seed",
        "5",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    let mut r = csv::Reader::from_path(&out).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    for col in ["profile", "variant", "p", "shots", "failures", "p_hat", "ci_lo", "ci_hi"] {
        assert!(headers.iter().any(|h| h == col), "missing {col} in {headers:?}");
    }
    assert_eq!(r.records().count(), 4);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("mem.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["shots"], 2000);
    assert!(m["versions"]["mhc"].is_string());
}

#[test]
fn memory_is_reproducible_from_the_seed() {
    let run = || {
        stdout(&mhc(&[
            "simulate-memory",
            "--profiles",
            "D44",
            "--noise",
            "depolarizing",
            "--p",
            "0.05",
            "--shots",
            "3000",
            "--seed",
            "9",
        ]))
    };
    assert_eq!(run(), run());
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "profiles = [\"D4\"]\nnoise = \"bitflip\"\np = [0.1]\nshots = 500\nseed = 1\n").unwrap();
    let o = mhc(&["--config", path(&cfg), "simulate-memory", "--shots", "700"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().contains(",700,"), "{text}");
    fs::write(&cfg, "shot = 3\n").unwrap();
    assert_eq!(mhc(&["--config", path(&cfg), "simulate-memory"]).status.code(), Some(1));
}

#[test]
fn self_test_violation_exits_with_two() {
    // Too few shots to separate the level-2 ordering.
    let o = mhc(&[
        "simulate-memory",
        "--profiles",
        "D44,D64,D46,D66",
        "--noise",
        "bitflip",
        "--p",
        "0.01",
        "--shots",
        "200",
        "--seed",
        "1",
        "--self-test",
    ]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("violation"));
}

#[test]
fn memory_rejects_circuit_noise() {
    let o = mhc(&["simulate-memory", "--profiles", "D4", "--noise", "circuit", "--p", "0.01", "--shots", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

fn write_rates(path: &Path, points: &[f64]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["profile", "variant", "p", "failures", "p_hat"]).unwrap();
    for &p in points {
        let rate = 3.0 * p.powi(4);
        w.write_record(["D44", "", &p.to_string(), "1000", &rate.to_string()]).unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn fit_recovers_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rates.csv");
    write_rates(&input, &[0.01, 0.02, 0.03, 0.04]);
    let o = mhc(&["fit", "--input", path(&input), "--rate", "p_hat", "--extrapolate", "0.001"]);
    assert!(o.status.success(), "{o:?}");
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let h = r.headers().unwrap().clone();
    let rec = r.records().next().unwrap().unwrap();
    let get = |name: &str| rec[h.iter().position(|x| x == name).unwrap()].parse::<f64>().unwrap();
    assert!((get("alpha") - 4.0).abs() < 1e-9);
    assert!((get("beta") - 3.0).abs() < 1e-9);
    assert!((get("extrapolated_rate") - 3e-12).abs() < 1e-20);
}

#[test]
fn fit_rejects_a_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rates.csv");
    write_rates(&input, &[0.01]);
    assert_eq!(mhc(&["fit", "--input", path(&input)]).status.code(), Some(1));
}

#[test]
fn decode_lines_with_both_decoders() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("readouts.txt");
    let mut one = vec!['0'; 16];
    one[5] = '1';
    let one: String = one.into_iter().collect();
    fs::write(&input, format!("{}\n{one}\n", "0".repeat(16))).unwrap();
    for extra in [&[][..], &["--oracle"][..]] {
        let mut args = vec!["decode", "--profile", "D44", "--input", path(&input), "--self-test"];
        args.extend_from_slice(extra);
        let o = mhc(&args);
        assert!(o.status.success(), "{o:?}");
        assert_eq!(stdout(&o), "0000\n0000\n");
    }
    assert_eq!(mhc(&["decode", "--profile", "D666", "--input", path(&input), "--oracle"]).status.code(), Some(1));
}
