use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn acnn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acnn")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = acnn(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &[&str] = &["--n-train", "1200", "--n-test", "600"];

fn small_pipeline(dir: &Path) {
    ok(dir, &[&["gen-dataset"], SMALL].concat());
    ok(dir, &["train", "--epochs", "40"]);
    ok(dir, &["quantize"]);
    ok(dir, &["map"]);
}

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_pipeline(d);
    let q = json(&d.join("quantize.json"));
    assert!(q["deployed_accuracy"].as_f64().unwrap() > 0.9, "{q}");

    let s = ok(d, &["infer", "--noiseless"]);
    assert!(s.contains("Matching 100.00%"), "{s}");

    ok(d, &["montecarlo", "--iterations", "5", "--chip-seeds", "1,2,3"]);
    let mc = json(&d.join("montecarlo.json"));
    assert!(mc["deviation"].as_f64().unwrap() <= 0.03, "{}", mc["deviation"]);
    assert_eq!(mc["summary"]["chips"], 3);

    ok(d, &["--svg", "energy", "--ops", "40", "--trials", "5"]);
    let e = json(&d.join("energy.json"));
    for s in e["samples"].as_array().unwrap() {
        let v: Vec<f64> = s["v_peak"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(v.len(), 40);
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }
    assert!(fs::read_to_string(d.join("vmax_decay.svg")).unwrap().starts_with("<svg"));

    let r = ok(d, &["report"]);
    assert!(r.contains("monte carlo: hardware"), "{r}");
    for m in ["gen_dataset", "train", "quantize", "map", "infer", "montecarlo", "energy", "report"] {
        let man = json(&d.join(format!("manifest_{m}.json")));
        assert_eq!(man["tool"], "acnn");
        assert!(man["config"]["train"]["epochs"].is_u64());
    }
}

#[test]
fn report_prints_reference_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let s = ok(tmp.path(), &["report"]);
    assert!(s.contains("average CCNN/ACNN ratio (without PCG) at 30 ops: 2.73"), "{s}");
    assert!(s.contains("| UP | 30 | 12.86 |"), "{s}");
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        small_pipeline(d);
        ok(d, &["infer"]);
        ok(d, &["transient", "--kind", "pcg", "--cycles", "2"]);
    }
    for f in [
        "dataset.txt",
        "net_float.json",
        "net.json",
        "chip.json",
        "chip_ideal.json",
        "cap_errors.csv",
        "infer.csv",
        "waveform.csv",
    ] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn flags_beat_config_file_beats_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = d.join("run.toml");
    fs::write(&cfg, "seed = 5\n[dataset]\nn_train = 800\nn_test = 300\n").unwrap();
    ok(d, &["--config", cfg.to_str().unwrap(), "gen-dataset", "--n-test", "200"]);
    let m = json(&d.join("manifest_gen_dataset.json"));
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["dataset"]["n_train"], 800);
    assert_eq!(m["config"]["dataset"]["n_test"], 200);
    assert_eq!(m["config"]["map"]["unit_cap"], 2.0);
    let text = fs::read_to_string(d.join("dataset.txt")).unwrap();
    assert!(text.contains("# seed 5") && text.contains("# test 200"), "{}", &text[..200]);
}

#[test]
fn transient_demos_match_closed_forms() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for (kind, tol) in [("step", 0.01), ("cycle", 0.01), ("ramp", 0.1)] {
        ok(d, &["transient", "--kind", kind]);
        let t = json(&d.join("transient.json"));
        let ratio = t["dissipated_j"].as_f64().unwrap() / t["analytic_j"].as_f64().unwrap();
        assert!((ratio - 1.0).abs() < tol, "{kind}: {ratio}");
    }
    ok(d, &["transient", "--kind", "pcg"]);
    let t = json(&d.join("transient.json"));
    let (f, m) = (t["resonant_hz"].as_f64().unwrap(), t["measured_resonant_hz"].as_f64().unwrap());
    assert!((f - m).abs() / f < 0.005);
    assert_eq!(t["pcg_cycles"].as_array().unwrap().len(), 3);
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn exit_codes_partition_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let o = acnn(d, &["train"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dataset.txt") && err.contains("expected dataset file"), "{err}");

    fs::write(d.join("net.json"), "{\"format\": \"acnn-net\", \"version\": 99}").unwrap();
    let o = acnn(d, &["map"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("net.json"));

    let cfg = d.join("bad.toml");
    fs::write(&cfg, "[train]\nepochz = 3\n").unwrap();
    let o = acnn(d, &["--config", cfg.to_str().unwrap(), "gen-dataset"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("train.epochz"));

    assert_eq!(code(&acnn(d, &["gen-dataset", "--n-train", "lots"])), 1);
    assert_eq!(code(&acnn(d, &["montecarlo", "--iterations", "0"])), 1);
    assert_eq!(code(&acnn(d, &["gen-dataset", "--n-train", "0"])), 1);

    let o = acnn(d, &["transient", "--kind", "step", "--dt", "1e-9"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(code(&acnn(d, &["--help"])), 0);
}

#[test]
fn mismatched_chip_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_pipeline(d);
    let other = tempfile::tempdir().unwrap();
    ok(other.path(), &[&["gen-dataset"], SMALL].concat());
    ok(other.path(), &["train", "--epochs", "2", "--hidden", "5"]);
    ok(other.path(), &["quantize"]);
    ok(other.path(), &["map"]);
    let chip = other.path().join("chip.json");
    let o = acnn(d, &["infer", "--chip", chip.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("shape"));
}
