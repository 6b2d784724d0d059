use std::process::{Command, Output};

fn hcgas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcgas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn hcgas_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcgas"))
        .env("HCGAS_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).expect("valid json")
}

#[test]
fn ground_values() {
    let o = hcgas(&["ground", "--n", "9", "--d", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["L"], "74");
    assert_eq!(v["b"], "469762048");
    assert_eq!(v["h"], 2);
    let v = json(&hcgas(&["ground", "--n", "1", "--d", "3", "--json"]));
    assert_eq!((v["L"].as_str(), v["b"].as_str(), v["h"].as_u64()), (Some("0"), Some("1"), Some(0)));
    assert_eq!(hcgas(&["ground", "--n", "9", "--d", "2"]).status.code(), Some(2));
    assert_eq!(hcgas(&["ground", "--d", "3"]).status.code(), Some(2));
}

#[test]
fn logz_values() {
    for args in [&["logz", "--n", "1", "--json"][..], &["logz", "--n", "7", "--beta", "0", "--json"]] {
        let o = hcgas(args);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(json(&o)["log_z"].as_f64(), Some(0.0));
    }
    let o = hcgas(&["logz", "--n", "9", "--beta", "1", "--d", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(v["lower_slack"].as_f64().unwrap() >= 0.0);
    assert!(v["upper_slack"].as_f64().unwrap() >= 0.0);
    // text and json agree to the last bit
    let text = stdout(&hcgas(&["logz", "--n", "9", "--beta", "1", "--d", "3"]));
    let line = text.lines().find(|l| l.starts_with("log_z = ")).unwrap();
    let from_text: f64 = line["log_z = ".len()..].parse().unwrap();
    assert_eq!(from_text.to_bits(), v["log_z"].as_f64().unwrap().to_bits());
    assert_eq!(hcgas(&["logz", "--n", "4", "--beta", "-1"]).status.code(), Some(2));
}

#[test]
fn logz_cache() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    let p = path.to_str().unwrap();
    let args = ["logz", "--n", "40", "--beta", "0.5", "--depth-pad", "4", "--cache", p];
    let first = hcgas(&args);
    assert!(path.exists());
    let second = hcgas(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));
    let mismatch = hcgas(&["logz", "--n", "41", "--beta", "0.5", "--depth-pad", "4", "--cache", p]);
    assert_ne!(mismatch.status.code(), Some(0));
}

#[test]
fn samples_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |threads: &str, dir: &std::path::Path| {
        let o = hcgas_threads(
            threads,
            &["sample", "--n", "50", "--reps", "3", "--seed", "7", "--out", dir.to_str().unwrap()],
        );
        assert_eq!(o.status.code(), Some(0));
    };
    run("1", a.path());
    run("4", b.path());
    for i in 0..3 {
        let f = format!("sample_{i}.csv");
        let x = std::fs::read(a.path().join(&f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(&f)).unwrap());
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("# seed=7,stream="));
        assert_eq!(hcgas::PointConfiguration::from_csv(&text).unwrap().len(), 50);
    }
}

#[test]
fn sample_self_checks() {
    for check in ["multinomial", "ground", "roundtrip"] {
        let o = hcgas(&["sample", "--n", "4", "--reps", "50", "--verify", check]);
        assert_eq!(o.status.code(), Some(0), "{check}: {}", stdout(&o));
    }
}

#[test]
fn experiment_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("base");
    let args = [
        "experiment", "--suite", "baseline", "--ns", "16,32,64,128,256", "--reps", "400", "--out",
        prefix.to_str().unwrap(),
    ];
    assert_eq!(hcgas_threads("2", &args).status.code(), Some(0));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv.starts_with("n,beta,d,stat,reps,mean,variance,var_se,seed\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    for fit in summary["fits"].as_array().unwrap() {
        assert!((fit["slope"].as_f64().unwrap() - 1.0).abs() < 0.15, "{fit}");
    }
    let first = std::fs::read(prefix.with_extension("json")).unwrap();
    assert_eq!(hcgas_threads("1", &args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(prefix.with_extension("json")).unwrap());
}

#[test]
fn verify_usage_and_pass() {
    assert_eq!(hcgas(&["verify"]).status.code(), Some(2));
    assert_eq!(hcgas(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
    let o = hcgas(&["verify", "--suite", "numtheory"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}
