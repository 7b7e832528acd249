use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;
use tempfile::TempDir;

const SQUARE: &str = "\
# square 0-1-2-3 with diagonal 0-2; only 0-1-2 is filled
nodes 4
edge 0 1
edge 1 2
edge 2 3
edge 0 3
edge 0 2
triangle 0 1 2
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topomsd"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

/// Edge values listed in the order of the edge lines above.
fn edge_signal(values: &[f64]) -> String {
    let mut s = String::from("order,index,value\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("1,{i},{v}\n"));
    }
    s
}

fn complete_graph_file(n: usize) -> String {
    let mut s = format!("nodes {n}\n");
    for i in 0..n {
        for j in i + 1..n {
            s.push_str(&format!("edge {i} {j}\n"));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                s.push_str(&format!("triangle {i} {j} {k}\n"));
            }
        }
    }
    s
}

struct Fixture {
    dir: TempDir,
    complex: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let complex = write(dir.path(), "square.txt", SQUARE);
        Self { dir, complex }
    }

    fn file(&self, name: &str, body: &str) -> String {
        write(self.dir.path(), name, body).display().to_string()
    }

    fn complex(&self) -> String {
        self.complex.display().to_string()
    }
}

// Circulation of the filled triangle: +1 on (0,1) and (1,2), −1 on (0,2).
const CURL: [f64; 5] = [1.0, 1.0, 0.0, 0.0, -1.0];
// Gradient of node potential [0, 1, 2, 3].
const GRAD: [f64; 5] = [1.0, 1.0, 1.0, 3.0, 2.0];

#[test]
fn decompose_curl_and_gradient_signals() {
    let fx = Fixture::new();
    for (name, signal, part) in [("curl", CURL, "curl"), ("grad", GRAD, "gradient")] {
        let sig = fx.file(&format!("{name}.csv"), &edge_signal(&signal));
        let out_dir = fx.dir.path().join(name);
        let out = run(&[
            "decompose",
            "--complex",
            &fx.complex(),
            "--signal",
            &sig,
            "--flavor",
            "hodge",
            "--order",
            "1",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        let frac = v["fractions"][part].as_f64().unwrap();
        assert!((frac - 1.0).abs() < 1e-9, "{name}: {v}");
        assert_eq!(v["dims"]["gradient"], 3);
        assert_eq!(v["dims"]["curl"], 1);
        assert_eq!(v["dims"]["harmonic"], 1);
        let emb = fs::read_to_string(out_dir.join("embedding.csv")).unwrap();
        assert!(emb.starts_with("part,index,coefficient\n"));
        assert_eq!(emb.lines().count(), 1 + 5);
        assert!(fs::read_to_string(out_dir.join("values.csv"))
            .unwrap()
            .starts_with("part,index,eigenvalue\n"));
    }
}

#[test]
fn malformed_triangle_names_the_line() {
    let fx = Fixture::new();
    let bad = fx.file("bad.txt", "nodes 3\nedge 0 1\nedge 1 2\ntriangle 0 1\n");
    let sig = fx.file("s.csv", "order,index,value\n");
    let out = run(&["decompose", "--complex", &bad, "--signal", &sig]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn detect_exit_codes_follow_the_decision() {
    let fx = Fixture::new();
    let sig = fx.file("curl.csv", &edge_signal(&CURL));
    let base = [
        "detect",
        "--complex",
        &fx.complex(),
        "--signal",
        &sig,
        "--regime",
        "hodge",
        "--parts",
        "g,h",
        "--sigma2",
        "0.5",
    ];
    let mut args = base.to_vec();
    args.extend(["--gamma", "1.0"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["decision"], "H1");
    // ‖curl‖² = 3, all of it in the complement of g,h.
    assert!((v["statistic"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert_eq!(v["dof"], 1);

    let mut args = base.to_vec();
    args.extend(["--gamma", "100"]);
    assert_eq!(run(&args).status.code(), Some(0));
}

#[test]
fn identity_mask_file_matches_omitted_mask() {
    let fx = Fixture::new();
    let sig = fx.file("grad.csv", &edge_signal(&[1.0, 2.0, -1.0, 0.5, 3.0]));
    let mask = fx.file("mask.csv", "order,index\n1,0\n1,1\n1,2\n1,3\n1,4\n");
    let base = [
        "detect",
        "--complex",
        &fx.complex(),
        "--signal",
        &sig,
        "--regime",
        "missing-over",
        "--flavor",
        "hodge",
        "--parts",
        "g",
        "--sigma2",
        "1",
        "--gamma",
        "2",
    ];
    let plain = run(&base);
    let mut args = base.to_vec();
    args.extend(["--mask", &mask]);
    let masked = run(&args);
    assert_eq!(plain.status.code(), masked.status.code());
    assert_eq!(json(&plain), json(&masked));
}

#[test]
fn target_pfa_threshold_is_echoed() {
    let fx = Fixture::new();
    let complex = fx.file("k25.txt", &complete_graph_file(25));
    let values: Vec<f64> = (0..300).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
    let sig = fx.file("x.csv", &edge_signal(&values));
    let out = run(&[
        "detect",
        "--complex",
        &complex,
        "--signal",
        &sig,
        "--regime",
        "hodge",
        "--parts",
        "g,h",
        "--sigma2",
        "1",
        "--pfa",
        "0.1",
    ]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let v = json(&out);
    assert_eq!(v["dof"], 276);
    assert_eq!(v["target_pfa"], 0.1);
    let gamma = v["threshold"].as_f64().unwrap();
    let p = topomsd::performance::pfa(gamma, 276.0).unwrap();
    assert!((p - 0.1).abs() <= 1e-10, "pfa({gamma}) = {p}");
}

#[test]
fn underdetermined_without_regularizer_is_singular() {
    let fx = Fixture::new();
    let sig = fx.file("curl.csv", &edge_signal(&CURL));
    let mask = fx.file("mask.csv", "order,index\n1,0\n1,3\n");
    let out = run(&[
        "detect",
        "--complex",
        &fx.complex(),
        "--signal",
        &sig,
        "--regime",
        "missing-under",
        "--flavor",
        "hodge",
        "--parts",
        "g",
        "--sigma2",
        "1",
        "--gamma",
        "1",
        "--mask",
        &mask,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("singular"), "{err}");
}

#[test]
fn regularized_underdetermined_runs() {
    let fx = Fixture::new();
    let sig = fx.file("curl.csv", &edge_signal(&CURL));
    let mask = fx.file("mask.csv", "order,index\n1,0\n1,3\n");
    let reg = fx.file(
        "reg.json",
        r#"{"r0": {"scale": 0.1, "rate": 10}, "r1": {"scale": 1, "rate": 10}}"#,
    );
    let out = run(&[
        "detect",
        "--complex",
        &fx.complex(),
        "--signal",
        &sig,
        "--regime",
        "missing-under",
        "--flavor",
        "hodge",
        "--parts",
        "g",
        "--sigma2",
        "1",
        "--gamma",
        "1",
        "--mask",
        &mask,
        "--reg",
        &reg,
    ]);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["regime"], "MissingUnderdet");
    assert_eq!(v["diagnostics"]["observed"], 2);
}

#[test]
fn bench_smoke_is_fast_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("smoke.json");
    let mut csvs = Vec::new();
    for run_id in ["a", "b"] {
        let out_dir = dir.path().join(run_id);
        let start = Instant::now();
        let out = run(&[
            "bench",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(start.elapsed().as_secs_f64() < 5.0);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert!(v["auc"].as_f64().is_some());
        assert_eq!(v["config"]["trials"], 1);
        let stats = fs::read_to_string(out_dir.join("statistics.csv")).unwrap();
        assert!(stats.starts_with("trial,hypothesis,statistic\n"));
        assert_eq!(stats.lines().count(), 3);
        let roc = fs::read_to_string(out_dir.join("roc.csv")).unwrap();
        assert!(roc.starts_with("pfa,pd\n"));
        assert!(out_dir.join("summary.json").exists());
        csvs.push((stats, roc));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn bench_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("smoke.json")).unwrap();
    let bad = text.replacen('{', "{\n  \"trails\": 5,", 1);
    let p = write(dir.path(), "bad.json", &bad);
    let out = run(&["bench", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));
}

#[test]
fn bundled_configs_parse() {
    for name in ["forex_hsd.json", "forex_dsd.json", "smoke.json", "forex_underdet.json"] {
        let text = fs::read_to_string(configs().join(name)).unwrap();
        topomsd::harness::ExperimentConfig::from_json(&text)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
