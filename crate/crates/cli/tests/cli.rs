use std::path::Path;
use std::process::{Command, Output};

fn chainvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainvar")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SINGLE: &str = r#"{
  "variables": [{"name": "x", "cardinality": 2}],
  "factors": [{"scope": ["x"], "values": [0.25, 0.75], "kind": "cpt", "child": "x"}],
  "evidence": {}
}"#;

#[test]
fn version_reports_model_format() {
    let o = chainvar(&["--version"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("chainvar 0."), "{text}");
    assert!(text.contains("model format 1"));
}

#[test]
fn exact_on_single_variable() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("single.json");
    std::fs::write(&m, SINGLE).unwrap();
    let o = chainvar(&["exact", "--model", s(&m)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "log_evidence\t0.0000000000000000e0\n");

    let o = chainvar(&["exact", "--model", s(&m), "--evidence", "x=1", "--marginal", "x"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    let v: f64 = first.split('\t').nth(1).unwrap().parse().unwrap();
    assert_eq!(v, 0.75f64.ln());
    assert_eq!(first.split('\t').nth(1).unwrap().split('e').next().unwrap().len(), 19);
    assert_eq!(text.lines().nth(1), Some("x\tobserved\t1"));
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("single.json");
    std::fs::write(&m, SINGLE).unwrap();

    let o = chainvar(&["fit", "--model", s(&m), "--method", "bn", "--mixture", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mixture"));
    assert_eq!(chainvar(&["exact", "--model", s(&m), "--bogus"]).status.code(), Some(1));
    assert_eq!(chainvar(&["nope"]).status.code(), Some(1));
    assert_eq!(chainvar(&["benchmark", "--slices", "5..2", "--out", "x.csv"]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, SINGLE.replace("0.75", "0.5")).unwrap();
    let o = chainvar(&["exact", "--model", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
    assert_eq!(chainvar(&["exact", "--model", s(&m), "--evidence", "x=7"]).status.code(), Some(2));
    assert_eq!(chainvar(&["exact", "--model", s(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_methods_write_results() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    assert!(chainvar(&["generate", "--slices", "2", "--vars", "3", "--seed", "9", "--out", s(&m)]).status.success());
    let q = dir.path().join("q.json");
    std::fs::write(
        &q,
        r#"{"families": [{"child": "X2_1", "parents": ["X1_1"]}], "potentials": [["X1_2", "X2_2"]]}"#,
    )
    .unwrap();
    for (method, extra) in [("bn", vec![]), ("cg", vec!["--q-structure", s(&q)]), ("hidden", vec!["--mixture", "2"])] {
        let out = dir.path().join(format!("{method}.json"));
        let mut args = vec!["fit", "--model", s(&m), "--method", method, "--restarts", "2", "--out", s(&out)];
        args.extend(extra);
        let o = chainvar(&args);
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        let r = json(&out);
        let bound = r["bound"].as_f64().unwrap();
        assert!(bound <= r["log_evidence"].as_f64().unwrap() + 1e-9);
        assert!(!r["trace"].as_array().unwrap().is_empty());
        if method == "cg" {
            assert_eq!(r["potentials"].as_array().unwrap().len(), 1);
            assert!(r["log_zq"].is_number());
        }
        let man = json(&dir.path().join(format!("{method}.json.manifest.json")));
        assert_eq!(man["command"]["subcommand"], "fit");
        assert_eq!(man["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
        // replaying the manifest's argv reproduces the file byte for byte
        let first = std::fs::read(&out).unwrap();
        let argv: Vec<String> =
            man["argv"].as_array().unwrap().iter().map(|a| a.as_str().unwrap().to_string()).collect();
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert!(chainvar(&argv).status.success());
        assert_eq!(std::fs::read(&out).unwrap(), first);
    }
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    assert!(chainvar(&["generate", "--slices", "3", "--vars", "3", "--seed", "1", "--out", s(&m)]).status.success());
    assert!(dir.path().join("m.json.manifest.json").exists());
    let f = dir.path().join("fit.json");
    assert!(chainvar(&["fit", "--model", s(&m), "--method", "hidden", "--mixture", "4", "--out", s(&f)]).status.success());

    let csv = dir.path().join("results.csv");
    let bench = [
        "benchmark", "--slices", "2..3", "--vars", "3", "--nets", "2", "--restarts", "2",
        "--methods", "mixture:1,vertical:2,horizontal:2", "--out", s(&csv),
    ];
    let o = chainvar(&bench);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
    assert!(text.starts_with("slices,vars_per_slice,method,variant,net_index,log_evidence,bound,gap_per_slice,wall_ms\n"));
    assert!(chainvar(&bench).status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
    assert!(dir.path().join("results.csv.manifest.json").exists());

    let plots = dir.path().join("plots");
    let o = chainvar(&["plot", "--input", s(&csv), "--out", s(&plots)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(plots.join("gap_vars3.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="panel""#).count(), 3);
    assert!(plots.join("summary.csv").exists());
    let man = json(&plots.join("manifest.json"));
    assert_eq!(man["outputs"].as_array().unwrap().len(), 2);
}
