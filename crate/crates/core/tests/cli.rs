use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nilrec::harness::read_rows;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nilrec"));
    c.env_remove("NILREC_OUT_DIR");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const ROTATION_SUP: &str = r#"{
    "id": "rot",
    "kind": "ww_sup",
    "system": {"kind": "rotation_torus", "alpha": [0.6180339887498949]},
    "obs1": [[[1], [1.0, 0.0]]],
    "x0": [[0.4]],
    "schedule": [1024, 2048],
    "epsilon": 0.01,
    "assertions": [{"check": "every", "metric": "sup", "op": "ge", "value": 0.99}]
}"#;

#[test]
fn list_experiments_names_every_kind() {
    let o = bin().arg("list-experiments").output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for kind in ["birkhoff_avg", "ww_sup", "nil_wwdr_avg", "ghk_seminorm", "product_formula_check"] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "missing {kind}");
    }
}

#[test]
fn validate_accepts_shipped_configs() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let p = entry.unwrap().path();
        let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
        assert_eq!(code(&o), 0, "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        let canon: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(canon.get("id").is_some());
    }
}

#[test]
fn validate_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{\"id\": \"x\",\n  \"kind\": }", "line 2"),
        ("unknown.json", r#"{"id": "x", "kind": "ww_avg", "bogus": 1}"#, "bogus"),
        ("kind.json", r#"{"id": "x", "kind": "no_such_kind"}"#, "no_such_kind"),
        (
            "exps.json",
            r#"{"id": "x", "kind": "double_avg", "system": {"kind": "rotation_torus", "alpha": [0.3]},
                "obs1": [[[1], [1.0, 0.0]]], "obs2": [[[1], [1.0, 0.0]]], "x0": [[0.0]], "a": 2, "b": 2}"#,
            "distinct",
        ),
    ];
    for (name, text, needle) in cases {
        let p = write(dir.path(), name, text);
        let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
        assert_eq!(code(&o), 2, "{name}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(needle), "{name}: {err}");
    }
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rot.json", ROTATION_SUP);
    let out = dir.path().join("out");
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let rows = read_rows(std::fs::File::open(out.join("rot.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), [1024, 2048]);
    assert!(rows.iter().all(|r| r.sup.unwrap() >= 0.99 && r.t_star.is_some()));

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("rot.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["config"]["kind"], "ww_sup");
}

#[test]
fn out_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rot.json", ROTATION_SUP);
    let (env_dir, flag_dir) = (dir.path().join("env"), dir.path().join("flag"));

    let o = bin().env("NILREC_OUT_DIR", &env_dir).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_dir.join("rot.csv").exists());

    let o = bin()
        .env("NILREC_OUT_DIR", &env_dir)
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_dir.join("rot.csv").exists());

    let o = bin().current_dir(dir.path()).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("out").join("rot.csv").exists());
}

#[test]
fn failing_assertion_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = ROTATION_SUP.replace("0.99}", "1.5}");
    let cfg = write(dir.path(), "rot.json", &text);
    let o = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8(o.stderr).unwrap().contains("FAIL"));
    // results are still written
    assert!(dir.path().join("rot.summary.json").exists());
}

#[test]
fn numeric_error_exits_3_and_beats_assertion_failure() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write(dir.path(), "tiny.json", &ROTATION_SUP.replace("0.01", "1e-12").replace("\"rot\"", "\"tiny\""));
    let failing = write(dir.path(), "fail.json", &ROTATION_SUP.replace("0.99}", "1.5}").replace("\"rot\"", "\"fail\""));
    let o = bin().args(["run", "--config"]).arg(&tiny).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 3);
    let o = bin()
        .args(["run", "--config"])
        .arg(&tiny)
        .arg(&failing)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert!(dir.path().join("fail.csv").exists());
}

#[test]
fn workers_flag_leaves_output_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = [config("weyl_cesaro.json"), config("rotation_dual.json"), config("product_formula_cat.json")];
    for (w, sub) in [("1", "a"), ("3", "b")] {
        let o = bin().args(["run", "--workers", w, "--config"]).args(&cfgs).arg("--out").arg(dir.path().join(sub)).output().unwrap();
        assert!(code(&o) == 0 || code(&o) == 4);
    }
    for id in ["weyl_cesaro", "rotation_dual", "product_formula_cat"] {
        let name = format!("{id}.csv");
        assert_eq!(
            std::fs::read(dir.path().join("a").join(&name)).unwrap(),
            std::fs::read(dir.path().join("b").join(&name)).unwrap()
        );
    }
}
