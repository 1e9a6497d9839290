use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn f0deid(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_f0deid"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_flow_on_a_tiny_corpus() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = f0deid(&["make-synth-corpus", "--speakers", "2", "--sentences", "2", "--out", "corpus"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("corpus/manifest.csv").exists() && d.join("corpus/trials.csv").exists());

    let m = "corpus/manifest.csv";
    let o = f0deid(&["fit", "--manifest", m, "--condition", "modal", "--out", "models"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = f0deid(
        &["anonymize", "--preset", "f0_S-F1-3_20", "--manifest", m, "--model", "models/model.json", "--session", "2", "--out", "anon"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("anon/anonymize_log.csv").exists() && d.join("anon/config.json").exists());

    let o = f0deid(
        &["evaluate", "--manifest", m, "--trials", "corpus/trials.csv", "--anon", "f0_S-F1-3_20=anon", "--out", "eval"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("none") && table.contains("f0_S-F1-3_20"), "{table}");
    for f in ["report.json", "report.txt", "scores_none.csv", "scores_f0_S-F1-3_20.csv"] {
        assert!(d.join("eval").join(f).exists(), "{f}");
    }

    let o = f0deid(&["export-curves", "--model", "models/model.json", "--points", "11", "--out", "plots"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let curves = std::fs::read_to_string(d.join("plots/pc1_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 12);

    let o = f0deid(&["extract-f0", "--manifest", m, "--session", "1", "--out", "f0"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read_dir(d.join("f0")).unwrap().count() > 0);
}

#[test]
fn bad_configuration_exits_with_2() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.json"), r#"{"version": 1, "workers": 0}"#).unwrap();
    std::fs::write(d.join("m.csv"), "utterance_id,path,speaker_id,group,condition,session\n").unwrap();
    let o = f0deid(&["fit", "--config", "bad.json", "--manifest", "m.csv"], d);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = f0deid(&["fit", "--preset", "f0_X", "--manifest", "m.csv"], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown preset"));
    let o = f0deid(&["fit"], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--manifest"));
}

#[test]
fn missing_model_exits_with_2_before_writing() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(&f0deid(&["make-synth-corpus", "--speakers", "2", "--sentences", "1", "--out", "c"], d)), 0);
    let o = f0deid(
        &["anonymize", "--preset", "f0_S", "--manifest", "c/manifest.csv", "--model", "nope.json", "--out", "anon"],
        d,
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!d.join("anon").exists());
    let o = f0deid(&["anonymize", "--preset", "f0_S", "--manifest", "c/manifest.csv", "--out", "anon"], d);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(!d.join("anon").exists());
}

#[test]
fn malformed_anon_argument_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let o = f0deid(&["evaluate", "--trials", "t.csv", "--anon", "nolabel"], tmp.path());
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("label=dir"), "{}", stderr(&o));
    let o = f0deid(&["evaluate", "--trials", "t.csv", "--anon", "=dir"], tmp.path());
    assert_ne!(code(&o), 0);
}
