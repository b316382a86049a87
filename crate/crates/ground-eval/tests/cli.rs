mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use common::{fixture, synthetic_dir};
use ground_eval::manifest::RunManifest;

fn ground_eval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ground-eval")).args(args).output().unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ground-eval"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = ground_eval(&["validate", &path(&fixture("two"))]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("2 conversations, 0 errors, 0 warnings"));

    let bad = ground_eval(&["validate", &path(&fixture("bad"))]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("clarify.conv.json"));
    assert!(stdout(&bad).contains("turn 1: grounded knowledge on a clarification turn"));

    let missing = ground_eval(&["validate", "/no/such/corpus"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn stats_formats() {
    let json = ground_eval(&["stats", &path(&fixture("two")), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["conversations"], 2);
    assert_eq!(v["turns"], 8);
    assert_eq!(v["knowledge_instances"], 3);
    assert_eq!(v["act_labels"]["clarification"], 1);

    let csv = stdout(&ground_eval(&["stats", &path(&synthetic_dir()), "--format", "csv"]));
    assert!(csv.starts_with("statistic,count\nconversations,5\n"), "{csv}");
}

#[test]
fn prompts_show_template_and_instance() {
    let few = stdout(&ground_eval(&["prompts", "show", "--task", "knowledge", "--shot", "few"]));
    assert!(few.contains("identify the knowledge items that have been grounded"));
    assert_eq!(few.matches("\nASSISTANT: ").count(), 3);

    let one = ground_eval(&[
        "prompts", "show", "--task", "acts", "--shot", "zero", "--n", "1", "--corpus", &path(&fixture("two")),
        "--conversation", "lake", "--turn", "3",
    ]);
    let text = stdout(&one);
    assert!(text.ends_with("USER: Input Dialogue:\nprovider: It covers 38 square kilometres.\nseeker: 38, noted.\n"), "{text}");

    let unlabeled = ground_eval(&[
        "prompts", "show", "--task", "acts", "--corpus", &path(&fixture("two")), "--conversation", "lake", "--turn", "2",
    ]);
    assert_eq!(unlabeled.status.code(), Some(1));
}

#[test]
fn extract_reads_stdin() {
    let o = with_stdin(&["extract", "--kind", "graph"], "Output JSON-LD: [{\"name\": \"x\"}]\nThat is all.");
    assert_eq!(stdout(&o), "[{\"name\": \"x\"}]\n");
    let o = with_stdin(&["extract", "--kind", "act"], "Label: CLARIFICATION");
    assert_eq!(stdout(&o), "clarification\n");
    let o = with_stdin(&["extract", "--kind", "act"], "unclear");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_evaluate_report_round() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = path(&synthetic_dir());
    let script = path(&dir.path().join("explicit.json"));
    fs::write(&script, r#"{"rules": [], "fallback": "Output Label: explicit"}"#).unwrap();
    let out = path(dir.path());

    let mut reports = Vec::new();
    for (model, n) in [("alpha", "1"), ("alpha", "all"), ("beta", "1")] {
        let run = ground_eval(&[
            "run", "--task", "acts", "--shot", "zero", "--n", n, "--model", model, "--backend", "scripted", "--script", &script,
            "--corpus", &corpus, "-o", &out,
        ]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
        let manifest = stdout(&run).trim().to_string();
        assert!(manifest.ends_with(&format!("{model}_zero_{n}.manifest.jsonl")));
        let eval = ground_eval(&["evaluate", &manifest]);
        assert_eq!(eval.status.code(), Some(0), "{}", stderr(&eval));
        assert!(stdout(&eval).contains("accuracy:          0.3750"), "{}", stdout(&eval));
        reports.push(path(&dir.path().join(format!("{model}_zero_{n}.report.json"))));
    }

    let mut args = vec!["report", "--format", "csv"];
    args.extend(reports.iter().map(String::as_str));
    let grid = stdout(&ground_eval(&args));
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "model,zero n=1 acc,zero n=1 f1,zero n=all acc,zero n=all f1");
    assert!(lines[1].starts_with("alpha,0.3750,"));
    assert!(lines[2].starts_with("beta,0.3750,") && lines[2].ends_with(",,"));

    let single = stdout(&ground_eval(&["report", "--format", "json", &reports[0]]));
    assert_eq!(single, fs::read_to_string(&reports[0]).unwrap());
}

#[test]
fn aborted_run_flushes_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let script = path(&dir.path().join("one.json"));
    // answers only the first lake prompt; everything else has no rule
    fs::write(&script, r#"{"rules": [{"pattern": "diving, then\\.$", "response": "Output JSON-LD: []"}]}"#).unwrap();
    let run = ground_eval(&[
        "run", "--task", "knowledge", "--shot", "zero", "--model", "m", "--backend", "scripted", "--script", &script,
        "--corpus", &path(&fixture("two")), "-o", &path(dir.path()), "--parallelism", "1",
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("lake turn 3"), "{}", stderr(&run));
    let manifest = RunManifest::read(&dir.path().join("m_zero_ki.manifest.jsonl")).unwrap();
    assert!(!manifest.header.complete);
    assert_eq!(manifest.records.len(), 1);
    assert!(manifest.header.error.unwrap().contains("lake turn 3"));

    let refused = ground_eval(&["evaluate", &path(&dir.path().join("m_zero_ki.manifest.jsonl"))]);
    assert_eq!(refused.status.code(), Some(1));
    let partial = ground_eval(&["evaluate", &path(&dir.path().join("m_zero_ki.manifest.jsonl")), "--allow-partial"]);
    assert_eq!(partial.status.code(), Some(0), "{}", stderr(&partial));
    assert!(stdout(&partial).contains("(partial run)"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.json");
    fs::write(&script, r#"{"rules": [], "fallback": "implicit"}"#).unwrap();
    let config = dir.path().join("config.json");
    let cfg = serde_json::json!({
        "corpus": fixture("two"),
        "model": "cfg-model",
        "backend": "scripted",
        "script": script,
        "output_dir": dir.path(),
    });
    fs::write(&config, cfg.to_string()).unwrap();
    let run = ground_eval(&["--config", &path(&config), "run", "--task", "acts", "--shot", "few", "--n", "3"]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    assert!(dir.path().join("cfg-model_few_3.manifest.jsonl").is_file());

    fs::write(&config, r#"{"modle": "typo"}"#).unwrap();
    let bad = ground_eval(&["--config", &path(&config), "run", "--task", "acts", "--shot", "few", "--n", "3"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("modle"));
}

#[test]
fn replay_without_cache_is_a_validation_error() {
    let o = ground_eval(&[
        "run", "--task", "knowledge", "--shot", "zero", "--model", "m", "--backend", "replay", "--corpus",
        &path(&fixture("two")), "--cache", "/no/such/cache.jsonl",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("existing cache"));
}
