//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use ground_eval::corpus_io::load_corpus;
use ground_eval::evaluate::RunReport;
use ground_eval::manifest::{self, RunManifest};
use ground_eval_core::corpus::{grounding_instances, validate_corpus, CorpusStats};
use ground_eval_core::eval_acts::{act_metrics, confusion};
use ground_eval_core::eval_knowledge::{aggregate, assess_prediction, Issue, KnowledgeAssessment, Tier};
use ground_eval_core::extract::extract_jsonld;
use ground_eval_core::kg::{canonicalize, graphs_identical, parse_graph, serialize_graph};
use ground_eval_core::prompts::{template_messages, templates, transcript, Shot};
use ground_eval_core::{Corpus, GroundingAct, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_dir() -> PathBuf {
    std::env::var_os("GROUND_EVAL_CORPUS_DIR").map_or_else(synthetic_dir, PathBuf::from)
}

fn published() -> bool {
    std::env::var_os("GROUND_EVAL_CORPUS_DIR").is_some()
}

fn load() -> Result<Corpus, String> {
    load_corpus(&corpus_dir()).map_err(|e| e.to_string())
}

/// Perturbations of an instance's gold that together exhibit every issue.
fn issue_probes(gold: &str, system: &str) -> Vec<String> {
    let mut probes = vec!["no graph here".to_string(), "[]".to_string(), system.to_string()];
    if let Ok(Value::Array(nodes)) = serde_json::from_str::<Value>(gold) {
        let mut hallucinated = nodes.clone();
        let mut altered = nodes.clone();
        let mut trimmed = nodes.clone();
        if let Some(Value::Object(first)) = hallucinated.first_mut() {
            first.insert("inventedProperty".into(), Value::from("x"));
        }
        if let Some(Value::Object(first)) = altered.first_mut() {
            if let Some(v) = first.values_mut().find(|v| !v.is_object()) {
                *v = Value::from("a value nobody mentioned");
            }
        }
        if let Some(Value::Object(first)) = trimmed.first_mut() {
            let key = first.keys().find(|k| !k.starts_with('@')).cloned();
            if let Some(key) = key {
                first.remove(&key);
            }
        }
        for g in [hallucinated, altered, trimmed] {
            probes.push(Value::Array(g).to_string());
        }
    }
    probes
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let corpus = load()?;
    let elapsed = start.elapsed();
    let stats = CorpusStats::of(&corpus);
    let ki = grounding_instances(&corpus, Task::Knowledge);
    let report = validate_corpus(&corpus);
    if published() {
        ensure(stats.conversations == 26, || format!("{} conversations", stats.conversations))?;
        ensure(stats.turns == 669, || format!("{} turns", stats.turns))?;
        ensure(ki.len() == 127, || format!("{} knowledge instances", ki.len()))?;
        ensure(stats.act_labels.total > 250, || format!("{} act labels", stats.act_labels.total))?;
        ensure(elapsed < Duration::from_secs(5), || format!("load took {elapsed:?}"))?;
        return Ok(format!("published corpus: 26 conversations, 669 turns, 127 instances, {} act labels", stats.act_labels.total));
    }
    ensure(report.errors.is_empty(), || format!("{} validation errors", report.errors.len()))?;
    ensure(stats.conversations >= 3, || format!("{} conversations", stats.conversations))?;
    ensure(stats.act_labels.total >= 12, || format!("{} labeled turns", stats.act_labels.total))?;
    let a = stats.act_labels;
    ensure(a.explicit > 0 && a.implicit > 0 && a.clarification > 0, || format!("act classes {a:?}"))?;
    let mut seen = BTreeSet::new();
    for inst in &ki {
        let gold = inst.gold_knowledge().unwrap();
        let system = inst.system_knowledge();
        for probe in issue_probes(&serialize_graph(gold), &serialize_graph(system)) {
            seen.extend(assess_prediction(&probe, gold, system).issues);
        }
    }
    let missing: Vec<_> = Issue::ALL.iter().filter(|i| !seen.contains(i)).collect();
    ensure(missing.is_empty(), || format!("issue types not representable: {missing:?}"))?;
    Ok(format!(
        "synthetic corpus: {} conversations, {} labeled turns, {} warnings, all 7 issue types reachable",
        stats.conversations,
        a.total,
        report.warnings.len()
    ))
}

fn tier_consistent(a: &KnowledgeAssessment) -> Result<(), String> {
    let property_issue =
        [Issue::PropertyHallucination, Issue::PropertyExcess, Issue::PropertyDeficit].iter().any(|&i| a.has(i));
    let value_issue = [Issue::ValueHallucination, Issue::ValueExcess, Issue::ValueDeficit].iter().any(|&i| a.has(i));
    ensure((a.tier == Tier::Invalid) == a.has(Issue::InvalidJsonLd), || format!("invalid flag vs tier {a:?}"))?;
    if a.tier != Tier::Invalid {
        ensure((a.tier >= Tier::ValidProperties) == !property_issue, || format!("property tier {a:?}"))?;
        ensure((a.tier >= Tier::ValidValues) == !(property_issue || value_issue), || format!("value tier {a:?}"))?;
    }
    if a.tier == Tier::Identical {
        ensure(a.issues.is_empty(), || format!("identical with issues {a:?}"))?;
    }
    Ok(())
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut assessments = Vec::new();
    for _ in 0..1000 {
        let system_node = random_system(&mut rng);
        let gold_node = random_subnode(&mut rng, &system_node);
        let pred = random_prediction(&mut rng, &gold_node, &system_node);
        let system = parse_graph(&Value::Array(vec![Value::Object(system_node)]).to_string()).map_err(|e| e.to_string())?;
        let gold = parse_graph(&Value::Array(vec![Value::Object(gold_node)]).to_string()).map_err(|e| e.to_string())?;
        let a = assess_prediction(&pred, &gold, &system);
        tier_consistent(&a).map_err(|e| format!("{e} for {pred}"))?;
        assessments.push(a);
    }
    let f = aggregate(&assessments).map_err(|e| e.to_string())?;
    let t = f.tiers;
    let stack: Vec<u64> = [Tier::Identical, Tier::ValidValues, Tier::ValidProperties, Tier::ValidJsonld]
        .iter()
        .map(|&tier| t.at_least(tier))
        .collect();
    ensure(stack.windows(2).all(|w| w[0] <= w[1]), || format!("stack not monotone: {stack:?}"))?;
    ensure(t.total() == 1000, || format!("tier total {}", t.total()))?;
    Ok(format!("1000 triples; identical {} <= values {} <= properties {} <= jsonld {}", stack[0], stack[1], stack[2], stack[3]))
}

fn criterion_3() -> Verdict {
    let corpus = load()?;
    let instances = grounding_instances(&corpus, Task::Knowledge);
    for inst in &instances {
        let gold = inst.gold_knowledge().unwrap();
        let a = assess_prediction(&serialize_graph(gold), gold, inst.system_knowledge());
        ensure(a.tier == Tier::Identical && a.issues.is_empty(), || {
            format!("{} turn {}: {:?} {:?}", inst.conversation_id(), inst.turn_index(), a.tier, a.issues)
        })?;
    }
    Ok(format!("{}/{} instances identical with no issues", instances.len(), instances.len()))
}

fn criterion_4() -> Verdict {
    let corpus = load()?;
    let instances = grounding_instances(&corpus, Task::Knowledge);
    let hallucination = [Issue::PropertyHallucination, Issue::ValueHallucination];
    for inst in &instances {
        let (gold, system) = (inst.gold_knowledge().unwrap(), inst.system_knowledge());
        let at = || format!("{} turn {}", inst.conversation_id(), inst.turn_index());
        let full = assess_prediction(&serialize_graph(system), gold, system);
        ensure(!hallucination.iter().any(|&i| full.has(i)), || format!("{}: full system flagged {:?}", at(), full.issues))?;
        let empty = assess_prediction("[]", gold, system);
        if !gold.is_empty() {
            let want = BTreeSet::from([Issue::PropertyDeficit, Issue::ValueDeficit]);
            ensure(empty.issues == want, || format!("{}: empty prediction gave {:?}", at(), empty.issues))?;
        }
    }
    Ok(format!("{} instances: full system never hallucinates, [] gives exactly both deficits", instances.len()))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..500 {
        let n = rng.random_range(1..=200);
        let none_rate = rng.random_range(0.0..0.4);
        let golds: Vec<_> = (0..n).map(|_| random_act(&mut rng)).collect();
        let preds: Vec<_> = (0..n).map(|_| (!rng.random_bool(none_rate)).then(|| random_act(&mut rng))).collect();
        let m = act_metrics(&confusion(&golds, &preds).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let want = brute_force_metrics(&golds, &preds);
        let got = [m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1];
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
        ensure(worst <= 1e-9, || format!("case {case}: {got:?} vs oracle {want:?}"))?;
    }
    Ok(format!("500 configurations, max deviation {worst:.1e}"))
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let k = rng.random_range(1..=60);
        let golds: Vec<_> = GroundingAct::ALL.iter().flat_map(|&a| std::iter::repeat_n(a, k)).collect();
        let preds: Vec<_> = golds
            .iter()
            .map(|&g| match rng.random_range(0..4) {
                0 => Some(g),
                1 => None,
                _ => Some(random_act(&mut rng)),
            })
            .collect();
        let m = act_metrics(&confusion(&golds, &preds).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(m.accuracy == m.macro_recall, || format!("case {case}: accuracy {} != macro recall {}", m.accuracy, m.macro_recall))?;
    }
    Ok("200 balanced sets, accuracy == macro recall exactly".into())
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    for case in 0..10_000 {
        let array = Value::Array((0..rng.random_range(0..4)).map(|_| random_json(&mut rng, 3)).collect());
        let body = if rng.random() { serde_json::to_string(&array) } else { serde_json::to_string_pretty(&array) }.unwrap();
        let text = format!("{}{}{}", prose(&mut rng, false), body, prose(&mut rng, true));
        let oracle = prefix_oracle(&text);
        ensure(oracle == Some(body.as_str()), || format!("case {case}: oracle found {oracle:?} in {text:?}"))?;
        ensure(extract_jsonld(&text).ok() == oracle, || format!("case {case}: automaton disagrees on {text:?}"))?;
        agree += 1;
    }
    for (i, (_, assistant)) in templates::KNOWLEDGE_EXEMPLARS.iter().enumerate() {
        let body = assistant.strip_prefix("Output JSON-LD: ").ok_or(format!("exemplar {i} lacks its prefix"))?;
        ensure(extract_jsonld(assistant) == Ok(body), || format!("exemplar {i} not extracted verbatim"))?;
    }
    Ok(format!("{agree}/10000 fuzzed texts agree with the prefix oracle; {} exemplars verbatim", templates::KNOWLEDGE_EXEMPLARS.len()))
}

fn criterion_8() -> Verdict {
    let cases = [
        (Task::Acts, Shot::Zero, include_str!("../../core/tests/golden/acts_zero.txt")),
        (Task::Acts, Shot::Few, include_str!("../../core/tests/golden/acts_few.txt")),
        (Task::Knowledge, Shot::Zero, include_str!("../../core/tests/golden/ki_zero.txt")),
        (Task::Knowledge, Shot::Few, include_str!("../../core/tests/golden/ki_few.txt")),
    ];
    for (task, shot, golden) in cases {
        let got = transcript(&template_messages(task, shot));
        if got != golden {
            let line = got.lines().zip(golden.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
            return Err(format!("{task} {shot} differs from golden near line {line}"));
        }
    }
    let needles = ["Predict the grounding label for the last response", "identify the knowledge items that have been grounded"];
    for (needle, golden) in needles.iter().zip([cases[0].2, cases[2].2]) {
        ensure(golden.contains(needle), || format!("golden lacks {needle:?}"))?;
    }
    Ok("4 prompt transcripts byte-identical".into())
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..1000 {
        let tree = random_graph(&mut rng);
        let text = tree.render(false);
        let g = parse_graph(&text).map_err(|e| format!("case {case}: {e} in {text}"))?;
        let s = serialize_graph(&g);
        let back = parse_graph(&s).map_err(|e| format!("case {case}: reparse {e} in {s}"))?;
        ensure(canonicalize(&back) == canonicalize(&g), || format!("case {case}: round trip changed {text}"))?;
        ensure(serialize_graph(&back) == s, || format!("case {case}: serializer not a fixed point on {text}"))?;
        let respelled = parse_graph(&tree.render(true)).map_err(|e| format!("case {case}: {e}"))?;
        ensure(graphs_identical(&g, &respelled), || format!("case {case}: n vs n.0 differ in {text}"))?;
    }
    Ok("1000 graphs round-trip; numeric respelling invariant".into())
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ground-eval")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("ground-eval {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn report_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.contains(".report.") || name.ends_with(".assessments.jsonl") {
            files.push((name, fs::read(&path).map_err(|e| e.to_string())?));
        } else if name.ends_with(manifest::EXTENSION) {
            let m = RunManifest::read(&path).map_err(|e| e.to_string())?;
            files.push((name, m.content_digest().into_bytes()));
        }
    }
    files.sort();
    Ok(files)
}

fn criterion_10() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
    let corpus = corpus_dir().to_string_lossy().into_owned();
    let cache = dir("cache.jsonl");
    let start = Instant::now();
    let settings: [&[&str]; 2] = [&["--task", "acts", "--shot", "few", "--n", "3"], &["--task", "knowledge", "--shot", "zero"]];
    for (i, target) in settings.iter().enumerate() {
        let script = dir(&format!("script{i}.json"));
        let mut args = vec!["gold-script", "--model", "m", "--corpus", &corpus, "-o", &script];
        args.extend_from_slice(target);
        cli(&args)?;
        let mut seed = vec!["run", "--model", "m", "--corpus", &corpus, "--backend", "scripted", "--script", &script, "--cache", &cache];
        let seed_out = dir("seed");
        seed.extend_from_slice(&["-o", &seed_out]);
        seed.extend_from_slice(target);
        cli(&seed)?;
    }
    let mut runs = Vec::new();
    let out = dir("replay");
    for _ in 0..2 {
        for target in settings {
            let mut args = vec!["run", "--model", "m", "--corpus", &corpus, "--backend", "replay", "--cache", &cache, "-o", &out];
            args.extend_from_slice(target);
            let manifest = cli(&args)?;
            cli(&["evaluate", manifest.trim()])?;
        }
        runs.push(report_files(Path::new(&out))?);
        fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
    }
    let elapsed = start.elapsed();
    ensure(runs[0].len() == 9, || format!("expected 9 files, got {}", runs[0].len()))?;
    ensure(runs[0] == runs[1], || "replayed reports differ".into())?;
    ensure(elapsed < Duration::from_secs(10), || format!("pipeline took {elapsed:?}"))?;
    Ok(format!("two replay rounds byte-identical across {} manifests and report files in {:.2} s", runs[0].len(), elapsed.as_secs_f64()))
}

fn criterion_11() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = corpus_dir().to_string_lossy().into_owned();
    let script = tmp.path().join("gold.json").to_string_lossy().into_owned();
    let out = tmp.path().to_string_lossy().into_owned();
    cli(&["gold-script", "--task", "knowledge", "--shot", "few", "--model", "gold", "--corpus", &corpus, "-o", &script])?;
    let manifest = cli(&[
        "run", "--task", "knowledge", "--shot", "few", "--model", "gold", "--corpus", &corpus, "--backend", "scripted", "--script",
        &script, "-o", &out,
    ])?;
    cli(&["evaluate", manifest.trim(), "--format", "json"])?;
    let text = fs::read_to_string(tmp.path().join("gold_few_ki.report.json")).map_err(|e| e.to_string())?;
    let report: RunReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let f = report.knowledge.ok_or("no knowledge section")?.frequencies;
    let expected = grounding_instances(&load()?, Task::Knowledge).len() as u64;
    ensure(f.total == expected && f.tiers.identical == expected, || format!("{}/{} identical", f.tiers.identical, f.total))?;
    ensure(f.issues.iter().all(|c| c.count == 0), || "gold outputs raised issues".into())?;
    Ok(format!("{}/{} identical-tier results", f.tiers.identical, f.total))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("corpus counts", criterion_1),
        ("tier hierarchy", criterion_2),
        ("gold self-assessment", criterion_3),
        ("over/under-prediction sentinels", criterion_4),
        ("metrics oracle", criterion_5),
        ("balanced-accuracy identity", criterion_6),
        ("extraction oracle", criterion_7),
        ("prompt golden files", criterion_8),
        ("graph round-trip", criterion_9),
        ("replay determinism", criterion_10),
        ("scripted gold end-to-end", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {reason}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
