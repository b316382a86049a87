//! Rendering run reports as JSON, aligned text and CSV, singly or as a
//! multi-run comparison.

use std::fmt::Write as _;

use ground_eval_core::eval_acts::ClassMetrics;
use ground_eval_core::eval_knowledge::{Issue, Tier};
use ground_eval_core::{GroundingAct, Task};

use crate::evaluate::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => render_json(report),
        Format::Text => render_text(report),
        Format::Csv => render_csv(report),
    }
}

pub fn render_json(report: &RunReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

/// Left-aligned first column, right-aligned others.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn class_row(name: &str, c: &ClassMetrics) -> Vec<String> {
    vec![name.into(), format!("{:.4}", c.precision), format!("{:.4}", c.recall), format!("{:.4}", c.f1), c.support.to_string()]
}

pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run:        {}", report.label());
    let _ = writeln!(out, "task:       {}", report.task);
    let _ = writeln!(out, "instances:  {}{}", report.instances, if report.complete { "" } else { " (partial run)" });
    let _ = writeln!(out, "unparsable: {}", report.extraction_failures);
    let _ = writeln!(out, "manifest:   {}", report.manifest_digest);
    out.push('\n');
    if let Some(acts) = &report.acts {
        let m = &acts.metrics;
        let mut rows = vec![vec!["class".into(), "precision".into(), "recall".into(), "f1".into(), "support".into()]];
        for act in GroundingAct::ALL {
            rows.push(class_row(act.as_str(), m.class(act)));
        }
        rows.push(vec![
            "macro".into(),
            format!("{:.4}", m.macro_precision),
            format!("{:.4}", m.macro_recall),
            format!("{:.4}", m.macro_f1),
            m.total.to_string(),
        ]);
        out.push_str(&table(&rows));
        let _ = writeln!(out, "\naccuracy:          {:.4}", m.accuracy);
        let _ = writeln!(out, "balanced accuracy: {:.4}\n", m.balanced_accuracy);

        let mut rows = vec![vec!["gold \\ predicted".into()]];
        rows[0].extend(GroundingAct::ALL.iter().map(|a| a.as_str().to_string()));
        rows[0].push("none".into());
        for gold in GroundingAct::ALL {
            let mut row = vec![gold.as_str().to_string()];
            row.extend(GroundingAct::ALL.iter().map(|&p| acts.confusion.get(gold, Some(p)).to_string()));
            row.push(acts.confusion.get(gold, None).to_string());
            rows.push(row);
        }
        out.push_str(&table(&rows));
    }
    if let Some(k) = &report.knowledge {
        let f = &k.frequencies;
        let mut rows = vec![vec!["issue".into(), "count".into(), "frequency".into()]];
        for c in &f.issues {
            rows.push(vec![c.issue.title().into(), c.count.to_string(), pct(c.frequency)]);
        }
        out.push_str(&table(&rows));
        out.push('\n');
        let mut rows = vec![vec!["tier".into(), "exact".into(), "at least".into()]];
        for tier in Tier::ALL.iter().rev() {
            rows.push(vec![tier.as_str().into(), f.tiers.get(*tier).to_string(), f.tiers.at_least(*tier).to_string()]);
        }
        out.push_str(&table(&rows));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.into()
    }
}

fn csv_line(cells: &[String]) -> String {
    let mut line = cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Acts: one row per class plus macro and accuracy rows. Knowledge: one row
/// per issue, then one per tier.
pub fn render_csv(report: &RunReport) -> String {
    let mut out = String::new();
    if let Some(acts) = &report.acts {
        let m = &acts.metrics;
        out.push_str("class,precision,recall,f1,support\n");
        for act in GroundingAct::ALL {
            let c = m.class(act);
            out.push_str(&csv_line(&[act.as_str().into(), c.precision.to_string(), c.recall.to_string(), c.f1.to_string(), c.support.to_string()]));
        }
        out.push_str(&csv_line(&["macro".into(), m.macro_precision.to_string(), m.macro_recall.to_string(), m.macro_f1.to_string(), m.total.to_string()]));
        out.push_str(&csv_line(&["accuracy".into(), String::new(), String::new(), m.accuracy.to_string(), m.total.to_string()]));
    }
    if let Some(k) = &report.knowledge {
        let f = &k.frequencies;
        out.push_str("row,count,frequency\n");
        for c in &f.issues {
            out.push_str(&csv_line(&[c.issue.as_str().into(), c.count.to_string(), c.frequency.to_string()]));
        }
        for tier in Tier::ALL {
            let n = f.tiers.get(tier);
            out.push_str(&csv_line(&[format!("tier_{}", tier.as_str()), n.to_string(), (n as f64 / f.total as f64).to_string()]));
        }
    }
    out
}

/// Comparison across runs: act runs as a model-by-setting grid of accuracy
/// and macro F1, knowledge runs as issue rows by run columns.
pub fn render_summary(reports: &[RunReport], format: Format) -> String {
    if let [single] = reports {
        return render(single, format);
    }
    if format == Format::Json {
        let mut out = serde_json::to_string_pretty(reports).expect("reports serialize");
        out.push('\n');
        return out;
    }
    let mut sections = Vec::new();
    let acts: Vec<_> = reports.iter().filter(|r| r.task == Task::Acts).collect();
    if !acts.is_empty() {
        sections.push(act_grid(&acts, format));
    }
    let knowledge: Vec<_> = reports.iter().filter(|r| r.task == Task::Knowledge).collect();
    if !knowledge.is_empty() {
        sections.push(issue_grid(&knowledge, format));
    }
    sections.join("\n")
}

fn act_grid(reports: &[&RunReport], format: Format) -> String {
    let mut models: Vec<&str> = reports.iter().map(|r| r.model_id.as_str()).collect();
    models.dedup();
    models.sort_unstable();
    models.dedup();
    let mut settings: Vec<String> = Vec::new();
    for r in reports {
        let s = format!("{} n={}", r.shot, r.window.map_or("all".into(), |w| w.to_string()));
        if !settings.contains(&s) {
            settings.push(s);
        }
    }
    let mut rows = vec![vec!["model".to_string()]];
    for s in &settings {
        rows[0].push(format!("{s} acc"));
        rows[0].push(format!("{s} f1"));
    }
    for model in models {
        let mut row = vec![model.to_string()];
        for s in &settings {
            let hit = reports.iter().find(|r| {
                r.model_id == model && format!("{} n={}", r.shot, r.window.map_or("all".into(), |w| w.to_string())) == *s
            });
            match hit.and_then(|r| r.acts.as_ref()) {
                Some(a) => {
                    row.push(format!("{:.4}", a.metrics.accuracy));
                    row.push(format!("{:.4}", a.metrics.macro_f1));
                }
                None => row.extend([String::new(), String::new()]),
            }
        }
        rows.push(row);
    }
    grid(&rows, format)
}

fn issue_grid(reports: &[&RunReport], format: Format) -> String {
    let mut rows = vec![vec!["issue".to_string()]];
    rows[0].extend(reports.iter().map(|r| r.label()));
    for issue in Issue::ALL {
        let mut row = vec![issue.title().to_string()];
        for r in reports {
            let f = r.knowledge.as_ref().map(|k| k.frequencies.frequency(issue));
            row.push(match (f, format) {
                (Some(f), Format::Csv) => f.to_string(),
                (Some(f), _) => pct(f),
                (None, _) => String::new(),
            });
        }
        rows.push(row);
    }
    grid(&rows, format)
}

fn grid(rows: &[Vec<String>], format: Format) -> String {
    match format {
        Format::Csv => rows.iter().map(|r| csv_line(r)).collect(),
        _ => table(rows),
    }
}
