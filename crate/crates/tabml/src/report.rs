//! Summary reports. Every number shown comes from a CSV artifact, formatted
//! to four decimals; runtimes appear in the HTML only so the Markdown stays
//! reproducible.

use std::path::Path;

use tabml_core::dataset::EdaSummary;

use crate::csvio::{read_table, Table};
use crate::error::Result;
use crate::phases::Selection;
use crate::results::SUMMARY_METRICS;

/// Report rendering of a CSV number.
pub fn fmt4(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        let s = format!("{v:.4}");
        if s == "-0.0000" {
            "0.0000".into()
        } else {
            s
        }
    }
}

fn fmt_cell(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if !s.is_empty() => fmt4(v),
        _ => s.to_string(),
    }
}

#[derive(Debug, Clone)]
pub enum Block {
    Heading(u8, String),
    Para(String),
    Warning(String),
    Table(Vec<String>, Vec<Vec<String>>),
    Code(String),
    Image(String, String),
    HtmlOnly(Box<Block>),
}

#[derive(Debug, Clone, Default)]
pub struct Doc {
    pub blocks: Vec<Block>,
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Inline `code` spans become `<code>` in HTML.
fn html_inline(s: &str) -> String {
    let mut out = String::new();
    for (i, part) in html_escape(s).split('`').enumerate() {
        if i % 2 == 1 {
            out.push_str("<code>");
            out.push_str(part);
            out.push_str("</code>");
        } else {
            out.push_str(part);
        }
    }
    out
}

impl Doc {
    pub fn push(&mut self, b: Block) {
        self.blocks.push(b);
    }

    pub fn h(&mut self, level: u8, s: impl Into<String>) {
        self.push(Block::Heading(level, s.into()));
    }

    pub fn p(&mut self, s: impl Into<String>) {
        self.push(Block::Para(s.into()));
    }

    pub fn table(&mut self, header: &[&str], rows: Vec<Vec<String>>) {
        self.push(Block::Table(header.iter().map(|s| s.to_string()).collect(), rows));
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            match b {
                Block::Heading(l, s) => out.push_str(&format!("{} {s}\n\n", "#".repeat(*l as usize))),
                Block::Para(s) => out.push_str(&format!("{s}\n\n")),
                Block::Warning(s) => out.push_str(&format!("> **Warning:** {s}\n\n")),
                Block::Table(h, rows) => {
                    out.push_str(&format!("| {} |\n", h.iter().map(|c| md_escape(c)).collect::<Vec<_>>().join(" | ")));
                    out.push_str(&format!("|{}\n", "---|".repeat(h.len())));
                    for r in rows {
                        out.push_str(&format!("| {} |\n", r.iter().map(|c| md_escape(c)).collect::<Vec<_>>().join(" | ")));
                    }
                    out.push('\n');
                }
                Block::Code(s) => {
                    out.push_str("```text\n");
                    out.push_str(s);
                    if !s.ends_with('\n') {
                        out.push('\n');
                    }
                    out.push_str("```\n\n");
                }
                Block::Image(alt, path) => out.push_str(&format!("![{alt}]({path})\n\n")),
                Block::HtmlOnly(_) => {}
            }
        }
        out
    }

    pub fn to_html(&self, title: &str) -> String {
        let mut out = format!(
            "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>\n\
             body {{ font-family: sans-serif; max-width: 1100px; margin: 2em auto; }}\n\
             table {{ border-collapse: collapse; margin-bottom: 1em; }}\n\
             td, th {{ border: 1px solid #ccc; padding: 3px 8px; text-align: right; }}\n\
             .warning {{ background: #fff3cd; border: 1px solid #e0c060; padding: 0.5em; }}\n\
             img {{ max-width: 100%; }}\n</style>\n</head>\n<body>\n",
            html_escape(title)
        );
        for b in &self.blocks {
            render_html(&mut out, b);
        }
        out.push_str("</body>\n</html>\n");
        out
    }
}

fn render_html(out: &mut String, b: &Block) {
    match b {
        Block::Heading(l, s) => out.push_str(&format!("<h{l}>{}</h{l}>\n", html_inline(s))),
        Block::Para(s) => out.push_str(&format!("<p>{}</p>\n", html_inline(s))),
        Block::Warning(s) => out.push_str(&format!("<p class=\"warning\"><strong>Warning:</strong> {}</p>\n", html_inline(s))),
        Block::Table(h, rows) => {
            out.push_str("<table>\n<tr>");
            for c in h {
                out.push_str(&format!("<th>{}</th>", html_escape(c)));
            }
            out.push_str("</tr>\n");
            for r in rows {
                out.push_str("<tr>");
                for c in r {
                    out.push_str(&format!("<td>{}</td>", html_escape(c)));
                }
                out.push_str("</tr>\n");
            }
            out.push_str("</table>\n");
        }
        Block::Code(s) => out.push_str(&format!("<pre>{}</pre>\n", html_escape(s))),
        Block::Image(alt, path) => {
            out.push_str(&format!("<p><img src=\"{}\" alt=\"{}\"></p>\n", html_escape(path), html_escape(alt)))
        }
        Block::HtmlOnly(inner) => render_html(out, inner),
    }
}

/// Rows of `table` restricted to the named columns, numbers formatted.
fn view(table: &Table, key: &str, columns: &[&str]) -> Vec<Vec<String>> {
    let key_col = table.column(key);
    let cols: Vec<Option<usize>> = columns.iter().map(|c| table.column(c)).collect();
    table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![key_col.map(|k| r[k].clone()).unwrap_or_default()];
            row.extend(cols.iter().map(|c| c.map(|c| fmt_cell(&r[c])).unwrap_or_default()));
            row
        })
        .collect()
}

/// Result sections for one dataset directory (`evaluation/` and `figures/`
/// below `dir`); links are prefixed with `link`.
pub fn dataset_blocks(
    doc: &mut Doc,
    dir: &Path,
    link: &str,
    eda: Option<&EdaSummary>,
    selection: Option<&Selection>,
    algorithms: &[String],
    primary_metric: &str,
) -> Result<()> {
    if let Some(sel) = selection {
        for f in &sel.folds {
            for w in &f.warnings {
                doc.push(Block::Warning(w.clone()));
            }
        }
    }
    if let Some(e) = eda {
        doc.h(3, "Exploratory summary");
        doc.table(
            &["Instances", "Features", "Missing cells", "Class 0", "Class 1"],
            vec![vec![
                e.instance_count.to_string(),
                e.feature_count.to_string(),
                e.missing_cell_count.to_string(),
                e.class_counts.0.to_string(),
                e.class_counts.1.to_string(),
            ]],
        );
    }
    if let Some(sel) = selection {
        doc.h(3, "Feature selection");
        let cap = sel.max_features.map_or("none".to_string(), |m| m.to_string());
        doc.p(format!("Collective selection over mutual information and MultiSURF; feature cap: {cap}."));
        doc.table(
            &["Fold", "Selected features"],
            sel.folds.iter().map(|f| vec![f.fold.to_string(), f.selected.len().to_string()]).collect(),
        );
    }
    let eval = dir.join("evaluation");
    let mean = read_table(&eval.join("summary_mean.csv"))?;
    let median = read_table(&eval.join("summary_median.csv"))?;
    let mut header = vec!["Algorithm"];
    header.extend(SUMMARY_METRICS);
    doc.h(3, "Mean metrics");
    doc.table(&header, view(&mean, "algorithm", &SUMMARY_METRICS));
    doc.h(3, "Median metrics");
    doc.table(&header, view(&median, "algorithm", &SUMMARY_METRICS));

    doc.h(3, "Significance across algorithms");
    let kw = read_table(&eval.join("kruskal_wallis.csv"))?;
    let best = read_table(&eval.join("best_algorithms.csv"))?;
    if kw.rows.is_empty() {
        doc.p("Kruskal-Wallis tests need at least two algorithms.");
    } else {
        let mut rows = Vec::new();
        for r in &kw.rows {
            let b = best.rows.iter().find(|b| b[0] == r[0]);
            rows.push(vec![
                r[0].clone(),
                b.map(|b| b[1].clone()).unwrap_or_default(),
                b.map(|b| fmt_cell(&b[2])).unwrap_or_default(),
                fmt_cell(&r[1]),
                fmt_cell(&r[2]),
                r[3].clone(),
            ]);
        }
        doc.table(&["Metric", "Best algorithm", "Best mean", "H", "p", "Significant"], rows);
        let pw = read_table(&eval.join("pairwise.csv"))?;
        let sig = pw.rows.iter().filter(|r| r[5] == "true").count();
        doc.p(format!(
            "Pairwise Mann-Whitney U tests were run for metrics with a significant Kruskal-Wallis result: {sig} of {} pairs significant (`evaluation/pairwise.csv`).",
            pw.rows.len()
        ));
    }

    doc.h(3, "Composite feature importance");
    let comp = read_table(&eval.join("composite_importance.csv"))?;
    doc.p(format!("Permutation importance, min-max normalized per algorithm and weighted by median {primary_metric}."));
    let rows = comp
        .rows
        .iter()
        .take(10)
        .enumerate()
        .map(|(i, r)| vec![(i + 1).to_string(), r[0].clone(), fmt_cell(&r[1])])
        .collect();
    doc.table(&["Rank", "Feature", "Composite"], rows);

    doc.h(3, "Figures");
    for (alt, file) in [
        ("Mean ROC by algorithm", "roc_all.svg"),
        ("Mean PRC by algorithm", "prc_all.svg"),
        ("ROC-AUC by algorithm", "box_roc_auc.svg"),
        ("Balanced accuracy by algorithm", "box_balanced_accuracy.svg"),
        ("Composite feature importance", "composite_importance.svg"),
    ] {
        doc.push(Block::Image(alt.into(), format!("{link}figures/{file}")));
    }
    let list: Vec<String> = algorithms.iter().map(|a| format!("`{link}figures/roc_{a}.svg`")).collect();
    doc.p(format!("Per-algorithm curves and importance plots: {}.", list.join(", ")));
    Ok(())
}

/// Cross-dataset section from the comparison directory.
pub fn comparison_blocks(doc: &mut Doc, dir: &Path, primary_metric: &str) -> Result<()> {
    doc.h(2, "Cross-dataset comparison");
    let best = read_table(&dir.join("best_by_dataset.csv"))?;
    doc.table(&["Dataset", "Best algorithm", "Metric", "Mean"], view(&best, "dataset", &["best_algorithm", "metric", "mean"]));
    let kw = read_table(&dir.join("best_kruskal_wallis.csv"))?;
    doc.h(3, "Best algorithms across datasets (Kruskal-Wallis)");
    doc.table(&["Metric", "H", "p", "Significant"], view(&kw, "metric", &["h", "p_value", "significant"]));
    let by_alg = read_table(&dir.join("kruskal_by_algorithm.csv"))?;
    let sig = by_alg.rows.iter().filter(|r| r[4] == "true").count();
    doc.p(format!(
        "Per-algorithm Kruskal-Wallis tests across datasets: {sig} of {} significant (`comparison/kruskal_by_algorithm.csv`).",
        by_alg.rows.len()
    ));
    doc.push(Block::Image(format!("Mean {primary_metric} by dataset"), format!("comparison/box_{primary_metric}.svg")));
    Ok(())
}

pub fn runtime_blocks(doc: &mut Doc, runtimes: &Table) {
    doc.push(Block::HtmlOnly(Box::new(Block::Heading(2, "Runtimes".into()))));
    let rows = runtimes
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let Some(last) = r.last_mut() {
                *last = fmt_cell(last);
            }
            r
        })
        .collect();
    doc.push(Block::HtmlOnly(Box::new(Block::Table(runtimes.header.clone(), rows))));
}
