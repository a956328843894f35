use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::*;
use super::within::{within_problem_analysis, Comparison, WithinProblem};
use super::EvalRecord;
use crate::instance::Task;

/// Every analysis over one set of evaluation records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub notes: Vec<String>,
    pub summary: Report,
    /// Model to CI decomposition, for models with CI records.
    pub ci_decomposition: BTreeMap<String, CiDecomposition>,
    /// Model, then task.
    pub holdout: BTreeMap<String, BTreeMap<Task, HoldoutSplit>>,
    pub delta_bins: BTreeMap<String, BTreeMap<Task, Vec<DeltaBin>>>,
    /// Per task, pooled over models; absent when data is insufficient.
    pub within_problem: BTreeMap<Task, Option<WithinProblem>>,
    pub ec_best_completion: BTreeMap<String, EcBestCompletion>,
    pub equality: BTreeMap<String, BTreeMap<Task, EqualityUsage>>,
    pub error_profiles: BTreeMap<String, ErrorProfileSummary>,
}

fn by_model(records: &[EvalRecord]) -> BTreeMap<String, Vec<EvalRecord>> {
    let mut out: BTreeMap<String, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.model.clone()).or_default().push(r.clone());
    }
    out
}

fn of_task(records: &[EvalRecord], task: Task) -> Vec<EvalRecord> {
    records.iter().filter(|r| r.task == task).cloned().collect()
}

fn tasks_in(records: &[EvalRecord]) -> Vec<Task> {
    Task::ALL
        .into_iter()
        .filter(|t| records.iter().any(|r| r.task == *t))
        .collect()
}

fn per_task<T>(
    models: &BTreeMap<String, Vec<EvalRecord>>,
    f: impl Fn(&[EvalRecord]) -> Option<T>,
) -> BTreeMap<String, BTreeMap<Task, T>> {
    models
        .iter()
        .map(|(m, rs)| {
            let inner = tasks_in(rs)
                .into_iter()
                .filter_map(|t| Some((t, f(&of_task(rs, t))?)))
                .collect();
            (m.clone(), inner)
        })
        .collect()
}

pub fn build_report(records: &[EvalRecord], seed: u64) -> FullReport {
    let models = by_model(records);
    let holdout = per_task(&models, |rs| {
        let s = holdout_split(rs);
        (s.valid > 0).then_some(s)
    });
    let delta_bins = per_task(&models, |rs| {
        let b = bin_by_delta(rs);
        b.iter().any(|b| b.n > 0).then_some(b)
    });
    let equality = per_task(&models, |rs| Some(equality_usage(rs)));
    let pick = |task: Task| -> BTreeMap<String, Vec<EvalRecord>> {
        models
            .iter()
            .filter(|(_, rs)| rs.iter().any(|r| r.task == task))
            .map(|(m, rs)| (m.clone(), of_task(rs, task)))
            .collect()
    };
    FullReport {
        notes: vec![
            format!("bloat threshold: delta > +{BLOAT_THRESHOLD}; near-gold: delta <= +{NEAR_GOLD_THRESHOLD}"),
            "all rates use every instance as denominator; missing outputs count as incorrect".into(),
            "CI normalized ratio = (yes_fail / mean YES worlds) / (no_fail / mean NO worlds)".into(),
            "CI holdout headline rate uses YES holdout worlds only".into(),
            format!("within-problem bootstrap seed {seed}"),
        ],
        summary: aggregate(records),
        ci_decomposition: pick(Task::Ci)
            .into_iter()
            .map(|(m, rs)| (m, ci_failure_decomposition(&rs)))
            .collect(),
        holdout,
        delta_bins,
        within_problem: tasks_in(records)
            .into_iter()
            .filter(|t| *t != Task::Ec || records.iter().any(|r| r.task == Task::Ec && r.holdout.is_some()))
            .map(|t| (t, within_problem_analysis(&of_task(records, t), seed).ok()))
            .collect(),
        ec_best_completion: pick(Task::Ec)
            .into_iter()
            .map(|(m, rs)| (m, ec_best_completion_report(&rs)))
            .collect(),
        equality,
        error_profiles: models
            .iter()
            .map(|(m, rs)| (m.clone(), error_profile_report(rs)))
            .collect(),
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map(pct).unwrap_or_else(|| "-".into())
}

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

/// Fixed-width text table.
fn table(out: &mut String, title: &str, header: &[&str], rows: Vec<Vec<String>>) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| -> String {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "## {title}");
    let _ = writeln!(out, "{}", line(header.iter().map(|s| s.to_string()).collect()));
    let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for row in rows {
        let _ = writeln!(out, "{}", line(row));
    }
    out.push('\n');
}

fn summary_row(label: &str, s: &Summary) -> Vec<String> {
    vec![
        label.to_string(),
        s.n.to_string(),
        pct(s.coverage),
        pct(s.acc_all),
        pct(s.acc_at(0)),
        pct(s.acc_at(10)),
        pct(s.acc_at(25)),
        pct(s.bloat_rate),
    ]
}

const SUMMARY_HEADER: [&str; 8] = ["", "n", "Cov", "Acc", "Acc@0", "Acc@10", "Acc@25", "Bloat"];

fn comparison_row(label: &str, c: &Comparison) -> Vec<String> {
    vec![
        label.to_string(),
        c.n.to_string(),
        pct(c.first_rate),
        pct(c.second_rate),
        format!("{:+.1} [{:.0}, {:.0}]", 100.0 * c.mean_delta, 100.0 * c.ci.0, 100.0 * c.ci.1),
        pct(c.frac_positive),
        pct(c.frac_negative),
        if c.p_value < 0.001 { "<0.001".into() } else { format!("{:.3}", c.p_value) },
    ]
}

/// Plain-text tables for every analysis in the report.
pub fn render_tables(r: &FullReport) -> String {
    let mut out = String::new();
    for note in &r.notes {
        let _ = writeln!(out, "# {note}");
    }
    out.push('\n');
    let mut rows = vec![summary_row("all", &r.summary.overall)];
    rows.extend(r.summary.by_model.iter().map(|(m, s)| summary_row(m, s)));
    table(&mut out, "Accuracy by model", &SUMMARY_HEADER, rows);

    let rows = r
        .summary
        .by_band
        .iter()
        .flat_map(|(m, bands)| bands.iter().map(move |(b, s)| summary_row(&format!("{m} {b}"), s)))
        .collect();
    table(&mut out, "Accuracy by band", &SUMMARY_HEADER, rows);

    let rows = r
        .summary
        .by_family
        .iter()
        .flat_map(|(m, fams)| fams.iter().map(move |(f, s)| summary_row(&format!("{m} {f}"), s)))
        .collect();
    table(&mut out, "Accuracy by family", &SUMMARY_HEADER, rows);

    if !r.ci_decomposition.is_empty() {
        let rows = r
            .ci_decomposition
            .iter()
            .map(|(m, d)| {
                vec![
                    m.clone(),
                    d.n.to_string(),
                    pct(d.correct),
                    pct(d.yes_fail),
                    pct(d.no_fail),
                    pct(d.parse),
                    pct(d.missing),
                    opt_num(d.normalized_ratio),
                ]
            })
            .collect();
        table(
            &mut out,
            "CI outcome decomposition",
            &["", "n", "Correct", "YES-fail", "NO-fail", "Parse", "Missing", "Norm"],
            rows,
        );
    }

    let rows: Vec<Vec<String>> = r
        .holdout
        .iter()
        .flat_map(|(m, tasks)| {
            tasks.iter().map(move |(t, h)| {
                vec![
                    format!("{m} {t}"),
                    h.valid.to_string(),
                    h.near.to_string(),
                    opt_pct(h.near_rate),
                    h.above.to_string(),
                    opt_pct(h.above_rate),
                    h.gap.map(|g| format!("{:+.1}", 100.0 * g)).unwrap_or_else(|| "-".into()),
                ]
            })
        })
        .collect();
    if !rows.is_empty() {
        table(
            &mut out,
            "Holdout generalization (near-gold vs above-gold)",
            &["", "#Valid", "#Near", "Near", "#Above", "Above", "Gap"],
            rows,
        );
    }

    let rows: Vec<Vec<String>> = r
        .delta_bins
        .iter()
        .flat_map(|(m, tasks)| {
            tasks.iter().flat_map(move |(t, bins)| {
                bins.iter()
                    .map(move |b| vec![format!("{m} {t}"), b.label(), b.n.to_string(), opt_pct(b.rate)])
            })
        })
        .collect();
    if !rows.is_empty() {
        table(&mut out, "Holdout by AST delta", &["", "Delta", "n", "Holdout"], rows);
    }

    for (t, w) in &r.within_problem {
        let title = format!("Within-problem comparison ({t})");
        match w {
            Some(w) => {
                let mut rows = vec![comparison_row("Short-Long", &w.short_long)];
                if let Some(na) = &w.near_above {
                    rows.push(comparison_row("Near-Above", na));
                }
                table(&mut out, &title, &["", "n", "Short", "Long", "Delta [CI]", "D>0", "D<0", "p"], rows);
            }
            None => {
                let _ = writeln!(out, "## {title}\ninsufficient data\n");
            }
        }
    }

    if !r.ec_best_completion.is_empty() {
        let rows = r
            .ec_best_completion
            .iter()
            .map(|(m, e)| {
                vec![
                    m.clone(),
                    e.total.to_string(),
                    e.valid.to_string(),
                    opt_num(e.mean_min_mismatch),
                    opt_pct(e.share_1_2),
                    opt_pct(e.share_3_plus),
                ]
            })
            .collect();
        table(&mut out, "EC best completion", &["", "Total", "Valid", "Mean MM", "1-2", ">=3"], rows);
    }

    let rows = r
        .equality
        .iter()
        .flat_map(|(m, tasks)| {
            tasks.iter().map(move |(t, e)| {
                vec![
                    format!("{m} {t}"),
                    e.returned.to_string(),
                    pct(e.share),
                    opt_num(e.mean_ast),
                    opt_pct(e.valid_rate),
                ]
            })
        })
        .collect();
    table(&mut out, "Equality usage", &["", "Total", "Using =", "Avg AST", "Valid"], rows);

    let rows = r
        .error_profiles
        .iter()
        .map(|(m, e)| {
            vec![
                m.clone(),
                opt_pct(e.fullobs_fp),
                opt_pct(e.fullobs_fn),
                opt_pct(e.ci_yes_fp),
                opt_pct(e.ci_yes_fn),
                opt_num(e.no_margin),
            ]
        })
        .collect();
    table(&mut out, "Training error profiles", &["", "FP", "FN", "YES FP", "YES FN", "NO margin"], rows);
    out
}
