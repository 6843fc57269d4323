use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::QuerySpecificity;

/// Scores for one example under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub example_id: String,
    /// Number of documents kept in the context.
    pub k: usize,
    pub token_count: usize,
    pub em: f64,
    pub f1: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub split: Option<QuerySpecificity>,
}

/// Means over a set of examples; the columns of the comparison table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub tokens: f64,
    pub em: f64,
    pub f1: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub avg_docs: f64,
}

impl MetricSummary {
    fn from_results<'a>(results: impl Iterator<Item = &'a ExampleResult>) -> Self {
        let mut s = MetricSummary::default();
        for r in results {
            s.n += 1;
            s.tokens += r.token_count as f64;
            s.em += r.em;
            s.f1 += r.f1;
            s.rouge1 += r.rouge1;
            s.rouge2 += r.rouge2;
            s.rouge_l += r.rouge_l;
            s.avg_docs += r.k as f64;
        }
        if s.n > 0 {
            let n = s.n as f64;
            for v in [
                &mut s.tokens,
                &mut s.em,
                &mut s.f1,
                &mut s.rouge1,
                &mut s.rouge2,
                &mut s.rouge_l,
                &mut s.avg_docs,
            ] {
                *v /= n;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub overall: MetricSummary,
    pub splits: BTreeMap<QuerySpecificity, MetricSummary>,
}

pub fn aggregate(method: impl Into<String>, results: &[ExampleResult]) -> EvalReport {
    debug_assert!(!results.is_empty(), "aggregate over no results");
    let mut splits = BTreeMap::new();
    for split in [QuerySpecificity::Specific, QuerySpecificity::OpenEnded] {
        let summary =
            MetricSummary::from_results(results.iter().filter(|r| r.split == Some(split)));
        if summary.n > 0 {
            splits.insert(split, summary);
        }
    }
    EvalReport {
        method: method.into(),
        overall: MetricSummary::from_results(results.iter()),
        splits,
    }
}

const CSV_HEADER: &str = "method,split,n,tokens,em,f1,rouge1,rouge2,rouge_l,avg_docs";

fn csv_row(out: &mut String, method: &str, split: &str, s: &MetricSummary) {
    let _ = writeln!(
        out,
        "{method},{split},{},{:.2},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
        s.n, s.tokens, s.em, s.f1, s.rouge1, s.rouge2, s.rouge_l, s.avg_docs
    );
}

/// One row per method (split `all`) followed by per-split rows.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in reports {
        csv_row(&mut out, &r.method, "all", &r.overall);
    }
    for r in reports {
        for (split, s) in &r.splits {
            csv_row(&mut out, &r.method, split.as_str(), s);
        }
    }
    out
}
