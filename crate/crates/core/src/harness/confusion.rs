use std::fmt::Write as _;
use std::path::Path;

use super::pipeline::write_text;
use crate::error::{Error, Result};
use crate::predictor::PredictorReport;

/// Printed under every rendered matrix for comparison with real-data runs.
pub const REFERENCE_LINE: &str =
    "reference point for real data: accuracy about 0.65, with most errors within a margin of 2";

/// Rows are true labels, columns predictions.
pub fn render_confusion_text(report: &PredictorReport) -> String {
    let labels: Vec<String> = report.confusion.classes.iter().map(|c| c.to_string()).collect();
    let width = labels.iter().map(String::len).max().unwrap_or(1).max(
        report
            .confusion
            .counts
            .iter()
            .flatten()
            .map(|c| c.to_string().len())
            .max()
            .unwrap_or(1),
    ) + 1;
    let lead = width.max("true\\pred".len());
    let mut out = String::new();
    let _ = write!(out, "{:>lead$} |", "true\\pred");
    for l in &labels {
        let _ = write!(out, "{l:>width$}");
    }
    out.push('\n');
    let _ = writeln!(out, "{}", "-".repeat(lead + 2 + width * labels.len()));
    for (l, row) in labels.iter().zip(&report.confusion.counts) {
        let _ = write!(out, "{l:>lead$} |");
        for c in row {
            let _ = write!(out, "{c:>width$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "\nn = {}, accuracy = {:.4}", report.n, report.accuracy);
    for (m, f) in &report.within_margin {
        let _ = writeln!(out, "P(|pred - true| <= {m}) = {f:.4}");
    }
    out.push_str("\nclass      support  precision  recall\n");
    for c in &report.per_class {
        let _ = writeln!(out, "{:<10} {:>7}  {:>9.4}  {:>6.4}", c.label.to_string(), c.support, c.precision, c.recall);
    }
    let _ = writeln!(out, "\n{REFERENCE_LINE}");
    out
}

pub fn render_confusion_csv(report: &PredictorReport) -> String {
    let mut out = String::from("true");
    for c in &report.confusion.classes {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (c, row) in report.confusion.classes.iter().zip(&report.confusion.counts) {
        let _ = write!(out, "{c}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Write `confusion.txt`, `confusion.csv` and `confusion.json` and return
/// the text rendering.
pub fn report_confusion(report: &PredictorReport, dir: &Path) -> Result<String> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let text = render_confusion_text(report);
    write_text(&dir.join("confusion.txt"), &text)?;
    write_text(&dir.join("confusion.csv"), &render_confusion_csv(report))?;
    super::write_json(&dir.join("confusion.json"), report)?;
    Ok(text)
}
