use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::pipeline::{generate_and_score, select_contexts, write_text, RunData, Selector};
use crate::dataset::CompressionLabel;
use crate::error::{Error, Result};
use crate::metrics::aggregate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub n: usize,
    pub em: f64,
    pub f1: f64,
    pub tokens: f64,
}

/// Metric curve over fixed context sizes `k = 0..=N`.
pub fn sweep_over(data: &RunData, config: &PipelineConfig) -> Result<Vec<SweepPoint>> {
    let generator = config.generator.build()?;
    (0..=data.dataset.max_n())
        .map(|k| {
            let contexts = select_contexts(data, config, &Selector::Label(&|_| Ok(CompressionLabel::K(k))))?;
            let results = generate_and_score(data, &contexts, generator.as_ref())?;
            let s = aggregate(format!("k={k}"), &results).overall;
            Ok(SweepPoint {
                k,
                n: s.n,
                em: s.em,
                f1: s.f1,
                tokens: s.tokens,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("k,n,em,f1,tokens\n");
    for p in points {
        let _ = writeln!(out, "{},{},{:.4},{:.4},{:.2}", p.k, p.n, p.em, p.f1, p.tokens);
    }
    out
}

/// Run the sweep and write `sweep.csv` and `sweep.json` under the output
/// directory. Methods and predictors in the config are ignored.
pub fn sweep_document_count(config: &PipelineConfig) -> Result<Vec<SweepPoint>> {
    config.validate(false)?;
    let data = RunData::load(config)?;
    let points = sweep_over(&data, config)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("sweep.csv"), &sweep_csv(&points))?;
    super::write_json(&dir.join("sweep.json"), &points)?;
    Ok(points)
}

/// Index of the best EM when it is a strict interior maximum: every point
/// before it up to `k = 1` rises to it and the last point is strictly
/// lower.
pub fn interior_peak(points: &[SweepPoint]) -> Option<usize> {
    let curve: Vec<&SweepPoint> = points.iter().filter(|p| p.k >= 1).collect();
    let (peak, best) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.em.total_cmp(&b.1.em).then(b.0.cmp(&a.0)))?;
    let last = curve.len() - 1;
    let strict = curve.iter().enumerate().all(|(i, p)| i == peak || p.em < best.em);
    (peak > 0 && peak < last && strict).then_some(best.k)
}
