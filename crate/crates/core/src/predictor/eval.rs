use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{predict_k, PredictorModel};
use crate::dataset::{AnnotatedTriplet, CompressionLabel, JoinedDataset};
use crate::error::{Error, Result};

/// Counts of (true, predicted) class pairs over an ordered class list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<CompressionLabel>,
    /// `counts[true][pred]`.
    pub counts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: CompressionLabel,
    pub support: usize,
    pub predicted: usize,
    pub precision: f64,
    pub recall: f64,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<CompressionLabel>) -> Self {
        let n = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn record(&mut self, truth: CompressionLabel, pred: CompressionLabel) -> Result<()> {
        let idx = |l: CompressionLabel| {
            self.classes
                .iter()
                .position(|c| *c == l)
                .ok_or_else(|| Error::Config(format!("label {l} is not a model class")))
        };
        let (t, p) = (idx(truth)?, idx(pred)?);
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: usize = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / self.total().max(1) as f64
    }

    /// Fraction of pairs whose class positions differ by at most `m`.
    /// Unanswerable sits one position past `K(N)`.
    pub fn within_margin(&self, m: usize) -> f64 {
        let mut hits = 0;
        for (t, row) in self.counts.iter().enumerate() {
            for (p, c) in row.iter().enumerate() {
                if t.abs_diff(p) <= m {
                    hits += c;
                }
            }
        }
        hits as f64 / self.total().max(1) as f64
    }

    /// Precision and recall are 0 when undefined.
    pub fn per_class(&self) -> Vec<ClassMetrics> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let support: usize = self.counts[i].iter().sum();
                let predicted: usize = self.counts.iter().map(|r| r[i]).sum();
                let tp = self.counts[i][i] as f64;
                ClassMetrics {
                    label: *label,
                    support,
                    predicted,
                    precision: if predicted == 0 { 0.0 } else { tp / predicted as f64 },
                    recall: if support == 0 { 0.0 } else { tp / support as f64 },
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub n: usize,
    /// Triplets whose label is outside the model's classes.
    pub skipped: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    /// Keys are margins 0, 1, 2.
    pub within_margin: BTreeMap<usize, f64>,
}

impl PredictorReport {
    pub fn from_confusion(confusion: ConfusionMatrix, skipped: usize) -> Self {
        PredictorReport {
            n: confusion.total(),
            skipped,
            accuracy: confusion.accuracy(),
            per_class: confusion.per_class(),
            within_margin: (0..=2).map(|m| (m, confusion.within_margin(m))).collect(),
            confusion,
        }
    }
}

/// Score `model` on held-out triplets. Labels the model cannot emit are
/// mapped by the model's unanswerable policy or skipped.
pub fn evaluate_predictor(model: &PredictorModel, triplets: &[AnnotatedTriplet], dataset: &JoinedDataset) -> Result<PredictorReport> {
    if triplets.is_empty() {
        return Err(Error::Config("held-out set is empty".into()));
    }
    let index = dataset.index();
    let policy = model.train_config.unanswerable_policy;
    let mut confusion = ConfusionMatrix::new(model.class_list.clone());
    let mut skipped = 0;
    for t in triplets {
        let pair = index
            .get(t.example_id.as_str())
            .ok_or_else(|| Error::Config(format!("triplet references unknown example {}", t.example_id)))?;
        let Some(truth) = policy.target(t.label, model.max_n()) else {
            skipped += 1;
            continue;
        };
        let pred = predict_k(model, &pair.example, &pair.retrieval)?;
        confusion.record(truth, pred)?;
    }
    Ok(PredictorReport::from_confusion(confusion, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CompressionLabel::K;

    fn classes() -> Vec<CompressionLabel> {
        (0..=5).map(K).collect()
    }

    #[test]
    fn perfect_predictor() {
        let mut m = ConfusionMatrix::new(classes());
        for k in [0, 1, 1, 3, 5] {
            m.record(K(k), K(k)).unwrap();
        }
        assert_eq!(m.accuracy(), 1.0);
        for (i, row) in m.counts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(*c, 0);
                }
            }
        }
        let r = PredictorReport::from_confusion(m, 0);
        assert_eq!(r.within_margin[&0], 1.0);
    }

    #[test]
    fn margins_and_precision() {
        let mut m = ConfusionMatrix::new(classes());
        // |d| = 0, 1, 2, 3
        for (t, p) in [(2, 2), (2, 3), (1, 3), (0, 3)] {
            m.record(K(t), K(p)).unwrap();
        }
        assert_eq!(m.within_margin(0), 0.25);
        assert_eq!(m.within_margin(1), 0.5);
        assert_eq!(m.within_margin(2), 0.75);
        let pc = m.per_class();
        assert_eq!(pc[3].predicted, 3);
        assert_eq!(pc[3].precision, 0.0);
        assert_eq!(pc[2].recall, 0.5);
        assert_eq!(pc[2].precision, 1.0);
        assert!(m.record(CompressionLabel::Unanswerable, K(1)).is_err());
    }
}
