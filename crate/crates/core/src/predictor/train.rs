use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureSpec};
use super::model::{PredictorModel, UnanswerablePolicy};
use super::softmax::{argmax, cross_entropy, cross_entropy_sum, logits};
use crate::dataset::{AnnotatedTriplet, JoinedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Fraction of all steps over which the step size ramps linearly to
    /// `learning_rate`.
    pub warmup_fraction: f64,
    pub seed: u64,
    pub l2_penalty: f64,
    pub unanswerable_policy: UnanswerablePolicy,
    /// Feature layout size; defaults to the largest retrieval set.
    pub max_n: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            batch_size: 8,
            epochs: 100,
            warmup_fraction: 0.1,
            seed: 0,
            l2_penalty: 1e-4,
            unanswerable_policy: UnanswerablePolicy::Drop,
            max_n: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // a zero step size is allowed and leaves the weights untouched
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config(format!("warmup_fraction must lie in [0, 1], got {}", self.warmup_fraction)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.l2_penalty.is_nan() || self.l2_penalty < 0.0 {
            return Err(Error::Config("l2_penalty must be >= 0".into()));
        }
        Ok(())
    }
}

/// Stored in the model file under `metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub examples: usize,
    pub dropped: usize,
    pub steps: usize,
    pub final_train_accuracy: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-example cross-entropy before any update.
    pub initial_loss: f64,
    /// Mean per-example cross-entropy after each epoch.
    pub epoch_losses: Vec<f64>,
    pub summary: TrainSummary,
}

/// Feature rows paired with class indices.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub spec: FeatureSpec,
    pub classes: Vec<crate::dataset::CompressionLabel>,
    pub rows: Vec<(Vec<f64>, usize)>,
    pub dropped: usize,
}

impl TrainingSet {
    pub fn build(
        triplets: &[AnnotatedTriplet],
        dataset: &JoinedDataset,
        spec: FeatureSpec,
        policy: UnanswerablePolicy,
    ) -> Result<Self> {
        let index = dataset.index();
        let classes = policy.class_list(spec.max_n);
        let mut rows = Vec::with_capacity(triplets.len());
        let mut dropped = 0;
        for t in triplets {
            let pair = index.get(t.example_id.as_str()).ok_or_else(|| {
                Error::Config(format!("triplet references unknown example {}", t.example_id))
            })?;
            if pair.retrieval.query_id() != t.retrieval_ref {
                return Err(Error::Config(format!(
                    "triplet {} references retrieval {} but the dataset joins {}",
                    t.example_id,
                    t.retrieval_ref,
                    pair.retrieval.query_id()
                )));
            }
            let Some(target) = policy.target(t.label, spec.max_n) else {
                dropped += 1;
                continue;
            };
            let class = classes.iter().position(|c| *c == target).expect("target is in the class list");
            rows.push((extract_features(spec, &pair.example, &pair.retrieval).values, class));
        }
        Ok(TrainingSet { spec, classes, rows, dropped })
    }

    fn refs(&self) -> Vec<(&[f64], usize)> {
        self.rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect()
    }
}

pub fn mean_loss(weights: &[f64], classes: usize, rows: &[(&[f64], usize)]) -> f64 {
    let total: f64 = rows.iter().map(|(x, y)| cross_entropy(&logits(weights, classes, x), *y)).sum();
    total / rows.len().max(1) as f64
}

pub fn accuracy(weights: &[f64], classes: usize, rows: &[(&[f64], usize)]) -> f64 {
    let hits = rows.iter().filter(|(x, y)| argmax(&logits(weights, classes, x)) == *y).count();
    hits as f64 / rows.len().max(1) as f64
}

/// Minibatch SGD on the mean batch cross-entropy plus `l2_penalty·‖W‖²`,
/// from zero weights, shuffling with a seeded ChaCha stream each epoch.
pub fn train(triplets: &[AnnotatedTriplet], dataset: &JoinedDataset, config: &TrainConfig) -> Result<(PredictorModel, TrainReport)> {
    config.validate()?;
    let spec = FeatureSpec::new(config.max_n.unwrap_or_else(|| dataset.max_n()));
    let set = TrainingSet::build(triplets, dataset, spec, config.unanswerable_policy)?;
    train_rows(&set, config)
}

pub fn train_rows(set: &TrainingSet, config: &TrainConfig) -> Result<(PredictorModel, TrainReport)> {
    config.validate()?;
    let mut seen: Vec<usize> = set.rows.iter().map(|(_, y)| *y).collect();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() < 2 {
        return Err(Error::Training(format!(
            "need at least two distinct labels, found {} over {} examples",
            seen.len(),
            set.rows.len()
        )));
    }

    let mut model = PredictorModel::zeros(set.spec, set.classes.clone(), config.clone());
    let classes = model.num_classes();
    let rows = set.refs();
    let n = rows.len();
    let batches_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = batches_per_epoch * config.epochs;
    let warmup_steps = (config.warmup_fraction * total_steps as f64).ceil() as usize;

    let initial_loss = mean_loss(&model.weights, classes, &rows);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; model.weights.len()];
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| rows[i]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = cross_entropy_sum(&model.weights, classes, &batch, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss {loss} at epoch {epoch}, step {step}; max |w| = {}",
                    model.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()))
                )));
            }
            let ramp = if warmup_steps == 0 {
                1.0
            } else {
                ((step + 1) as f64 / warmup_steps as f64).min(1.0)
            };
            let eta = config.learning_rate * ramp;
            let scale = 1.0 / batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= eta * (g * scale + 2.0 * config.l2_penalty * *w);
            }
            step += 1;
        }
        let loss = mean_loss(&model.weights, classes, &rows);
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss after epoch {epoch}")));
        }
        log::debug!("epoch {epoch}: loss {loss:.6}");
        epoch_losses.push(loss);
    }

    let summary = TrainSummary {
        examples: n,
        dropped: set.dropped,
        steps: step,
        final_train_accuracy: accuracy(&model.weights, classes, &rows),
        final_loss: epoch_losses.last().copied().unwrap_or(initial_loss),
    };
    model.metrics = Some(summary.clone());
    Ok((
        model,
        TrainReport {
            initial_loss,
            epoch_losses,
            summary,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CompressionLabel;

    /// Rows whose class is the bucketed value of the first feature.
    fn bucketed(n: usize, spec: FeatureSpec) -> TrainingSet {
        let dim = spec.dim();
        let rows = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                let mut x = vec![0.0; dim];
                x[0] = s;
                x[dim - 1] = 1.0;
                (x, ((s * 3.0) as usize).min(2))
            })
            .collect();
        TrainingSet {
            spec,
            classes: (0..=spec.max_n).map(CompressionLabel::K).collect(),
            rows,
            dropped: 0,
        }
    }

    #[test]
    fn initial_loss_is_log_classes() {
        let set = bucketed(30, FeatureSpec::new(5));
        let (_, report) = train_rows(&set, &TrainConfig { epochs: 1, ..Default::default() }).unwrap();
        assert!((report.initial_loss - 6f64.ln()).abs() < 1e-12);
        assert!((report.initial_loss - 1.7918).abs() < 1e-4);
    }

    #[test]
    fn zero_step_size_keeps_weights() {
        let set = bucketed(30, FeatureSpec::new(5));
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 5,
            ..Default::default()
        };
        let (model, _) = train_rows(&set, &cfg).unwrap();
        assert!(model.weights.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn single_class_rejected() {
        let mut set = bucketed(10, FeatureSpec::new(5));
        set.rows.iter_mut().for_each(|r| r.1 = 1);
        assert!(matches!(train_rows(&set, &TrainConfig::default()), Err(Error::Training(_))));
    }

    #[test]
    fn invalid_config_rejected() {
        let set = bucketed(10, FeatureSpec::new(5));
        for cfg in [
            TrainConfig { learning_rate: -1.0, ..Default::default() },
            TrainConfig { warmup_fraction: 1.5, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(matches!(train_rows(&set, &cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn learns_and_is_deterministic() {
        let set = bucketed(60, FeatureSpec::new(5));
        let cfg = TrainConfig {
            learning_rate: 0.5,
            epochs: 200,
            l2_penalty: 0.0,
            seed: 3,
            ..Default::default()
        };
        let (a, report) = train_rows(&set, &cfg).unwrap();
        let (b, _) = train_rows(&set, &cfg).unwrap();
        assert_eq!(a.weights, b.weights);
        assert!(report.summary.final_train_accuracy >= 0.9, "{:?}", report.summary);
        assert!(report.epoch_losses.last().unwrap() < &report.initial_loss);
        let (c, _) = train_rows(&set, &TrainConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn divergence_is_reported() {
        let mut set = bucketed(20, FeatureSpec::new(5));
        set.rows.iter_mut().for_each(|r| r.0[0] *= 1e300);
        let cfg = TrainConfig {
            learning_rate: 1e10,
            ..Default::default()
        };
        assert!(matches!(train_rows(&set, &cfg), Err(Error::Training(_))));
    }
}
