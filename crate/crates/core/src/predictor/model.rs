use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureSpec, FeatureVector};
use super::softmax::{argmax, logits, softmax};
use super::train::{TrainConfig, TrainSummary};
use crate::dataset::{CompressionLabel, QaExample, RetrievalSet};
use crate::error::{Error, Result};

/// How Unanswerable annotations enter the class set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnanswerablePolicy {
    /// Skip those triplets; classes are `0..=N`.
    #[default]
    Drop,
    /// Train them as `K(N)`.
    MapToN,
    /// Extra class after `K(N)`.
    KeepClass,
}

impl UnanswerablePolicy {
    pub fn class_list(self, max_n: usize) -> Vec<CompressionLabel> {
        let mut classes: Vec<CompressionLabel> = (0..=max_n).map(CompressionLabel::K).collect();
        if self == UnanswerablePolicy::KeepClass {
            classes.push(CompressionLabel::Unanswerable);
        }
        classes
    }

    /// The training target for `label`, or `None` when it is dropped.
    pub fn target(self, label: CompressionLabel, max_n: usize) -> Option<CompressionLabel> {
        match (label, self) {
            (CompressionLabel::K(k), _) => Some(CompressionLabel::K(k.min(max_n))),
            (CompressionLabel::Unanswerable, UnanswerablePolicy::Drop) => None,
            (CompressionLabel::Unanswerable, UnanswerablePolicy::MapToN) => Some(CompressionLabel::K(max_n)),
            (CompressionLabel::Unanswerable, UnanswerablePolicy::KeepClass) => Some(CompressionLabel::Unanswerable),
        }
    }
}

/// Linear softmax classifier over [`FeatureVector`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub feature_spec_hash: String,
    pub feature_spec: FeatureSpec,
    pub class_list: Vec<CompressionLabel>,
    /// Row-major, `class_list.len() × feature_spec.dim()`.
    pub weights: Vec<f64>,
    pub train_config: TrainConfig,
    #[serde(default)]
    pub metrics: Option<TrainSummary>,
}

impl PredictorModel {
    pub fn zeros(spec: FeatureSpec, class_list: Vec<CompressionLabel>, train_config: TrainConfig) -> Self {
        PredictorModel {
            feature_spec_hash: spec.hash(),
            weights: vec![0.0; class_list.len() * spec.dim()],
            feature_spec: spec,
            class_list,
            train_config,
            metrics: None,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_list.len()
    }

    pub fn max_n(&self) -> usize {
        self.feature_spec.max_n
    }

    pub fn class_index(&self, label: CompressionLabel) -> Option<usize> {
        self.class_list.iter().position(|c| *c == label)
    }

    pub fn features(&self, example: &QaExample, retrieval: &RetrievalSet) -> FeatureVector {
        extract_features(self.feature_spec, example, retrieval)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_spec_hash != self.feature_spec.hash() {
            return Err(Error::IncompatibleModel {
                model: self.feature_spec_hash.clone(),
                features: self.feature_spec.hash(),
            });
        }
        if self.weights.len() != self.num_classes() * self.feature_spec.dim() {
            return Err(Error::Config(format!(
                "weight matrix has {} entries, expected {} x {}",
                self.weights.len(),
                self.num_classes(),
                self.feature_spec.dim()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("non-finite weight".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|source| Error::Json { line: 0, source })?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: PredictorModel =
            serde_json::from_str(&text).map_err(|source| Error::Json { line: source.line(), source })?;
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDistribution {
    pub classes: Vec<CompressionLabel>,
    pub probs: Vec<f64>,
}

impl PredictionDistribution {
    /// Most probable class. Classes are ordered by k, so the first maximum is
    /// the smallest k.
    pub fn label(&self) -> CompressionLabel {
        self.classes[argmax(&self.probs)]
    }
}

pub fn softmax_predict(model: &PredictorModel, x: &FeatureVector) -> Result<PredictionDistribution> {
    let hash = x.spec.hash();
    if hash != model.feature_spec_hash {
        return Err(Error::IncompatibleModel {
            model: model.feature_spec_hash.clone(),
            features: hash,
        });
    }
    let z = logits(&model.weights, model.num_classes(), &x.values);
    Ok(PredictionDistribution {
        classes: model.class_list.clone(),
        probs: softmax(&z),
    })
}

pub fn predict_k(model: &PredictorModel, example: &QaExample, retrieval: &RetrievalSet) -> Result<CompressionLabel> {
    Ok(softmax_predict(model, &model.features(example, retrieval))?.label())
}
