//! Compression-rate prediction: a softmax classifier over query and
//! retrieval features, fixed/random baselines and a remote client.

mod baseline;
mod eval;
mod features;
mod model;
mod remote;
pub mod softmax;
mod train;

pub use baseline::{CompressionRatePredictor, FixedK, RandomK};
pub use eval::{evaluate_predictor, ClassMetrics, ConfusionMatrix, PredictorReport};
pub use features::{extract_features, FeatureSpec, FeatureVector};
pub use model::{predict_k, softmax_predict, PredictionDistribution, PredictorModel, UnanswerablePolicy};
pub use remote::{RemotePredictor, RemotePredictorConfig};
pub use train::{accuracy, mean_loss, train, train_rows, TrainConfig, TrainReport, TrainSummary, TrainingSet};
