use std::ops::RangeInclusive;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{predict_k, PredictorModel};
use crate::dataset::{CompressionLabel, QaExample, RetrievalSet};
use crate::error::{Error, Result};

/// Anything that maps a query and its retrieval set to a compression rate.
pub trait CompressionRatePredictor: Send + Sync {
    fn predict(&self, example: &QaExample, retrieval: &RetrievalSet) -> Result<CompressionLabel>;
}

impl CompressionRatePredictor for PredictorModel {
    fn predict(&self, example: &QaExample, retrieval: &RetrievalSet) -> Result<CompressionLabel> {
        predict_k(self, example, retrieval)
    }
}

/// Always the same `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedK(usize);

impl FixedK {
    pub fn new(k: usize, max_n: usize) -> Result<Self> {
        if k > max_n {
            return Err(Error::OutOfRange { k, max: max_n });
        }
        Ok(FixedK(k))
    }

    pub fn k(&self) -> usize {
        self.0
    }
}

impl CompressionRatePredictor for FixedK {
    fn predict(&self, _: &QaExample, _: &RetrievalSet) -> Result<CompressionLabel> {
        Ok(CompressionLabel::K(self.0))
    }
}

/// Uniform draws over a range of `k`, reproducible from the seed. Each call
/// advances one shared stream, so the draw sequence depends on call order.
#[derive(Debug)]
pub struct RandomK {
    range: RangeInclusive<usize>,
    rng: Mutex<ChaCha8Rng>,
}

impl RandomK {
    pub fn new(seed: u64, range: RangeInclusive<usize>, max_n: usize) -> Result<Self> {
        if range.is_empty() || *range.start() < 1 || *range.end() > max_n {
            return Err(Error::Config(format!(
                "random k range {}..={} must lie within 1..={max_n}",
                range.start(),
                range.end()
            )));
        }
        Ok(RandomK {
            range,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        })
    }

    pub fn draw(&self) -> usize {
        self.rng.lock().expect("rng lock").random_range(self.range.clone())
    }
}

impl CompressionRatePredictor for RandomK {
    fn predict(&self, _: &QaExample, _: &RetrievalSet) -> Result<CompressionLabel> {
        Ok(CompressionLabel::K(self.draw()))
    }
}
