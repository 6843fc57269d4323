//! Seeded synthetic QA corpus with a known evidence layout, so annotation,
//! training and evaluation can be checked against ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{save_examples, save_retrievals, CompressionLabel, QaExample, RetrievalSet};
use crate::error::{Error, Result};
use crate::generator::MockOracleConfig;

const FILLER: &[&str] = &[
    "stone", "market", "winter", "garden", "bridge", "lantern", "harvest", "valley", "copper", "window",
    "meadow", "signal", "orchard", "pottery", "canvas", "thunder", "ribbon", "quarry", "compass", "timber",
    "saddle", "chimney", "granite", "pebble", "velvet", "anchor", "cellar", "blanket", "furnace", "kettle",
    "ladder", "mirror", "needle", "parcel", "riddle", "shelter", "tunnel", "violet", "wagon", "basket",
    "candle", "desert", "engine", "feather", "glacier", "hammer", "island", "jacket", "kitchen", "meteor",
];

const ENTITY_HEADS: &[&str] = &["Bren", "Cor", "Dun", "Esk", "Fal", "Gor", "Hal", "Ister", "Jor", "Kel", "Lun", "Mor"];
const ENTITY_TAILS: &[&str] = &["mora", "dell", "vik", "stan", "heim", "port", "wick", "gard", "holm", "ford"];
const ANSWER_HEADS: &[&str] = &["vel", "kor", "mip", "dras", "ulm", "tesh", "quor", "bain", "zel", "orv", "pyx", "sol"];
const ANSWER_TAILS: &[&str] = &["ath", "ine", "osk", "umb", "irel", "ax", "oth", "yne", "esk", "ari"];

struct Relation {
    query: &'static str,
    fact: &'static str,
}

const RELATIONS: &[Relation] = &[
    Relation { query: "who founded {e}", fact: "{e} was founded by {a}." },
    Relation { query: "what is the capital of {e}", fact: "The capital of {e} is {a}." },
    Relation { query: "when was {e} established", fact: "{e} was established during the reign of {a}." },
    Relation { query: "where is {e} located", fact: "{e} is located in the province of {a}." },
    Relation { query: "how do locals call {e}", fact: "Locals call {e} by the name {a}." },
    Relation { query: "why is {e} famous", fact: "{e} is famous because of {a}." },
    Relation { query: "which river flows through {e}", fact: "The river {a} flows through {e}." },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub size: usize,
    pub max_n: usize,
    /// Relative mass of the first evidence position: index 0 is "known
    /// closed-book", `1..=max_n` is the rank of the first gold document and
    /// `max_n + 1` means no document holds the answer.
    pub depth_weights: Vec<f64>,
    /// Copied into the emitted mock oracle configuration.
    pub confusion_threshold: Option<usize>,
    /// Chance of a second gold document somewhere below the first.
    pub extra_evidence_prob: f64,
    /// Fraction of examples assigned to the test split.
    pub holdout_fraction: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            size: 200,
            max_n: 5,
            depth_weights: vec![0.0, 0.18, 0.18, 0.18, 0.18, 0.18, 0.10],
            confusion_threshold: None,
            extra_evidence_prob: 0.2,
            holdout_fraction: 0.3,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(Error::Config("max_n must be at least 1".into()));
        }
        if self.depth_weights.len() != self.max_n + 2 {
            return Err(Error::Config(format!(
                "depth_weights needs {} entries (closed-book, ranks 1..={}, none), got {}",
                self.max_n + 2,
                self.max_n,
                self.depth_weights.len()
            )));
        }
        if let Some(w) = self.depth_weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Config(format!("depth weight {w} is negative or not finite")));
        }
        if self.depth_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("depth_weights have no mass".into()));
        }
        for (name, p) in [("extra_evidence_prob", self.extra_evidence_prob), ("holdout_fraction", self.holdout_fraction)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub example_id: String,
    /// Ranks of documents holding the gold answer, ascending.
    pub evidence_ranks: Vec<usize>,
    pub closed_book: bool,
    pub intended_label: CompressionLabel,
    pub split: Split,
}

impl PlanEntry {
    /// Minimal correct prefix under the mock oracle's rules, derived from
    /// the layout alone.
    pub fn label_for(&self, confusion_threshold: Option<usize>, include_k0: bool, n: usize) -> CompressionLabel {
        if include_k0 && self.closed_book {
            return CompressionLabel::K(0);
        }
        for k in 1..=n {
            let golds = self.evidence_ranks.iter().filter(|r| **r <= k).count();
            let confused = confusion_threshold.is_some_and(|c| k - golds >= c);
            if golds > 0 && !confused {
                return CompressionLabel::K(k);
            }
        }
        CompressionLabel::Unanswerable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPlan {
    pub seed: u64,
    pub spec: CorpusSpec,
    /// Intended-label histogram keyed by label token.
    pub label_counts: BTreeMap<String, usize>,
    pub entries: Vec<PlanEntry>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub examples: Vec<QaExample>,
    pub retrievals: Vec<RetrievalSet>,
    pub plan: CorpusPlan,
    pub mock: MockOracleConfig,
}

fn word(rng: &mut ChaCha8Rng, heads: &[&str], tails: &[&str]) -> String {
    format!("{}{}", heads.choose(rng).unwrap(), tails.choose(rng).unwrap())
}

fn filler_sentence(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(6..=10);
    let words: Vec<&str> = (0..len).map(|_| *FILLER.choose(rng).unwrap()).collect();
    let mut s = words.join(" ");
    s[..1].make_ascii_uppercase();
    s.push('.');
    s
}

fn fill(template: &str, entity: &str, answer: &str) -> String {
    template.replace("{e}", entity).replace("{a}", answer)
}

fn jitter(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-0.01..0.01)
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Build a corpus. Ranks above the first gold document hold same-relation
/// distractors about other entities and score high; ranks below it hold
/// filler (or an extra gold document) and score markedly lower.
pub fn make_synthetic_corpus(spec: &CorpusSpec, seed: u64) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let n = spec.max_n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth_dist = WeightedIndex::new(&spec.depth_weights).map_err(|e| Error::Config(e.to_string()))?;
    let width = spec.size.saturating_sub(1).to_string().len().max(4);

    let mut examples = Vec::with_capacity(spec.size);
    let mut retrievals = Vec::with_capacity(spec.size);
    let mut entries = Vec::with_capacity(spec.size);
    let mut closed_book_known = BTreeSet::new();
    for i in 0..spec.size {
        let id = format!("syn-{i:0width$}");
        let relation = RELATIONS.choose(&mut rng).unwrap();
        let entity = word(&mut rng, ENTITY_HEADS, ENTITY_TAILS);
        let answer = word(&mut rng, ANSWER_HEADS, ANSWER_TAILS);

        let bucket = depth_dist.sample(&mut rng);
        let closed_book = bucket == 0;
        let first = match bucket {
            0 => Some(rng.random_range(1..=n)),
            b if b <= n => Some(b),
            _ => None,
        };
        let mut evidence_ranks: Vec<usize> = first.into_iter().collect();
        if let Some(d) = first {
            if d < n && rng.random_bool(spec.extra_evidence_prob) {
                evidence_ranks.push(rng.random_range(d + 1..=n));
            }
        }
        // without evidence the retriever finds only distractors
        let high_region = first.unwrap_or(0);

        let mut docs = Vec::with_capacity(n);
        let base = if first.is_some() { 0.85 } else { 0.55 };
        for rank in 1..=n {
            let text = if evidence_ranks.contains(&rank) {
                format!("{} {}", fill(relation.fact, &entity, &answer), filler_sentence(&mut rng))
            } else if rank < high_region || first.is_none() {
                let other = loop {
                    let e = word(&mut rng, ENTITY_HEADS, ENTITY_TAILS);
                    if e != entity {
                        break e;
                    }
                };
                let other_answer = loop {
                    let a = word(&mut rng, ANSWER_HEADS, ANSWER_TAILS);
                    if a != answer {
                        break a;
                    }
                };
                format!("{} {}", fill(relation.fact, &other, &other_answer), filler_sentence(&mut rng))
            } else {
                format!("{} {}", filler_sentence(&mut rng), filler_sentence(&mut rng))
            };
            let score = if rank <= high_region || first.is_none() {
                base - 0.03 * (rank - 1) as f64
            } else {
                0.45 - 0.03 * (rank - high_region - 1) as f64
            };
            docs.push((format!("{id}-d{rank}"), text, round4(score + jitter(&mut rng))));
        }

        if closed_book {
            closed_book_known.insert(id.clone());
        }
        let query = fill(relation.query, &entity, &answer);
        examples.push(QaExample::new(id.clone(), query, vec![answer]));
        retrievals.push(RetrievalSet::from_ordered(id.clone(), docs).expect("n >= 1 documents"));
        entries.push(PlanEntry {
            example_id: id,
            evidence_ranks,
            closed_book,
            intended_label: CompressionLabel::Unanswerable,
            split: Split::Train,
        });
    }

    let mut order: Vec<usize> = (0..spec.size).collect();
    order.shuffle(&mut rng);
    let test = (spec.holdout_fraction * spec.size as f64).round() as usize;
    for &i in &order[..test] {
        entries[i].split = Split::Test;
    }

    let mut label_counts = BTreeMap::new();
    for e in &mut entries {
        e.intended_label = e.label_for(spec.confusion_threshold, true, n);
        *label_counts.entry(e.intended_label.to_string()).or_insert(0) += 1;
    }
    Ok(SyntheticCorpus {
        examples,
        retrievals,
        plan: CorpusPlan {
            seed,
            spec: spec.clone(),
            label_counts,
            entries,
        },
        mock: MockOracleConfig {
            confusion_threshold: spec.confusion_threshold,
            closed_book_known,
            seed,
            ..Default::default()
        },
    })
}

impl SyntheticCorpus {
    pub fn split_examples(&self, split: Split) -> Vec<QaExample> {
        self.examples
            .iter()
            .zip(&self.plan.entries)
            .filter(|(_, e)| e.split == split)
            .map(|(x, _)| x.clone())
            .collect()
    }

    /// Write `examples.jsonl`, `train_examples.jsonl`, `test_examples.jsonl`,
    /// `retrievals.jsonl`, `plan.json` and `mock.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_examples(&dir.join("examples.jsonl"), &self.examples)?;
        save_examples(&dir.join("train_examples.jsonl"), &self.split_examples(Split::Train))?;
        save_examples(&dir.join("test_examples.jsonl"), &self.split_examples(Split::Test))?;
        save_retrievals(&dir.join("retrievals.jsonl"), &self.retrievals)?;
        super::write_json(&dir.join("plan.json"), &self.plan)?;
        super::write_json(&dir.join("mock.json"), &self.mock)
    }
}
