//! Label each example with the smallest rank prefix from which the generator
//! answers correctly.
//!
//! Only rank prefixes `D_k = {d_1..d_k}` are ever evaluated. The search runs
//! upward from `k = 1` (or from the closed-book probe `k = 0`) and stops at
//! the first prefix judged correct, so easy queries cost a single call.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compressor::{assemble_prompt, TemplateRegistry, DEFAULT_TEMPLATE};
use crate::dataset::{
    AnnotatedTriplet, CompressionLabel, JoinedDataset, QaExample, RankedDocument, RetrievalSet,
};
use crate::error::{Error, Result};
use crate::generator::{judge_correct, GenerationRequest, Generator, JudgeMode, MemoGenerator};

/// The top `k` documents in rank order.
pub fn select_top_k(retrieval: &RetrievalSet, k: usize) -> Result<&[RankedDocument]> {
    if k > retrieval.len() {
        return Err(Error::OutOfRange {
            k,
            max: retrieval.len(),
        });
    }
    Ok(&retrieval.docs()[..k])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotateOptions {
    pub judge: JudgeMode,
    /// Probe the closed-book prompt before any documents.
    pub include_k0: bool,
    pub template_id: String,
    /// Abort when the fraction of failed examples exceeds this.
    pub max_failure_rate: f64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        AnnotateOptions {
            judge: JudgeMode::ExactMatch,
            include_k0: true,
            template_id: DEFAULT_TEMPLATE.into(),
            max_failure_rate: 0.10,
            threads: 0,
        }
    }
}

/// Label for one example plus the number of generator calls spent on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Search {
    pub label: CompressionLabel,
    pub calls: usize,
}

/// Evaluate a single prefix.
pub fn prefix_correct<G: Generator + ?Sized>(
    registry: &TemplateRegistry,
    example: &QaExample,
    retrieval: &RetrievalSet,
    k: usize,
    client: &G,
    options: &AnnotateOptions,
) -> Result<bool> {
    let docs = select_top_k(retrieval, k)?;
    let prompt = assemble_prompt(registry, example, docs, &options.template_id)?;
    let output = client.generate(&GenerationRequest {
        example_id: &example.id,
        prompt: &prompt,
        golds: &example.gold_answers,
    })?;
    Ok(judge_correct(&output, &example.gold_answers, options.judge))
}

pub fn find_optimal_k<G: Generator + ?Sized>(
    registry: &TemplateRegistry,
    example: &QaExample,
    retrieval: &RetrievalSet,
    client: &G,
    options: &AnnotateOptions,
) -> Result<Search> {
    let start = if options.include_k0 { 0 } else { 1 };
    let mut calls = 0;
    for k in start..=retrieval.len() {
        calls += 1;
        if prefix_correct(registry, example, retrieval, k, client, options)? {
            return Ok(Search {
                label: CompressionLabel::K(k),
                calls,
            });
        }
    }
    Ok(Search {
        label: CompressionLabel::Unanswerable,
        calls,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotationStats {
    pub examples: usize,
    pub annotated: usize,
    pub failed: Vec<String>,
    /// Counts keyed by label token (`"0"`..`"N"`, `"unanswerable"`).
    pub label_histogram: BTreeMap<String, usize>,
    pub unanswerable: usize,
    pub generator_calls: usize,
    pub cache_hits: usize,
    pub cache_hit_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Annotation {
    /// Sorted by example id.
    pub triplets: Vec<AnnotatedTriplet>,
    pub stats: AnnotationStats,
}

/// Annotate every pair in parallel. Generator failures skip the example and
/// are listed in the stats; too many of them abort the run with the partial
/// results attached to the error.
pub fn annotate_dataset<G: Generator + ?Sized>(
    registry: &TemplateRegistry,
    dataset: &JoinedDataset,
    client: &G,
    options: &AnnotateOptions,
) -> Result<Annotation> {
    registry.get(&options.template_id)?;
    let fingerprint = client.fingerprint();
    let client = MemoGenerator::new(client);
    let client = &client;
    let work = || -> Vec<(String, String, Result<Search>)> {
        dataset
            .pairs
            .par_iter()
            .map(|p| {
                (
                    p.example.id.clone(),
                    p.retrieval.query_id().to_owned(),
                    find_optimal_k(registry, &p.example, &p.retrieval, client, options),
                )
            })
            .collect()
    };
    let results = if options.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)
    } else {
        work()
    };

    let mut stats = AnnotationStats {
        examples: dataset.len(),
        ..Default::default()
    };
    let mut triplets = Vec::with_capacity(results.len());
    for (example_id, query_id, result) in results {
        match result {
            Ok(search) => {
                stats.generator_calls += search.calls;
                *stats
                    .label_histogram
                    .entry(search.label.to_string())
                    .or_insert(0) += 1;
                if search.label.is_unanswerable() {
                    stats.unanswerable += 1;
                }
                triplets.push(AnnotatedTriplet {
                    example_id,
                    retrieval_ref: query_id,
                    label: search.label,
                    generator_fingerprint: fingerprint.clone(),
                });
            }
            Err(e) => {
                log::warn!("annotation failed for {example_id}: {e}");
                stats.failed.push(example_id);
            }
        }
    }
    triplets.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    stats.failed.sort();
    stats.annotated = triplets.len();
    let memo = client.stats();
    stats.cache_hits = memo.cache_hits;
    stats.cache_hit_rate = memo.hit_rate();

    let failure_rate = stats.failed.len() as f64 / stats.examples.max(1) as f64;
    if failure_rate > options.max_failure_rate {
        return Err(Error::AnnotationAborted {
            failed: stats.failed.len(),
            total: stats.examples,
            limit: options.max_failure_rate * 100.0,
            partial: triplets,
        });
    }
    Ok(Annotation { triplets, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{join_dataset, Retrievals};
    use crate::generator::{MockOracle, MockOracleConfig};

    fn retrieval(id: &str, evidence_at: Option<usize>) -> RetrievalSet {
        RetrievalSet::from_ordered(
            id,
            (1..=5).map(|r| {
                let text = if Some(r) == evidence_at {
                    "The play was written by Shakespeare in 1600.".to_owned()
                } else {
                    format!("Filler passage number {r} about nothing.")
                };
                (format!("d{r}"), text, 1.0 - r as f64 * 0.1)
            }),
        )
        .unwrap()
    }

    fn example(id: &str) -> QaExample {
        QaExample::new(id, "who wrote Hamlet", vec!["Shakespeare".into()])
    }

    fn mock() -> MockOracle {
        MockOracle::new(MockOracleConfig::default()).unwrap()
    }

    #[test]
    fn top_k_selection() {
        let r = retrieval("q", None);
        let ranks: Vec<usize> = select_top_k(&r, 3).unwrap().iter().map(|d| d.rank).collect();
        assert_eq!(ranks, [1, 2, 3]);
        assert!(select_top_k(&r, 0).unwrap().is_empty());
        assert!(matches!(select_top_k(&r, 6), Err(Error::OutOfRange { k: 6, max: 5 })));
    }

    #[test]
    fn minimal_k_matches_brute_force() {
        let reg = TemplateRegistry::default();
        let opts = AnnotateOptions::default();
        let client = mock();
        for depth in 1..=5 {
            let ex = example("q");
            let r = retrieval("q", Some(depth));
            let search = find_optimal_k(&reg, &ex, &r, &client, &opts).unwrap();
            // brute force over every prefix
            let brute = (0..=5)
                .find(|&k| prefix_correct(&reg, &ex, &r, k, &client, &opts).unwrap())
                .map_or(CompressionLabel::Unanswerable, CompressionLabel::K);
            assert_eq!(search.label, brute);
            assert_eq!(search.label, CompressionLabel::K(depth));
            assert_eq!(search.calls, depth + 1);
        }
    }

    #[test]
    fn no_evidence_is_unanswerable() {
        let s = find_optimal_k(
            &TemplateRegistry::default(),
            &example("q"),
            &retrieval("q", None),
            &mock(),
            &AnnotateOptions::default(),
        )
        .unwrap();
        assert_eq!(s.label, CompressionLabel::Unanswerable);
        assert_eq!(s.calls, 6);
    }

    #[test]
    fn k0_probe_toggle() {
        let mut cfg = MockOracleConfig::default();
        cfg.closed_book_known.insert("q".into());
        let client = MockOracle::new(cfg).unwrap();
        let reg = TemplateRegistry::default();
        let r = retrieval("q", Some(2));
        let on = find_optimal_k(&reg, &example("q"), &r, &client, &AnnotateOptions::default()).unwrap();
        assert_eq!(on.label, CompressionLabel::K(0));
        let off_opts = AnnotateOptions {
            include_k0: false,
            ..Default::default()
        };
        let off = find_optimal_k(&reg, &example("q"), &r, &client, &off_opts).unwrap();
        assert_eq!(off.label, CompressionLabel::K(2));
    }

    struct AlwaysTimeout;

    impl Generator for AlwaysTimeout {
        fn generate(&self, _: &GenerationRequest<'_>) -> Result<String> {
            Err(Error::Transport("timed out".into()))
        }
        fn fingerprint(&self) -> String {
            "timeout".into()
        }
    }

    #[test]
    fn failure_rate_aborts() {
        let examples = vec![example("q1")];
        let retrievals: Retrievals = [retrieval("q1", Some(1))].into_iter().collect();
        let joined = join_dataset(&examples, &retrievals).unwrap();
        let err = annotate_dataset(
            &TemplateRegistry::default(),
            &joined,
            &AlwaysTimeout,
            &AnnotateOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AnnotationAborted { failed: 1, total: 1, .. }));
    }

    #[test]
    fn dataset_stats_and_order() {
        let ids = ["q3", "q1", "q2", "q4"];
        let examples: Vec<QaExample> = ids.iter().map(|i| example(i)).collect();
        let retrievals: Retrievals = ids
            .iter()
            .enumerate()
            .map(|(i, id)| retrieval(id, if i == 3 { None } else { Some(i + 1) }))
            .collect();
        let joined = join_dataset(&examples, &retrievals).unwrap();
        let opts = AnnotateOptions {
            threads: 3,
            ..Default::default()
        };
        let a = annotate_dataset(&TemplateRegistry::default(), &joined, &mock(), &opts).unwrap();
        let order: Vec<&str> = a.triplets.iter().map(|t| t.example_id.as_str()).collect();
        assert_eq!(order, ["q1", "q2", "q3", "q4"]);
        assert_eq!(a.stats.unanswerable, 1);
        assert_eq!(a.stats.label_histogram["unanswerable"], 1);
        // q3 depth1: 2 calls, q1 depth2: 3, q2 depth3: 4, q4 none: 6
        assert_eq!(a.stats.generator_calls, 15);
        assert!(a.stats.generator_calls <= 4 * 6);
    }
}
