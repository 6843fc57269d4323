use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{MethodSpec, PipelineConfig, PredictorSpec};
use crate::compressor::{compress, only_doc_select, TemplateRegistry};
use crate::dataset::{join_dataset, load_examples, load_retrievals, load_triplets, CompressionLabel, JoinedDataset};
use crate::error::{Error, Result};
use crate::generator::{GenerationRequest, Generator, MemoGenerator, Prompt};
use crate::metrics::{
    aggregate, answer_relevance, exact_match, reports_to_csv, rouge_l, rouge_n, specificity_split, token_f1,
    EvalReport, ExampleResult, QuerySpecificity,
};
use crate::predictor::CompressionRatePredictor;

/// Number of top documents used to classify query specificity.
const SPLIT_DOCS: usize = 5;

/// Inputs shared by every method of a run.
pub struct RunData {
    pub dataset: JoinedDataset,
    /// Annotated labels by example id.
    pub labels: Option<HashMap<String, CompressionLabel>>,
    pub registry: TemplateRegistry,
    splits: Vec<QuerySpecificity>,
}

impl RunData {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let examples = load_examples(&config.datasets.examples, config.datasets.format)?;
        let retrievals = load_retrievals(&config.datasets.retrievals)?;
        let dataset = join_dataset(&examples, &retrievals)?;
        let labels = match &config.datasets.triplets {
            Some(path) => Some(
                load_triplets(path, Some(dataset.max_n()))?
                    .into_iter()
                    .map(|t| (t.example_id, t.label))
                    .collect(),
            ),
            None => None,
        };
        Ok(Self::new(dataset, labels, config.registry()))
    }

    pub fn new(dataset: JoinedDataset, labels: Option<HashMap<String, CompressionLabel>>, registry: TemplateRegistry) -> Self {
        let splits = dataset
            .pairs
            .iter()
            .map(|p| {
                let rel = answer_relevance(&p.retrieval, &p.example.gold_answers, SPLIT_DOCS);
                specificity_split(&rel).expect("retrieval sets are non-empty")
            })
            .collect();
        RunData {
            dataset,
            labels,
            registry,
            splits,
        }
    }
}

/// One context to generate from.
#[derive(Debug, Clone)]
pub struct Selected {
    pub k: usize,
    pub prompt: Prompt,
    pub token_count: usize,
}

/// How a method picks the context of each example.
pub enum Selector<'a> {
    Label(&'a dyn Fn(usize) -> Result<CompressionLabel>),
    OnlyDoc,
}

pub fn select_contexts(data: &RunData, config: &PipelineConfig, selector: &Selector<'_>) -> Result<Vec<Selected>> {
    // sequential, so seeded predictors see a fixed call order
    let mut out = Vec::with_capacity(data.dataset.len());
    for (i, pair) in data.dataset.pairs.iter().enumerate() {
        let selected = match selector {
            Selector::Label(f) => {
                let c = compress(&data.registry, &pair.example, &pair.retrieval, f(i)?, config.fallback, &config.template)?;
                Selected {
                    k: c.k,
                    prompt: c.prompt,
                    token_count: c.token_count,
                }
            }
            Selector::OnlyDoc => {
                let c = only_doc_select(&data.registry, &pair.example, &pair.retrieval, &config.template)?;
                Selected {
                    k: 1,
                    prompt: c.prompt,
                    token_count: c.token_count,
                }
            }
        };
        out.push(selected);
    }
    Ok(out)
}

pub fn score_output(example_id: &str, output: &str, golds: &[String], selected: &Selected, split: QuerySpecificity) -> ExampleResult {
    let best = |f: &dyn Fn(&str) -> f64| golds.iter().map(|g| f(g)).fold(0.0, f64::max);
    ExampleResult {
        example_id: example_id.to_owned(),
        k: selected.k,
        token_count: selected.token_count,
        em: exact_match(output, golds),
        f1: token_f1(output, golds),
        rouge1: best(&|g| rouge_n(output, g, 1).f),
        rouge2: best(&|g| rouge_n(output, g, 2).f),
        rouge_l: best(&|g| rouge_l(output, g).f),
        split: Some(split),
    }
}

/// Generate for every selected context (in parallel) and score the outputs.
pub fn generate_and_score<G: Generator + ?Sized>(data: &RunData, contexts: &[Selected], client: &G) -> Result<Vec<ExampleResult>> {
    data.dataset
        .pairs
        .par_iter()
        .zip(contexts)
        .zip(&data.splits)
        .map(|((pair, selected), split)| {
            let output = client.generate(&GenerationRequest {
                example_id: &pair.example.id,
                prompt: &selected.prompt,
                golds: &pair.example.gold_answers,
            })?;
            Ok(score_output(&pair.example.id, &output, &pair.example.gold_answers, selected, *split))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodBudget {
    pub method: String,
    pub examples: usize,
    pub generator_requests: usize,
    pub cache_hits: usize,
}

/// Everything needed to reproduce a run's tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub generator: String,
    pub judge: String,
    pub template: String,
    pub examples: usize,
    pub dropped_examples: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub predictors: BTreeMap<String, String>,
    pub methods: Vec<MethodBudget>,
    /// Sum of per-method requests; `cache_hits` of them never reached the backend.
    pub generator_requests: usize,
    pub cache_hits: usize,
    pub backend_calls: usize,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub reports: Vec<EvalReport>,
    pub results: Vec<(String, Vec<ExampleResult>)>,
    pub manifest: Manifest,
}

fn describe(spec: &PredictorSpec) -> String {
    match spec {
        PredictorSpec::Fixed { k, .. } => format!("fixed:{k}"),
        PredictorSpec::Random { seed, min, max, .. } => format!("random:{min}..={max}@{seed}"),
        PredictorSpec::Model { path, .. } => match crate::predictor::PredictorModel::load(path) {
            Ok(m) => format!("model:{}", m.feature_spec_hash),
            Err(_) => "model".into(),
        },
        PredictorSpec::Remote { config, .. } => format!("remote:{}", config.endpoint_url),
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Validate the configuration, build every component, then run each
/// method in order against one shared response cache.
pub fn evaluate_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate(true)?;
    let data = RunData::load(config)?;
    let max_n = data.dataset.max_n();
    let mut predictors: HashMap<&str, Box<dyn CompressionRatePredictor>> = HashMap::new();
    let mut described = BTreeMap::new();
    let mut seeds = BTreeMap::new();
    for spec in &config.predictors {
        let p = spec.build(max_n)?;
        described.insert(spec.name().to_owned(), describe(spec));
        if let PredictorSpec::Random { seed, .. } = spec {
            seeds.insert(spec.name().to_owned(), *seed);
        }
        predictors.insert(spec.name(), p);
    }
    let generator = config.generator.build()?;
    let client = MemoGenerator::new(generator.as_ref());

    let mut reports = Vec::with_capacity(config.methods.len());
    let mut results = Vec::with_capacity(config.methods.len());
    let mut budgets = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let before = client.stats();
        let pairs = &data.dataset.pairs;
        let contexts = match method {
            MethodSpec::NoRetrieval { .. } => {
                select_contexts(&data, config, &Selector::Label(&|_| Ok(CompressionLabel::K(0))))?
            }
            MethodSpec::OnlyDoc { .. } => select_contexts(&data, config, &Selector::OnlyDoc)?,
            MethodSpec::Oracle { .. } => {
                let labels = data.labels.as_ref().expect("validated: oracle has triplets");
                let lookup = |i: usize| {
                    let id = &pairs[i].example.id;
                    Ok(labels.get(id).copied().unwrap_or_else(|| {
                        log::warn!("no annotated label for {id}; applying the unanswerable fallback");
                        CompressionLabel::Unanswerable
                    }))
                };
                select_contexts(&data, config, &Selector::Label(&lookup))?
            }
            MethodSpec::Predictor { predictor, .. } => {
                let p = &predictors[predictor.as_str()];
                let predict = |i: usize| p.predict(&pairs[i].example, &pairs[i].retrieval);
                select_contexts(&data, config, &Selector::Label(&predict))?
            }
        };
        let method_results = generate_and_score(&data, &contexts, &client)?;
        let after = client.stats();
        budgets.push(MethodBudget {
            method: method.name().to_owned(),
            examples: method_results.len(),
            generator_requests: after.requests - before.requests,
            cache_hits: after.cache_hits - before.cache_hits,
        });
        reports.push(aggregate(method.name(), &method_results));
        results.push((method.name().to_owned(), method_results));
    }

    let stats = client.stats();
    let manifest = Manifest {
        config_hash: config.hash(),
        generator: generator.fingerprint(),
        judge: config.judge.to_string(),
        template: config.template.clone(),
        examples: data.dataset.len(),
        dropped_examples: data.dataset.dropped.clone(),
        seeds,
        predictors: described,
        generator_requests: budgets.iter().map(|b| b.generator_requests).sum(),
        cache_hits: stats.cache_hits,
        backend_calls: stats.requests - stats.cache_hits,
        methods: budgets,
        outputs: ["table.csv", "report.json", "results.jsonl", "manifest.json"].map(String::from).to_vec(),
    };
    Ok(PipelineOutput {
        reports,
        results,
        manifest,
    })
}

impl PipelineOutput {
    pub fn table_csv(&self) -> String {
        reports_to_csv(&self.reports)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join("table.csv"), &self.table_csv())?;
        super::write_json(&dir.join("report.json"), &self.reports)?;
        let mut lines = String::new();
        for (method, rs) in &self.results {
            for r in rs {
                let row = serde_json::json!({ "method": method, "result": r });
                lines.push_str(&row.to_string());
                lines.push('\n');
            }
        }
        write_text(&dir.join("results.jsonl"), &lines)?;
        super::write_json(&dir.join("manifest.json"), &self.manifest)
    }
}

/// [`evaluate_pipeline`] followed by writing every output under
/// `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let out = evaluate_pipeline(config)?;
    out.write_to(&config.output_dir)?;
    Ok(out)
}
