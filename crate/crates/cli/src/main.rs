use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adacomp_core::dataset::{join_dataset, load_examples, load_retrievals, load_triplets, save_triplets, ExampleFormat};
use adacomp_core::generator::HttpGeneratorConfig;
use adacomp_core::harness::{
    interior_peak, make_synthetic_corpus, read_json, report_confusion, run_pipeline, sweep_csv, sweep_document_count,
    write_json, CorpusSpec, GeneratorConfig, PipelineConfig,
};
use adacomp_core::predictor::{evaluate_predictor, train, PredictorModel, PredictorReport, TrainConfig};
use adacomp_core::{annotate_dataset, AnnotateOptions, Error, JudgeMode, MockOracleConfig, TemplateRegistry};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adacomp", version, about = "Adaptive context compression for retrieval-augmented QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Mock,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Qa,
    Conversational,
}

impl From<Format> for ExampleFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Qa => ExampleFormat::Qa,
            Format::Conversational => ExampleFormat::Conversational,
        }
    }
}

#[derive(clap::Args)]
struct DataArgs {
    #[arg(long)]
    examples: PathBuf,
    #[arg(long)]
    retrievals: PathBuf,
    #[arg(long, value_enum, default_value = "qa")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus with a matching mock oracle config.
    MakeCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corpus spec as JSON; flags below override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        max_n: Option<usize>,
        /// Comma separated, `max_n + 2` entries.
        #[arg(long, value_delimiter = ',')]
        depth_weights: Option<Vec<f64>>,
        #[arg(long)]
        confusion_threshold: Option<usize>,
    },
    /// Label each example with its smallest sufficient document count.
    Annotate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "mock")]
        generator: GeneratorKind,
        /// Mock oracle or HTTP generator config (JSON).
        #[arg(long)]
        generator_config: PathBuf,
        /// `em`, `f1` or `f1:<threshold>`.
        #[arg(long, default_value = "em")]
        judge: JudgeMode,
        #[arg(long, value_enum, default_value = "on")]
        k0: Switch,
        #[arg(long, default_value = "default")]
        template: String,
        #[arg(long, default_value_t = 0.10)]
        max_failure_rate: f64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Fit the softmax predictor on annotated triplets.
    TrainPredictor {
        #[arg(long)]
        triplets: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Training config (JSON); missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch losses.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a trained model against held-out labels.
    EvalPredictor {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        triplets: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        report: PathBuf,
        /// Also write confusion.txt/.csv/.json here.
        #[arg(long)]
        confusion_dir: Option<PathBuf>,
    },
    /// Evaluate every configured method and write the result tables.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Metric curve over fixed document counts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a confusion matrix from a predictor report.
    Report {
        #[arg(long)]
        predictor_report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::MakeCorpus {
            out,
            seed,
            spec,
            size,
            max_n,
            depth_weights,
            confusion_threshold,
        } => {
            let mut s: CorpusSpec = match spec {
                Some(p) => read_json(&p)?,
                None => CorpusSpec::default(),
            };
            if let Some(v) = size {
                s.size = v;
            }
            if let Some(v) = max_n {
                s.max_n = v;
                if depth_weights.is_none() && s.depth_weights.len() != v + 2 {
                    s.depth_weights = std::iter::once(0.0).chain(std::iter::repeat_n(1.0, v)).chain([0.5]).collect();
                }
            }
            if let Some(v) = depth_weights {
                s.depth_weights = v;
            }
            if confusion_threshold.is_some() {
                s.confusion_threshold = confusion_threshold;
            }
            let corpus = make_synthetic_corpus(&s, seed)?;
            corpus.write_to(&out)?;
            println!("wrote {} examples to {}", corpus.examples.len(), out.display());
            for (label, count) in &corpus.plan.label_counts {
                println!("  {label}: {count}");
            }
        }
        Command::Annotate {
            data,
            generator,
            generator_config,
            judge,
            k0,
            template,
            max_failure_rate,
            threads,
            out,
            stats,
        } => {
            let gen_config = match generator {
                GeneratorKind::Mock => GeneratorConfig::Mock(read_json::<MockOracleConfig>(&generator_config)?),
                GeneratorKind::Http => GeneratorConfig::Http(read_json::<HttpGeneratorConfig>(&generator_config)?),
            };
            let client = gen_config.build()?;
            let dataset = load_dataset(&data)?;
            let options = AnnotateOptions {
                judge,
                include_k0: matches!(k0, Switch::On),
                template_id: template,
                max_failure_rate,
                threads,
            };
            match annotate_dataset(&TemplateRegistry::default(), &dataset, client.as_ref(), &options) {
                Ok(annotation) => {
                    save_triplets(&out, &annotation.triplets)?;
                    if let Some(path) = stats {
                        write_json(&path, &annotation.stats)?;
                    }
                    let s = &annotation.stats;
                    println!(
                        "annotated {}/{} examples ({} unanswerable), {} generator calls, cache hit rate {:.3}",
                        s.annotated, s.examples, s.unanswerable, s.generator_calls, s.cache_hit_rate
                    );
                    for (label, count) in &s.label_histogram {
                        println!("  {label}: {count}");
                    }
                }
                Err(Error::AnnotationAborted {
                    failed,
                    total,
                    limit,
                    partial,
                }) => {
                    let path = partial_path(&out);
                    save_triplets(&path, &partial)?;
                    bail!(
                        "annotation aborted: {failed} of {total} examples failed (limit {limit:.1}%); {} labels saved to {}",
                        partial.len(),
                        path.display()
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::TrainPredictor {
            triplets,
            data,
            config,
            epochs,
            seed,
            out,
            report,
        } => {
            let mut tc: TrainConfig = match config {
                Some(p) => read_json(&p)?,
                None => TrainConfig::default(),
            };
            if let Some(e) = epochs {
                tc.epochs = e;
            }
            if let Some(s) = seed {
                tc.seed = s;
            }
            let dataset = load_dataset(&data)?;
            let labels = load_triplets(&triplets, Some(dataset.max_n()))?;
            let (model, train_report) = train(&labels, &dataset, &tc)?;
            model.save(&out)?;
            if let Some(path) = report {
                write_json(&path, &train_report)?;
            }
            let s = &train_report.summary;
            println!(
                "trained on {} examples ({} dropped), {} steps, loss {:.4} -> {:.4}, train accuracy {:.3}",
                s.examples, s.dropped, s.steps, train_report.initial_loss, s.final_loss, s.final_train_accuracy
            );
        }
        Command::EvalPredictor {
            model,
            triplets,
            data,
            report,
            confusion_dir,
        } => {
            let model = PredictorModel::load(&model)?;
            let dataset = load_dataset(&data)?;
            let labels = load_triplets(&triplets, Some(dataset.max_n()))?;
            let r = evaluate_predictor(&model, &labels, &dataset)?;
            write_json(&report, &r)?;
            println!("accuracy {:.3} on {} examples ({} skipped)", r.accuracy, r.n, r.skipped);
            for (m, v) in &r.within_margin {
                println!("  within {m}: {v:.3}");
            }
            if let Some(dir) = confusion_dir {
                print!("{}", report_confusion(&r, &dir)?);
            }
        }
        Command::Run { config } => {
            let config = PipelineConfig::load(&config)?;
            let out = run_pipeline(&config)?;
            print!("{}", out.table_csv());
            println!(
                "{} generator requests, {} backend calls; outputs in {}",
                out.manifest.generator_requests,
                out.manifest.backend_calls,
                config.output_dir.display()
            );
        }
        Command::Sweep { config } => {
            let config = PipelineConfig::load(&config)?;
            let points = sweep_document_count(&config)?;
            print!("{}", sweep_csv(&points));
            match interior_peak(&points) {
                Some(k) => println!("interior peak at k={k}"),
                None => println!("no interior peak"),
            }
        }
        Command::Report { predictor_report, out } => {
            let r: PredictorReport = read_json(&predictor_report)?;
            print!("{}", report_confusion(&r, &out)?);
        }
    }
    Ok(())
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn load_dataset(data: &DataArgs) -> Result<adacomp_core::JoinedDataset> {
    let examples = load_examples(&data.examples, data.format.into())
        .with_context(|| format!("loading {}", data.examples.display()))?;
    let retrievals = load_retrievals(&data.retrievals).with_context(|| format!("loading {}", data.retrievals.display()))?;
    Ok(join_dataset(&examples, &retrievals)?)
}

fn partial_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    out.with_file_name(name)
}
