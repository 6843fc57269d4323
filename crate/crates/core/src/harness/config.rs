use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compressor::{PromptTemplate, TemplateRegistry, UnanswerableFallback, DEFAULT_TEMPLATE};
use crate::dataset::ExampleFormat;
use crate::error::{Error, Result};
use crate::generator::{Generator, HttpGenerator, HttpGeneratorConfig, JudgeMode, MockOracle, MockOracleConfig};
use crate::predictor::{CompressionRatePredictor, FixedK, PredictorModel, RandomK, RemotePredictor, RemotePredictorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub examples: PathBuf,
    pub retrievals: PathBuf,
    #[serde(default)]
    pub format: ExampleFormat,
    /// Annotated labels; required by the `oracle` method.
    #[serde(default)]
    pub triplets: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Mock(MockOracleConfig),
    /// A mock configuration stored in its own JSON file.
    MockFile { path: PathBuf },
    Http(HttpGeneratorConfig),
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<Box<dyn Generator>> {
        Ok(match self {
            GeneratorConfig::Mock(c) => Box::new(MockOracle::new(c.clone())?),
            GeneratorConfig::MockFile { path } => Box::new(MockOracle::new(super::read_json(path)?)?),
            GeneratorConfig::Http(c) => Box::new(HttpGenerator::new(c.clone())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    Fixed { name: String, k: usize },
    Random { name: String, seed: u64, min: usize, max: usize },
    Model { name: String, path: PathBuf },
    Remote {
        name: String,
        #[serde(flatten)]
        config: RemotePredictorConfig,
    },
}

impl PredictorSpec {
    pub fn name(&self) -> &str {
        match self {
            PredictorSpec::Fixed { name, .. }
            | PredictorSpec::Random { name, .. }
            | PredictorSpec::Model { name, .. }
            | PredictorSpec::Remote { name, .. } => name,
        }
    }

    pub fn build(&self, max_n: usize) -> Result<Box<dyn CompressionRatePredictor>> {
        Ok(match self {
            PredictorSpec::Fixed { k, .. } => Box::new(FixedK::new(*k, max_n)?),
            PredictorSpec::Random { seed, min, max, .. } => Box::new(RandomK::new(*seed, *min..=*max, max_n)?),
            PredictorSpec::Model { path, .. } => Box::new(PredictorModel::load(path)?),
            PredictorSpec::Remote { config, .. } => Box::new(RemotePredictor::new(config.clone())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Closed-book generation.
    NoRetrieval { name: String },
    /// The single document with the most query-like sentence.
    OnlyDoc { name: String },
    /// Compress with the annotated labels themselves.
    Oracle { name: String },
    /// Compress with a configured predictor.
    Predictor { name: String, predictor: String },
}

impl MethodSpec {
    pub fn name(&self) -> &str {
        match self {
            MethodSpec::NoRetrieval { name }
            | MethodSpec::OnlyDoc { name }
            | MethodSpec::Oracle { name }
            | MethodSpec::Predictor { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub datasets: DatasetConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub judge: JudgeMode,
    #[serde(default = "default_template")]
    pub template: String,
    /// Extra prompt templates, addressable by id.
    #[serde(default)]
    pub templates: Vec<PromptTemplate>,
    #[serde(default)]
    pub fallback: UnanswerableFallback,
    #[serde(default)]
    pub predictors: Vec<PredictorSpec>,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    pub output_dir: PathBuf,
}

fn default_template() -> String {
    DEFAULT_TEMPLATE.into()
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Read a config file; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: PipelineConfig = super::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.datasets.examples);
        resolve(base, &mut self.datasets.retrievals);
        if let Some(t) = &mut self.datasets.triplets {
            resolve(base, t);
        }
        match &mut self.generator {
            GeneratorConfig::MockFile { path } => resolve(base, path),
            GeneratorConfig::Http(c) => {
                if let Some(dir) = &mut c.cache_dir {
                    resolve(base, dir);
                }
            }
            GeneratorConfig::Mock(_) => {}
        }
        for p in &mut self.predictors {
            if let PredictorSpec::Model { path, .. } = p {
                resolve(base, path);
            }
        }
        resolve(base, &mut self.output_dir);
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))[..16].to_owned()
    }

    pub fn registry(&self) -> TemplateRegistry {
        let mut registry = TemplateRegistry::default();
        for t in &self.templates {
            registry.register(t.clone());
        }
        registry
    }

    /// Every file the run will read.
    pub fn referenced_files(&self) -> Vec<&Path> {
        let mut files = vec![self.datasets.examples.as_path(), self.datasets.retrievals.as_path()];
        files.extend(self.datasets.triplets.as_deref());
        if let GeneratorConfig::MockFile { path } = &self.generator {
            files.push(path);
        }
        for p in &self.predictors {
            if let PredictorSpec::Model { path, .. } = p {
                files.push(path);
            }
        }
        files
    }

    /// Static checks that need no data: files exist, names resolve.
    pub fn validate(&self, need_methods: bool) -> Result<()> {
        for f in self.referenced_files() {
            if !f.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", f.display())));
            }
        }
        if need_methods && self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if !self.registry().contains(&self.template) {
            return Err(Error::UnknownTemplate(self.template.clone()));
        }
        let mut names = std::collections::HashSet::new();
        for p in &self.predictors {
            if !names.insert(p.name()) {
                return Err(Error::Config(format!("duplicate predictor name {}", p.name())));
            }
        }
        let mut method_names = std::collections::HashSet::new();
        for m in &self.methods {
            if !method_names.insert(m.name()) {
                return Err(Error::Config(format!("duplicate method name {}", m.name())));
            }
            match m {
                MethodSpec::Predictor { predictor, .. } if !names.contains(predictor.as_str()) => {
                    return Err(Error::Config(format!("method {} references unknown predictor {predictor}", m.name())));
                }
                MethodSpec::Oracle { .. } if self.datasets.triplets.is_none() => {
                    return Err(Error::Config(format!("method {} needs datasets.triplets", m.name())));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
