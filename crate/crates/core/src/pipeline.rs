//! Corpus I/O across formats, model directories and the end-to-end run:
//! convert, split, train, predict, evaluate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brat::{self, BratConfig};
use crate::corpus::{self, compute_stats, ConceptType, Corpus, Document};
use crate::crf::{self, CrfModel, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{self, BinaryScores, EvalReport, MatchMode};
use crate::outcome::{self, LogRegModel};
use crate::split::{self, SplitSpec};
use crate::tagcodec::{self, OverlapPolicy, TaggedDocument};
use crate::textproc::Segmenter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// Directory of `.txt`/`.ann` pairs.
    Brat,
    /// Directory of one JSON document per abstract.
    Json,
    /// A single tagged-TSV file.
    Tsv,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brat" => Ok(CorpusFormat::Brat),
            "json" => Ok(CorpusFormat::Json),
            "tsv" => Ok(CorpusFormat::Tsv),
            _ => Err(Error::Config(format!("unknown corpus format {s:?}; expected brat, json or tsv"))),
        }
    }
}

/// Guesses the format of `path`: a `.tsv` file, a directory holding `.ann`
/// or `.txt` files (brat), or a directory of `.json` documents.
pub fn detect_format(path: &Path) -> Result<CorpusFormat> {
    if path.is_file() {
        return Ok(CorpusFormat::Tsv);
    }
    if !path.is_dir() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")));
    }
    let has = |ext: &str| corpus::list_files(path, ext).map(|v| !v.is_empty());
    if has("ann")? || has("txt")? {
        Ok(CorpusFormat::Brat)
    } else {
        Ok(CorpusFormat::Json)
    }
}

/// Reads and normalizes a corpus. Documents come back segmented.
pub fn read_corpus(path: &Path, format: Option<CorpusFormat>, segmenter: &Segmenter) -> Result<(Corpus, Vec<String>)> {
    let format = match format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let mut warnings = Vec::new();
    let mut corpus = match format {
        CorpusFormat::Brat => {
            let (corpus, w) = brat::read_dir(path, &BratConfig::default())?;
            warnings.extend(w.into_iter().map(|(doc, w)| format!("{doc}: {w}")));
            corpus
        }
        CorpusFormat::Json => corpus::read_json_dir(path)?,
        CorpusFormat::Tsv => {
            let docs = tagcodec::read_tagged_tsv_file(path)?
                .iter()
                .map(TaggedDocument::to_document)
                .collect::<Result<Vec<_>>>()?;
            Corpus::new(docs, format!("tsv:{}", path.display()))?
        }
    };
    if format != CorpusFormat::Tsv {
        corpus.segment(segmenter);
    }
    Ok((corpus, warnings))
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<()> {
    match format {
        CorpusFormat::Brat => brat::write_dir(corpus, path),
        CorpusFormat::Json => corpus::write_json_dir(corpus, path),
        CorpusFormat::Tsv => {
            let docs = corpus
                .documents
                .iter()
                .map(|d| TaggedDocument::from_document(d, OverlapPolicy::LongestWins))
                .collect::<Result<Vec<_>>>()?;
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            tagcodec::write_tagged_tsv_file(&docs, path)
        }
    }
}

/// Trained models for every layer plus the optional sentence classifier.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub crf: BTreeMap<ConceptType, CrfModel>,
    pub outcome: Option<LogRegModel>,
}

fn crf_file(dir: &Path, layer: ConceptType) -> PathBuf {
    dir.join(format!("crf_{}.json", layer.name().to_lowercase()))
}

const OUTCOME_FILE: &str = "outcome_classifier.json";

impl ModelSet {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (layer, model) in &self.crf {
            model.save(crf_file(dir, *layer))?;
        }
        if let Some(m) = &self.outcome {
            m.save(dir.join(OUTCOME_FILE))?;
        }
        Ok(())
    }

    /// Loads whatever models exist in `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "model directory not found")));
        }
        let mut set = ModelSet::default();
        for layer in ConceptType::ALL {
            let path = crf_file(dir, layer);
            if path.exists() {
                set.crf.insert(layer, CrfModel::load(&path)?);
            }
        }
        let path = dir.join(OUTCOME_FILE);
        if path.exists() {
            set.outcome = Some(LogRegModel::load(&path)?);
        }
        Ok(set)
    }
}

/// Trains the CRF for each of `layers` and, when Outcome labels exist, the
/// sentence classifier.
pub fn train_models(
    train: &Corpus,
    val: &Corpus,
    layers: &[ConceptType],
    crf_config: &TrainConfig,
    outcome_config: Option<&TrainConfig>,
) -> Result<(ModelSet, Vec<String>)> {
    let mut set = ModelSet::default();
    let mut warnings = Vec::new();
    for &layer in layers {
        log::info!("training {layer} layer");
        let outcome = crf::train(train, layer, crf_config, val)?;
        warnings.extend(outcome.warnings);
        set.crf.insert(layer, outcome.model);
    }
    if let Some(config) = outcome_config {
        let mut examples = Vec::new();
        for doc in &train.documents {
            examples.extend(outcome::label_sentences(doc)?);
        }
        match outcome::train_lr(&examples, config) {
            Ok(model) => set.outcome = Some(model),
            Err(Error::DegenerateLabels) => {
                warnings.push("outcome classifier not trained: training sentences are all one class".into())
            }
            Err(e) => return Err(e),
        }
    }
    Ok((set, warnings))
}

/// Replaces each document's annotations with CRF predictions.
pub fn predict_corpus(models: &BTreeMap<ConceptType, CrfModel>, corpus: &Corpus) -> Result<Corpus> {
    let documents = corpus
        .documents
        .par_iter()
        .map(|doc| {
            let mut out = doc.clone();
            out.annotations = crf::predict_document(models, doc)?;
            Ok(out)
        })
        .collect::<Result<Vec<Document>>>()?;
    Corpus::new(documents, format!("predicted: {}", corpus.provenance))
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("value serializes");
    body.push('\n');
    write_text(path, &body)
}

/// Configuration of an end-to-end run. `seed` overrides the seeds of the
/// split and of both trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub input_format: Option<CorpusFormat>,
    pub seed: u64,
    pub split: SplitSpec,
    pub crf: TrainConfig,
    pub outcome: TrainConfig,
    pub match_mode: MatchMode,
    pub abbreviations: Option<PathBuf>,
    /// Worker threads; not written back out, since results do not depend
    /// on it.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::from("corpus"),
            output: PathBuf::from("run"),
            input_format: None,
            seed: 42,
            split: SplitSpec::default(),
            crf: TrainConfig::default(),
            outcome: outcome::default_config(),
            match_mode: MatchMode::Exact,
            abbreviations: None,
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&content).map_err(|e| Error::json(path, e))
    }

    fn seeded(&self) -> RunConfig {
        let mut c = self.clone();
        c.split.seed = self.seed;
        c.crf.seed = self.seed;
        c.outcome.seed = self.seed;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub templates_version: String,
    pub model_format_version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub documents: BTreeMap<String, usize>,
    pub validation_f1: BTreeMap<ConceptType, Option<f64>>,
    pub stages: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: EvalReport,
    pub outcome_scores: Option<BinaryScores>,
    pub manifest: RunManifest,
}

/// Runs the whole pipeline and writes every artifact under
/// `config.output`:
///
/// ```text
/// corpus/                 normalized input as JSON documents
/// split_manifest.json
/// models/                 crf_<layer>.json, outcome_classifier.json
/// predictions/brat/       predicted test documents
/// predictions/test.tsv    predicted tags
/// reports/                stats, eval and outcome reports (text + JSON)
/// run_manifest.json
/// ```
///
/// A failing stage aborts the run; files written by earlier stages stay.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let config = config.seeded();
    let out = &config.output;
    let mut warnings: Vec<String> = Vec::new();
    let mut stages = Vec::new();
    let segmenter = match &config.abbreviations {
        Some(path) => Segmenter::from_file(path).map_err(|e| e.at_stage("convert"))?,
        None => Segmenter::default(),
    };

    let (corpus, w) = read_corpus(&config.input, config.input_format, &segmenter).map_err(|e| e.at_stage("convert"))?;
    warnings.extend(w);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus.at_stage("convert"));
    }
    corpus::write_json_dir(&corpus, out.join("corpus")).map_err(|e| e.at_stage("convert"))?;
    let stats = compute_stats(&corpus).map_err(|e| e.at_stage("convert"))?;
    write_text(&out.join("reports/stats.txt"), &stats.render()).map_err(|e| e.at_stage("convert"))?;
    write_json(&out.join("reports/stats.json"), &stats).map_err(|e| e.at_stage("convert"))?;
    stages.push("convert".to_owned());

    let parts = split::split_corpus(&corpus, &config.split).map_err(|e| e.at_stage("split"))?;
    write_json(&out.join("split_manifest.json"), &parts.manifest).map_err(|e| e.at_stage("split"))?;
    stages.push("split".to_owned());

    let (models, w) = train_models(
        &parts.train,
        &parts.val,
        &ConceptType::ALL,
        &config.crf,
        Some(&config.outcome),
    )
    .map_err(|e| e.at_stage("train"))?;
    warnings.extend(w);
    models.save(&out.join("models")).map_err(|e| e.at_stage("train"))?;
    stages.push("train".to_owned());

    let predicted = predict_corpus(&models.crf, &parts.test).map_err(|e| e.at_stage("predict"))?;
    write_corpus(&predicted, &out.join("predictions/brat"), CorpusFormat::Brat).map_err(|e| e.at_stage("predict"))?;
    write_corpus(&predicted, &out.join("predictions/test.tsv"), CorpusFormat::Tsv).map_err(|e| e.at_stage("predict"))?;
    stages.push("predict".to_owned());

    let report = eval::evaluate(&parts.test, &predicted, config.match_mode).map_err(|e| e.at_stage("eval"))?;
    write_text(&out.join("reports/eval.txt"), &eval::render_report(&report)).map_err(|e| e.at_stage("eval"))?;
    write_text(&out.join("reports/eval.json"), &report.to_json()).map_err(|e| e.at_stage("eval"))?;
    let outcome_scores = match &models.outcome {
        Some(m) => {
            let scores = outcome::evaluate_sentences(m, &parts.test.documents).map_err(|e| e.at_stage("eval"))?;
            write_json(&out.join("reports/outcome_sentences.json"), &scores).map_err(|e| e.at_stage("eval"))?;
            Some(scores)
        }
        None => None,
    };
    stages.push("eval".to_owned());

    for w in &warnings {
        log::warn!("{w}");
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        templates_version: crf::TEMPLATES_VERSION.to_owned(),
        model_format_version: crf::MODEL_FORMAT_VERSION,
        seed: config.seed,
        config: config.clone(),
        documents: BTreeMap::from([
            ("train".to_owned(), parts.train.len()),
            ("val".to_owned(), parts.val.len()),
            ("test".to_owned(), parts.test.len()),
        ]),
        validation_f1: models.crf.iter().map(|(t, m)| (*t, m.validation_f1)).collect(),
        stages,
        warnings,
    };
    write_json(&out.join("run_manifest.json"), &manifest)?;
    Ok(RunSummary {
        report,
        outcome_scores,
        manifest,
    })
}
