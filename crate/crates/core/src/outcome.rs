//! Sentence-level Outcome detection with L2-regularized logistic
//! regression over sparse binary features.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptType, Document};
use crate::crf::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::BinaryScores;
use crate::textproc::Sentence;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Training defaults for the sentence classifier.
pub fn default_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.5,
        epochs: 30,
        batch_size: 16,
        l2_lambda: 1e-4,
        early_stop_patience: 10,
        seed: 42,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceExample {
    pub features: Vec<String>,
    pub label: bool,
}

fn length_bucket(n: usize) -> &'static str {
    match n {
        0..=9 => "lt10",
        10..=19 => "10-19",
        20..=39 => "20-39",
        _ => "40+",
    }
}

/// Bag of lowercased tokens and token bigrams, `has_percent`, `has_number`
/// and a sentence-length bucket. Names are unique and in first-seen order.
pub fn sentence_features(sentence: &Sentence) -> Vec<String> {
    let words: Vec<String> = sentence.tokens.iter().map(|t| t.surface.to_lowercase()).collect();
    let mut out: Vec<String> = Vec::new();
    let mut push = |name: String| {
        if !out.contains(&name) {
            out.push(name);
        }
    };
    for w in &words {
        push(format!("tok={w}"));
    }
    for pair in words.windows(2) {
        push(format!("bi={}|{}", pair[0], pair[1]));
    }
    if words.iter().any(|w| w.contains('%')) {
        push("has_percent".into());
    }
    if words.iter().any(|w| w.chars().any(|c| c.is_ascii_digit())) {
        push("has_number".into());
    }
    push(format!("len={}", length_bucket(words.len())));
    out
}

/// One example per sentence; positive iff the sentence overlaps an Outcome
/// annotation by at least one character.
pub fn label_sentences(doc: &Document) -> Result<Vec<SentenceExample>> {
    let outcomes: Vec<(usize, usize)> = doc
        .annotations
        .iter()
        .filter(|a| a.concept_type == ConceptType::Outcome)
        .map(|a| (a.start, a.end))
        .collect();
    Ok(doc
        .sentences()?
        .iter()
        .map(|s| SentenceExample {
            features: sentence_features(s),
            label: outcomes.iter().any(|&(start, end)| start < s.end && s.start < end),
        })
        .collect())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    features: Vec<String>,
    index: HashMap<String, usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub config: TrainConfig,
}

impl LogRegModel {
    pub fn new(features: Vec<String>, config: TrainConfig) -> Self {
        let index = features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        LogRegModel {
            weights: vec![0.0; features.len()],
            features,
            index,
            bias: 0.0,
            l2_lambda: config.l2_lambda,
            config,
        }
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn ids(&self, features: &[String]) -> Vec<usize> {
        features.iter().filter_map(|f| self.feature_id(f)).collect()
    }

    fn score_ids(&self, ids: &[usize]) -> f64 {
        self.bias + ids.iter().map(|&i| self.weights[i]).sum::<f64>()
    }

    pub fn score(&self, features: &[String]) -> f64 {
        self.score_ids(&self.ids(features))
    }

    pub fn probability(&self, features: &[String]) -> f64 {
        sigmoid(self.score(features))
    }

    /// Mean logistic loss plus `(l2_lambda / 2) * |w|^2` (bias excluded),
    /// with the gradient for the weights and for the bias.
    pub fn loss_and_gradient(&self, examples: &[SentenceExample]) -> (f64, Vec<f64>, f64) {
        let encoded: Vec<(Vec<usize>, bool)> = examples.iter().map(|e| (self.ids(&e.features), e.label)).collect();
        self.loss_and_gradient_ids(&encoded)
    }

    fn loss_and_gradient_ids(&self, examples: &[(Vec<usize>, bool)]) -> (f64, Vec<f64>, f64) {
        let mut grad = vec![0.0; self.weights.len()];
        let mut grad_bias = 0.0;
        let mut loss = 0.0;
        for (ids, label) in examples {
            let z = self.score_ids(ids);
            let y = if *label { 1.0 } else { 0.0 };
            loss += softplus(z) - y * z;
            let r = sigmoid(z) - y;
            grad_bias += r;
            for &i in ids {
                grad[i] += r;
            }
        }
        let n = examples.len().max(1) as f64;
        let lambda = self.l2_lambda;
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g = *g / n + lambda * w;
        }
        let reg = 0.5 * lambda * self.weights.iter().map(|w| w * w).sum::<f64>();
        (loss / n + reg, grad, grad_bias / n)
    }

    pub fn to_json(&self) -> String {
        let file = LogRegFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: "outcome_sentence_logreg".into(),
            weights: self
                .features
                .iter()
                .zip(&self.weights)
                .filter(|(_, w)| **w != 0.0)
                .map(|(f, w)| (f.clone(), *w))
                .collect(),
            bias: self.bias,
            config: self.config.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: LogRegFile = serde_json::from_str(s).map_err(|e| Error::json("<model>", e))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("format_version {}", file.format_version)));
        }
        let mut model = LogRegModel::new(file.weights.keys().cloned().collect(), file.config);
        model.weights = file.weights.into_values().collect();
        model.bias = file.bias;
        if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::ModelFormat("non-finite weight".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&content)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LogRegFile {
    format_version: u32,
    kind: String,
    weights: BTreeMap<String, f64>,
    bias: f64,
    config: TrainConfig,
}

/// Mini-batch gradient descent on the regularized logistic loss. Batches
/// are drawn from a generator seeded with `config.seed`; runs all
/// `config.epochs` epochs.
pub fn train_lr(examples: &[SentenceExample], config: &TrainConfig) -> Result<LogRegModel> {
    config.validate()?;
    if !examples.iter().any(|e| e.label) || examples.iter().all(|e| e.label) {
        return Err(Error::DegenerateLabels);
    }
    let mut names = Vec::new();
    let mut seen = HashMap::new();
    for e in examples {
        for f in &e.features {
            if !seen.contains_key(f) {
                seen.insert(f.clone(), names.len());
                names.push(f.clone());
            }
        }
    }
    let mut model = LogRegModel::new(names, config.clone());
    let encoded: Vec<(Vec<usize>, bool)> = examples.iter().map(|e| (model.ids(&e.features), e.label)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let lr = config.learning_rate;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let batch: Vec<(Vec<usize>, bool)> = batch.iter().map(|&i| encoded[i].clone()).collect();
            let (_, grad, grad_bias) = model.loss_and_gradient_ids(&batch);
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= lr * g;
            }
            model.bias -= lr * grad_bias;
        }
    }
    Ok(model)
}

/// Outcome probability of a sentence and its label at threshold 0.5
/// (positive iff the probability exceeds 0.5).
pub fn classify(model: &LogRegModel, sentence: &Sentence) -> (f64, bool) {
    let p = model.probability(&sentence_features(sentence));
    (p, p > 0.5)
}

/// Sentence-level scores of `model` against the Outcome labels of `docs`.
pub fn evaluate_sentences(model: &LogRegModel, docs: &[Document]) -> Result<BinaryScores> {
    let mut pairs = Vec::new();
    for doc in docs {
        for ex in label_sentences(doc)? {
            pairs.push((ex.label, model.probability(&ex.features) > 0.5));
        }
    }
    Ok(BinaryScores::from_pairs(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ConceptAnnotation;
    use crate::textproc::{segment, Segmenter};

    fn doc_with_outcome(text: &str, spans: &[(usize, usize)]) -> Document {
        Document::new("d", text)
            .with_annotations(
                spans
                    .iter()
                    .enumerate()
                    .map(|(i, &(s, e))| ConceptAnnotation::new(format!("T{i}"), ConceptType::Outcome, s, e))
                    .collect(),
            )
            .segmented(&Segmenter::default())
    }

    const TEXT: &str = "We enrolled 40 patients. Erlotinib was given. Survival improved. Toxicity was mild. Enrolment closed.";

    #[test]
    fn no_outcomes_all_negative() {
        let labels = label_sentences(&doc_with_outcome(TEXT, &[])).unwrap();
        assert_eq!(labels.len(), 5);
        assert!(labels.iter().all(|e| !e.label));
    }

    #[test]
    fn span_across_two_sentences() {
        // "Survival improved. Toxicity was mild."
        let labels = label_sentences(&doc_with_outcome(TEXT, &[(46, 83)])).unwrap();
        let flags: Vec<bool> = labels.iter().map(|e| e.label).collect();
        assert_eq!(flags, [false, false, true, true, false]);
    }

    #[test]
    fn span_inside_one_sentence() {
        let labels = label_sentences(&doc_with_outcome(TEXT, &[(46, 54)])).unwrap();
        let flags: Vec<bool> = labels.iter().map(|e| e.label).collect();
        assert_eq!(flags, [false, false, true, false, false]);
    }

    #[test]
    fn feature_template() {
        let s = &segment("Response rate was 60%")[0];
        let f = sentence_features(s);
        for name in ["tok=response", "bi=rate|was", "has_percent", "has_number", "len=lt10"] {
            assert!(f.contains(&name.to_owned()), "missing {name}");
        }
    }

    #[test]
    fn zero_model_is_one_half() {
        let model = LogRegModel::new(vec!["tok=survival".into()], default_config());
        let (p, label) = classify(&model, &segment("Survival improved")[0]);
        assert_eq!(p, 0.5);
        assert!(!label);
    }

    #[test]
    fn saturated_weight() {
        let mut model = LogRegModel::new(vec!["tok=survival".into()], default_config());
        model.weights[0] = 10.0;
        let (p, label) = classify(&model, &segment("Survival improved")[0]);
        assert!(p > 0.999 && label);
    }

    #[test]
    fn single_class_rejected() {
        let ex = vec![SentenceExample {
            features: vec!["tok=a".into()],
            label: true,
        }];
        assert!(matches!(train_lr(&ex, &default_config()), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn json_round_trip() {
        let mut model = LogRegModel::new(vec!["b".into(), "a".into(), "z".into()], default_config());
        model.weights = vec![0.25, -1.5, 0.0];
        model.bias = -0.125;
        let back = LogRegModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back.to_json(), model.to_json());
        let feats = vec!["a".to_owned(), "b".to_owned(), "z".to_owned()];
        assert_eq!(back.score(&feats), model.score(&feats));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
