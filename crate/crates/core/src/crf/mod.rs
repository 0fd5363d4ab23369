//! Linear-chain CRF tagger, one model per concept layer.

mod features;
mod inference;
mod model;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{extract_features, word_shape, FeatureVector, TEMPLATES_VERSION};
pub use inference::{forward_backward, viterbi, Marginals, Potentials};
pub use model::{CrfModel, ModelFile, MODEL_FORMAT_VERSION};

use crate::corpus::{ConceptAnnotation, ConceptType, Corpus, Document};
use crate::error::{Error, Result};
use crate::tagcodec::{self, OverlapPolicy, TagSequence, TokenSpan, LAYER_SIZE};
use crate::textproc::Sentence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_lambda: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 100,
            batch_size: 8,
            l2_lambda: 1e-4,
            early_stop_patience: 10,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} in {self:?}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.early_stop_patience == 0 {
            return bad("epochs, batch_size and early_stop_patience must be positive");
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad("l2_lambda must be non-negative");
        }
        Ok(())
    }
}

/// Emission potentials of `sentence` under `model`.
pub fn log_potentials(model: &CrfModel, sentence: &Sentence) -> Potentials {
    model.potentials_for(&model.encode_sentence(sentence))
}

/// A sentence reduced to feature ids and gold label indices.
#[derive(Debug, Clone)]
struct Example {
    features: Vec<Vec<u32>>,
    gold: Vec<usize>,
}

/// Unregularized negative log-likelihood of one example, with its gradient
/// as `(weight index, value)` pairs (indices may repeat).
fn data_term(model: &CrfModel, ex: &Example) -> (f64, Vec<(usize, f64)>) {
    let p = model.potentials_for(&ex.features);
    let m = forward_backward(&p);
    let nll = m.log_partition - p.path_score(&ex.gold);
    let labels = LAYER_SIZE;
    let mut grad = Vec::with_capacity(ex.features.iter().map(Vec::len).sum::<usize>() * labels + labels * labels);
    for (t, ids) in ex.features.iter().enumerate() {
        for &f in ids {
            for y in 0..labels {
                let observed = if ex.gold[t] == y { 1.0 } else { 0.0 };
                let g = m.unary[t][y] - observed;
                if g != 0.0 {
                    grad.push((model.emission_index(f, y), g));
                }
            }
        }
    }
    let n = ex.gold.len();
    if n > 0 {
        let mut transitions = vec![0.0; labels * labels];
        for (t, pair) in m.pairwise.iter().enumerate() {
            for a in 0..labels {
                for b in 0..labels {
                    transitions[a * labels + b] += pair[a][b];
                }
            }
            transitions[ex.gold[t] * labels + ex.gold[t + 1]] -= 1.0;
        }
        for (k, g) in transitions.into_iter().enumerate() {
            grad.push((model.transition_index(k / labels, k % labels), g));
        }
        for y in 0..labels {
            let first = if ex.gold[0] == y { 1.0 } else { 0.0 };
            let last = if ex.gold[n - 1] == y { 1.0 } else { 0.0 };
            grad.push((model.start_index(y), m.unary[0][y] - first));
            grad.push((model.end_index(y), m.unary[n - 1][y] - last));
        }
    }
    (nll, grad)
}

fn l2_norm_sq(weights: &[f64]) -> f64 {
    weights.iter().map(|w| w * w).sum()
}

/// Negative log-likelihood of `gold` plus `(l2_lambda / 2) * |w|^2`, and its
/// gradient with respect to every model weight (dense, aligned with
/// [`CrfModel::weights`]).
pub fn nll_and_gradient(model: &CrfModel, sentence: &Sentence, gold: &TagSequence) -> Result<(f64, Vec<f64>)> {
    if sentence.len() != gold.len() {
        return Err(Error::LengthMismatch {
            tokens: sentence.len(),
            tags: gold.len(),
        });
    }
    let ex = Example {
        features: model.encode_sentence(sentence),
        gold: gold.label_indices(),
    };
    let (nll, sparse) = data_term(model, &ex);
    let lambda = model.l2_lambda();
    let mut grad: Vec<f64> = model.weights().iter().map(|w| lambda * w).collect();
    for (i, g) in sparse {
        grad[i] += g;
    }
    Ok((nll + 0.5 * lambda * l2_norm_sq(model.weights()), grad))
}

/// Best label path under `model`, repaired into a structurally valid
/// sequence.
pub fn viterbi_decode(model: &CrfModel, sentence: &Sentence) -> TagSequence {
    let (path, _) = viterbi(&log_potentials(model, sentence));
    tagcodec::repair(&TagSequence::from_label_indices(model.layer, &path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean objective over the epoch's batches, each evaluated before its
    /// update.
    pub train_objective: f64,
    pub validation_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CrfModel,
    pub history: Vec<EpochRecord>,
    pub warnings: Vec<String>,
}

/// Sentences paired with gold label indices.
type Labelled = Vec<(Sentence, Vec<usize>)>;

fn layer_examples(corpus: &Corpus, layer: ConceptType) -> Result<(Labelled, usize)> {
    let mut out = Vec::new();
    let mut spans = 0;
    for doc in &corpus.documents {
        let (layers, _) = tagcodec::encode_document(doc, OverlapPolicy::LongestWins)?;
        for (sentence, l) in doc.sentences()?.iter().zip(layers) {
            let seq = &l.layers[layer.index()];
            spans += tagcodec::decode(seq).len();
            out.push((sentence.clone(), seq.label_indices()));
        }
    }
    Ok((out, spans))
}

fn span_f1(model: &CrfModel, examples: &[Example]) -> f64 {
    let (mut tp, mut n_pred, mut n_gold) = (0usize, 0usize, 0usize);
    let counts: Vec<(usize, usize, usize)> = examples
        .par_iter()
        .map(|ex| {
            let (path, _) = viterbi(&model.potentials_for(&ex.features));
            let pred = tagcodec::decode(&TagSequence::from_label_indices(model.layer, &path));
            let gold = tagcodec::decode(&TagSequence::from_label_indices(model.layer, &ex.gold));
            let hits = pred.iter().filter(|p| gold.contains(p)).count();
            (hits, pred.len(), gold.len())
        })
        .collect();
    for (h, p, g) in counts {
        tp += h;
        n_pred += p;
        n_gold += g;
    }
    crate::eval::f1_from_counts(tp, n_pred - tp, n_gold - tp)
}

/// Trains the `layer` model by mini-batch gradient descent on the mean
/// regularized NLL, keeping the checkpoint with the best validation span F1
/// and stopping after `early_stop_patience` epochs without improvement.
///
/// Span F1 here compares token spans including the Non-study flag. When
/// `validation` is empty the training set is scored instead.
pub fn train(corpus: &Corpus, layer: ConceptType, config: &TrainConfig, validation: &Corpus) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (train_sentences, gold_spans) = layer_examples(corpus, layer)?;
    let (val_sentences, _) = layer_examples(validation, layer)?;

    let mut names: Vec<String> = Vec::new();
    let mut seen: HashMap<String, u32> = HashMap::new();
    for (sentence, _) in &train_sentences {
        for t in 0..sentence.len() {
            for (name, _) in extract_features(sentence, t).iter() {
                if !seen.contains_key(name) {
                    seen.insert(name.to_owned(), names.len() as u32);
                    names.push(name.to_owned());
                }
            }
        }
    }
    let mut model = CrfModel::new(layer, names, config.clone());
    let mut warnings = Vec::new();
    if gold_spans == 0 {
        warnings.push(format!("layer {layer} has no gold spans in the training data; the model predicts all O"));
        return Ok(TrainOutcome {
            model,
            history: Vec::new(),
            warnings,
        });
    }

    let to_examples = |sentences: Labelled, model: &CrfModel| -> Vec<Example> {
        sentences
            .into_iter()
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, gold)| Example {
                features: model.encode_sentence(&s),
                gold,
            })
            .collect()
    };
    let train_examples = to_examples(train_sentences, &model);
    let val_examples = to_examples(val_sentences, &model);
    let scored = if val_examples.is_empty() { &train_examples } else { &val_examples };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_examples.len()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut grad = vec![0.0; model.weights().len()];
    let lambda = config.l2_lambda;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut objective_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let results: Vec<(f64, Vec<(usize, f64)>)> =
                batch.par_iter().map(|&i| data_term(&model, &train_examples[i])).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut nll = 0.0;
            for (value, sparse) in &results {
                nll += value;
                for &(i, g) in sparse {
                    grad[i] += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            objective_sum += nll * scale + 0.5 * lambda * l2_norm_sq(model.weights());
            batches += 1;
            let lr = config.learning_rate;
            for (w, g) in model.weights_mut().iter_mut().zip(&grad) {
                *w -= lr * (g * scale + lambda * *w);
            }
        }
        let f1 = span_f1(&model, scored);
        history.push(EpochRecord {
            epoch,
            train_objective: objective_sum / batches as f64,
            validation_f1: f1,
        });
        if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
            best = Some((f1, model.weights().to_vec()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.early_stop_patience {
                break;
            }
        }
    }
    if let Some((f1, weights)) = best {
        model.set_weights(weights);
        model.validation_f1 = Some(f1);
    }
    Ok(TrainOutcome {
        model,
        history,
        warnings,
    })
}

/// Mean regularized NLL over the sentences of `corpus` in `layer`.
pub fn objective(model: &CrfModel, corpus: &Corpus) -> Result<f64> {
    let (sentences, _) = layer_examples(corpus, model.layer)?;
    let examples: Vec<Example> = sentences
        .into_iter()
        .map(|(s, gold)| Example {
            features: model.encode_sentence(&s),
            gold,
        })
        .collect();
    if examples.is_empty() {
        return Ok(0.5 * model.l2_lambda() * l2_norm_sq(model.weights()));
    }
    let total: f64 = examples.iter().map(|ex| data_term(model, ex).0).sum();
    Ok(total / examples.len() as f64 + 0.5 * model.l2_lambda() * l2_norm_sq(model.weights()))
}

/// Tags every sentence of a segmented document with each layer's model and
/// returns the merged annotations, ids `T1..Tn` in offset order.
pub fn predict_document(models: &BTreeMap<ConceptType, CrfModel>, doc: &Document) -> Result<Vec<ConceptAnnotation>> {
    let sentences = doc.sentences()?;
    let mut spans: Vec<(usize, TokenSpan)> = Vec::new();
    for layer in ConceptType::ALL {
        let model = models.get(&layer).ok_or_else(|| Error::MissingModel(layer.name().to_owned()))?;
        for (si, sentence) in sentences.iter().enumerate() {
            let seq = viterbi_decode(model, sentence);
            spans.extend(tagcodec::decode(&seq).into_iter().map(|s| (si, s)));
        }
    }
    tagcodec::spans_to_annotations(doc, &spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{segment, Segmenter};

    #[test]
    fn zero_model_nll_is_uniform() {
        let sentence = &segment("KRAS G12C mutant lung cancer")[0];
        let model = CrfModel::new(ConceptType::Mutation, vec!["bias".into()], TrainConfig::default());
        let gold = TagSequence::outside(ConceptType::Mutation, sentence.len());
        let (nll, _) = nll_and_gradient(&model, sentence, &gold).unwrap();
        assert!((nll - sentence.len() as f64 * 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch_is_error() {
        let sentence = &segment("KRAS mutant")[0];
        let model = CrfModel::new(ConceptType::Mutation, vec![], TrainConfig::default());
        let gold = TagSequence::outside(ConceptType::Mutation, 3);
        assert!(matches!(
            nll_and_gradient(&model, sentence, &gold),
            Err(Error::LengthMismatch { tokens: 2, tags: 3 })
        ));
    }

    #[test]
    fn single_weight_emission() {
        let sentence = &segment("PTEN loss")[0];
        let mut model = CrfModel::new(ConceptType::Mutation, vec!["w[0]=pten".into()], TrainConfig::default());
        let i = model.emission_index(0, 4);
        model.weights_mut()[i] = 2.0;
        let p = log_potentials(&model, sentence);
        assert_eq!(p.emission[0][4], 2.0);
        assert_eq!(p.emission[0].iter().sum::<f64>(), 2.0);
        assert!(p.emission[1].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_model_decodes_all_outside() {
        let sentence = &segment("BRAF V600E melanoma")[0];
        let model = CrfModel::new(ConceptType::Cancer, vec!["bias".into()], TrainConfig::default());
        assert_eq!(viterbi_decode(&model, sentence), TagSequence::outside(ConceptType::Cancer, 3));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { l2_lambda: -1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn missing_layer_model() {
        let doc = Document::new("d", "KRAS").segmented(&Segmenter::default());
        let err = predict_document(&BTreeMap::new(), &doc).unwrap_err();
        assert!(err.to_string().contains("Cancer"));
    }

    #[test]
    fn empty_training_corpus() {
        assert!(matches!(
            train(&Corpus::default(), ConceptType::Cancer, &TrainConfig::default(), &Corpus::default()),
            Err(Error::EmptyCorpus)
        ));
    }
}
