//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use oncotag::crf::Potentials;
use oncotag::crf::{self, CrfModel, TrainConfig};
use oncotag::outcome::{LogRegModel, SentenceExample};
use oncotag::tagcodec::{TagSequence, LAYER_SIZE};
use oncotag::textproc::{Segmenter, Sentence};
use oncotag::{ConceptAnnotation, ConceptType, Document};
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: &[&str] = &[
    "tumor", "response", "gefitinib", "EGFR", "L858R", "patients", "with", "advanced", "melanoma", "therapy", "42",
    "cohort", "BRAF", "survival", "of", "the", "trial", "mutation", "dose", "Phase", "rate", "β-catenin", "naïve",
];

/// Every label path of length `len` over `labels` labels.
pub fn all_paths(len: usize, labels: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![Vec::new()];
    for _ in 0..len {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                (0..labels).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    paths
}

/// Path score computed from scratch, not via `Potentials::path_score`.
pub fn score(p: &Potentials, path: &[usize]) -> f64 {
    let mut s = 0.0;
    for t in 0..path.len() {
        s += p.emission[t][path[t]];
        if t == 0 {
            s += p.start[path[t]];
        } else {
            s += p.transition[path[t - 1]][path[t]];
        }
    }
    if let Some(&last) = path.last() {
        s += p.end[last];
    }
    s
}

pub struct Enumerated {
    pub log_partition: f64,
    pub best_path: Vec<usize>,
    pub best_score: f64,
    pub unary: Vec<Vec<f64>>,
}

pub fn enumerate(p: &Potentials) -> Enumerated {
    let labels = p.start.len();
    let len = p.emission.len();
    let paths = all_paths(len, labels);
    let scores: Vec<f64> = paths.iter().map(|path| score(p, path)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let log_partition = max + z.ln();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    let mut unary = vec![vec![0.0; labels]; len];
    for (path, s) in paths.iter().zip(&scores) {
        let w = (s - log_partition).exp();
        for (t, &y) in path.iter().enumerate() {
            unary[t][y] += w;
        }
    }
    Enumerated {
        log_partition,
        best_path: paths[best].clone(),
        best_score: scores[best],
        unary,
    }
}

pub fn random_potentials(rng: &mut impl Rng, len: usize, labels: usize) -> Potentials {
    let mut v = |n: usize| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
    let emission = (0..len).map(|_| v(labels)).collect();
    let transition = (0..labels).map(|_| v(labels)).collect();
    Potentials {
        emission,
        transition,
        start: v(labels),
        end: v(labels),
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Relative error with a floor on the denominator, for gradient entries
/// that are close to zero.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2)
}

/// One sentence of `n` random words.
pub fn random_sentence(rng: &mut impl Rng, n: usize) -> Sentence {
    let text: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    let sentences = Segmenter::default().segment(&text.join(" "));
    assert_eq!(sentences.len(), 1);
    sentences.into_iter().next().unwrap()
}

pub fn random_labels(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..LAYER_SIZE)).collect()
}

/// A model whose features are those of `sentences`, with random weights.
pub fn random_crf(rng: &mut impl Rng, sentences: &[&Sentence], layer: ConceptType, l2: f64) -> CrfModel {
    let mut names: Vec<String> = Vec::new();
    for s in sentences {
        for t in 0..s.len() {
            for (name, _) in crf::extract_features(s, t).iter() {
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_owned());
                }
            }
        }
    }
    let config = TrainConfig {
        l2_lambda: l2,
        ..TrainConfig::default()
    };
    let mut model = CrfModel::new(layer, names, config);
    for w in model.weights_mut() {
        *w = rng.gen_range(-0.5..0.5);
    }
    model
}

/// Largest relative error between the analytic CRF gradient and central
/// differences with step `h` over every weight.
pub fn crf_gradient_error(model: &CrfModel, sentence: &Sentence, gold: &TagSequence, h: f64) -> f64 {
    let (_, grad) = crf::nll_and_gradient(model, sentence, gold).unwrap();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let w = probe.weights()[i];
        probe.weights_mut()[i] = w + h;
        let (plus, _) = crf::nll_and_gradient(&probe, sentence, gold).unwrap();
        probe.weights_mut()[i] = w - h;
        let (minus, _) = crf::nll_and_gradient(&probe, sentence, gold).unwrap();
        probe.weights_mut()[i] = w;
        worst = worst.max(grad_rel_err(grad[i], (plus - minus) / (2.0 * h)));
    }
    worst
}

pub fn random_lr_instance(rng: &mut impl Rng) -> (LogRegModel, Vec<SentenceExample>) {
    let n_features = rng.gen_range(3..15);
    let names: Vec<String> = (0..n_features).map(|i| format!("f{i}")).collect();
    let config = TrainConfig {
        l2_lambda: rng.gen_range(0.0..0.1),
        ..TrainConfig::default()
    };
    let mut model = LogRegModel::new(names.clone(), config);
    for w in &mut model.weights {
        *w = rng.gen_range(-2.0..2.0);
    }
    model.bias = rng.gen_range(-1.0..1.0);
    let examples = (0..rng.gen_range(1..12))
        .map(|_| SentenceExample {
            features: names.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect(),
            label: rng.gen_bool(0.5),
        })
        .collect();
    (model, examples)
}

pub fn lr_gradient_error(model: &LogRegModel, examples: &[SentenceExample], h: f64) -> f64 {
    let (_, grad, grad_bias) = model.loss_and_gradient(examples);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let w = probe.weights[i];
        probe.weights[i] = w + h;
        let plus = probe.loss_and_gradient(examples).0;
        probe.weights[i] = w - h;
        let minus = probe.loss_and_gradient(examples).0;
        probe.weights[i] = w;
        worst = worst.max(grad_rel_err(grad[i], (plus - minus) / (2.0 * h)));
    }
    let b = probe.bias;
    probe.bias = b + h;
    let plus = probe.loss_and_gradient(examples).0;
    probe.bias = b - h;
    let minus = probe.loss_and_gradient(examples).0;
    worst.max(grad_rel_err(grad_bias, (plus - minus) / (2.0 * h)))
}

/// A random document with random (possibly overlapping) annotations whose
/// surfaces match the text; ids are `T1..` in generation order.
pub fn random_document(rng: &mut impl Rng, id: &str) -> Document {
    let n_words = rng.gen_range(0..30);
    let mut text = String::new();
    for i in 0..n_words {
        if i > 0 {
            text.push_str(if rng.gen_bool(0.1) { ".\n" } else { " " });
        }
        text.push_str(WORDS.choose(rng).unwrap());
    }
    let chars: Vec<char> = text.chars().collect();
    let mut annotations = Vec::new();
    if !chars.is_empty() {
        for i in 0..rng.gen_range(0..8) {
            let start = rng.gen_range(0..chars.len());
            let end = rng.gen_range(start + 1..=chars.len().min(start + 25));
            let surface: String = chars[start..end].iter().collect();
            if surface.contains('\n') {
                continue;
            }
            let ty = *ConceptType::ALL.choose(rng).unwrap();
            annotations.push(
                ConceptAnnotation::new(format!("T{}", i + 1), ty, start, end)
                    .with_surface(surface)
                    .non_study(rng.gen_bool(0.3))
                    .negated(rng.gen_bool(0.2)),
            );
        }
    }
    Document::new(id, text).with_annotations(annotations)
}

/// Size of a maximum matching in the bipartite graph `edge(g, p)`, by
/// exhaustive search.
pub fn max_matching(n_gold: usize, n_pred: usize, edge: &dyn Fn(usize, usize) -> bool) -> usize {
    fn go(g: usize, n_gold: usize, n_pred: usize, used: &mut Vec<bool>, edge: &dyn Fn(usize, usize) -> bool) -> usize {
        if g == n_gold {
            return 0;
        }
        let mut best = go(g + 1, n_gold, n_pred, used, edge);
        for p in 0..n_pred {
            if !used[p] && edge(g, p) {
                used[p] = true;
                best = best.max(1 + go(g + 1, n_gold, n_pred, used, edge));
                used[p] = false;
            }
        }
        best
    }
    go(0, n_gold, n_pred, &mut vec![false; n_pred], edge)
}
