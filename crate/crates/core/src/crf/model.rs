use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, TEMPLATES_VERSION};
use super::inference::Potentials;
use super::TrainConfig;
use crate::corpus::ConceptType;
use crate::error::{Error, Result};
use crate::tagcodec::{self, LAYER_SIZE};
use crate::textproc::Sentence;

pub const MODEL_FORMAT_VERSION: u32 = 1;

const BOS_LABEL: &str = "<BOS>";
const EOS_LABEL: &str = "<EOS>";

/// Linear-chain CRF for one concept layer.
///
/// All weights live in one flat vector: emission weights `feature * L +
/// label`, then the `L x L` transition matrix, then `L` start and `L` end
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub layer: ConceptType,
    pub label_set: Vec<String>,
    pub templates_version: String,
    pub config: TrainConfig,
    pub validation_f1: Option<f64>,
    features: Vec<String>,
    index: HashMap<String, u32>,
    weights: Vec<f64>,
}

impl CrfModel {
    /// A zero-weight model over the given feature names.
    pub fn new(layer: ConceptType, features: Vec<String>, config: TrainConfig) -> Self {
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        let weights = vec![0.0; features.len() * LAYER_SIZE + LAYER_SIZE * LAYER_SIZE + 2 * LAYER_SIZE];
        CrfModel {
            layer,
            label_set: tagcodec::label_set(layer),
            templates_version: TEMPLATES_VERSION.to_owned(),
            config,
            validation_f1: None,
            features,
            index,
            weights,
        }
    }

    pub fn num_labels(&self) -> usize {
        LAYER_SIZE
    }

    pub fn l2_lambda(&self) -> f64 {
        self.config.l2_lambda
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn set_weights(&mut self, weights: Vec<f64>) {
        assert_eq!(weights.len(), self.weights.len());
        self.weights = weights;
    }

    pub fn emission_index(&self, feature: u32, label: usize) -> usize {
        feature as usize * LAYER_SIZE + label
    }

    pub fn transition_index(&self, from: usize, to: usize) -> usize {
        self.features.len() * LAYER_SIZE + from * LAYER_SIZE + to
    }

    pub fn start_index(&self, label: usize) -> usize {
        self.features.len() * LAYER_SIZE + LAYER_SIZE * LAYER_SIZE + label
    }

    pub fn end_index(&self, label: usize) -> usize {
        self.start_index(label) + LAYER_SIZE
    }

    /// Known feature ids of every token; features unseen in training are
    /// dropped.
    pub fn encode_sentence(&self, sentence: &Sentence) -> Vec<Vec<u32>> {
        (0..sentence.len())
            .map(|t| {
                extract_features(sentence, t)
                    .iter()
                    .filter_map(|(name, _)| self.feature_id(name))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn potentials_for(&self, features: &[Vec<u32>]) -> Potentials {
        let labels = LAYER_SIZE;
        let emission = features
            .iter()
            .map(|ids| {
                let mut row = vec![0.0; labels];
                for &f in ids {
                    let base = f as usize * labels;
                    for (y, v) in row.iter_mut().enumerate() {
                        *v += self.weights[base + y];
                    }
                }
                row
            })
            .collect();
        let t0 = self.transition_index(0, 0);
        let transition = (0..labels)
            .map(|a| self.weights[t0 + a * labels..t0 + (a + 1) * labels].to_vec())
            .collect();
        let s0 = self.start_index(0);
        Potentials {
            emission,
            transition,
            start: self.weights[s0..s0 + labels].to_vec(),
            end: self.weights[s0 + labels..s0 + 2 * labels].to_vec(),
        }
    }

    pub fn to_file_model(&self) -> ModelFile {
        let mut emission_weights: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (f, name) in self.features.iter().enumerate() {
            for (y, label) in self.label_set.iter().enumerate() {
                let w = self.weights[f * LAYER_SIZE + y];
                if w != 0.0 {
                    emission_weights.entry(name.clone()).or_default().insert(label.clone(), w);
                }
            }
        }
        let mut transition_weights: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (a, from) in self.label_set.iter().enumerate() {
            let row = transition_weights.entry(from.clone()).or_default();
            for (b, to) in self.label_set.iter().enumerate() {
                row.insert(to.clone(), self.weights[self.transition_index(a, b)]);
            }
            row.insert(EOS_LABEL.to_owned(), self.weights[self.end_index(a)]);
        }
        transition_weights.insert(
            BOS_LABEL.to_owned(),
            self.label_set
                .iter()
                .enumerate()
                .map(|(y, l)| (l.clone(), self.weights[self.start_index(y)]))
                .collect(),
        );
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            layer: self.layer,
            label_set: self.label_set.clone(),
            templates_version: self.templates_version.clone(),
            emission_weights,
            transition_weights,
            config: self.config.clone(),
            validation_f1: self.validation_f1,
        }
    }

    pub fn from_file_model(file: ModelFile) -> Result<Self> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format_version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.label_set != tagcodec::label_set(file.layer) {
            return Err(Error::ModelFormat(format!("label set {:?} does not match layer {}", file.label_set, file.layer)));
        }
        let label_index = |name: &str| {
            file.label_set
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::ModelFormat(format!("unknown label {name:?}")))
        };
        let features: Vec<String> = file.emission_weights.keys().cloned().collect();
        let mut model = CrfModel::new(file.layer, features, file.config.clone());
        model.templates_version = file.templates_version.clone();
        model.validation_f1 = file.validation_f1;
        for (f, row) in file.emission_weights.values().enumerate() {
            for (label, &w) in row {
                let i = model.emission_index(f as u32, label_index(label)?);
                model.weights[i] = w;
            }
        }
        for (from, row) in &file.transition_weights {
            for (to, &w) in row {
                let i = match (from.as_str(), to.as_str()) {
                    (BOS_LABEL, to) => model.start_index(label_index(to)?),
                    (from, EOS_LABEL) => model.end_index(label_index(from)?),
                    (from, to) => model.transition_index(label_index(from)?, label_index(to)?),
                };
                model.weights[i] = w;
            }
        }
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::ModelFormat("non-finite weight".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file_model()).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s).map_err(|e| Error::json("<model>", e))?;
        Self::from_file_model(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&content).map_err(|e| Error::json(path, e))?;
        Self::from_file_model(file)
    }
}

/// On-disk model form. Maps are sorted so files are byte-reproducible;
/// zero emission weights are omitted. Start and end weights appear as the
/// `<BOS>` row and the `<EOS>` column of `transition_weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub layer: ConceptType,
    pub label_set: Vec<String>,
    pub templates_version: String,
    pub emission_weights: BTreeMap<String, BTreeMap<String, f64>>,
    pub transition_weights: BTreeMap<String, BTreeMap<String, f64>>,
    pub config: TrainConfig,
    pub validation_f1: Option<f64>,
}
