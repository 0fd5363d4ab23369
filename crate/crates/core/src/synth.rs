//! Seeded synthetic abstracts with known annotations.
//!
//! Documents are assembled from sentence templates whose `{Type}` (or
//! `⟨Type⟩`) slots are filled from per-type lexicons. The generator tracks
//! token counts while it writes, so the manifest it returns states the exact
//! corpus statistics without running the statistics code.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::brat;
use crate::corpus::{normalize_annotations, ConceptAnnotation, ConceptType, Corpus, CorpusStats, Document, StatsCounts};
use crate::error::{Error, Result};
use crate::textproc::{self, Segmenter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_docs: usize,
    pub lexicons: BTreeMap<ConceptType, Vec<String>>,
    /// Sentence templates. Templates without slots are used as filler.
    pub templates: Vec<String>,
    /// Probability that a filled slot is echoed once more, unannotated, in
    /// an extra sentence.
    #[serde(default)]
    pub noise_rate: f64,
    /// Probability that a non-Outcome annotation is marked Non-study.
    #[serde(default)]
    pub non_study_rate: f64,
    /// Inclusive range of sentences per document; filler sentences pad
    /// documents up to a drawn length.
    #[serde(default = "default_sentences_per_doc")]
    pub sentences_per_doc: [usize; 2],
    /// Exact annotation counts per type over the whole corpus.
    #[serde(default)]
    pub target_stats: Option<BTreeMap<ConceptType, usize>>,
}

fn default_sentences_per_doc() -> [usize; 2] {
    [4, 8]
}

/// Per-type annotation counts of the reference corpus of 250 abstracts.
pub const REFERENCE_COUNTS: [(ConceptType, usize); 5] = [
    (ConceptType::Cancer, 1622),
    (ConceptType::Mutation, 2293),
    (ConceptType::Population, 133),
    (ConceptType::Treatment, 544),
    (ConceptType::Outcome, 130),
];
pub const REFERENCE_DOCS: usize = 250;

const CANCERS: &[&str] = &[
    "breast cancer",
    "non-small cell lung cancer",
    "mantle cell lymphoma",
    "solid tumors",
    "melanoma",
    "metastatic colorectal cancer",
    "gastrointestinal stromal tumor",
    "glioblastoma",
    "ovarian carcinoma",
    "pancreatic adenocarcinoma",
    "hepatocellular carcinoma",
    "acute myeloid leukemia",
    "anaplastic thyroid cancer",
    "renal cell carcinoma",
];

const MUTATIONS: &[&str] = &[
    "KRAS",
    "BRAF V600E",
    "KRAS G13D",
    "NF2 K322",
    "FGFR2",
    "PIK3R1",
    "CDK4 amplification",
    "PTEN inactivating mutations",
    "EML4-ALK fusion transcript",
    "ALK rearrangement",
    "HER2 amplification",
    "EGFR exon 19 deletion",
    "IDH1 R132H",
    "BRCA2",
    "NRAS Q61K",
    "PIK3CA H1047R",
];

const POPULATIONS: &[&str] = &[
    "never or light smokers",
    "adults older than 18 years",
    "European adults",
    "residents of Hunan Province in China",
    "postmenopausal women",
    "East Asian men",
    "elderly women over 70 years",
    "heavily pretreated adults",
    "treatment-naive adolescents",
    "women with no prior chemotherapy for metastatic disease",
    "current or former smokers",
    "Hispanic men and women",
];

const TREATMENTS: &[&str] = &[
    "sorafenib",
    "abemaciclib",
    "trastuzumab",
    "erlotinib",
    "crizotinib",
    "imatinib 400 mg daily",
    "vemurafenib",
    "cetuximab",
    "gefitinib",
    "osimertinib 80 mg",
    "trastuzumab emtansine",
    "sorafenib 400 mg twice daily",
    "dabrafenib",
    "palbociclib 125 mg",
];

const OUTCOMES: &[&str] = &[
    "The objective response rate was 60% and the median progression-free survival reached 9.7 months, with a disease control rate of 85% at 12 weeks",
    "Main grade 3 or 4 toxicities were rash in 11 of 84 patients, neutropenia in 18 patients and anaemia in three patients, and most events were manageable",
    "Therapy resulted in a clinical benefit rate of 85%-90% and a median progression-free survival of 9-10 months for this molecular subset of patients",
    "Although nearly all patients experienced adverse events, most events were mild or moderate in nature and no therapy-related deaths were observed during follow-up",
    "Median overall survival was 14.2 months in the experimental arm versus 10.1 months in the control arm, corresponding to a hazard ratio of 0.71",
    "Complete or partial responses were observed in 23 of 51 evaluable patients, and responses were durable with a median duration of 11.3 months",
    "The primary endpoint was met, with a statistically significant improvement in progression-free survival and an acceptable safety profile across all subgroups",
    "No objective responses were recorded, and the study was closed early because the median time to progression did not exceed 2 months",
    "Grade 3 adverse events occurred in 35% of patients, mainly fatigue, diarrhoea and hypertension, while overall survival at 2 years was 41%",
    "The 3-year disease-free survival rate improved from 58% to 72%, and the benefit was consistent regardless of age, sex or performance status",
];

const TEMPLATES: &[&str] = &[
    "Patients with {Cancer} harboring {Mutation} received {Treatment} .",
    "We analyzed {Mutation} and {Mutation} status in {Cancer} .",
    "Tumor samples from {Population} with {Cancer} were screened for {Mutation} .",
    "Efficacy of {Treatment} was evaluated in {Cancer} with {Mutation} .",
    "{Outcome} .",
    "Alterations in {Mutation} were detected in 12 of 40 cases of {Cancer} .",
    "The trial enrolled {Population} .",
    "Resistance to {Treatment} emerged in tumors carrying {Mutation} .",
    "Concurrent {Mutation} alterations were frequent in {Cancer} .",
    "Eligible participants were {Population} with {Cancer} .",
    "Among {Population} , {Mutation} was the most common alteration .",
    "The combination of {Treatment} and {Treatment} was tested in {Cancer} .",
    "This study focused on {Cancer} .",
    "Sequencing identified {Mutation} in the tumor .",
    "All participants received {Treatment} .",
    "Co-occurring {Mutation} and {Mutation} were observed in {Cancer} .",
    "This multicenter study was conducted between 2010 and 2016 at 12 academic centers .",
    "Baseline characteristics were balanced between the two study arms .",
    "Tissue was collected at diagnosis and stored for later analysis .",
    "Clinical data were extracted from electronic medical records by two reviewers .",
    "The median follow-up was 24 months at the time of data cutoff .",
    "Statistical analyses used a two-sided significance level of 0.05 .",
    "Written informed consent was obtained from every participant .",
    "Imaging assessments were performed every 8 weeks .",
    "Further prospective studies are warranted to confirm these observations .",
    "Genomic DNA was extracted using a commercial kit according to the manufacturer's protocol .",
    "Samples were reviewed centrally by an experienced pathologist .",
    "Dose modifications were permitted according to protocol guidelines .",
    "The study was approved by the institutional review board .",
    "Data were analyzed according to the intention-to-treat principle .",
];

const NOISE_TEMPLATE: &str = "Earlier reports also discussed {} .";

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec::calibrated(REFERENCE_DOCS, 42)
    }
}

impl SynthSpec {
    /// The shipped lexicons and templates with per-type targets scaled from
    /// the reference counts to `n_docs` documents.
    pub fn calibrated(n_docs: usize, seed: u64) -> Self {
        let lexicon = |words: &[&str]| words.iter().map(|w| w.to_string()).collect::<Vec<_>>();
        let lexicons = BTreeMap::from([
            (ConceptType::Cancer, lexicon(CANCERS)),
            (ConceptType::Mutation, lexicon(MUTATIONS)),
            (ConceptType::Population, lexicon(POPULATIONS)),
            (ConceptType::Treatment, lexicon(TREATMENTS)),
            (ConceptType::Outcome, lexicon(OUTCOMES)),
        ]);
        let targets = REFERENCE_COUNTS
            .iter()
            .map(|&(t, n)| (t, ((n * n_docs) as f64 / REFERENCE_DOCS as f64).round() as usize))
            .collect();
        SynthSpec {
            seed,
            n_docs,
            lexicons,
            templates: TEMPLATES.iter().map(|t| t.to_string()).collect(),
            noise_rate: 0.0,
            non_study_rate: 0.012,
            sentences_per_doc: [18, 26],
            target_stats: Some(targets),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&content).map_err(|e| Error::json(path, e))
    }

    fn validate(&self) -> Result<Vec<Template>> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.noise_rate) || !unit(self.non_study_rate) {
            return Err(Error::Config("noise_rate and non_study_rate must lie in [0, 1]".into()));
        }
        let [lo, hi] = self.sentences_per_doc;
        if lo > hi {
            return Err(Error::Config(format!("sentences_per_doc [{lo}, {hi}] is empty")));
        }
        let templates = self
            .templates
            .iter()
            .map(|t| Template::parse(t))
            .collect::<Result<Vec<_>>>()?;
        for t in &templates {
            for ty in t.slot_types() {
                if self.lexicons.get(&ty).is_none_or(Vec::is_empty) {
                    return Err(Error::Config(format!("template {:?} uses {ty} but its lexicon is empty", t.source)));
                }
            }
        }
        Ok(templates)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(ConceptType),
}

#[derive(Debug, Clone)]
struct Template {
    source: String,
    pieces: Vec<Piece>,
    slot_counts: [usize; 5],
}

impl Template {
    fn parse(source: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut literal = String::new();
        let mut chars = source.chars();
        while let Some(c) = chars.next() {
            let close = match c {
                '{' => '}',
                '⟨' => '⟩',
                _ => {
                    literal.push(c);
                    continue;
                }
            };
            let name: String = chars.by_ref().take_while(|&d| d != close).collect();
            let ty = name
                .parse::<ConceptType>()
                .map_err(|e| Error::Config(format!("template {source:?}: {e}")))?;
            if !literal.is_empty() {
                pieces.push(Piece::Literal(std::mem::take(&mut literal)));
            }
            pieces.push(Piece::Slot(ty));
        }
        if !literal.is_empty() {
            pieces.push(Piece::Literal(literal));
        }
        let mut slot_counts = [0; 5];
        for p in &pieces {
            if let Piece::Slot(t) = p {
                slot_counts[t.index()] += 1;
            }
        }
        Ok(Template {
            source: source.to_owned(),
            pieces,
            slot_counts,
        })
    }

    fn slot_types(&self) -> impl Iterator<Item = ConceptType> + '_ {
        ConceptType::ALL.into_iter().filter(|t| self.slot_counts[t.index()] > 0)
    }

    fn has_slots(&self) -> bool {
        self.slot_counts.iter().any(|&n| n > 0)
    }
}

/// Ground truth recorded while generating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub seed: u64,
    pub n_docs: usize,
    pub counts: StatsCounts,
    pub expected_stats: CorpusStats,
    pub documents: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub tokens: usize,
    pub annotations: usize,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub manifest: SynthManifest,
}

/// Token counts of isolated text pieces, memoized.
struct PieceTokens {
    segmenter: Segmenter,
    cache: HashMap<String, usize>,
}

impl PieceTokens {
    fn count(&mut self, piece: &str) -> usize {
        if let Some(&n) = self.cache.get(piece) {
            return n;
        }
        let n = self.segmenter.tokenize(piece).len();
        self.cache.insert(piece.to_owned(), n);
        n
    }
}

/// Chooses the annotated sentences so that the per-type totals equal the
/// targets exactly. Each step picks a type with probability proportional
/// to its remaining quota, then a template containing that type that still
/// fits every quota.
fn plan_targeted(templates: &[Template], targets: &BTreeMap<ConceptType, usize>, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let mut remaining = [0usize; 5];
    for (t, &n) in targets {
        remaining[t.index()] = n;
    }
    let mut plan = Vec::new();
    loop {
        let total: usize = remaining.iter().sum();
        if total == 0 {
            return Ok(plan);
        }
        let mut pick = rng.gen_range(0..total);
        let ty = ConceptType::ALL
            .into_iter()
            .find(|t| {
                if pick < remaining[t.index()] {
                    true
                } else {
                    pick -= remaining[t.index()];
                    false
                }
            })
            .expect("pick is below the total");
        let fitting: Vec<usize> = templates
            .iter()
            .enumerate()
            .filter(|(_, t)| t.slot_counts[ty.index()] > 0 && t.slot_counts.iter().zip(&remaining).all(|(need, left)| need <= left))
            .map(|(i, _)| i)
            .collect();
        let &choice = fitting.choose(rng).ok_or_else(|| {
            Error::Unsatisfiable(format!(
                "{} more {ty} annotation(s) are required but no template fits the remaining counts {:?}",
                remaining[ty.index()],
                remaining
            ))
        })?;
        for (left, need) in remaining.iter_mut().zip(&templates[choice].slot_counts) {
            *left -= need;
        }
        plan.push(choice);
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    let templates = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let annotated: Vec<usize> = (0..templates.len()).filter(|&i| templates[i].has_slots()).collect();
    let fillers: Vec<usize> = (0..templates.len()).filter(|&i| !templates[i].has_slots()).collect();
    let [lo, hi] = spec.sentences_per_doc;

    // Sentence plan per document: template indices.
    let mut doc_plans: Vec<Vec<usize>> = vec![Vec::new(); spec.n_docs];
    match &spec.target_stats {
        Some(targets) => {
            let wanted: usize = targets.values().sum();
            if spec.n_docs == 0 && wanted > 0 {
                return Err(Error::Unsatisfiable("targets are non-zero but n_docs is 0".into()));
            }
            let mut plan = plan_targeted(&templates, targets, &mut rng)?;
            plan.shuffle(&mut rng);
            for (i, t) in plan.into_iter().enumerate() {
                doc_plans[i % spec.n_docs].push(t);
            }
            for doc in &mut doc_plans {
                let length = rng.gen_range(lo..=hi);
                while doc.len() < length {
                    match fillers.choose(&mut rng) {
                        Some(&f) => doc.push(f),
                        None => break,
                    }
                }
                doc.shuffle(&mut rng);
            }
        }
        None => {
            let pool: Vec<usize> = if annotated.is_empty() { fillers.clone() } else { (0..templates.len()).collect() };
            for doc in &mut doc_plans {
                let length = rng.gen_range(lo..=hi);
                for _ in 0..length {
                    if let Some(&t) = pool.choose(&mut rng) {
                        doc.push(t);
                    }
                }
            }
        }
    }

    let mut tokens = PieceTokens {
        segmenter: Segmenter::default(),
        cache: HashMap::new(),
    };
    let mut documents = Vec::with_capacity(spec.n_docs);
    let mut entries = Vec::with_capacity(spec.n_docs);
    let mut total = StatsCounts::default();
    for (d, plan) in doc_plans.iter().enumerate() {
        let doc_id = format!("synth{:05}", d + 1);
        let mut text = String::new();
        let mut len = 0usize;
        let mut counts = StatsCounts {
            docs: 1,
            ..StatsCounts::default()
        };
        let mut annotations = Vec::new();
        let mut echoes: Vec<String> = Vec::new();
        let append = |text: &mut String, len: &mut usize, s: &str| {
            text.push_str(s);
            *len += textproc::char_len(s);
        };
        for (k, &ti) in plan.iter().enumerate() {
            if k > 0 {
                append(&mut text, &mut len, " ");
            }
            for piece in &templates[ti].pieces {
                match piece {
                    Piece::Literal(s) => {
                        counts.doc_tokens += tokens.count(s);
                        append(&mut text, &mut len, s);
                    }
                    Piece::Slot(ty) => {
                        let phrase = spec.lexicons[ty].choose(&mut rng).expect("lexicon validated non-empty").clone();
                        let n = tokens.count(&phrase);
                        let non_study = *ty != ConceptType::Outcome && rng.gen_bool(spec.non_study_rate);
                        if rng.gen_bool(spec.noise_rate) {
                            echoes.push(phrase.clone());
                        }
                        let start = len;
                        append(&mut text, &mut len, &phrase);
                        annotations.push(
                            ConceptAnnotation::new(String::new(), *ty, start, len)
                                .with_surface(phrase)
                                .non_study(non_study),
                        );
                        counts.doc_tokens += n;
                        let c = &mut counts.per_type[ty.index()];
                        c.annotations += 1;
                        c.tokens += n;
                        c.non_study += usize::from(non_study);
                    }
                }
            }
        }
        for phrase in echoes {
            let (before, after) = NOISE_TEMPLATE.split_once("{}").expect("noise template has a slot");
            if !text.is_empty() {
                append(&mut text, &mut len, " ");
            }
            for s in [before, phrase.as_str(), after] {
                counts.doc_tokens += tokens.count(s);
                append(&mut text, &mut len, s);
            }
        }
        let mut doc = normalize_annotations(Document::new(doc_id.clone(), text).with_annotations(
            annotations
                .into_iter()
                .enumerate()
                .map(|(i, a)| ConceptAnnotation { id: format!("T{}", i + 1), ..a })
                .collect(),
        ))?;
        doc.canonicalize_ids();
        entries.push(ManifestEntry {
            doc_id,
            tokens: counts.doc_tokens,
            annotations: doc.annotations.len(),
        });
        total = total.merge(&counts);
        documents.push(doc);
    }
    let corpus = Corpus::new(documents, format!("synth seed={} n_docs={}", spec.seed, spec.n_docs))?;
    Ok(SynthOutput {
        corpus,
        manifest: SynthManifest {
            seed: spec.seed,
            n_docs: spec.n_docs,
            counts: total,
            expected_stats: CorpusStats::from_counts(&total),
            documents: entries,
        },
    })
}

/// Writes the corpus as brat pairs plus `manifest.json` into `dir`.
pub fn write_output(output: &SynthOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    brat::write_dir(&output.corpus, dir)?;
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&output.manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}
