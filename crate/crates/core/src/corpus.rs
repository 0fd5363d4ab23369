//! Documents, concept annotations and descriptive corpus statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{self, Segmenter, Sentence};

/// The five concept types of the annotation schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConceptType {
    Cancer,
    Mutation,
    Population,
    Treatment,
    Outcome,
}

impl ConceptType {
    pub const ALL: [ConceptType; 5] = [
        ConceptType::Cancer,
        ConceptType::Mutation,
        ConceptType::Population,
        ConceptType::Treatment,
        ConceptType::Outcome,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConceptType::Cancer => "Cancer",
            ConceptType::Mutation => "Mutation",
            ConceptType::Population => "Population",
            ConceptType::Treatment => "Treatment",
            ConceptType::Outcome => "Outcome",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownConceptType(pub String);

impl fmt::Display for UnknownConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown concept type {:?}; expected one of Cancer, Mutation, Population, Treatment, Outcome",
            self.0
        )
    }
}

impl std::error::Error for UnknownConceptType {}

impl FromStr for ConceptType {
    type Err = UnknownConceptType;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ConceptType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownConceptType(s.to_owned()))
    }
}

/// A typed character span. `start` is inclusive and `end` exclusive, both
/// counted in Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptAnnotation {
    pub id: String,
    #[serde(rename = "type")]
    pub concept_type: ConceptType,
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub surface: String,
    #[serde(default)]
    pub non_study: bool,
    #[serde(default)]
    pub negated: bool,
}

impl ConceptAnnotation {
    pub fn new(id: impl Into<String>, concept_type: ConceptType, start: usize, end: usize) -> Self {
        ConceptAnnotation {
            id: id.into(),
            concept_type,
            start,
            end,
            surface: String::new(),
            non_study: false,
            negated: false,
        }
    }

    pub fn with_surface(mut self, surface: impl Into<String>) -> Self {
        self.surface = surface.into();
        self
    }

    pub fn non_study(mut self, flag: bool) -> Self {
        self.non_study = flag;
        self
    }

    pub fn negated(mut self, flag: bool) -> Self {
        self.negated = flag;
        self
    }

    fn sort_key(&self) -> (usize, usize, ConceptType, bool, bool) {
        (self.start, self.end, self.concept_type, self.non_study, self.negated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub annotations: Vec<ConceptAnnotation>,
    /// Populated by [`Document::segment`]; not part of the on-disk form.
    #[serde(skip)]
    pub sentences: Option<Vec<Sentence>>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            text: text.into(),
            annotations: Vec::new(),
            sentences: None,
        }
    }

    pub fn with_annotations(mut self, annotations: Vec<ConceptAnnotation>) -> Self {
        self.annotations = annotations;
        self
    }

    pub fn segment(&mut self, segmenter: &Segmenter) {
        self.sentences = Some(segmenter.segment(&self.text));
    }

    pub fn segmented(mut self, segmenter: &Segmenter) -> Self {
        self.segment(segmenter);
        self
    }

    pub fn sentences(&self) -> Result<&[Sentence]> {
        self.sentences
            .as_deref()
            .ok_or_else(|| Error::Unsegmented(self.doc_id.clone()))
    }

    pub fn token_count(&self) -> Result<usize> {
        Ok(self.sentences()?.iter().map(Sentence::len).sum())
    }

    /// Renumbers annotation ids `T1..Tn` in their current order.
    pub fn canonicalize_ids(&mut self) {
        for (i, a) in self.annotations.iter_mut().enumerate() {
            a.id = format!("T{}", i + 1);
        }
    }

    pub fn from_json_str(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Sorts annotations by `(start, end, type)`, re-derives surfaces from the
/// text and collapses exact duplicates (same span, type and attributes; the
/// first id wins).
///
/// An empty surface is filled in from the text. A non-empty surface must
/// equal the text slice.
pub fn normalize_annotations(mut doc: Document) -> Result<Document> {
    let len = textproc::char_len(&doc.text);
    for a in &mut doc.annotations {
        let slice = match textproc::slice_chars(&doc.text, a.start, a.end) {
            Some(s) if a.start < a.end => s,
            _ => {
                return Err(Error::SpanOutOfBounds {
                    doc_id: doc.doc_id.clone(),
                    id: a.id.clone(),
                    start: a.start,
                    end: a.end,
                    len,
                })
            }
        };
        if !a.surface.is_empty() && a.surface != slice {
            return Err(Error::SurfaceMismatch {
                doc_id: doc.doc_id.clone(),
                id: a.id.clone(),
                expected: a.surface.clone(),
                found: slice.to_owned(),
            });
        }
        a.surface = slice.to_owned();
    }
    doc.annotations.sort_by_key(ConceptAnnotation::sort_key);
    doc.annotations.dedup_by(|b, a| a.sort_key() == b.sort_key());
    let mut ids = HashSet::new();
    for a in &doc.annotations {
        if !ids.insert(a.id.as_str()) {
            return Err(Error::DuplicateAnnotationId {
                doc_id: doc.doc_id.clone(),
                id: a.id.clone(),
            });
        }
    }
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    #[serde(default)]
    pub provenance: String,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::DuplicateDocId(d.doc_id.clone()));
            }
        }
        Ok(Corpus {
            documents,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn segment(&mut self, segmenter: &Segmenter) {
        for d in &mut self.documents {
            d.segment(segmenter);
        }
    }

    pub fn normalize(self) -> Result<Self> {
        let documents = self
            .documents
            .into_iter()
            .map(normalize_annotations)
            .collect::<Result<_>>()?;
        Ok(Corpus {
            documents,
            provenance: self.provenance,
        })
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.doc_id.as_str()).collect()
    }

    pub fn annotations(&self) -> impl Iterator<Item = &ConceptAnnotation> {
        self.documents.iter().flat_map(|d| &d.annotations)
    }
}

/// Integer tallies behind [`CorpusStats`]. Tallies over disjoint document
/// sets merge by addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsCounts {
    pub docs: usize,
    pub doc_tokens: usize,
    pub per_type: [TypeCounts; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeCounts {
    pub annotations: usize,
    pub non_study: usize,
    pub tokens: usize,
}

impl StatsCounts {
    pub fn merge(mut self, other: &StatsCounts) -> StatsCounts {
        self.docs += other.docs;
        self.doc_tokens += other.doc_tokens;
        for (a, b) in self.per_type.iter_mut().zip(&other.per_type) {
            a.annotations += b.annotations;
            a.non_study += b.non_study;
            a.tokens += b.tokens;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub avg_doc_len_tokens: f64,
    pub total_annotations: usize,
    pub per_type_counts: BTreeMap<ConceptType, usize>,
    pub pct_non_study_overall: f64,
    pub per_type_pct_non_study: BTreeMap<ConceptType, f64>,
    pub avg_concept_len_tokens_overall: f64,
    pub per_type_avg_len: BTreeMap<ConceptType, f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl CorpusStats {
    pub fn from_counts(counts: &StatsCounts) -> CorpusStats {
        let total: usize = counts.per_type.iter().map(|c| c.annotations).sum();
        let non_study: usize = counts.per_type.iter().map(|c| c.non_study).sum();
        let tokens: usize = counts.per_type.iter().map(|c| c.tokens).sum();
        let by_type = |f: &dyn Fn(&TypeCounts) -> f64| {
            ConceptType::ALL
                .into_iter()
                .map(|t| (t, f(&counts.per_type[t.index()])))
                .collect::<BTreeMap<_, _>>()
        };
        CorpusStats {
            n_docs: counts.docs,
            avg_doc_len_tokens: ratio(counts.doc_tokens, counts.docs),
            total_annotations: total,
            per_type_counts: ConceptType::ALL
                .into_iter()
                .map(|t| (t, counts.per_type[t.index()].annotations))
                .collect(),
            pct_non_study_overall: 100.0 * ratio(non_study, total),
            per_type_pct_non_study: by_type(&|c| 100.0 * ratio(c.non_study, c.annotations)),
            avg_concept_len_tokens_overall: ratio(tokens, total),
            per_type_avg_len: by_type(&|c| ratio(c.tokens, c.annotations)),
        }
    }

    /// Renders the statistics as a two-column table.
    pub fn render(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("Number of abstracts".into(), self.n_docs.to_string()),
            (
                "Average length of abstract (tokens)".into(),
                format!("{:.1}", self.avg_doc_len_tokens),
            ),
            ("Total concept annotations".into(), self.total_annotations.to_string()),
        ];
        for (t, n) in &self.per_type_counts {
            rows.push((format!("    {t}"), n.to_string()));
        }
        rows.push((
            "Percent Non-study annotations".into(),
            format!("{:.1}%", self.pct_non_study_overall),
        ));
        for (t, p) in &self.per_type_pct_non_study {
            rows.push((format!("    {t}"), format!("{p:.1}%")));
        }
        rows.push((
            "Average concept length (tokens)".into(),
            format!("{:.1}", self.avg_concept_len_tokens_overall),
        ));
        for (t, l) in &self.per_type_avg_len {
            rows.push((format!("    {t}"), format!("{l:.1}")));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}

/// Tallies one segmented document. Concept length is the number of tokens
/// overlapping the span, so partially covered tokens count as whole tokens.
pub fn document_counts(doc: &Document) -> Result<StatsCounts> {
    let sentences = doc.sentences()?;
    let mut counts = StatsCounts {
        docs: 1,
        doc_tokens: sentences.iter().map(Sentence::len).sum(),
        ..StatsCounts::default()
    };
    for a in &doc.annotations {
        let tokens = textproc::overlapping_token_count(sentences, a.start, a.end);
        if tokens == 0 {
            return Err(crate::textproc::AlignError::NoTokens {
                start: a.start,
                end: a.end,
            }
            .into());
        }
        let c = &mut counts.per_type[a.concept_type.index()];
        c.annotations += 1;
        c.non_study += usize::from(a.non_study);
        c.tokens += tokens;
    }
    Ok(counts)
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = StatsCounts::default();
    for doc in &corpus.documents {
        total = total.merge(&document_counts(doc)?);
    }
    Ok(CorpusStats::from_counts(&total))
}

/// Reads every `*.json` document in `dir`, in file-name order.
pub fn read_json_dir(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let mut paths = list_files(dir, "json")?;
    paths.retain(|p| p.file_name().is_some_and(|n| n != "manifest.json"));
    let mut documents = Vec::with_capacity(paths.len());
    for path in paths {
        let content = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let doc = Document::from_json_str(&content).map_err(|e| Error::json(&path, e))?;
        documents.push(normalize_annotations(doc)?);
    }
    Corpus::new(documents, format!("json:{}", dir.display()))
}

pub fn write_json_dir(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in &corpus.documents {
        let path = dir.join(format!("{}.json", doc.doc_id));
        let mut body = doc.to_json_string();
        body.push('\n');
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub(crate) fn list_files(dir: &Path, extension: &str) -> Result<Vec<std::path::PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == extension) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}
