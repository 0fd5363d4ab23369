//! Span-level precision, recall and F1.
//!
//! Non-study and Negated attributes are ignored when matching. Each gold
//! span is paired with at most one predicted span and vice versa, greedily
//! in offset order. Every `0/0` ratio is defined as 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptType, Corpus, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Same type and identical `[start, end)`.
    #[default]
    Exact,
    /// Same type and at least one shared character. For error analysis.
    Overlap,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            MatchMode::Exact => "exact",
            MatchMode::Overlap => "overlap",
        })
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "overlap" => Ok(MatchMode::Overlap),
            _ => Err(Error::Config(format!("unknown match mode {s:?}; expected exact or overlap"))),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn_))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Scores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }
}

/// Sentence-level binary classification scores.
pub type BinaryScores = Scores;

impl Scores {
    /// Scores from `(gold, predicted)` label pairs, positive class `true`.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (gold, pred) in pairs {
            match (gold, pred) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        Scores::from_counts(tp, fp, fn_)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub match_mode: MatchMode,
    pub per_type: BTreeMap<ConceptType, Scores>,
    pub overall: Scores,
}

impl EvalReport {
    pub fn from_counts(match_mode: MatchMode, counts: &[(usize, usize, usize); 5]) -> Self {
        let per_type = ConceptType::ALL
            .into_iter()
            .map(|t| {
                let (tp, fp, fn_) = counts[t.index()];
                (t, Scores::from_counts(tp, fp, fn_))
            })
            .collect();
        let (tp, fp, fn_) = counts
            .iter()
            .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
        EvalReport {
            match_mode,
            per_type,
            overall: Scores::from_counts(tp, fp, fn_),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::json("<report>", e))
    }
}

/// Number of greedy matches between the spans of one type in one document.
fn match_count(gold: &[(usize, usize)], pred: &[(usize, usize)], mode: MatchMode) -> usize {
    let mut used = vec![false; pred.len()];
    let mut matches = 0;
    for &(gs, ge) in gold {
        let hit = pred.iter().enumerate().position(|(i, &(ps, pe))| {
            !used[i]
                && match mode {
                    MatchMode::Exact => (ps, pe) == (gs, ge),
                    MatchMode::Overlap => ps < ge && gs < pe,
                }
        });
        if let Some(i) = hit {
            used[i] = true;
            matches += 1;
        }
    }
    matches
}

fn spans_by_type(doc: &Document) -> [Vec<(usize, usize)>; 5] {
    let mut out: [Vec<(usize, usize)>; 5] = Default::default();
    for a in &doc.annotations {
        out[a.concept_type.index()].push((a.start, a.end));
    }
    for spans in &mut out {
        spans.sort_unstable();
    }
    out
}

/// Per-type `(tp, fp, fn)` for one document pair.
pub fn document_counts(gold: &Document, pred: &Document, mode: MatchMode) -> [(usize, usize, usize); 5] {
    let g = spans_by_type(gold);
    let p = spans_by_type(pred);
    std::array::from_fn(|t| {
        let tp = match_count(&g[t], &p[t], mode);
        (tp, p[t].len() - tp, g[t].len() - tp)
    })
}

pub fn evaluate(gold: &Corpus, predicted: &Corpus, mode: MatchMode) -> Result<EvalReport> {
    let gold_ids: BTreeSet<&str> = gold.doc_ids().into_iter().collect();
    let pred_ids: BTreeSet<&str> = predicted.doc_ids().into_iter().collect();
    if gold_ids != pred_ids {
        return Err(Error::DocIdMismatch {
            only_gold: gold_ids.difference(&pred_ids).map(|s| s.to_string()).collect(),
            only_pred: pred_ids.difference(&gold_ids).map(|s| s.to_string()).collect(),
        });
    }
    let by_id: BTreeMap<&str, &Document> = predicted.documents.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut counts = [(0, 0, 0); 5];
    for g in &gold.documents {
        let c = document_counts(g, by_id[g.doc_id.as_str()], mode);
        for (acc, x) in counts.iter_mut().zip(c) {
            acc.0 += x.0;
            acc.1 += x.1;
            acc.2 += x.2;
        }
    }
    Ok(EvalReport::from_counts(mode, &counts))
}

/// Text table with rows Overall, Cancer, Mutation, Population, Treatment,
/// Outcome and percentage cells with two decimals.
pub fn render_report(report: &EvalReport) -> String {
    let mut rows = vec![("Overall".to_owned(), report.overall)];
    for (t, s) in &report.per_type {
        rows.push((t.to_string(), *s));
    }
    let mut out = format!(
        "{:<12} {:>9} {:>9} {:>9}\n",
        "Annotation", "Precision", "Recall", "F1"
    );
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<12} {:>9.2} {:>9.2} {:>9.2}\n",
            name,
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f1
        ));
    }
    out
}
