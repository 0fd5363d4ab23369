//! BILOU tag layers.
//!
//! Each concept type gets its own layer of nine tags: `O`, `B`/`I`/`L`/`U`
//! and their Non-study variants `B-N`/`I-N`/`L-N`/`U-N`. Rendered names
//! follow the `B-N-Treatment` convention. Keeping the layers apart lets an
//! Outcome span contain Treatment or Cancer spans.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ConceptAnnotation, ConceptType, Document};
use crate::error::{Error, Result};
use crate::textproc::{self, AlignWarning, Sentence, Token};

/// Number of tags in one layer.
pub const LAYER_SIZE: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    B,
    I,
    L,
    U,
}

impl Position {
    const ALL: [Position; 4] = [Position::B, Position::I, Position::L, Position::U];

    fn letter(self) -> char {
        match self {
            Position::B => 'B',
            Position::I => 'I',
            Position::L => 'L',
            Position::U => 'U',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    Concept {
        position: Position,
        concept_type: ConceptType,
        non_study: bool,
    },
}

impl Tag {
    pub fn new(position: Position, concept_type: ConceptType, non_study: bool) -> Tag {
        Tag::Concept {
            position,
            concept_type,
            non_study,
        }
    }

    /// Index within a layer's label set: `O` is 0, then `B I L U`, then
    /// `B-N I-N L-N U-N`.
    pub fn label_index(self) -> usize {
        match self {
            Tag::O => 0,
            Tag::Concept {
                position, non_study, ..
            } => 1 + position as usize + if non_study { 4 } else { 0 },
        }
    }

    pub fn from_label_index(index: usize, concept_type: ConceptType) -> Tag {
        assert!(index < LAYER_SIZE, "label index {index} out of range");
        if index == 0 {
            return Tag::O;
        }
        let k = index - 1;
        Tag::new(Position::ALL[k % 4], concept_type, k >= 4)
    }

    pub fn concept_type(self) -> Option<ConceptType> {
        match self {
            Tag::O => None,
            Tag::Concept { concept_type, .. } => Some(concept_type),
        }
    }
}

/// The nine tag names of one layer in label-index order.
pub fn label_set(concept_type: ConceptType) -> Vec<String> {
    (0..LAYER_SIZE)
        .map(|i| Tag::from_label_index(i, concept_type).to_string())
        .collect()
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::Concept {
                position,
                concept_type,
                non_study,
            } => {
                let n = if *non_study { "N-" } else { "" };
                write!(f, "{}-{n}{concept_type}", position.letter())
            }
        }
    }
}

impl FromStr for Tag {
    type Err = CodecError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let bad = || CodecError::BadTag(s.to_owned());
        let (letter, rest) = s.split_once('-').ok_or_else(bad)?;
        let position = match letter {
            "B" => Position::B,
            "I" => Position::I,
            "L" => Position::L,
            "U" => Position::U,
            _ => return Err(bad()),
        };
        let (non_study, name) = match rest.strip_prefix("N-") {
            Some(name) => (true, name),
            None => (false, rest),
        };
        let concept_type = name.parse().map_err(|_| bad())?;
        Ok(Tag::new(position, concept_type, non_study))
    }
}

/// An inclusive token range `first..=last` within one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenSpan {
    pub first: usize,
    pub last: usize,
    pub concept_type: ConceptType,
    pub non_study: bool,
}

impl TokenSpan {
    pub fn new(first: usize, last: usize, concept_type: ConceptType, non_study: bool) -> Self {
        TokenSpan {
            first,
            last,
            concept_type,
            non_study,
        }
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

impl fmt::Display for TokenSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = if self.non_study { " (Non-study)" } else { "" };
        write!(f, "{} tokens {}..{}{n}", self.concept_type, self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    pub concept_type: ConceptType,
    pub tags: Vec<Tag>,
}

impl TagSequence {
    pub fn outside(concept_type: ConceptType, len: usize) -> Self {
        TagSequence {
            concept_type,
            tags: vec![Tag::O; len],
        }
    }

    pub fn from_label_indices(concept_type: ConceptType, labels: &[usize]) -> Self {
        TagSequence {
            concept_type,
            tags: labels
                .iter()
                .map(|&i| Tag::from_label_index(i, concept_type))
                .collect(),
        }
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.tags.iter().map(|t| t.label_index()).collect()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Every `B` is closed by an `L` of the same type and flag with only
    /// matching `I` tags between; `I`/`L` never appear outside such a run;
    /// every tag belongs to the sequence's layer.
    pub fn is_valid(&self) -> bool {
        let mut open: Option<bool> = None;
        for tag in &self.tags {
            match (*tag, open) {
                (Tag::O, None) => {}
                (Tag::Concept { concept_type, .. }, _) if concept_type != self.concept_type => return false,
                (Tag::Concept { position, non_study, .. }, None) => match position {
                    Position::B => open = Some(non_study),
                    Position::U => {}
                    Position::I | Position::L => return false,
                },
                (Tag::Concept { position, non_study, .. }, Some(flag)) => match position {
                    Position::I if non_study == flag => {}
                    Position::L if non_study == flag => open = None,
                    _ => return false,
                },
                (Tag::O, Some(_)) => return false,
            }
        }
        open.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("overlapping spans: {0} and {1}")]
    Overlap(TokenSpan, TokenSpan),
    #[error("span {span} does not belong to layer {layer}")]
    WrongLayer { span: TokenSpan, layer: ConceptType },
    #[error("span {span} exceeds sentence of {len} tokens")]
    OutOfRange { span: TokenSpan, len: usize },
    #[error("priority policy does not apply within a single layer")]
    PriorityWithinLayer,
    #[error("unrecognized tag {0:?}")]
    BadTag(String),
}

pub fn encode(sentence: &Sentence, spans: &[TokenSpan], layer: ConceptType) -> std::result::Result<TagSequence, CodecError> {
    encode_len(sentence.len(), spans, layer)
}

/// [`encode`] over a bare sequence length.
pub fn encode_len(len: usize, spans: &[TokenSpan], layer: ConceptType) -> std::result::Result<TagSequence, CodecError> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    for span in &sorted {
        if span.concept_type != layer {
            return Err(CodecError::WrongLayer { span: *span, layer });
        }
        if span.first > span.last || span.last >= len {
            return Err(CodecError::OutOfRange { span: *span, len });
        }
    }
    for pair in sorted.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(CodecError::Overlap(pair[0], pair[1]));
        }
    }
    let mut seq = TagSequence::outside(layer, len);
    for span in sorted {
        let tag = |p| Tag::new(p, layer, span.non_study);
        if span.first == span.last {
            seq.tags[span.first] = tag(Position::U);
        } else {
            seq.tags[span.first] = tag(Position::B);
            for t in &mut seq.tags[span.first + 1..span.last] {
                *t = tag(Position::I);
            }
            seq.tags[span.last] = tag(Position::L);
        }
    }
    Ok(seq)
}

/// Decodes any tag sequence into ordered, non-overlapping spans.
///
/// Repairs: an `I`/`L` run without a `B` opens at its first tag; a run
/// without an `L` closes at its last contiguous tag of the same type; the
/// first tag of a run decides its Non-study flag.
pub fn decode(seq: &TagSequence) -> Vec<TokenSpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, ConceptType, bool)> = None;
    let close = |open: &mut Option<(usize, ConceptType, bool)>, last: usize, spans: &mut Vec<TokenSpan>| {
        if let Some((first, ty, ns)) = open.take() {
            spans.push(TokenSpan::new(first, last, ty, ns));
        }
    };
    for (i, tag) in seq.tags.iter().enumerate() {
        match *tag {
            Tag::O => close(&mut open, i.saturating_sub(1), &mut spans),
            Tag::Concept {
                position,
                concept_type,
                non_study,
            } => {
                if open.is_some_and(|(_, ty, _)| ty != concept_type) {
                    close(&mut open, i - 1, &mut spans);
                }
                match position {
                    Position::B | Position::U => {
                        close(&mut open, i.saturating_sub(1), &mut spans);
                        open = Some((i, concept_type, non_study));
                        if position == Position::U {
                            close(&mut open, i, &mut spans);
                        }
                    }
                    Position::I => {
                        open.get_or_insert((i, concept_type, non_study));
                    }
                    Position::L => {
                        open.get_or_insert((i, concept_type, non_study));
                        close(&mut open, i, &mut spans);
                    }
                }
            }
        }
    }
    if !seq.tags.is_empty() {
        close(&mut open, seq.tags.len() - 1, &mut spans);
    }
    spans
}

/// Decode followed by re-encode: the structurally valid sequence closest to
/// `seq` under the repair rules.
pub fn repair(seq: &TagSequence) -> TagSequence {
    let spans: Vec<TokenSpan> = decode(seq)
        .into_iter()
        .filter(|s| s.concept_type == seq.concept_type)
        .collect();
    encode_len(seq.len(), &spans, seq.concept_type).expect("decoded spans are disjoint and in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    Error,
    #[default]
    LongestWins,
    Priority,
}

/// Reduces spans of one layer to a non-overlapping subset.
///
/// `LongestWins` keeps longer spans first, ties going to the earlier start.
pub fn resolve_overlaps(spans: &[TokenSpan], policy: OverlapPolicy) -> std::result::Result<Vec<TokenSpan>, CodecError> {
    if let Some(first) = spans.first() {
        if let Some(other) = spans.iter().find(|s| s.concept_type != first.concept_type) {
            return Err(CodecError::WrongLayer {
                span: *other,
                layer: first.concept_type,
            });
        }
    }
    let mut sorted = spans.to_vec();
    sorted.sort();
    sorted.dedup();
    match policy {
        OverlapPolicy::Priority => Err(CodecError::PriorityWithinLayer),
        OverlapPolicy::Error => {
            for (i, a) in sorted.iter().enumerate() {
                if let Some(b) = sorted[i + 1..].iter().find(|b| a.overlaps(b)) {
                    return Err(CodecError::Overlap(*a, *b));
                }
            }
            Ok(sorted)
        }
        OverlapPolicy::LongestWins => {
            let mut by_length = sorted;
            by_length.sort_by(|a, b| b.len().cmp(&a.len()).then(a.first.cmp(&b.first)).then(a.cmp(b)));
            let mut kept: Vec<TokenSpan> = Vec::new();
            for span in by_length {
                if kept.iter().all(|k| !k.overlaps(&span)) {
                    kept.push(span);
                }
            }
            kept.sort();
            Ok(kept)
        }
    }
}

/// Per-sentence tag layers of one document, in `ConceptType::ALL` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceLayers {
    pub layers: [TagSequence; 5],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerWarning {
    pub annotation_id: String,
    pub kind: LayerWarningKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerWarningKind {
    Aligned(AlignWarning),
    DroppedOverlap,
}

/// Aligns a segmented document's annotations to tokens and encodes one
/// layer per concept type for every sentence. Same-layer overlaps are
/// resolved with `policy`; each dropped span yields a warning.
pub fn encode_document(doc: &Document, policy: OverlapPolicy) -> Result<(Vec<SentenceLayers>, Vec<LayerWarning>)> {
    let sentences = doc.sentences()?;
    let mut per_sentence: Vec<[Vec<(TokenSpan, &str)>; 5]> = sentences.iter().map(|_| Default::default()).collect();
    let mut warnings = Vec::new();
    for a in &doc.annotations {
        let alignment = textproc::align_span(sentences, a.start, a.end)?;
        for w in &alignment.warnings {
            warnings.push(LayerWarning {
                annotation_id: a.id.clone(),
                kind: LayerWarningKind::Aligned(*w),
            });
        }
        let span = TokenSpan::new(alignment.first, alignment.last, a.concept_type, a.non_study);
        per_sentence[alignment.sentence][a.concept_type.index()].push((span, a.id.as_str()));
    }
    let mut out = Vec::with_capacity(sentences.len());
    for (sentence, buckets) in sentences.iter().zip(per_sentence) {
        let layers = ConceptType::ALL.map(|ty| {
            let spans: Vec<TokenSpan> = buckets[ty.index()].iter().map(|(s, _)| *s).collect();
            let kept = resolve_overlaps(&spans, policy)?;
            for (span, id) in &buckets[ty.index()] {
                if !kept.contains(span) {
                    warnings.push(LayerWarning {
                        annotation_id: (*id).to_owned(),
                        kind: LayerWarningKind::DroppedOverlap,
                    });
                }
            }
            Ok::<_, Error>(encode(sentence, &kept, ty)?)
        });
        let [a, b, c, d, e] = layers;
        out.push(SentenceLayers {
            layers: [a?, b?, c?, d?, e?],
        });
    }
    Ok((out, warnings))
}

/// Converts decoded token spans of a segmented document back into
/// normalized character-offset annotations with ids `T1..Tn`.
pub fn spans_to_annotations(doc: &Document, spans: &[(usize, TokenSpan)]) -> Result<Vec<ConceptAnnotation>> {
    let sentences = doc.sentences()?;
    let mut annotations: Vec<ConceptAnnotation> = spans
        .iter()
        .map(|(si, span)| {
            let (start, end) = sentences[*si].char_span(span.first, span.last);
            ConceptAnnotation {
                id: String::new(),
                concept_type: span.concept_type,
                start,
                end,
                surface: textproc::slice_chars(&doc.text, start, end).unwrap_or_default().to_owned(),
                non_study: span.non_study,
                negated: false,
            }
        })
        .collect();
    annotations.sort_by_key(|a| (a.start, a.end, a.concept_type));
    for (i, a) in annotations.iter_mut().enumerate() {
        a.id = format!("T{}", i + 1);
    }
    Ok(annotations)
}

/// One document in tagged-TSV form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedDocument {
    pub doc_id: String,
    pub sentences: Vec<TaggedSentence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<Token>,
    pub layers: [TagSequence; 5],
}

impl TaggedDocument {
    pub fn from_document(doc: &Document, policy: OverlapPolicy) -> Result<Self> {
        let (layers, _) = encode_document(doc, policy)?;
        let sentences = doc
            .sentences()?
            .iter()
            .zip(layers)
            .map(|(s, l)| TaggedSentence {
                tokens: s.tokens.clone(),
                layers: l.layers,
            })
            .collect();
        Ok(TaggedDocument {
            doc_id: doc.doc_id.clone(),
            sentences,
        })
    }

    /// Rebuilds a segmented document. Token gaps become spaces, so the text
    /// matches the original wherever the original used single spaces.
    pub fn to_document(&self) -> Result<Document> {
        let mut text = String::new();
        let mut len = 0;
        let mut sentences = Vec::new();
        for (index, ts) in self.sentences.iter().enumerate() {
            for token in &ts.tokens {
                if token.start < len {
                    return Err(Error::Config(format!(
                        "document {}: token {:?} at {} overlaps the previous token",
                        self.doc_id, token.surface, token.start
                    )));
                }
                text.extend(std::iter::repeat_n(' ', token.start - len));
                text.push_str(&token.surface);
                len = token.start + textproc::char_len(&token.surface);
                if len != token.end {
                    return Err(Error::Config(format!(
                        "document {}: token {:?} has offsets [{}, {})",
                        self.doc_id, token.surface, token.start, token.end
                    )));
                }
            }
            if let (Some(first), Some(last)) = (ts.tokens.first(), ts.tokens.last()) {
                sentences.push(Sentence {
                    index,
                    tokens: ts.tokens.clone(),
                    start: first.start,
                    end: last.end,
                });
            }
        }
        let mut doc = Document::new(self.doc_id.clone(), text);
        doc.sentences = Some(sentences);
        let spans: Vec<(usize, TokenSpan)> = self
            .sentences
            .iter()
            .enumerate()
            .flat_map(|(si, ts)| ts.layers.iter().flat_map(decode).map(move |s| (si, s)))
            .collect();
        doc.annotations = spans_to_annotations(&doc, &spans)?;
        Ok(doc)
    }
}

pub fn write_tagged_tsv(docs: &[TaggedDocument], out: &mut impl std::io::Write) -> std::io::Result<()> {
    for doc in docs {
        writeln!(out, "#doc {}", doc.doc_id)?;
        for sentence in &doc.sentences {
            for (i, token) in sentence.tokens.iter().enumerate() {
                write!(out, "{}\t{}\t{}", token.surface, token.start, token.end)?;
                for layer in &sentence.layers {
                    write!(out, "\t{}", layer.tags[i])?;
                }
                writeln!(out)?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn tagged_tsv_string(docs: &[TaggedDocument]) -> String {
    let mut buf = Vec::new();
    write_tagged_tsv(docs, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("tsv is utf-8")
}

pub fn parse_tagged_tsv(content: &str) -> Result<Vec<TaggedDocument>> {
    let mut docs: Vec<TaggedDocument> = Vec::new();
    let mut pending: Vec<(Token, [Tag; 5])> = Vec::new();

    fn flush(docs: &mut [TaggedDocument], pending: &mut Vec<(Token, [Tag; 5])>) {
        if pending.is_empty() {
            return;
        }
        let doc = docs.last_mut().expect("rows only accepted after a #doc header");
        let rows = std::mem::take(pending);
        let layers = ConceptType::ALL.map(|ty| TagSequence {
            concept_type: ty,
            tags: rows.iter().map(|(_, tags)| tags[ty.index()]).collect(),
        });
        doc.sentences.push(TaggedSentence {
            tokens: rows.into_iter().map(|(t, _)| t).collect(),
            layers,
        });
    }

    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let row = raw.strip_suffix('\r').unwrap_or(raw);
        let err = |message: String| Error::Tsv { line, message };
        if let Some(id) = row.strip_prefix("#doc ") {
            flush(&mut docs, &mut pending);
            docs.push(TaggedDocument {
                doc_id: id.to_owned(),
                sentences: Vec::new(),
            });
            continue;
        }
        if row.is_empty() {
            flush(&mut docs, &mut pending);
            continue;
        }
        if docs.is_empty() {
            return Err(err("token row before any `#doc` header".into()));
        }
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != 8 {
            return Err(err(format!("expected 8 columns, found {}", cols.len())));
        }
        let offset = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad offset {s:?}")));
        let token = Token {
            surface: cols[0].to_owned(),
            start: offset(cols[1])?,
            end: offset(cols[2])?,
        };
        let mut tags = [Tag::O; 5];
        for (k, ty) in ConceptType::ALL.into_iter().enumerate() {
            let tag: Tag = cols[3 + k].parse().map_err(|e: CodecError| err(e.to_string()))?;
            if tag.concept_type().is_some_and(|t| t != ty) {
                return Err(err(format!("tag {tag} in the {ty} column")));
            }
            tags[k] = tag;
        }
        pending.push((token, tags));
    }
    flush(&mut docs, &mut pending);
    Ok(docs)
}

pub fn write_tagged_tsv_file(docs: &[TaggedDocument], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(tagged_tsv_string(docs).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_tagged_tsv_file(path: impl AsRef<Path>) -> Result<Vec<TaggedDocument>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tagged_tsv(&content)
}
