//! brat standoff `.txt`/`.ann` reading and writing.
//!
//! Supported records are entities (`T`), attributes (`A`) and comments (`#`).
//! Entity lines look like `T1<TAB>Cancer 0 13<TAB>breast cancer`; attribute
//! lines like `A1<TAB>NonStudy T1`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{self, normalize_annotations, ConceptAnnotation, ConceptType, Corpus, Document};
use crate::error::{Error, Result};
use crate::textproc;

pub const NON_STUDY_ATTRIBUTE: &str = "NonStudy";
pub const NEGATED_ATTRIBUTE: &str = "Negated";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BratError {
    #[error("surface mismatch at line {line}: annotation has {surface:?}, text has {text:?}")]
    SurfaceMismatch {
        line: usize,
        surface: String,
        text: String,
    },
    #[error("line {line}: span [{start}, {end}) out of range for text of length {len}")]
    OffsetOutOfRange {
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: unknown entity type {name:?}; accepted: {}", accepted.join(", "))]
    UnknownEntityType {
        line: usize,
        name: String,
        accepted: Vec<String>,
    },
    #[error("line {line}: attribute targets missing entity {target}")]
    MissingTarget { line: usize, target: String },
    #[error("line {line}: discontinuous spans are not supported")]
    Discontinuous { line: usize },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BratWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for BratWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// What an entity type name stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeMapping {
    pub concept_type: ConceptType,
    pub non_study: bool,
}

/// Maps brat entity type names onto concept types. The default accepts
/// exactly the five concept names, case-sensitively.
#[derive(Debug, Clone)]
pub struct BratConfig {
    types: BTreeMap<String, TypeMapping>,
}

impl Default for BratConfig {
    fn default() -> Self {
        let types = ConceptType::ALL
            .into_iter()
            .map(|t| {
                (
                    t.name().to_owned(),
                    TypeMapping {
                        concept_type: t,
                        non_study: false,
                    },
                )
            })
            .collect();
        BratConfig { types }
    }
}

impl BratConfig {
    /// Adds or replaces a type name, e.g. `Non-study-Cancer` mapped to
    /// Cancer with the Non-study flag set.
    pub fn with_type(mut self, name: impl Into<String>, concept_type: ConceptType, non_study: bool) -> Self {
        self.types.insert(
            name.into(),
            TypeMapping {
                concept_type,
                non_study,
            },
        );
        self
    }

    pub fn lookup(&self, name: &str) -> Option<TypeMapping> {
        self.types.get(name).copied()
    }

    fn accepted(&self) -> Vec<String> {
        self.types.keys().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPair {
    pub document: Document,
    pub warnings: Vec<BratWarning>,
}

pub fn parse_pair(txt_content: &str, ann_content: &str, doc_id: &str) -> std::result::Result<ParsedPair, BratError> {
    parse_pair_with(&BratConfig::default(), txt_content, ann_content, doc_id)
}

pub fn parse_pair_with(
    config: &BratConfig,
    txt_content: &str,
    ann_content: &str,
    doc_id: &str,
) -> std::result::Result<ParsedPair, BratError> {
    let text_len = textproc::char_len(txt_content);
    let mut annotations: Vec<ConceptAnnotation> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut attributes: Vec<(usize, &str, &str)> = Vec::new();
    let mut attribute_ids: HashMap<&str, usize> = HashMap::new();
    let mut warnings = Vec::new();

    for (i, raw) in ann_content.split('\n').enumerate() {
        let line = i + 1;
        let record = raw.strip_suffix('\r').unwrap_or(raw);
        if record.trim().is_empty() || record.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| BratError::Malformed {
            line,
            reason: reason.to_owned(),
        };
        let mut fields = record.splitn(3, '\t');
        let id = fields.next().unwrap_or_default();
        let body = fields.next().ok_or_else(|| malformed("missing tab after id"))?;
        match id.chars().next() {
            Some('T') if is_numbered(id) => {
                let surface = fields.next().ok_or_else(|| malformed("missing surface field"))?;
                if body.contains(';') {
                    return Err(BratError::Discontinuous { line });
                }
                let parts: Vec<&str> = body.split(' ').collect();
                let [type_name, start, end] = parts[..] else {
                    return Err(malformed("expected `<type> <start> <end>`"));
                };
                let start: usize = start.parse().map_err(|_| malformed("start offset is not a number"))?;
                let end: usize = end.parse().map_err(|_| malformed("end offset is not a number"))?;
                let mapping = config.lookup(type_name).ok_or_else(|| BratError::UnknownEntityType {
                    line,
                    name: type_name.to_owned(),
                    accepted: config.accepted(),
                })?;
                let slice = match textproc::slice_chars(txt_content, start, end) {
                    Some(s) if start < end => s,
                    _ => {
                        return Err(BratError::OffsetOutOfRange {
                            line,
                            start,
                            end,
                            len: text_len,
                        })
                    }
                };
                if surface != slice && surface != flatten_newlines(slice) {
                    return Err(BratError::SurfaceMismatch {
                        line,
                        surface: surface.to_owned(),
                        text: slice.to_owned(),
                    });
                }
                if by_id.insert(id.to_owned(), annotations.len()).is_some() {
                    return Err(BratError::DuplicateId {
                        line,
                        id: id.to_owned(),
                    });
                }
                annotations.push(ConceptAnnotation {
                    id: id.to_owned(),
                    concept_type: mapping.concept_type,
                    start,
                    end,
                    surface: slice.to_owned(),
                    non_study: mapping.non_study,
                    negated: false,
                });
            }
            Some('A') if is_numbered(id) => {
                if fields.next().is_some() {
                    return Err(malformed("unexpected third field"));
                }
                let parts: Vec<&str> = body.split(' ').collect();
                let (name, target) = match parts[..] {
                    [name, target] | [name, target, _] => (name, target),
                    _ => return Err(malformed("expected `<name> <target> [value]`")),
                };
                if attribute_ids.insert(id, line).is_some() {
                    return Err(BratError::DuplicateId {
                        line,
                        id: id.to_owned(),
                    });
                }
                attributes.push((line, name, target));
            }
            _ => return Err(malformed("expected a T, A or # record")),
        }
    }

    for (line, name, target) in attributes {
        let &index = by_id.get(target).ok_or_else(|| BratError::MissingTarget {
            line,
            target: target.to_owned(),
        })?;
        match name {
            NON_STUDY_ATTRIBUTE => annotations[index].non_study = true,
            NEGATED_ATTRIBUTE => annotations[index].negated = true,
            other => warnings.push(BratWarning {
                line,
                message: format!("ignored unknown attribute {other:?}"),
            }),
        }
    }

    let document = Document::new(doc_id, txt_content).with_annotations(annotations);
    // Offsets and surfaces were validated above, so normalization only sorts
    // and collapses duplicates.
    let document = normalize_annotations(document).expect("validated annotations normalize");
    Ok(ParsedPair { document, warnings })
}

fn is_numbered(id: &str) -> bool {
    id.len() > 1 && id[1..].bytes().all(|b| b.is_ascii_digit())
}

fn flatten_newlines(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Emits a normalized document as `(txt, ann)`. Entities are numbered
/// `T1..Tn` in annotation order; attributes follow all entities, numbered
/// `A1..Am`, NonStudy before Negated for each entity.
pub fn emit_pair(doc: &Document) -> (String, String) {
    let mut ann = String::new();
    for (i, a) in doc.annotations.iter().enumerate() {
        let surface = textproc::slice_chars(&doc.text, a.start, a.end).unwrap_or(&a.surface);
        ann.push_str(&format!(
            "T{}\t{} {} {}\t{}\n",
            i + 1,
            a.concept_type,
            a.start,
            a.end,
            flatten_newlines(surface)
        ));
    }
    let mut next = 1;
    for (i, a) in doc.annotations.iter().enumerate() {
        for (set, name) in [(a.non_study, NON_STUDY_ATTRIBUTE), (a.negated, NEGATED_ATTRIBUTE)] {
            if set {
                ann.push_str(&format!("A{next}\t{name} T{}\n", i + 1));
                next += 1;
            }
        }
    }
    (doc.text.clone(), ann)
}

/// Reads every `<id>.txt`/`<id>.ann` pair in `dir`, in file-name order. A
/// `.txt` without an `.ann` is read as an unannotated document.
pub fn read_dir(dir: impl AsRef<Path>, config: &BratConfig) -> Result<(Corpus, Vec<(String, BratWarning)>)> {
    let dir = dir.as_ref();
    let mut documents = Vec::new();
    let mut warnings = Vec::new();
    for txt_path in corpus::list_files(dir, "txt")? {
        let doc_id = txt_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let ann_path = txt_path.with_extension("ann");
        let txt = fs::read_to_string(&txt_path).map_err(|e| Error::io(&txt_path, e))?;
        let ann = if ann_path.exists() {
            fs::read_to_string(&ann_path).map_err(|e| Error::io(&ann_path, e))?
        } else {
            String::new()
        };
        let parsed = parse_pair_with(config, &txt, &ann, &doc_id).map_err(|source| Error::Brat {
            doc_id: doc_id.clone(),
            source,
        })?;
        warnings.extend(parsed.warnings.into_iter().map(|w| (doc_id.clone(), w)));
        documents.push(parsed.document);
    }
    let corpus = Corpus::new(documents, format!("brat:{}", dir.display()))?;
    Ok((corpus, warnings))
}

pub fn write_dir(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in &corpus.documents {
        let (txt, ann) = emit_pair(doc);
        let txt_path = dir.join(format!("{}.txt", doc.doc_id));
        let ann_path = dir.join(format!("{}.ann", doc.doc_id));
        fs::write(&txt_path, txt).map_err(|e| Error::io(&txt_path, e))?;
        fs::write(&ann_path, ann).map_err(|e| Error::io(&ann_path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TXT: &str = "breast cancer patients";

    #[test]
    fn single_entity() {
        let p = parse_pair(TXT, "T1\tCancer 0 13\tbreast cancer\n", "d").unwrap();
        let a = &p.document.annotations[0];
        assert_eq!((a.concept_type, a.start, a.end), (ConceptType::Cancer, 0, 13));
        assert!(!a.non_study && !a.negated);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn non_study_attribute() {
        let p = parse_pair(TXT, "T1\tCancer 0 13\tbreast cancer\nA1\tNonStudy T1\n", "d").unwrap();
        assert!(p.document.annotations[0].non_study);
    }

    #[test]
    fn attribute_before_entity_resolves() {
        let p = parse_pair(TXT, "A1\tNegated T1\nT1\tCancer 0 13\tbreast cancer\n", "d").unwrap();
        assert!(p.document.annotations[0].negated);
    }

    #[test]
    fn surface_mismatch_reports_line() {
        let err = parse_pair(TXT, "T1\tCancer 0 13\tbreast tumour\n", "d").unwrap_err();
        assert!(err.to_string().starts_with("surface mismatch at line 1"), "{err}");
    }

    #[test]
    fn missing_attribute_target() {
        let err = parse_pair(TXT, "T1\tCancer 0 13\tbreast cancer\nA1\tNegated T9\n", "d").unwrap_err();
        assert_eq!(
            err,
            BratError::MissingTarget {
                line: 2,
                target: "T9".into()
            }
        );
    }

    #[test]
    fn unknown_type_lists_accepted_names() {
        let err = parse_pair(TXT, "T1\tDisease 0 13\tbreast cancer\n", "d").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Disease") && msg.contains("Cancer, Mutation, Outcome, Population, Treatment"), "{msg}");
    }

    #[test]
    fn discontinuous_span_rejected() {
        let err = parse_pair(TXT, "T1\tCancer 0 6;7 13\tbreast cancer\n", "d").unwrap_err();
        assert_eq!(err, BratError::Discontinuous { line: 1 });
    }

    #[test]
    fn malformed_lines() {
        for ann in [
            "T1 Cancer 0 13 breast cancer\n",
            "T1\tCancer zero 13\tbreast cancer\n",
            "T1\tCancer 0\tbreast cancer\n",
            "R1\tRel Arg1:T1 Arg2:T2\n",
            "Tx\tCancer 0 13\tbreast cancer\n",
        ] {
            assert!(
                matches!(parse_pair(TXT, ann, "d"), Err(BratError::Malformed { line: 1, .. })),
                "{ann:?}"
            );
        }
    }

    #[test]
    fn unknown_attribute_is_a_warning() {
        let p = parse_pair(TXT, "T1\tCancer 0 13\tbreast cancer\nA1\tSpeculative T1\n", "d").unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].line, 2);
    }

    #[test]
    fn comments_and_crlf_tolerated() {
        let p = parse_pair(TXT, "#1\tAnnotatorNotes T1\tcheck\r\nT1\tCancer 0 13\tbreast cancer\r\n", "d").unwrap();
        assert_eq!(p.document.annotations.len(), 1);
    }

    #[test]
    fn renamed_non_study_type() {
        let config = BratConfig::default().with_type("Non-study-Cancer", ConceptType::Cancer, true);
        let p = parse_pair_with(&config, TXT, "T1\tNon-study-Cancer 0 13\tbreast cancer\n", "d").unwrap();
        let a = &p.document.annotations[0];
        assert_eq!(a.concept_type, ConceptType::Cancer);
        assert!(a.non_study);
    }

    #[test]
    fn emit_empty_document() {
        let (txt, ann) = emit_pair(&Document::new("d", "no concepts here"));
        assert_eq!(txt, "no concepts here");
        assert_eq!(ann, "");
    }

    #[test]
    fn emit_negated_mutation() {
        let doc = Document::new("d", "no KRAS mutation").with_annotations(vec![ConceptAnnotation::new(
            "X",
            ConceptType::Mutation,
            3,
            7,
        )
        .negated(true)]);
        let doc = normalize_annotations(doc).unwrap();
        let (_, ann) = emit_pair(&doc);
        assert_eq!(ann, "T1\tMutation 3 7\tKRAS\nA1\tNegated T1\n");
    }

    #[test]
    fn attribute_order_is_non_study_then_negated() {
        let doc = Document::new("d", "KRAS and BRAF").with_annotations(vec![
            ConceptAnnotation::new("a", ConceptType::Mutation, 0, 4).negated(true).non_study(true),
            ConceptAnnotation::new("b", ConceptType::Mutation, 9, 13).non_study(true),
        ]);
        let (_, ann) = emit_pair(&normalize_annotations(doc).unwrap());
        assert_eq!(
            ann,
            "T1\tMutation 0 4\tKRAS\nT2\tMutation 9 13\tBRAF\n\
             A1\tNonStudy T1\nA2\tNegated T1\nA3\tNonStudy T2\n"
        );
    }

    #[test]
    fn multiline_surface_round_trips() {
        let doc = Document::new("d", "non-small\ncell lung cancer").with_annotations(vec![ConceptAnnotation::new(
            "T1",
            ConceptType::Cancer,
            0,
            26,
        )]);
        let doc = normalize_annotations(doc).unwrap();
        let (txt, ann) = emit_pair(&doc);
        assert!(ann.contains("non-small cell lung cancer"));
        assert_eq!(parse_pair(&txt, &ann, "d").unwrap().document, doc);
    }
}
