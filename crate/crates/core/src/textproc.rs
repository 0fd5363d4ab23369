//! Offset-preserving tokenization and sentence splitting.
//!
//! Tokens are produced by a fixed rule set so that segmentation is stable
//! across versions and platforms:
//!
//! 1. split on whitespace;
//! 2. peel leading and trailing punctuation off each chunk, one token per
//!    character, except that a trailing period completing a known
//!    abbreviation stays attached (`e.g.`, `vs.`, `al.`);
//! 3. split the remaining core on hyphens and slashes, each separator being
//!    its own token (`K-ras` becomes `K`, `-`, `ras`).
//!
//! Periods and commas inside the core are left alone, so `9.7` and `1,000`
//! are single tokens.
//!
//! A sentence ends after a `.`, `!` or `?` token that is followed by
//! whitespace and a token starting with an uppercase letter or a digit.
//! Abbreviations carry their period inside the token and therefore never end
//! a sentence.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// The abbreviation list shipped with the crate.
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<Token>,
    pub start: usize,
    pub end: usize,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Character span of the inclusive token range `first..=last`.
    pub fn char_span(&self, first: usize, last: usize) -> (usize, usize) {
        (self.tokens[first].start, self.tokens[last].end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlignWarning {
    /// A span boundary fell inside a token or on whitespace and was moved to
    /// the enclosing token boundary.
    BoundaryAdjusted,
    /// The span crossed a sentence boundary; the token range was clipped to
    /// the sentence holding the span's first token.
    CrossSentence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub sentence: usize,
    pub first: usize,
    pub last: usize,
    pub warnings: Vec<AlignWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("span [{start}, {end}) is empty")]
    EmptySpan { start: usize, end: usize },
    #[error("span [{start}, {end}) covers no token")]
    NoTokens { start: usize, end: usize },
}

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl Segmenter {
    /// Builds a segmenter from abbreviation list contents: one entry per
    /// line, blank lines ignored. Multi-word entries such as `et al.` are
    /// matched on their final word.
    pub fn from_list(content: &str) -> Self {
        let abbreviations = content
            .lines()
            .filter_map(|line| line.split_whitespace().last())
            .map(str::to_owned)
            .collect();
        Segmenter { abbreviations }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&content))
    }

    fn is_abbreviation(&self, chars: &[char]) -> bool {
        let word: String = chars.iter().collect();
        self.abbreviations.contains(&word)
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let chars: Vec<char> = text.chars().collect();
        let mut spans = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let chunk_start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            self.split_chunk(&chars, chunk_start, i, &mut spans);
        }
        spans
            .into_iter()
            .map(|(start, end)| Token {
                surface: chars[start..end].iter().collect(),
                start,
                end,
            })
            .collect()
    }

    fn split_chunk(&self, chars: &[char], start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
        let mut lo = start;
        let mut hi = end;
        while lo < hi && is_punct(chars[lo]) {
            out.push((lo, lo + 1));
            lo += 1;
        }
        let mut trailing = Vec::new();
        while hi > lo && is_punct(chars[hi - 1]) {
            if chars[hi - 1] == '.' && self.is_abbreviation(&chars[lo..hi]) {
                break;
            }
            trailing.push((hi - 1, hi));
            hi -= 1;
        }
        let mut piece = lo;
        for k in lo..hi {
            if is_separator(chars[k]) {
                if piece < k {
                    out.push((piece, k));
                }
                out.push((k, k + 1));
                piece = k + 1;
            }
        }
        if piece < hi {
            out.push((piece, hi));
        }
        out.extend(trailing.into_iter().rev());
    }

    pub fn segment(&self, text: &str) -> Vec<Sentence> {
        let tokens = self.tokenize(text);
        let mut sentences = Vec::new();
        let mut current: Vec<Token> = Vec::new();
        for (i, token) in tokens.iter().enumerate() {
            current.push(token.clone());
            let ends_sentence = matches!(token.surface.as_str(), "." | "!" | "?")
                && tokens.get(i + 1).is_some_and(|next| {
                    next.start > token.end
                        && next
                            .surface
                            .chars()
                            .next()
                            .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
                });
            if ends_sentence {
                push_sentence(&mut sentences, std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            push_sentence(&mut sentences, current);
        }
        sentences
    }
}

fn push_sentence(sentences: &mut Vec<Sentence>, tokens: Vec<Token>) {
    let start = tokens[0].start;
    let end = tokens[tokens.len() - 1].end;
    sentences.push(Sentence {
        index: sentences.len(),
        tokens,
        start,
        end,
    });
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

fn is_separator(c: char) -> bool {
    matches!(c, '-' | '/' | '\u{2010}'..='\u{2015}')
}

fn default_segmenter() -> &'static Segmenter {
    static SEGMENTER: OnceLock<Segmenter> = OnceLock::new();
    SEGMENTER.get_or_init(Segmenter::default)
}

/// Segments `text` with the shipped abbreviation list.
pub fn segment(text: &str) -> Vec<Sentence> {
    default_segmenter().segment(text)
}

/// Maps the character span `[start, end)` onto the minimal covering token
/// range.
pub fn align_span(sentences: &[Sentence], start: usize, end: usize) -> std::result::Result<Alignment, AlignError> {
    if start >= end {
        return Err(AlignError::EmptySpan { start, end });
    }
    let mut hit: Option<(usize, usize, usize)> = None;
    let mut last_end = 0;
    let mut cross = false;
    for (si, sentence) in sentences.iter().enumerate() {
        if sentence.end <= start {
            continue;
        }
        if sentence.start >= end {
            break;
        }
        for (ti, token) in sentence.tokens.iter().enumerate() {
            if token.start < end && token.end > start {
                last_end = token.end;
                match &mut hit {
                    None => hit = Some((si, ti, ti)),
                    Some((s, _, last)) if *s == si => *last = ti,
                    Some(_) => cross = true,
                }
            }
        }
    }
    let (sentence, first, last) = hit.ok_or(AlignError::NoTokens { start, end })?;
    let mut warnings = Vec::new();
    if sentences[sentence].tokens[first].start != start || last_end != end {
        warnings.push(AlignWarning::BoundaryAdjusted);
    }
    if cross {
        warnings.push(AlignWarning::CrossSentence);
    }
    Ok(Alignment {
        sentence,
        first,
        last,
        warnings,
    })
}

/// Number of tokens, over all sentences, that overlap `[start, end)`.
pub fn overlapping_token_count(sentences: &[Sentence], start: usize, end: usize) -> usize {
    sentences
        .iter()
        .filter(|s| s.start < end && s.end > start)
        .flat_map(|s| &s.tokens)
        .filter(|t| t.start < end && t.end > start)
        .count()
}

/// Slices `text` by Unicode scalar offsets. Returns `None` when the range is
/// out of bounds or reversed.
pub fn slice_chars(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start { from } else { indices.nth(end - start - 1)? };
    Some(&text[from..to])
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        segment(text)
            .into_iter()
            .flat_map(|s| s.tokens)
            .map(|t| t.surface)
            .collect()
    }

    #[test]
    fn hyphen_is_its_own_token() {
        assert_eq!(
            surfaces("K-ras and PTEN mutations"),
            ["K", "-", "ras", "and", "PTEN", "mutations"]
        );
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(segment("").is_empty());
        assert!(segment("  \n\t ").is_empty());
    }

    #[test]
    fn decimals_stay_whole_and_percent_splits() {
        let sentences = segment("Median PFS was 9.7 months. Response rate was 60%.");
        assert_eq!(sentences.len(), 2);
        let first: Vec<_> = sentences[0].tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(first, ["Median", "PFS", "was", "9.7", "months", "."]);
        let second: Vec<_> = sentences[1].tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(second, ["Response", "rate", "was", "60", "%", "."]);
        assert_eq!(sentences[1].index, 1);
        assert_eq!(sentences[1].start, 27);
    }

    #[test]
    fn abbreviations_do_not_end_sentences() {
        let sentences = segment("Smith et al. Reported gains vs. Placebo arm (e.g., Fig. 2).");
        assert_eq!(sentences.len(), 1);
        let toks: Vec<_> = sentences[0].tokens.iter().map(|t| t.surface.as_str()).collect();
        assert!(toks.contains(&"al."));
        assert!(toks.contains(&"vs."));
        assert!(toks.contains(&"e.g."));
        assert!(toks.contains(&"Fig."));
    }

    #[test]
    fn boundary_needs_uppercase_or_digit() {
        assert_eq!(segment("Rates rose. the end").len(), 1);
        assert_eq!(segment("Rates rose. 12 patients").len(), 2);
        assert_eq!(segment("Why? Because!").len(), 2);
        assert_eq!(segment("Rates rose.The end").len(), 1);
    }

    #[test]
    fn custom_abbreviation_list() {
        let seg = Segmenter::from_list("resp.\n\n");
        assert_eq!(seg.segment("Rates resp. Values").len(), 1);
        assert_eq!(seg.segment("Rates vs. Values").len(), 2);
    }

    #[test]
    fn offsets_count_scalar_values() {
        let tokens = Segmenter::default().tokenize("β-catenin ≥ 18 years");
        assert_eq!(tokens[0].surface, "β");
        assert_eq!((tokens[2].start, tokens[2].end), (2, 9));
        assert_eq!(tokens[3].surface, "≥");
        assert_eq!(tokens[3].start, 10);
    }

    #[test]
    fn align_exact_span_has_no_warning() {
        let text = "We studied K-ras and PTEN mutations here";
        let sentences = segment(text);
        // tokens: We studied K - ras and PTEN ...
        let (s, e) = sentences[0].char_span(2, 4);
        let a = align_span(&sentences, s, e).unwrap();
        assert_eq!((a.sentence, a.first, a.last), (0, 2, 4));
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn align_expands_bisected_token() {
        let sentences = segment("K-ras");
        let a = align_span(&sentences, 1, 3).unwrap();
        assert_eq!((a.sentence, a.first, a.last), (0, 1, 2));
        assert_eq!(a.warnings, [AlignWarning::BoundaryAdjusted]);
    }

    #[test]
    fn align_clips_cross_sentence_span() {
        let text = "Survival improved. Toxicity was mild.";
        let sentences = segment(text);
        assert_eq!(sentences.len(), 2);
        let a = align_span(&sentences, 0, char_len(text)).unwrap();
        assert_eq!((a.sentence, a.first, a.last), (0, 0, 2));
        assert_eq!(a.warnings, [AlignWarning::CrossSentence]);
    }

    #[test]
    fn align_whitespace_span_is_error() {
        let sentences = segment("a    b");
        assert_eq!(
            align_span(&sentences, 2, 4),
            Err(AlignError::NoTokens { start: 2, end: 4 })
        );
        assert!(matches!(align_span(&sentences, 3, 3), Err(AlignError::EmptySpan { .. })));
    }

    #[test]
    fn slice_chars_handles_multibyte() {
        let text = "αβγ δ";
        assert_eq!(slice_chars(text, 1, 3), Some("βγ"));
        assert_eq!(slice_chars(text, 4, 5), Some("δ"));
        assert_eq!(slice_chars(text, 5, 5), Some(""));
        assert_eq!(slice_chars(text, 4, 6), None);
    }
}
