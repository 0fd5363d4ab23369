//! Concept extraction for precision-oncology abstracts.
//!
//! The crate covers the whole path from annotated abstracts to scored
//! predictions:
//!
//! - [`corpus`]: documents, concept annotations, corpus statistics and the
//!   canonical JSON corpus form.
//! - [`brat`]: reading and writing brat standoff `.txt`/`.ann` pairs.
//! - [`textproc`]: offset-preserving tokenization and sentence splitting.
//! - [`tagcodec`]: BILOU encoding with the `N-` Non-study prefix, one tag
//!   layer per concept type, and the tagged-TSV interchange format.
//! - [`crf`]: a linear-chain CRF tagger trained per concept layer.
//! - [`outcome`]: a logistic-regression sentence classifier for outcome
//!   sentences.
//! - [`eval`]: span-level precision/recall/F1 reports.
//! - [`synth`]: a seeded synthetic corpus generator with exact statistics.
//! - [`split`] and [`pipeline`]: reproducible splits and the end-to-end run.
//!
//! Character offsets everywhere count Unicode scalar values, as brat does.

pub mod brat;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod outcome;
pub mod pipeline;
pub mod split;
pub mod synth;
pub mod tagcodec;
pub mod textproc;

pub use corpus::{ConceptAnnotation, ConceptType, Corpus, CorpusStats, Document};
pub use error::{Error, Result};
