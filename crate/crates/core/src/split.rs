//! Document-level train/validation/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.70,
            val_frac: 0.10,
            test_frac: 0.20,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config(format!("split fractions must lie in [0, 1]: {fracs:?}")));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes: validation and test are `round(n * frac)`
    /// and train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let val = ((n as f64 * self.val_frac).round() as usize).min(n);
        let test = ((n as f64 * self.test_frac).round() as usize).min(n - val);
        (n - val - test, val, test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub spec: SplitSpec,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
    pub manifest: SplitManifest,
}

/// Shuffles documents (ordered by id first, so input order does not matter)
/// with a generator seeded from `spec.seed` and cuts the sequence into
/// train, validation and test parts.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<CorpusSplit> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut docs: Vec<&Document> = corpus.documents.iter().collect();
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    docs.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (n_train, n_val, _) = spec.sizes(docs.len());
    let part = |range: &[&Document], name: &str| -> Result<Corpus> {
        let mut documents: Vec<Document> = range.iter().map(|d| (*d).clone()).collect();
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        Corpus::new(documents, format!("{} [{name} split, seed {}]", corpus.provenance, spec.seed))
    };
    let train = part(&docs[..n_train], "train")?;
    let val = part(&docs[n_train..n_train + n_val], "val")?;
    let test = part(&docs[n_train + n_val..], "test")?;
    let ids = |c: &Corpus| c.doc_ids().into_iter().map(str::to_owned).collect();
    let manifest = SplitManifest {
        spec: *spec,
        train: ids(&train),
        val: ids(&val),
        test: ids(&test),
    };
    Ok(CorpusSplit {
        train,
        val,
        test,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> Corpus {
        Corpus::new((0..n).map(|i| Document::new(format!("d{i:03}"), "text")).collect(), "t").unwrap()
    }

    #[test]
    fn reference_sizes() {
        let spec = SplitSpec::default();
        assert_eq!(spec.sizes(250), (175, 25, 50));
        assert_eq!(spec.sizes(10), (7, 1, 2));
        assert_eq!(spec.sizes(1), (1, 0, 0));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let spec = SplitSpec {
            train_frac: 0.7,
            val_frac: 0.2,
            test_frac: 0.2,
            seed: 1,
        };
        assert!(split_corpus(&corpus(10), &spec).is_err());
    }

    #[test]
    fn disjoint_cover_and_deterministic() {
        let c = corpus(37);
        let a = split_corpus(&c, &SplitSpec::default()).unwrap();
        let b = split_corpus(&c, &SplitSpec::default()).unwrap();
        assert_eq!(a.manifest, b.manifest);
        let mut all: Vec<String> = [&a.manifest.train, &a.manifest.val, &a.manifest.test]
            .into_iter()
            .flatten()
            .cloned()
            .collect();
        all.sort();
        assert_eq!(all, c.doc_ids());
    }

    #[test]
    fn input_order_does_not_matter() {
        let c = corpus(20);
        let mut reversed = c.clone();
        reversed.documents.reverse();
        assert_eq!(
            split_corpus(&c, &SplitSpec::default()).unwrap().manifest,
            split_corpus(&reversed, &SplitSpec::default()).unwrap().manifest
        );
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(split_corpus(&Corpus::default(), &SplitSpec::default()).is_err());
    }
}
