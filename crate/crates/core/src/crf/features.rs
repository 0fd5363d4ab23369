use crate::textproc::Sentence;

/// Bumped whenever the feature templates change; stored in model files.
pub const TEMPLATES_VERSION: &str = "window2-shape-affix-v1";

const BOS: &str = "<BOS>";
const EOS: &str = "<EOS>";

/// Sparse binary-or-real features of one token, without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(String, f64)>,
}

impl FeatureVector {
    fn push(&mut self, name: String) {
        if !self.contains(&name) {
            self.entries.push((name, 1.0));
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Uppercase to `X`, lowercase to `x`, digits to `d`, anything else kept;
/// runs of the same class collapse to one symbol.
pub fn word_shape(word: &str) -> String {
    let mut shape = String::new();
    for c in word.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            c
        };
        if !shape.ends_with(s) || !matches!(s, 'X' | 'x' | 'd') {
            shape.push(s);
        }
    }
    shape
}

/// Features of the token at `index`:
///
/// - `bias`;
/// - `w[k]=<lowercased word>` for offsets -2..=2, `<BOS>`/`<EOS>` past the
///   sentence edges;
/// - `shape[k]=<shape>` for offsets -1..=1, with the same edge markers;
/// - `pre{n}=`/`suf{n}=` lowercased affixes of length 1..=3;
/// - flags `has_digit`, `has_hyphen`, `all_caps`, `is_title` when true.
pub fn extract_features(sentence: &Sentence, index: usize) -> FeatureVector {
    let tokens = &sentence.tokens;
    let mut fv = FeatureVector::default();
    fv.push("bias".into());
    let at = |offset: isize| -> Option<&str> {
        let i = index as isize + offset;
        if i < 0 {
            Some(BOS)
        } else if i as usize >= tokens.len() {
            Some(EOS)
        } else {
            None
        }
    };
    for offset in -2isize..=2 {
        let value = match at(offset) {
            Some(marker) => marker.to_owned(),
            None => tokens[(index as isize + offset) as usize].surface.to_lowercase(),
        };
        fv.push(format!("w[{offset}]={value}"));
    }
    for offset in -1isize..=1 {
        let value = match at(offset) {
            Some(marker) => marker.to_owned(),
            None => word_shape(&tokens[(index as isize + offset) as usize].surface),
        };
        fv.push(format!("shape[{offset}]={value}"));
    }

    let word = &tokens[index].surface;
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    for n in 1..=3.min(lower.len()) {
        let prefix: String = lower[..n].iter().collect();
        let suffix: String = lower[lower.len() - n..].iter().collect();
        fv.push(format!("pre{n}={prefix}"));
        fv.push(format!("suf{n}={suffix}"));
    }

    let has_letter = word.chars().any(char::is_alphabetic);
    if word.chars().any(|c| c.is_ascii_digit()) {
        fv.push("has_digit".into());
    }
    if word.contains('-') {
        fv.push("has_hyphen".into());
    }
    if has_letter && word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase) {
        fv.push("all_caps".into());
    }
    let mut chars = word.chars();
    if chars.next().is_some_and(char::is_uppercase) && chars.clone().next().is_some() && chars.all(char::is_lowercase) {
        fv.push("is_title".into());
    }
    fv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::segment;

    #[test]
    fn shapes() {
        assert_eq!(word_shape("PTEN"), "X");
        assert_eq!(word_shape("9.7"), "d.d");
        assert_eq!(word_shape("V600E"), "XdX");
        assert_eq!(word_shape("Erlotinib"), "Xx");
        assert_eq!(word_shape("--"), "--");
    }

    #[test]
    fn all_caps_gene_symbol() {
        let s = &segment("loss of PTEN expression")[0];
        let fv = extract_features(s, 2);
        for name in ["w[0]=pten", "shape[0]=X", "all_caps", "suf3=ten", "pre1=p", "w[-2]=loss", "w[2]=<EOS>"] {
            assert!(fv.contains(name), "missing {name}");
        }
        assert!(!fv.contains("is_title"));
        assert_eq!(fv.value("bias"), Some(1.0));
    }

    #[test]
    fn decimal_number() {
        let s = &segment("PFS was 9.7 months")[0];
        let fv = extract_features(s, 2);
        assert!(fv.contains("has_digit"));
        assert!(fv.contains("shape[0]=d.d"));
        assert!(!fv.contains("all_caps"));
    }

    #[test]
    fn sentence_edges() {
        let s = &segment("Erlotinib")[0];
        let fv = extract_features(s, 0);
        for name in ["w[-1]=<BOS>", "w[-2]=<BOS>", "shape[-1]=<BOS>", "w[1]=<EOS>", "is_title"] {
            assert!(fv.contains(name), "missing {name}");
        }
    }

    #[test]
    fn no_duplicate_names() {
        let s = &segment("a")[0];
        let fv = extract_features(s, 0);
        let mut names: Vec<_> = fv.iter().map(|(n, _)| n).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
