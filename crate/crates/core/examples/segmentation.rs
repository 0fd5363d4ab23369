//! Offset-preserving tokenization and sentence splitting.

use oncotag::textproc::Segmenter;

fn main() {
    let text = "Median PFS was 11.2 vs. 5.6 months (HR 0.45; p<0.001). EGFR-mutant tumours responded, \
                e.g. those with exon 19 deletions. Dr. Smith et al. reported similar results.";
    let segmenter = Segmenter::default();
    for sentence in segmenter.segment(text) {
        println!("sentence {} [{}..{}]", sentence.index, sentence.start, sentence.end);
        let tokens: Vec<String> = sentence
            .tokens
            .iter()
            .map(|t| format!("{}@{}", t.surface, t.start))
            .collect();
        println!("  {}", tokens.join(" "));
    }
}
