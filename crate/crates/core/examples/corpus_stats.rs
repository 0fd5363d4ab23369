//! Corpus statistics of the calibrated synthetic corpus, checked against
//! the generator's own bookkeeping.

use oncotag::corpus::compute_stats;
use oncotag::synth::{self, SynthSpec};
use oncotag::textproc::Segmenter;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = synth::generate(&SynthSpec::default())?;
    let mut corpus = out.corpus;
    corpus.segment(&Segmenter::default());
    let stats = compute_stats(&corpus)?;
    print!("{}", stats.render());
    assert_eq!(stats, out.manifest.expected_stats);
    println!("\nmatches the generator manifest");
    Ok(())
}
