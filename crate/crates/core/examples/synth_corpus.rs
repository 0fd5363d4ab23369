//! Generate a small synthetic corpus as brat files plus a manifest.

use oncotag::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("oncotag-synth-example"));
    let mut spec = SynthSpec::calibrated(10, 42);
    spec.noise_rate = 0.1;
    let out = synth::generate(&spec)?;
    synth::write_output(&out, &dir)?;
    println!("wrote {} documents to {}", out.corpus.len(), dir.display());
    let first = &out.corpus.documents[0];
    println!("\n{}: {}", first.doc_id, first.text.lines().next().unwrap_or(""));
    for a in first.annotations.iter().take(8) {
        println!("  {:<10} {}", a.concept_type, a.surface);
    }
    println!("\nexpected statistics:\n{}", out.manifest.expected_stats.render());
    Ok(())
}
