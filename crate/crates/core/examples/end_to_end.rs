//! The full pipeline: synthesize a corpus, then convert, split, train,
//! predict and evaluate it in one call.

use oncotag::pipeline::{self, RunConfig};
use oncotag::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("oncotag-end-to-end");
    let corpus_dir = root.join("corpus");
    synth::write_output(&synth::generate(&SynthSpec::calibrated(60, 42))?, &corpus_dir)?;

    let config = RunConfig {
        input: corpus_dir,
        output: root.join("run"),
        ..RunConfig::default()
    };
    let summary = pipeline::run(&config)?;
    print!("{}", oncotag::eval::render_report(&summary.report));
    if let Some(s) = summary.outcome_scores {
        println!("Outcome sentence classifier F1 {:.3}", s.f1);
    }
    for w in &summary.manifest.warnings {
        println!("warning: {w}");
    }
    println!("artifacts in {}", config.output.display());
    Ok(())
}
