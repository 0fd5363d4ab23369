//! Sentence-level Outcome detection with logistic regression.

use oncotag::outcome;
use oncotag::synth::{self, SynthSpec};
use oncotag::textproc::Segmenter;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let segmenter = Segmenter::default();
    let mut spec = SynthSpec::calibrated(80, 3);
    spec.target_stats = None;
    let mut corpus = synth::generate(&spec)?.corpus;
    corpus.segment(&segmenter);
    let (train, test) = corpus.documents.split_at(60);

    let mut examples = Vec::new();
    for doc in train {
        examples.extend(outcome::label_sentences(doc)?);
    }
    let model = outcome::train_lr(&examples, &outcome::default_config())?;
    let scores = outcome::evaluate_sentences(&model, test)?;
    println!(
        "held-out sentences: P {:.3} R {:.3} F1 {:.3}",
        scores.precision, scores.recall, scores.f1
    );

    // A few sentences of each class from the held-out documents.
    let mut shown = [0, 0];
    for doc in test {
        for (sentence, gold) in doc.sentences()?.iter().zip(outcome::label_sentences(doc)?) {
            if shown[gold.label as usize] == 3 {
                continue;
            }
            shown[gold.label as usize] += 1;
            let (p, predicted) = outcome::classify(&model, sentence);
            let text = oncotag::textproc::slice_chars(&doc.text, sentence.start, sentence.end).unwrap_or("");
            println!("p={p:.3} predicted={predicted:<5} gold={:<5} {text}", gold.label);
        }
    }
    Ok(())
}
