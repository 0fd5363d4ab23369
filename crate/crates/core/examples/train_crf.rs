//! Train the Treatment layer CRF on a small synthetic corpus and tag a new
//! sentence.

use oncotag::crf::{self, TrainConfig};
use oncotag::synth::{self, SynthSpec};
use oncotag::tagcodec;
use oncotag::textproc::Segmenter;
use oncotag::{ConceptType, Corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let segmenter = Segmenter::default();
    let mut spec = SynthSpec::calibrated(60, 7);
    spec.sentences_per_doc = [6, 10];
    spec.target_stats = None;
    let mut corpus = synth::generate(&spec)?.corpus;
    corpus.segment(&segmenter);
    let (train, val) = corpus.documents.split_at(50);
    let train = Corpus::new(train.to_vec(), "train")?;
    let val = Corpus::new(val.to_vec(), "val")?;

    let config = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let outcome = crf::train(&train, ConceptType::Treatment, &config, &val)?;
    for record in &outcome.history {
        println!(
            "epoch {:>2}  objective {:>8.4}  val F1 {:.3}",
            record.epoch, record.train_objective, record.validation_f1
        );
    }
    let model = outcome.model;
    println!("kept checkpoint with validation F1 {:?}", model.validation_f1);

    let sentence = &segmenter.segment("Patients received sorafenib after progression on sunitinib.")[0];
    for span in tagcodec::decode(&crf::viterbi_decode(&model, sentence)) {
        let words: Vec<&str> = sentence.tokens[span.first..=span.last].iter().map(|t| t.surface.as_str()).collect();
        println!("{span}: {}", words.join(" "));
    }
    Ok(())
}
