//! Encode concept spans as per-layer BILOU tags and decode them again,
//! including repair of a malformed tag sequence.

use oncotag::tagcodec::{self, OverlapPolicy, TagSequence};
use oncotag::textproc::Segmenter;
use oncotag::{ConceptAnnotation, ConceptType, Document};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "Erlotinib prolonged survival in EGFR mutant lung adenocarcinoma patients.";
    let at = |s: &str| {
        let start = text.find(s).unwrap();
        (start, start + s.len())
    };
    let span = |id: &str, ty, s: &str| ConceptAnnotation::new(id, ty, at(s).0, at(s).1);
    let doc = Document::new("d1", text)
        .with_annotations(vec![
            span("T1", ConceptType::Treatment, "Erlotinib"),
            span("T2", ConceptType::Mutation, "EGFR mutant").non_study(true),
            span("T3", ConceptType::Cancer, "lung adenocarcinoma"),
            span("T4", ConceptType::Population, "EGFR mutant lung adenocarcinoma patients"),
        ])
        .segmented(&Segmenter::default());

    let (sentences, warnings) = tagcodec::encode_document(&doc, OverlapPolicy::LongestWins)?;
    for w in &warnings {
        eprintln!("warning: {w:?}");
    }
    let tokens = &doc.sentences()?[0].tokens;
    for (i, token) in tokens.iter().enumerate() {
        let tags: Vec<String> = sentences[0].layers.iter().map(|l| l.tags[i].to_string()).collect();
        println!("{:<16} {}", token.surface, tags.join("  "));
    }

    // B I O I L: the dangling run is closed, the stray I opens a new span.
    let broken = TagSequence::from_label_indices(ConceptType::Cancer, &[1, 2, 0, 2, 3]);
    println!("\nrepaired: {:?}", tagcodec::repair(&broken).tags.iter().map(|t| t.to_string()).collect::<Vec<_>>());
    for span in tagcodec::decode(&broken) {
        println!("decoded {span}");
    }
    Ok(())
}
