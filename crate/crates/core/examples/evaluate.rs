//! Span-level precision, recall and F1 in exact and overlap mode.

use oncotag::eval::{self, MatchMode};
use oncotag::{ConceptAnnotation, ConceptType, Corpus, Document};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "Imatinib improved survival in patients with KIT-mutant GIST.";
    let span = |id: &str, ty, s, e| ConceptAnnotation::new(id, ty, s, e);
    let gold = Document::new("d1", text).with_annotations(vec![
        span("T1", ConceptType::Treatment, 0, 8),
        span("T2", ConceptType::Population, 30, 59),
        span("T3", ConceptType::Mutation, 44, 54),
        span("T4", ConceptType::Cancer, 55, 59),
    ]);
    let predicted = Document::new("d1", text).with_annotations(vec![
        span("T1", ConceptType::Treatment, 0, 8),
        span("T2", ConceptType::Population, 30, 38),
        span("T3", ConceptType::Mutation, 44, 47),
        span("T4", ConceptType::Cancer, 55, 59),
        span("T5", ConceptType::Outcome, 9, 26),
    ]);
    let gold = Corpus::new(vec![gold], "gold")?;
    let predicted = Corpus::new(vec![predicted], "predicted")?;
    for mode in [MatchMode::Exact, MatchMode::Overlap] {
        println!("{mode} match");
        print!("{}", eval::render_report(&eval::evaluate(&gold, &predicted, mode)?));
        println!();
    }
    Ok(())
}
