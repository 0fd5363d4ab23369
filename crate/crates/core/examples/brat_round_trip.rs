//! Parse a brat `.txt`/`.ann` pair, inspect it, and write it back out.

use oncotag::brat;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let txt = "Patients with BRAF V600E melanoma received vemurafenib.\nNo KRAS mutation was found.\n";
    let ann = "T1\tMutation 14 24\tBRAF V600E\n\
               T2\tCancer 25 33\tmelanoma\n\
               T3\tTreatment 43 54\tvemurafenib\n\
               T4\tMutation 59 63\tKRAS\n\
               A1\tNonStudy T4\n\
               A2\tNegated T4\n";
    let parsed = brat::parse_pair(txt, ann, "example")?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    for a in &parsed.document.annotations {
        println!(
            "{:<10} {:>3}..{:<3} {:<12} non-study={} negated={}",
            a.concept_type, a.start, a.end, a.surface, a.non_study, a.negated
        );
    }
    let (txt_out, ann_out) = brat::emit_pair(&parsed.document);
    assert_eq!(txt_out, txt);
    print!("\nre-emitted .ann:\n{ann_out}");
    Ok(())
}
