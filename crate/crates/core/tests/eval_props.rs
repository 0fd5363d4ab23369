mod common;

use oncotag::eval::{self, MatchMode};
use oncotag::{ConceptAnnotation, ConceptType, Corpus, Document};
use proptest::prelude::*;

fn spans() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..30, 1usize..6).prop_map(|(s, w)| (s, s + w)), 0..7)
}

fn doc(id: &str, spans: &[(usize, usize)], ty: ConceptType) -> Document {
    let annotations = spans
        .iter()
        .enumerate()
        .map(|(i, &(s, e))| ConceptAnnotation::new(format!("T{}", i + 1), ty, s, e))
        .collect();
    Document::new(id, "x".repeat(40)).with_annotations(annotations)
}

fn disjoint(mut spans: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    spans.sort();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for s in spans {
        if out.last().is_none_or(|l| l.1 <= s.0) {
            out.push(s);
        }
    }
    out
}

fn mode() -> impl Strategy<Value = MatchMode> {
    prop::sample::select(vec![MatchMode::Exact, MatchMode::Overlap])
}

proptest! {
    #[test]
    fn swapping_gold_and_prediction_swaps_fp_and_fn(g in spans(), p in spans(), mode in mode()) {
        let ty = ConceptType::Mutation;
        let a = eval::document_counts(&doc("d", &g, ty), &doc("d", &p, ty), mode)[ty.index()];
        let b = eval::document_counts(&doc("d", &p, ty), &doc("d", &g, ty), mode)[ty.index()];
        if mode == MatchMode::Exact {
            prop_assert_eq!((a.0, a.1, a.2), (b.0, b.2, b.1));
        } else {
            prop_assert_eq!(a.1 + a.0, p.len());
            prop_assert_eq!(b.1 + b.0, g.len());
        }
    }

    #[test]
    fn greedy_matching_against_maximum_matching(g in spans(), p in spans(), mode in mode()) {
        let ty = ConceptType::Cancer;
        let edge = |gs: &[(usize, usize)], ps: &[(usize, usize)], i: usize, j: usize| match mode {
            MatchMode::Exact => gs[i] == ps[j],
            MatchMode::Overlap => gs[i].0 < ps[j].1 && ps[j].0 < gs[i].1,
        };
        let tp = eval::document_counts(&doc("d", &g, ty), &doc("d", &p, ty), mode)[ty.index()].0;
        let best = common::max_matching(g.len(), p.len(), &|i, j| edge(&g, &p, i, j));
        prop_assert!(tp <= best);
        let (gd, pd) = (disjoint(g.clone()), disjoint(p.clone()));
        let tp = eval::document_counts(&doc("d", &gd, ty), &doc("d", &pd, ty), mode)[ty.index()].0;
        let best = common::max_matching(gd.len(), pd.len(), &|i, j| edge(&gd, &pd, i, j));
        prop_assert_eq!(tp, best);
    }

    #[test]
    fn scores_are_bounded(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
        let s = eval::Scores::from_counts(tp, fp, fn_);
        for v in [s.precision, s.recall, s.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
    }
}

#[test]
fn attributes_do_not_affect_matching() {
    let ty = ConceptType::Treatment;
    let gold = Document::new("d", "x".repeat(20))
        .with_annotations(vec![ConceptAnnotation::new("T1", ty, 0, 5).non_study(true).negated(true)]);
    let pred = Document::new("d", "x".repeat(20)).with_annotations(vec![ConceptAnnotation::new("T1", ty, 0, 5)]);
    assert_eq!(eval::document_counts(&gold, &pred, MatchMode::Exact)[ty.index()], (1, 0, 0));
}

#[test]
fn type_must_agree() {
    let gold = doc("d", &[(0, 5)], ConceptType::Cancer);
    let pred = doc("d", &[(0, 5)], ConceptType::Population);
    let c = eval::document_counts(&gold, &pred, MatchMode::Overlap);
    assert_eq!(c[ConceptType::Cancer.index()], (0, 0, 1));
    assert_eq!(c[ConceptType::Population.index()], (0, 1, 0));
}

#[test]
fn report_json_round_trip_and_micro_average() {
    let gold = Corpus::new(
        vec![doc("a", &[(0, 3), (5, 8)], ConceptType::Cancer), doc("b", &[(0, 4)], ConceptType::Mutation)],
        "g",
    )
    .unwrap();
    let pred = Corpus::new(
        vec![doc("a", &[(0, 3)], ConceptType::Cancer), doc("b", &[(0, 4), (9, 12)], ConceptType::Mutation)],
        "p",
    )
    .unwrap();
    let report = eval::evaluate(&gold, &pred, MatchMode::Exact).unwrap();
    assert_eq!((report.overall.tp, report.overall.fp, report.overall.fn_), (2, 1, 1));
    assert_eq!(eval::EvalReport::from_json(&report.to_json()).unwrap(), report);
    let rendered = eval::render_report(&report);
    let rows: Vec<&str> = rendered.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(rows, ["Overall", "Cancer", "Mutation", "Population", "Treatment", "Outcome"]);
}
