use std::fs;
use std::path::Path;
use std::process::Command;

use oncotag::corpus::ConceptType;
use oncotag::pipeline::{self, CorpusFormat, RunConfig};
use oncotag::synth::{self, SynthSpec};
use oncotag::textproc::Segmenter;

fn oncotag(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_oncotag"))
        .args(args)
        .env_remove("ONCOTAG_JOBS")
        .output()
        .expect("binary runs")
}

fn small_synth(dir: &Path, n_docs: usize, seed: u64) -> SynthSpec {
    let mut spec = SynthSpec::calibrated(n_docs, seed);
    spec.sentences_per_doc = [6, 9];
    spec.target_stats = None;
    synth::write_output(&synth::generate(&spec).unwrap(), dir).unwrap();
    spec
}

#[test]
fn corpus_without_outcomes_still_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    let mut spec = SynthSpec::calibrated(20, 3);
    spec.sentences_per_doc = [4, 6];
    spec.target_stats = None;
    spec.lexicons.remove(&ConceptType::Outcome);
    spec.templates.retain(|t| !t.contains("Outcome"));
    synth::write_output(&synth::generate(&spec).unwrap(), &corpus_dir).unwrap();

    let config = RunConfig {
        input: corpus_dir,
        output: dir.path().join("run"),
        ..RunConfig::default()
    };
    let summary = pipeline::run(&config).unwrap();
    let outcome = summary.report.per_type[&ConceptType::Outcome];
    assert_eq!((outcome.tp, outcome.fp, outcome.fn_, outcome.f1), (0, 0, 0, 0.0));
    assert!(summary.outcome_scores.is_none());
    assert!(summary.manifest.warnings.iter().any(|w| w.contains("Outcome")));
    assert!(summary.manifest.warnings.iter().any(|w| w.contains("outcome classifier")));
    let eval_txt = fs::read_to_string(dir.path().join("run/reports/eval.txt")).unwrap();
    assert_eq!(eval_txt.lines().count(), 7);
}

#[test]
fn failing_stage_is_named_and_earlier_artifacts_kept() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    small_synth(&corpus_dir, 5, 1);
    let mut config = RunConfig {
        input: corpus_dir,
        output: dir.path().join("run"),
        ..RunConfig::default()
    };
    config.crf.batch_size = 0;
    let err = pipeline::run(&config).unwrap_err().to_string();
    assert!(err.starts_with("train:"), "{err}");
    assert!(dir.path().join("run/split_manifest.json").exists());
    assert!(dir.path().join("run/corpus").is_dir());
}

#[test]
fn formats_convert_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let brat_dir = dir.path().join("brat");
    small_synth(&brat_dir, 6, 2);
    let seg = Segmenter::default();
    let (corpus, _) = pipeline::read_corpus(&brat_dir, None, &seg).unwrap();

    let json_dir = dir.path().join("json");
    pipeline::write_corpus(&corpus, &json_dir, CorpusFormat::Json).unwrap();
    assert_eq!(pipeline::detect_format(&json_dir).unwrap(), CorpusFormat::Json);
    let (from_json, _) = pipeline::read_corpus(&json_dir, None, &seg).unwrap();
    assert_eq!(from_json.documents, corpus.documents);

    // Synthetic text is single-spaced, so rebuilding it from tokens is exact.
    let tsv = dir.path().join("corpus.tsv");
    pipeline::write_corpus(&corpus, &tsv, CorpusFormat::Tsv).unwrap();
    let (from_tsv, _) = pipeline::read_corpus(&tsv, None, &seg).unwrap();
    for (a, b) in corpus.documents.iter().zip(&from_tsv.documents) {
        assert_eq!(a.text, b.text);
        let spans = |d: &oncotag::Document| {
            d.annotations
                .iter()
                .map(|x| (x.start, x.end, x.concept_type, x.non_study))
                .collect::<Vec<_>>()
        };
        assert_eq!(spans(a), spans(b));
    }
}

#[test]
fn cli_subcommands_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let out = oncotag(&["--seed", "4", "synth", &p("corpus"), "--docs", "30"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = oncotag(&["stats", &p("corpus")]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("Number of abstracts                  30"));

    let out = oncotag(&["split", &p("corpus"), &p("split")]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "train 21 / val 3 / test 6");

    let out = oncotag(&["--jobs", "2", "train", "--train", &p("split/train"), "--val", &p("split/val"), "--layer", "Mutation,Cancer", "--models", &p("models")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("models/crf_mutation.json").exists());

    let out = oncotag(&["train", "--train", &p("split/train"), "--models", &p("models"), "--layer", "all"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("models/outcome_classifier.json").exists());

    let out = oncotag(&["predict", "--models", &p("models"), &p("split/test"), &p("pred")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for mode in ["exact", "overlap"] {
        let out = oncotag(&["eval", "--gold", &p("split/test"), "--pred", &p("pred"), "--mode", mode]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("Annotation"));
    }

    let out = oncotag(&["convert", &p("pred"), &p("pred.tsv"), "--to", "tsv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(p("pred.tsv")).unwrap().starts_with("#doc "));
}

#[test]
fn cli_run_with_config_file_and_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(&dir.path().join("corpus"), 12, 5);
    let config = serde_json::json!({
        "input": dir.path().join("corpus"),
        "output": dir.path().join("run"),
        "seed": 5,
        "crf": {"epochs": 5}
    });
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, config.to_string()).unwrap();
    let out = oncotag(&["--config", config_path.to_str().unwrap(), "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["crf"]["epochs"], 5);
    for f in ["predictions/test.tsv", "reports/eval.json", "reports/stats.txt", "models/crf_cancer.json"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }

    let missing = dir.path().join("no-such-corpus");
    let out = oncotag(&["run", "--input", missing.to_str().unwrap(), "--output", &dir.path().join("x").to_string_lossy()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-corpus"));
}
