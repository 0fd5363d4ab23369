use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oncotag::corpus::{compute_stats, ConceptType};
use oncotag::eval::{self, MatchMode};
use oncotag::pipeline::{self, CorpusFormat, ModelSet, RunConfig};
use oncotag::split;
use oncotag::synth::{self, SynthSpec};
use oncotag::textproc::Segmenter;
use oncotag::{Error, Result};

#[derive(Parser)]
#[command(name = "oncotag", version, about = "Concept tagging for oncology abstracts")]
struct Cli {
    /// Seed for every random choice (split, shuffling, synthesis).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration (JSON); its split and trainer settings apply to
    /// every subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "ONCOTAG_JOBS")]
    jobs: Option<usize>,
    /// Abbreviation list for sentence segmentation.
    #[arg(long, global = true)]
    abbreviations: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a corpus between brat, JSON and tagged-TSV.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        from: Option<CorpusFormat>,
        #[arg(long, default_value = "json")]
        to: CorpusFormat,
    },
    /// Print corpus statistics.
    Stats {
        input: PathBuf,
        #[arg(long)]
        from: Option<CorpusFormat>,
        #[arg(long)]
        json: bool,
    },
    /// Split a corpus into train/val/test JSON directories.
    Split {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        from: Option<CorpusFormat>,
    },
    /// Train CRF layers (and the outcome classifier with `--layer all`).
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        layer: String,
        #[arg(long)]
        models: PathBuf,
    },
    /// Tag a corpus with trained models.
    Predict {
        #[arg(long)]
        models: PathBuf,
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        from: Option<CorpusFormat>,
        #[arg(long, default_value = "brat")]
        to: CorpusFormat,
    },
    /// Score predictions against gold annotations.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: MatchMode,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate a synthetic annotated corpus.
    Synth {
        output: PathBuf,
        /// Generator specification (JSON); defaults to the calibrated spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        docs: Option<usize>,
    },
    /// Convert, split, train, predict and evaluate in one go.
    Run {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        mode: Option<MatchMode>,
    },
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.split.seed = config.seed;
    config.crf.seed = config.seed;
    config.outcome.seed = config.seed;
    if cli.abbreviations.is_some() {
        config.abbreviations = cli.abbreviations.clone();
    }
    Ok(config)
}

fn segmenter(config: &RunConfig) -> Result<Segmenter> {
    match &config.abbreviations {
        Some(path) => Segmenter::from_file(path),
        None => Ok(Segmenter::default()),
    }
}

fn parse_layers(arg: &str) -> Result<Vec<ConceptType>> {
    if arg == "all" {
        return Ok(ConceptType::ALL.to_vec());
    }
    arg.split(',')
        .map(|s| s.parse::<ConceptType>().map_err(|e| Error::Config(e.to_string())))
        .collect()
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let config = run_config(cli)?;
    init_threads(cli.jobs.or(config.jobs));
    match &cli.command {
        Command::Convert { input, output, from, to } => {
            let (corpus, warnings) = pipeline::read_corpus(input, *from, &segmenter(&config)?)?;
            print_warnings(&warnings);
            pipeline::write_corpus(&corpus, output, *to)?;
            println!("converted {} documents to {}", corpus.len(), output.display());
        }
        Command::Stats { input, from, json } => {
            let (corpus, warnings) = pipeline::read_corpus(input, *from, &segmenter(&config)?)?;
            print_warnings(&warnings);
            let stats = compute_stats(&corpus)?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                print!("{}", stats.render());
            }
        }
        Command::Split { input, output, from } => {
            let (corpus, warnings) = pipeline::read_corpus(input, *from, &segmenter(&config)?)?;
            print_warnings(&warnings);
            let parts = split::split_corpus(&corpus, &config.split)?;
            for (name, part) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
                pipeline::write_corpus(part, &output.join(name), CorpusFormat::Json)?;
            }
            let manifest = serde_json::to_string_pretty(&parts.manifest).expect("manifest serializes") + "\n";
            let path = output.join("split_manifest.json");
            std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
            println!(
                "train {} / val {} / test {}",
                parts.train.len(),
                parts.val.len(),
                parts.test.len()
            );
        }
        Command::Train { train, val, layer, models } => {
            let seg = segmenter(&config)?;
            let (train_corpus, w) = pipeline::read_corpus(train, None, &seg)?;
            print_warnings(&w);
            let val_corpus = match val {
                Some(path) => {
                    let (c, w) = pipeline::read_corpus(path, None, &seg)?;
                    print_warnings(&w);
                    c
                }
                None => oncotag::Corpus::default(),
            };
            let layers = parse_layers(layer)?;
            let outcome = (layers.len() == ConceptType::ALL.len()).then_some(&config.outcome);
            let (set, warnings) = pipeline::train_models(&train_corpus, &val_corpus, &layers, &config.crf, outcome)?;
            print_warnings(&warnings);
            set.save(models)?;
            for (layer, model) in &set.crf {
                match model.validation_f1 {
                    Some(f1) => println!("{layer}: validation F1 {:.4}", f1),
                    None => println!("{layer}: no validation score"),
                }
            }
        }
        Command::Predict { models, input, output, from, to } => {
            let set = ModelSet::load(models)?;
            if set.crf.is_empty() {
                return Err(Error::MissingModel(models.display().to_string()));
            }
            let (corpus, warnings) = pipeline::read_corpus(input, *from, &segmenter(&config)?)?;
            print_warnings(&warnings);
            let predicted = pipeline::predict_corpus(&set.crf, &corpus)?;
            pipeline::write_corpus(&predicted, output, *to)?;
            println!("tagged {} documents into {}", predicted.len(), output.display());
        }
        Command::Eval { gold, pred, mode, json } => {
            let seg = segmenter(&config)?;
            let (gold, _) = pipeline::read_corpus(gold, None, &seg)?;
            let (pred, _) = pipeline::read_corpus(pred, None, &seg)?;
            let report = eval::evaluate(&gold, &pred, *mode)?;
            print!("{}", eval::render_report(&report));
            if let Some(path) = json {
                std::fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))?;
            }
        }
        Command::Synth { output, spec, docs } => {
            let mut spec = match spec {
                Some(path) => SynthSpec::load(path)?,
                None => SynthSpec::calibrated(docs.unwrap_or(250), config.seed),
            };
            if let Some(n) = docs {
                spec.n_docs = *n;
            }
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let out = synth::generate(&spec)?;
            synth::write_output(&out, output)?;
            println!("wrote {} documents to {}", out.corpus.len(), output.display());
        }
        Command::Run { input, output, mode } => {
            let mut config = config;
            if let Some(p) = input {
                config.input = p.clone();
            }
            if let Some(p) = output {
                config.output = p.clone();
            }
            if let Some(m) = mode {
                config.match_mode = *m;
            }
            let summary = pipeline::run(&config)?;
            print!("{}", eval::render_report(&summary.report));
            if let Some(s) = summary.outcome_scores {
                println!("Outcome sentences: P {:.4} R {:.4} F1 {:.4}", s.precision, s.recall, s.f1);
            }
        }
    }
    Ok(())
}

fn init_threads(jobs: Option<usize>) {
    if let Some(n) = jobs.filter(|n| *n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

