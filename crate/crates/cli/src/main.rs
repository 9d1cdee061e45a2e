use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use flatm::corpus::{self, CorpusFormat};
use flatm::eval::{self, EvalReport};
use flatm::{ErrorKind, TopicModel};
use rayon::prelude::*;

mod config;

use config::{InputArgs, OutputArgs, PathArgs, PlanArgs, RunConfig, SynthArgs, TrainArgs};

#[derive(Parser, Debug)]
#[command(name = "flatm", version, about = "Fuzzy latent topic models")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "FLATM_THREADS")]
    threads: Option<usize>,
    /// JSON file of flag values; flags given here take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print per-iteration clustering diagnostics to standard error
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a topic model and write it as JSON
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Model file to write
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write the global weights as TSV
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// Infer topic distributions for documents
    Infer {
        /// Model file
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List the most probable words of each topic
    TopWords {
        /// Model file
        #[arg(long)]
        model: Option<PathBuf>,
        /// Words per topic
        #[arg(long, default_value_t = 10)]
        k_words: usize,
        /// Only this topic
        #[arg(long)]
        topic: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a configuration by classification or held-out likelihood
    Eval {
        #[command(subcommand)]
        protocol: EvalCommand,
    },
    /// Write a synthetic labeled corpus
    GenSynth {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// Per-class likelihood classification with cross-validation
    Classify(EvalArgs),
    /// Held-out log-likelihood
    Loglik(EvalArgs),
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    plan: PlanArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// json or text
    #[arg(long, default_value = "json")]
    report_format: String,
    /// Also write per-fold detail as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    Core(flatm::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Io(..) => 2,
            Self::Core(e) => match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Io => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(msg) => f.write_str(msg),
            Self::Io(path, e) => write!(f, "{}: {e}", path.display()),
            Self::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<flatm::Error> for CliError {
    fn from(e: flatm::Error) -> Self {
        Self::Core(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let verbose = cli.verbose;
    let command = cli.command;
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(|| dispatch(command, file, verbose)),
        None => dispatch(command, file, verbose),
    }
}

fn dispatch(command: Command, file: RunConfig, verbose: bool) -> Result<(), CliError> {
    match command {
        Command::Train {
            input,
            train,
            output,
            weights_out,
        } => {
            let flags = RunConfig {
                input,
                train,
                output: OutputArgs { output },
                paths: PathArgs {
                    weights_out,
                    ..PathArgs::default()
                },
                ..RunConfig::default()
            };
            cmd_train(&file.merge(flags), verbose)
        }
        Command::Infer {
            model,
            input,
            output,
        } => {
            let flags = RunConfig {
                input,
                output,
                paths: PathArgs {
                    model,
                    ..PathArgs::default()
                },
                ..RunConfig::default()
            };
            cmd_infer(&file.merge(flags))
        }
        Command::TopWords {
            model,
            k_words,
            topic,
            output,
        } => {
            let flags = RunConfig {
                output,
                paths: PathArgs {
                    model,
                    ..PathArgs::default()
                },
                ..RunConfig::default()
            };
            cmd_top_words(&file.merge(flags), k_words, topic)
        }
        Command::Eval { protocol } => {
            let (args, classify) = match protocol {
                EvalCommand::Classify(args) => (args, true),
                EvalCommand::Loglik(args) => (args, false),
            };
            let report_format = args.report_format.clone();
            let flags = RunConfig {
                input: args.input,
                train: args.train,
                plan: args.plan,
                output: args.output,
                paths: PathArgs {
                    csv: args.csv,
                    ..PathArgs::default()
                },
                ..RunConfig::default()
            };
            cmd_eval(&file.merge(flags), classify, &report_format)
        }
        Command::GenSynth {
            synth,
            seed,
            output,
        } => {
            let flags = RunConfig {
                synth,
                output,
                train: TrainArgs {
                    seed,
                    ..TrainArgs::default()
                },
                ..RunConfig::default()
            };
            cmd_gen_synth(&file.merge(flags))
        }
    }
}

fn load_docs(input: &InputArgs) -> Result<Vec<flatm::RawDocument>, CliError> {
    let path = input.input()?;
    let format: CorpusFormat = input.format()?;
    Ok(corpus::load_corpus(
        path,
        format,
        input.allow_empty == Some(true),
    )?)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn emit(output: &OutputArgs, contents: &str) -> Result<(), CliError> {
    match &output.output {
        Some(path) => write_file(path, contents.as_bytes()),
        None => io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn load_model(paths: &PathArgs) -> Result<TopicModel, CliError> {
    let path = paths
        .model
        .as_deref()
        .ok_or_else(|| CliError::Usage("--model is required".into()))?;
    Ok(TopicModel::load(path)?)
}

fn cmd_train(rc: &RunConfig, verbose: bool) -> Result<(), CliError> {
    let output = rc
        .output
        .output
        .as_deref()
        .ok_or_else(|| CliError::Usage("--output is required".into()))?;
    let config = rc.train.to_train_config()?;
    let docs = load_docs(&rc.input)?;
    let started = Instant::now();
    let mut last_stage = usize::MAX;
    let model = flatm::train_observed(&docs, &config, &mut |stage, state| {
        if verbose {
            if stage != last_stage {
                eprintln!("# stage {stage}: {} clusters", state.centers.nrows());
                last_stage = stage;
            }
            eprintln!("{}", state.diagnostic_line());
        }
    })?;
    let elapsed = started.elapsed();
    model.save(output)?;
    if let Some(path) = &rc.paths.weights_out {
        let mut buf = Vec::new();
        model
            .global_weights()
            .write_tsv(model.vocabulary(), &mut buf)
            .map_err(|e| CliError::Io(path.clone(), e))?;
        write_file(path, &buf)?;
    }
    let clamped = model.global_weights().clamped_count();
    if clamped > 0 {
        log::warn!(
            "{clamped} global weights were non-positive and clamped to {}",
            config.epsilon
        );
    }

    let mut out = String::new();
    out.push_str(&format!("vocabulary\t{}\n", model.vocabulary().len()));
    out.push_str(&format!("topics\t{}\n", model.topics()));
    for (i, stage) in model.stages().iter().enumerate() {
        out.push_str(&format!(
            "stage {i}\t{} clusters\t{} iterations\t{}\n",
            stage.clusters,
            stage.iterations,
            if stage.converged {
                "converged"
            } else {
                "not converged"
            }
        ));
    }
    out.push_str(&format!("wall time\t{:.3} s\n", elapsed.as_secs_f64()));
    out.push_str(&format!("config\t{}\n", rc.to_json()));
    emit(&OutputArgs::default(), &out)
}

fn cmd_infer(rc: &RunConfig) -> Result<(), CliError> {
    let model = load_model(&rc.paths)?;
    let docs = load_docs(&rc.input)?;
    let rows: Vec<Option<Vec<f64>>> = docs
        .par_iter()
        .map(|d| match model.fold_in(d) {
            Ok(theta) => Ok(Some(theta)),
            Err(flatm::Error::OutOfVocabulary) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_, _>>()?;

    let mut out = String::from("doc_id");
    for k in 0..model.topics() {
        out.push_str(&format!(",topic_{k}"));
    }
    out.push('\n');
    let mut oov = 0;
    for (doc, row) in docs.iter().zip(&rows) {
        out.push_str(&csv_field(&doc.id));
        match row {
            Some(theta) => {
                for p in theta {
                    out.push_str(&format!(",{p}"));
                }
            }
            None => {
                oov += 1;
                out.push_str(",ERROR_OOV");
            }
        }
        out.push('\n');
    }
    if oov > 0 {
        log::warn!(
            "{oov} of {} documents had no in-vocabulary tokens",
            docs.len()
        );
    }
    emit(&rc.output, &out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn cmd_top_words(rc: &RunConfig, k_words: usize, topic: Option<usize>) -> Result<(), CliError> {
    let model = load_model(&rc.paths)?;
    let topics: Vec<usize> = match topic {
        Some(t) => vec![t],
        None => (0..model.topics()).collect(),
    };
    let mut out = String::from("topic\trank\tterm\tprob\n");
    for t in topics {
        for (rank, (term, p)) in model.top_words(t, k_words)?.into_iter().enumerate() {
            out.push_str(&format!("{t}\t{}\t{term}\t{p}\n", rank + 1));
        }
    }
    emit(&rc.output, &out)
}

fn cmd_eval(rc: &RunConfig, classify: bool, report_format: &str) -> Result<(), CliError> {
    if !matches!(report_format, "json" | "text") {
        return Err(CliError::Usage(format!(
            "unknown report format {report_format:?} (expected json or text)"
        )));
    }
    let train = rc.train.to_train_config()?;
    let docs = load_docs(&rc.input)?;
    let report: EvalReport = if classify {
        eval::classify(&docs, &rc.plan.to_eval_config(train, 5, 0.8))?
    } else {
        eval::heldout_loglik(&docs, &rc.plan.to_eval_config(train, 1, 0.9))?
    };
    if let Some(path) = &rc.paths.csv {
        write_file(path, report.to_csv().as_bytes())?;
    }
    let mut text = if report_format == "json" {
        report.to_json()
    } else {
        report.to_text()
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(&rc.output, &text)
}

fn cmd_gen_synth(rc: &RunConfig) -> Result<(), CliError> {
    let config = rc.synth.to_synth_config(rc.train.seed);
    let docs = eval::generate_synthetic(&config)?;
    emit(&rc.output, &eval::to_labeled_tsv(&docs))
}
