//! `sentigraph`: encode, train, predict and evaluate structured sentiment
//! graphs from the command line.

mod commands;
mod config;
mod error;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use config::{RunConfig, CONFIG_ENV};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sentigraph",
    version,
    about = "Structured sentiment analysis as dependency graph parsing"
)]
struct Cli {
    /// key=value configuration file; defaults to $SENTIGRAPH_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for predict and eval.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// head-first, head-final, dep-edges or dep-labels.
    #[arg(long)]
    scheme: Option<String>,

    /// Mark span-internal arcs with IN: labels.
    #[arg(long)]
    inlabel: bool,

    /// CoNLL-U file with dependency trees, lemmas and tags.
    #[arg(long)]
    syntax: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode an opinion corpus as dependency graphs.
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write lossy encoding items to this file.
        #[arg(long)]
        loss_report: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Decode a graph file into an opinion corpus.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// head-first, head-final, dep-edges or dep-labels.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        inlabel: bool,
    },
    /// Train a parser and save a checkpoint.
    Train {
        train: PathBuf,
        dev: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write per-epoch loss and development scores here.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Pretrained word vectors in text format.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Contextual vector store.
        #[arg(long)]
        contextual: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Any hyperparameter as key=value; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        settings: Vec<String>,
    },
    /// Parse a corpus with a trained model.
    Predict {
        model: PathBuf,
        input: PathBuf,
        /// Decoded opinion corpus; stdout when neither output is given.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Predicted graphs.
        #[arg(long)]
        graphs: Option<PathBuf>,
        #[arg(long)]
        syntax: Option<PathBuf>,
        #[arg(long)]
        contextual: Option<PathBuf>,
    },
    /// Score predictions against gold annotations.
    Eval {
        gold: PathBuf,
        pred: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Gold graphs; encoded from the gold corpus when absent.
        #[arg(long)]
        gold_graphs: Option<PathBuf>,
        /// Predicted graphs; encoded from the predicted corpus when absent.
        #[arg(long)]
        pred_graphs: Option<PathBuf>,
        /// Restrict to a sentence subset (multi-target).
        #[arg(long)]
        subset: Option<String>,
        /// Report only polarity F1 over overlapping expressions.
        #[arg(long)]
        polarity_only: bool,
        /// Print JSON instead of key=value lines.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Corpus statistics.
    Stats {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Paired bootstrap test of system A against system B.
    Significance {
        gold: PathBuf,
        pred_a: PathBuf,
        pred_b: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Metric to compare; defaults to sf1.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
}

#[derive(Default)]
struct ArgMap(BTreeMap<String, String>);

impl ArgMap {
    fn put(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(value) = value {
            self.0.insert(key.to_owned(), value.to_string());
        }
    }

    fn path(&mut self, key: &str, value: Option<&PathBuf>) {
        self.put(key, value.map(|p| p.display().to_string()));
    }

    fn flag(&mut self, key: &str, set: bool) {
        if set {
            self.0.insert(key.to_owned(), "true".to_owned());
        }
    }

    fn scheme(&mut self, args: &SchemeArgs) {
        self.put("scheme", args.scheme.as_ref());
        self.flag("inlabel", args.inlabel);
        self.path("syntax", args.syntax.as_ref());
    }
}

fn argv_settings(command: &Command) -> Result<(&'static str, BTreeMap<String, String>), CliError> {
    let mut m = ArgMap::default();
    let name = match command {
        Command::Encode {
            input,
            output,
            loss_report,
            scheme,
        } => {
            m.path("input", Some(input));
            m.path("output", output.as_ref());
            m.path("loss_report", loss_report.as_ref());
            m.scheme(scheme);
            "encode"
        }
        Command::Decode {
            input,
            output,
            scheme,
            inlabel,
        } => {
            m.path("input", Some(input));
            m.path("output", output.as_ref());
            m.put("scheme", scheme.as_ref());
            m.flag("inlabel", *inlabel);
            "decode"
        }
        Command::Train {
            train,
            dev,
            output,
            history,
            scheme,
            embeddings,
            contextual,
            seed,
            epochs,
            batch_size,
            settings,
        } => {
            for setting in settings {
                let (key, value) = setting
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, found '{}'", setting)))?;
                m.put(key.trim(), Some(value.trim()));
            }
            m.path("train", Some(train));
            m.path("dev", dev.as_ref());
            m.path("output", output.as_ref());
            m.path("history", history.as_ref());
            m.scheme(scheme);
            m.path("embeddings", embeddings.as_ref());
            m.path("contextual", contextual.as_ref());
            m.put("seed", *seed);
            m.put("epochs", *epochs);
            m.put("batch_size", *batch_size);
            "train"
        }
        Command::Predict {
            model,
            input,
            output,
            graphs,
            syntax,
            contextual,
        } => {
            m.path("model", Some(model));
            m.path("input", Some(input));
            m.path("output", output.as_ref());
            m.path("graphs", graphs.as_ref());
            m.path("syntax", syntax.as_ref());
            m.path("contextual", contextual.as_ref());
            "predict"
        }
        Command::Eval {
            gold,
            pred,
            output,
            gold_graphs,
            pred_graphs,
            subset,
            polarity_only,
            json,
            scheme,
        } => {
            m.path("gold", Some(gold));
            m.path("pred", Some(pred));
            m.path("output", output.as_ref());
            m.path("gold_graphs", gold_graphs.as_ref());
            m.path("pred_graphs", pred_graphs.as_ref());
            m.put("subset", subset.as_ref());
            m.flag("polarity_only", *polarity_only);
            m.flag("json", *json);
            m.scheme(scheme);
            "eval"
        }
        Command::Stats { input, output } => {
            m.path("input", Some(input));
            m.path("output", output.as_ref());
            "stats"
        }
        Command::Significance {
            gold,
            pred_a,
            pred_b,
            output,
            metric,
            iterations,
            seed,
            scheme,
        } => {
            m.path("gold", Some(gold));
            m.path("pred_a", Some(pred_a));
            m.path("pred_b", Some(pred_b));
            m.path("output", output.as_ref());
            m.put("metric", metric.as_ref());
            m.put("iterations", *iterations);
            m.put("seed", *seed);
            m.scheme(scheme);
            "significance"
        }
    };
    Ok((name, m.0))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, mut argv) = argv_settings(&cli.command)?;
    if let Some(threads) = cli.threads {
        argv.insert("threads".to_owned(), threads.to_string());
    }
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let mut cfg = RunConfig::resolve(name, cli.config.as_deref(), env_path, argv)?;
    if name != "train" {
        cfg.set_default("threads", "1");
    }
    info!("resolved config: {}", cfg);
    match name {
        "encode" => commands::encode(&cfg),
        "decode" => commands::decode(&cfg),
        "train" => commands::train_cmd(&cfg),
        "predict" => commands::predict(&cfg),
        "eval" => commands::eval(&cfg),
        "stats" => commands::stats(&cfg),
        "significance" => commands::significance(&cfg),
        _ => unreachable!("every subcommand is dispatched"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
