//! Subcommand implementations. Every setting is read from the resolved
//! [`RunConfig`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use sentigraph::codec::{decode_graph, encode_corpus, EncodingScheme, HeadRule, SyntaxMap};
use sentigraph::io::{
    attach_annotations, graphs_to_string, load_conllu, load_contextual_vectors, load_embeddings, load_opinion_corpus,
    opinion_json_string, read_graph_file, ContextualStore,
};
use sentigraph::metrics::{
    bootstrap_significance, dataset_stats, evaluate_metric, filter_multi_target, restrict_to, Evaluated, Metric,
    MetricReport, Prf, DEFAULT_ITERATIONS,
};
use sentigraph::model::{AnnotatedSentence, ParseGraph, Sentence};
use sentigraph::parser::{load_model, save_model, train, Hyperparams, Model, TrainInputs};

use crate::config::RunConfig;
use crate::error::CliError;

/// Keys understood by the command surface; anything else in a `train`
/// configuration is a hyperparameter.
pub const KNOWN_KEYS: &[&str] = &[
    "input",
    "output",
    "train",
    "dev",
    "model",
    "gold",
    "pred",
    "pred_a",
    "pred_b",
    "gold_graphs",
    "pred_graphs",
    "graphs",
    "history",
    "loss_report",
    "scheme",
    "inlabel",
    "syntax",
    "embeddings",
    "contextual",
    "threads",
    "subset",
    "polarity_only",
    "json",
    "metric",
    "iterations",
];

fn required(cfg: &RunConfig, key: &str) -> Result<PathBuf, CliError> {
    cfg.path(key)
        .ok_or_else(|| CliError::Usage(format!("missing required setting '{}'", key)))
}

fn write_output(cfg: &RunConfig, key: &str, content: &str) -> Result<(), CliError> {
    match cfg.path(key) {
        Some(path) => write_file(&path, content),
        None => {
            print!("{}", content);
            Ok(())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::Usage(format!("cannot write {}: {}", path.display(), e)))
}

fn scheme(cfg: &RunConfig) -> Result<EncodingScheme, CliError> {
    let rule = match cfg.get("scheme") {
        None => HeadRule::HeadFirst,
        Some(name) => name.parse().map_err(|_| {
            CliError::Usage(format!(
                "unknown scheme '{}'; expected head-first, head-final, dep-edges or dep-labels",
                name
            ))
        })?,
    };
    Ok(EncodingScheme::new(rule, cfg.flag("inlabel")?))
}

fn thread_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    let threads = cfg.parse::<usize>("threads")?.unwrap_or(1);
    if threads == 0 {
        return Err(CliError::Usage("threads must be at least 1".to_owned()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {}", threads, e)))
}

fn load_corpus(path: &Path) -> Result<Vec<AnnotatedSentence>, CliError> {
    let loaded = load_opinion_corpus(path)?;
    if loaded.skipped_opinions > 0 {
        warn!(
            "{}: skipped {} unusable opinions",
            path.display(),
            loaded.skipped_opinions
        );
    }
    if loaded.duplicates_removed > 0 {
        info!(
            "{}: removed {} duplicate opinions",
            path.display(),
            loaded.duplicates_removed
        );
    }
    Ok(loaded.sentences)
}

/// Syntax trees from `--syntax`, also attaching lemmas and tags to the
/// given corpora.
fn load_syntax(cfg: &RunConfig, corpora: &mut [&mut Vec<AnnotatedSentence>]) -> Result<Option<SyntaxMap>, CliError> {
    let Some(path) = cfg.path("syntax") else {
        return Ok(None);
    };
    let conllu = load_conllu(&path)?;
    for corpus in corpora.iter_mut() {
        let attached = attach_annotations(corpus, &conllu)?;
        info!("attached syntax to {} of {} sentences", attached, corpus.len());
    }
    Ok(Some(conllu.into_iter().map(|s| (s.sent_id, s.tree)).collect()))
}

fn check_syntax(scheme: &EncodingScheme, syntax: &Option<SyntaxMap>) -> Result<(), CliError> {
    if scheme.needs_syntax() && syntax.is_none() {
        return Err(CliError::Usage(format!(
            "scheme {} needs --syntax with dependency trees",
            scheme.head_rule()
        )));
    }
    Ok(())
}

fn contextual(cfg: &RunConfig) -> Result<Option<ContextualStore>, CliError> {
    Ok(cfg.path("contextual").map(load_contextual_vectors).transpose()?)
}

fn sentences(corpus: &[AnnotatedSentence]) -> Vec<Sentence> {
    corpus.iter().map(|a| a.sentence.clone()).collect()
}

fn decoded_corpus(
    sentences: &[Sentence],
    graphs: &[ParseGraph],
    scheme: &EncodingScheme,
) -> Result<Vec<AnnotatedSentence>, CliError> {
    let mut ignored = 0;
    let mut out = Vec::with_capacity(sentences.len());
    for (sentence, graph) in sentences.iter().zip(graphs) {
        let decoded = decode_graph(graph, scheme);
        ignored += decoded.ignored_arcs;
        let mut ann = AnnotatedSentence::new(sentence.clone(), decoded.opinions)?;
        ann.dedup_opinions();
        out.push(ann);
    }
    if ignored > 0 {
        info!("{} arcs were not used by decoding", ignored);
    }
    Ok(out)
}

pub fn encode(cfg: &RunConfig) -> Result<(), CliError> {
    let mut corpus = load_corpus(&required(cfg, "input")?)?;
    let scheme = scheme(cfg)?;
    let syntax = load_syntax(cfg, &mut [&mut corpus])?;
    check_syntax(&scheme, &syntax)?;
    let (graphs, report) = encode_corpus(&corpus, &scheme, syntax.as_ref())?;
    info!(
        "encoded {} sentences; {} lossy items ({} collisions)",
        corpus.len(),
        report.count(),
        report.collisions()
    );
    if let Some(path) = cfg.path("loss_report") {
        let text: String = report.entries.iter().map(|e| format!("{}\n", e)).collect();
        write_file(&path, &text)?;
    }
    write_output(cfg, "output", &graphs_to_string(&graphs, &sentences(&corpus))?)
}

pub fn decode(cfg: &RunConfig) -> Result<(), CliError> {
    let records = read_graph_file(required(cfg, "input")?)?;
    let scheme = scheme(cfg)?;
    let mut sents = Vec::with_capacity(records.len());
    let mut graphs = Vec::with_capacity(records.len());
    for record in records {
        sents.push(Sentence::from_forms(record.sent_id, &record.forms)?);
        graphs.push(record.graph);
    }
    let corpus = decoded_corpus(&sents, &graphs, &scheme)?;
    write_output(cfg, "output", &opinion_json_string(&corpus))
}

fn hyperparams(cfg: &RunConfig) -> Result<Hyperparams, CliError> {
    let mut hyper = Hyperparams::default();
    for (key, value) in cfg.extra(KNOWN_KEYS) {
        hyper.set(key, value).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    hyper.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(hyper)
}

pub fn train_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let hyper = hyperparams(cfg)?;
    let output = required(cfg, "output")?;
    let scheme = scheme(cfg)?;
    let mut train_corpus = load_corpus(&required(cfg, "train")?)?;
    let mut dev_corpus = match cfg.path("dev") {
        Some(path) => load_corpus(&path)?,
        None => Vec::new(),
    };
    let syntax = load_syntax(cfg, &mut [&mut train_corpus, &mut dev_corpus])?;
    check_syntax(&scheme, &syntax)?;
    let embeddings = cfg.path("embeddings").map(load_embeddings).transpose()?;
    let store = contextual(cfg)?;
    info!(
        "hyperparameters: {}",
        serde_json::to_string(&hyper).expect("hyperparameters serialize")
    );
    let inputs = TrainInputs {
        pretrained: embeddings.as_ref(),
        contextual: store.as_ref(),
        syntax: syntax.as_ref(),
    };
    let outcome = train(&train_corpus, &dev_corpus, &scheme, &hyper, inputs)?;
    save_model(&outcome.model, &output)?;
    match outcome.best_epoch {
        Some(epoch) => info!("saved weights of epoch {} to {}", epoch, output.display()),
        None => info!("saved initial weights to {}", output.display()),
    }
    if let Some(path) = cfg.path("history") {
        let mut text = String::from("epoch\tloss\tdev_uf1\tdev_lf1\n");
        let fmt = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{:.6}", v));
        for r in &outcome.history {
            writeln!(
                text,
                "{}\t{:.6}\t{}\t{}",
                r.epoch,
                r.loss,
                fmt(r.dev_uf1),
                fmt(r.dev_lf1)
            )
            .expect("string write");
        }
        write_file(&path, &text)?;
    }
    Ok(())
}

fn predict_graphs(
    model: &Model,
    sents: &[Sentence],
    store: Option<&ContextualStore>,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ParseGraph>, CliError> {
    if pool.current_num_threads() <= 1 {
        return Ok(model.predict_all(sents, store)?);
    }
    let chunk = model.hyper.batch_size.max(1);
    let parts: Vec<Vec<ParseGraph>> = pool.install(|| {
        sents
            .par_chunks(chunk)
            .map(|c| model.predict_all(c, store))
            .collect::<sentigraph::Result<_>>()
    })?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    let pool = thread_pool(cfg)?;
    let model = load_model(required(cfg, "model")?)?;
    let mut corpus = load_corpus(&required(cfg, "input")?)?;
    load_syntax(cfg, &mut [&mut corpus])?;
    let store = contextual(cfg)?;
    let sents = sentences(&corpus);
    let graphs = predict_graphs(&model, &sents, store.as_ref(), &pool)?;
    info!("predicted {} graphs", graphs.len());
    if let Some(path) = cfg.path("graphs") {
        write_file(&path, &graphs_to_string(&graphs, &sents)?)?;
    }
    if cfg.get("output").is_some() || cfg.get("graphs").is_none() {
        let decoded = decoded_corpus(&sents, &graphs, &model.scheme)?;
        write_output(cfg, "output", &opinion_json_string(&decoded))?;
    }
    Ok(())
}

/// Graphs for a corpus: read from a graph file when given, else encoded.
fn corpus_graphs(
    corpus: &[AnnotatedSentence],
    graph_file: Option<PathBuf>,
    scheme: &EncodingScheme,
    syntax: Option<&SyntaxMap>,
) -> Result<Vec<ParseGraph>, CliError> {
    match graph_file {
        Some(path) => {
            let mut by_id: HashMap<String, ParseGraph> = read_graph_file(&path)?
                .into_iter()
                .map(|r| (r.sent_id, r.graph))
                .collect();
            corpus
                .iter()
                .map(|a| {
                    by_id.remove(a.sent_id()).ok_or_else(|| {
                        CliError::Data(sentigraph::Error::MisalignedCorpora(format!(
                            "{} has no graph for '{}'",
                            path.display(),
                            a.sent_id()
                        )))
                    })
                })
                .collect()
        }
        None => Ok(encode_corpus(corpus, scheme, syntax)?.0),
    }
}

fn prf_text(name: &str, prf: &Prf) -> String {
    format!(
        "{name}.precision={:.6}\n{name}.recall={:.6}\n{name}.f1={:.6}\n",
        prf.precision, prf.recall, prf.f1
    )
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let pool = thread_pool(cfg)?;
    let mut gold = load_corpus(&required(cfg, "gold")?)?;
    let mut pred = load_corpus(&required(cfg, "pred")?)?;
    match cfg.get("subset") {
        None => {}
        Some("multi-target") => {
            gold = filter_multi_target(&gold);
            pred = restrict_to(&gold, &pred);
            info!("evaluating {} multi-target sentences", gold.len());
        }
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown subset '{}'; expected multi-target",
                other
            )))
        }
    }
    let json = cfg.flag("json")?;
    if cfg.flag("polarity_only")? {
        let prf = evaluate_metric(
            Metric::PolarityF1,
            Evaluated::new(&gold, None),
            Evaluated::new(&pred, None),
        )?;
        let text = if json {
            format!("{}\n", serde_json::json!({ "polarity_f1": prf }))
        } else {
            prf_text("polarity_f1", &prf)
        };
        return write_output(cfg, "output", &text);
    }
    let scheme = scheme(cfg)?;
    let syntax = load_syntax(cfg, &mut [&mut gold, &mut pred])?;
    if cfg.get("gold_graphs").is_none() || cfg.get("pred_graphs").is_none() {
        check_syntax(&scheme, &syntax)?;
    }
    let gold_graphs = corpus_graphs(&gold, cfg.path("gold_graphs"), &scheme, syntax.as_ref())?;
    let pred_graphs = corpus_graphs(&pred, cfg.path("pred_graphs"), &scheme, syntax.as_ref())?;
    let g = Evaluated::new(&gold, Some(&gold_graphs));
    let p = Evaluated::new(&pred, Some(&pred_graphs));
    let metrics = [
        Metric::HolderF1,
        Metric::TargetF1,
        Metric::ExpF1,
        Metric::TargetedF1,
        Metric::Uf1,
        Metric::Lf1,
        Metric::Nsf1,
        Metric::Sf1,
    ];
    let scores: Vec<Prf> = pool.install(|| {
        metrics
            .par_iter()
            .map(|&m| evaluate_metric(m, g, p))
            .collect::<sentigraph::Result<_>>()
    })?;
    let report = MetricReport {
        holder_f1: scores[0],
        target_f1: scores[1],
        exp_f1: scores[2],
        targeted_f1: scores[3],
        uf1: scores[4],
        lf1: scores[5],
        nsf1: scores[6],
        sf1: scores[7],
    };
    let text = if json {
        format!(
            "{}\n",
            serde_json::to_string_pretty(&report.to_json()).expect("report serializes")
        )
    } else {
        report.to_text()
    };
    write_output(cfg, "output", &text)
}

pub fn stats(cfg: &RunConfig) -> Result<(), CliError> {
    let corpus = load_corpus(&required(cfg, "input")?)?;
    write_output(cfg, "output", &dataset_stats(&corpus).to_string())
}

pub fn significance(cfg: &RunConfig) -> Result<(), CliError> {
    let metric: Metric = cfg
        .get("metric")
        .unwrap_or("sf1")
        .parse()
        .map_err(|e: sentigraph::Error| CliError::Usage(e.to_string()))?;
    let iterations = cfg.parse::<usize>("iterations")?.unwrap_or(DEFAULT_ITERATIONS);
    let seed = cfg.parse::<u64>("seed")?.unwrap_or(1);
    let mut gold = load_corpus(&required(cfg, "gold")?)?;
    let mut a = load_corpus(&required(cfg, "pred_a")?)?;
    let mut b = load_corpus(&required(cfg, "pred_b")?)?;
    let scheme = scheme(cfg)?;
    let syntax = load_syntax(cfg, &mut [&mut gold, &mut a, &mut b])?;
    let graphs = if metric.needs_graphs() {
        check_syntax(&scheme, &syntax)?;
        Some([
            encode_corpus(&gold, &scheme, syntax.as_ref())?.0,
            encode_corpus(&a, &scheme, syntax.as_ref())?.0,
            encode_corpus(&b, &scheme, syntax.as_ref())?.0,
        ])
    } else {
        None
    };
    let side = |corpus, i: usize| Evaluated::new(corpus, graphs.as_ref().map(|g| g[i].as_slice()));
    let result = bootstrap_significance(metric, side(&gold, 0), side(&a, 1), side(&b, 2), iterations, seed)?;
    let text = format!(
        "metric={}\ndelta={:.6}\np_value={:.6}\nsamples={}\nexhaustive={}\n",
        metric, result.delta, result.p_value, result.samples, result.exhaustive
    );
    write_output(cfg, "output", &text)
}
