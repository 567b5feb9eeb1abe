//! The full metric suite over a corpus and its serializations.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, Element, ParseGraph};

use super::arcs::arc_sentence_counts;
use super::prf::{Counts, Prf};
use super::tuples::{
    align_corpora, polarity_overlap_counts, sentiment_graph_counts, targeted_counts, token_span_counts,
};

/// A single corpus-level metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    HolderF1,
    TargetF1,
    ExpF1,
    TargetedF1,
    Uf1,
    Lf1,
    Nsf1,
    Sf1,
    PolarityF1,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::HolderF1,
        Metric::TargetF1,
        Metric::ExpF1,
        Metric::TargetedF1,
        Metric::Uf1,
        Metric::Lf1,
        Metric::Nsf1,
        Metric::Sf1,
        Metric::PolarityF1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::HolderF1 => "holder_f1",
            Metric::TargetF1 => "target_f1",
            Metric::ExpF1 => "exp_f1",
            Metric::TargetedF1 => "targeted_f1",
            Metric::Uf1 => "uf1",
            Metric::Lf1 => "lf1",
            Metric::Nsf1 => "nsf1",
            Metric::Sf1 => "sf1",
            Metric::PolarityF1 => "polarity_f1",
        }
    }

    pub fn needs_graphs(self) -> bool {
        matches!(self, Metric::Uf1 | Metric::Lf1)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownMetric(s.to_owned()))
    }
}

/// A corpus with its parse graphs, aligned sentence by sentence.
#[derive(Clone, Copy, Debug)]
pub struct Evaluated<'a> {
    pub corpus: &'a [AnnotatedSentence],
    pub graphs: Option<&'a [ParseGraph]>,
}

impl<'a> Evaluated<'a> {
    pub fn new(corpus: &'a [AnnotatedSentence], graphs: Option<&'a [ParseGraph]>) -> Self {
        Evaluated { corpus, graphs }
    }
}

fn reorder_graphs<'a>(side: &Evaluated<'a>, order: &[&AnnotatedSentence]) -> Result<Vec<&'a ParseGraph>> {
    let graphs = side
        .graphs
        .ok_or_else(|| Error::MisalignedCorpora("arc metrics require parse graphs".to_owned()))?;
    if graphs.len() != side.corpus.len() {
        return Err(Error::MisalignedCorpora(format!(
            "{} sentences but {} graphs",
            side.corpus.len(),
            graphs.len()
        )));
    }
    let index: std::collections::HashMap<&str, usize> =
        side.corpus.iter().enumerate().map(|(i, a)| (a.sent_id(), i)).collect();
    order
        .iter()
        .map(|a| {
            index
                .get(a.sent_id())
                .map(|&i| &graphs[i])
                .ok_or_else(|| Error::MisalignedCorpora(format!("no graph for '{}'", a.sent_id())))
        })
        .collect()
}

/// Per-sentence counts of `metric`, in gold order.
pub fn sentence_counts(metric: Metric, gold: Evaluated<'_>, pred: Evaluated<'_>) -> Result<Vec<Counts>> {
    let pairs = align_corpora(gold.corpus, pred.corpus)?;
    if metric.needs_graphs() {
        let gold_order: Vec<&AnnotatedSentence> = pairs.iter().map(|p| p.0).collect();
        let g: Vec<ParseGraph> = reorder_graphs(&gold, &gold_order)?.into_iter().cloned().collect();
        let p: Vec<ParseGraph> = reorder_graphs(&pred, &gold_order)?.into_iter().cloned().collect();
        return arc_sentence_counts(&g, &p, metric == Metric::Lf1);
    }
    Ok(pairs
        .into_iter()
        .map(|(g, p)| {
            let (g, p) = (&g.opinions, &p.opinions);
            match metric {
                Metric::HolderF1 => token_span_counts(g, p, Element::Holder),
                Metric::TargetF1 => token_span_counts(g, p, Element::Target),
                Metric::ExpF1 => token_span_counts(g, p, Element::Expression),
                Metric::TargetedF1 => targeted_counts(g, p),
                Metric::Nsf1 => sentiment_graph_counts(g, p, false),
                Metric::Sf1 => sentiment_graph_counts(g, p, true),
                Metric::PolarityF1 => polarity_overlap_counts(g, p),
                Metric::Uf1 | Metric::Lf1 => unreachable!("arc metrics handled above"),
            }
        })
        .collect())
}

/// Corpus-level score of one metric.
pub fn evaluate_metric(metric: Metric, gold: Evaluated<'_>, pred: Evaluated<'_>) -> Result<Prf> {
    Ok(sentence_counts(metric, gold, pred)?.into_iter().sum::<Counts>().prf())
}

/// Precision, recall and F1 for each of the eight evaluation metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub holder_f1: Prf,
    pub target_f1: Prf,
    pub exp_f1: Prf,
    pub targeted_f1: Prf,
    pub uf1: Prf,
    pub lf1: Prf,
    pub nsf1: Prf,
    pub sf1: Prf,
}

impl MetricReport {
    pub fn evaluate(gold: Evaluated<'_>, pred: Evaluated<'_>) -> Result<Self> {
        let m = |metric| evaluate_metric(metric, gold, pred);
        Ok(MetricReport {
            holder_f1: m(Metric::HolderF1)?,
            target_f1: m(Metric::TargetF1)?,
            exp_f1: m(Metric::ExpF1)?,
            targeted_f1: m(Metric::TargetedF1)?,
            uf1: m(Metric::Uf1)?,
            lf1: m(Metric::Lf1)?,
            nsf1: m(Metric::Nsf1)?,
            sf1: m(Metric::Sf1)?,
        })
    }

    pub fn entries(&self) -> [(&'static str, &Prf); 8] {
        [
            ("holder_f1", &self.holder_f1),
            ("target_f1", &self.target_f1),
            ("exp_f1", &self.exp_f1),
            ("targeted_f1", &self.targeted_f1),
            ("uf1", &self.uf1),
            ("lf1", &self.lf1),
            ("nsf1", &self.nsf1),
            ("sf1", &self.sf1),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("metric report serializes")
    }

    /// Flat `name.field=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, prf) in self.entries() {
            out.push_str(&format!(
                "{name}.precision={:.6}\n{name}.recall={:.6}\n{name}.f1={:.6}\n",
                prf.precision, prf.recall, prf.f1
            ));
        }
        out
    }
}
