//! Evaluation metrics, corpus statistics and significance testing.
//!
//! Every corpus-level metric is a sum of additive per-sentence [`Counts`],
//! which keeps bootstrap resampling cheap.

mod arcs;
mod bootstrap;
mod prf;
mod report;
mod stats;
mod tuples;

pub use arcs::{arc_counts, arc_f1, arc_sentence_counts};
pub use bootstrap::{bootstrap_significance, paired_bootstrap, BootstrapResult, DEFAULT_ITERATIONS};
pub use prf::{Counts, Prf};
pub use report::{evaluate_metric, sentence_counts, Evaluated, Metric, MetricReport};
pub use stats::{dataset_stats, ElementStats, PolarityCounts, StatsReport};
pub use tuples::{
    align_corpora, filter_multi_target, macro_token_span_f1, match_tuples, polarity_overlap_counts,
    polarity_overlap_f1, restrict_to, sentiment_graph_counts, sentiment_graph_f1, targeted_counts, targeted_f1,
    token_span_counts, token_span_f1, tuple_weights,
};
