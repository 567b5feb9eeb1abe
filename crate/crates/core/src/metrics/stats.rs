//! Corpus statistics: sentence counts, element lengths and polarity
//! distribution.

use std::fmt;

use serde::Serialize;

use crate::model::{AnnotatedSentence, Element, Polarity};

/// Count and token-length summary for one element type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ElementStats {
    pub count: usize,
    pub mean_length: f64,
    pub max_length: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PolarityCounts {
    pub positive: usize,
    pub neutral: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StatsReport {
    pub sentences: usize,
    pub mean_sentence_length: f64,
    pub holders: ElementStats,
    pub targets: ElementStats,
    pub expressions: ElementStats,
    pub polarity: PolarityCounts,
}

fn mean(total: usize, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    }
}

/// Element statistics count one element per opinion in which it is present.
pub fn dataset_stats(corpus: &[AnnotatedSentence]) -> StatsReport {
    let tokens: usize = corpus.iter().map(|a| a.sentence.len()).sum();
    let element_stats = |element: Element| {
        let lengths: Vec<usize> = corpus
            .iter()
            .flat_map(|a| a.opinions.iter())
            .filter_map(|o| o.element(element).map(|s| s.len()))
            .collect();
        ElementStats {
            count: lengths.len(),
            mean_length: mean(lengths.iter().sum(), lengths.len()),
            max_length: lengths.iter().copied().max().unwrap_or(0),
        }
    };
    let mut polarity = PolarityCounts::default();
    for opinion in corpus.iter().flat_map(|a| a.opinions.iter()) {
        match opinion.polarity {
            Polarity::Positive => polarity.positive += 1,
            Polarity::Neutral => polarity.neutral += 1,
            Polarity::Negative => polarity.negative += 1,
        }
    }
    StatsReport {
        sentences: corpus.len(),
        mean_sentence_length: mean(tokens, corpus.len()),
        holders: element_stats(Element::Holder),
        targets: element_stats(Element::Target),
        expressions: element_stats(Element::Expression),
        polarity,
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} sentences", self.sentences)?;
        writeln!(f, "mean_sentence_length={:.1}", self.mean_sentence_length)?;
        for (name, el) in [
            ("holders", &self.holders),
            ("targets", &self.targets),
            ("expressions", &self.expressions),
        ] {
            writeln!(
                f,
                "{}={} mean_length={:.1} max_length={}",
                name, el.count, el.mean_length, el.max_length
            )?;
        }
        writeln!(
            f,
            "positive={} neutral={} negative={}",
            self.polarity.positive, self.polarity.neutral, self.polarity.negative
        )
    }
}
