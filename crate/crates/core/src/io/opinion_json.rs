//! Opinion corpora in JSON.
//!
//! A corpus is an array of sentences:
//!
//! ```json
//! [{"sent_id": "s1", "text": "Good food", "tokens": [[0, 4], [5, 9]],
//!   "opinions": [{"Source": [[], []],
//!                 "Target": [["food"], ["5:9"]],
//!                 "Polar_expression": [["Good"], ["0:4"]],
//!                 "Polarity": "Positive", "Intensity": "Standard"}]}]
//! ```
//!
//! Offsets are half-open character offsets into `text`. When `tokens` is
//! missing the text is split on whitespace.

use std::fs;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{align_offsets, normalize_polarity, AnnotatedSentence, Opinion, Sentence, Span, Token};

/// Fragment texts and their `"begin:end"` offsets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawElement(pub Vec<String>, pub Vec<String>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawOpinion {
    #[serde(rename = "Source", default)]
    pub source: RawElement,
    #[serde(rename = "Target", default)]
    pub target: RawElement,
    #[serde(rename = "Polar_expression")]
    pub polar_expression: RawElement,
    #[serde(rename = "Polarity")]
    pub polarity: Option<String>,
    #[serde(rename = "Intensity", default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSentence {
    pub sent_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub opinions: Vec<RawOpinion>,
}

/// A loaded corpus with the opinions dropped or merged on the way.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadedCorpus {
    pub sentences: Vec<AnnotatedSentence>,
    /// Opinions skipped for unalignable offsets, missing expressions or
    /// unknown polarity.
    pub skipped_opinions: usize,
    pub duplicates_removed: usize,
}

fn parse_offset(sent_id: &str, raw: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidSentence {
        sent_id: sent_id.to_owned(),
        reason: format!("malformed offset '{}'", raw),
    };
    let (b, e) = raw.split_once(':').ok_or_else(bad)?;
    let begin = b.trim().parse().map_err(|_| bad())?;
    let end = e.trim().parse().map_err(|_| bad())?;
    if begin >= end {
        return Err(bad());
    }
    Ok((begin, end))
}

fn element_span(sentence: &Sentence, raw: &RawElement) -> Result<Option<Span>> {
    if raw.1.is_empty() {
        return Ok(None);
    }
    let ranges = raw
        .1
        .iter()
        .map(|o| parse_offset(&sentence.sent_id, o))
        .collect::<Result<Vec<_>>>()?;
    for (fragment, &(begin, end)) in raw.0.iter().zip(&ranges) {
        let found = sentence.char_slice(begin, end);
        if &found != fragment {
            warn!(
                "{}: fragment '{}' does not match text '{}' at {}:{}",
                sentence.sent_id, fragment, found, begin, end
            );
        }
    }
    align_offsets(sentence, &ranges).map(Some)
}

fn convert_opinion(sentence: &Sentence, raw: &RawOpinion) -> Result<Opinion> {
    let polarity = raw
        .polarity
        .as_deref()
        .ok_or_else(|| Error::UnknownPolarity("null".to_owned()))
        .and_then(normalize_polarity)?;
    let expression = element_span(sentence, &raw.polar_expression)?
        .ok_or_else(|| Error::InvalidSpan(format!("opinion in '{}' has no polar expression", sentence.sent_id)))?;
    Ok(Opinion::new(
        element_span(sentence, &raw.source)?,
        element_span(sentence, &raw.target)?,
        expression,
        polarity,
    ))
}

fn build_sentence(raw: &RawSentence) -> Result<Sentence> {
    match &raw.tokens {
        None => Sentence::whitespace_tokenized(raw.sent_id.clone(), raw.text.clone()),
        Some(ranges) => {
            let text: Vec<char> = raw.text.chars().collect();
            let tokens = ranges
                .iter()
                .map(|&(b, e)| {
                    let form: String = text.get(b..e.min(text.len())).unwrap_or_default().iter().collect();
                    Token::new(form, (b, e))
                })
                .collect();
            Sentence::new(raw.sent_id.clone(), raw.text.clone(), tokens)
        }
    }
}

/// Convert parsed JSON records into annotated sentences.
pub fn convert_corpus(raw: &[RawSentence]) -> Result<LoadedCorpus> {
    let mut loaded = LoadedCorpus::default();
    let mut seen_ids = std::collections::HashSet::new();
    for record in raw {
        if !seen_ids.insert(record.sent_id.as_str()) {
            return Err(Error::InvalidSentence {
                sent_id: record.sent_id.clone(),
                reason: "duplicate sent_id".to_owned(),
            });
        }
        let sentence = build_sentence(record)?;
        let mut opinions = Vec::with_capacity(record.opinions.len());
        for raw_opinion in &record.opinions {
            match convert_opinion(&sentence, raw_opinion) {
                Ok(opinion) => opinions.push(opinion),
                Err(err @ (Error::Alignment { .. } | Error::UnknownPolarity(_) | Error::InvalidSpan(_))) => {
                    warn!("{}: skipping opinion: {}", record.sent_id, err);
                    loaded.skipped_opinions += 1;
                }
                Err(err) => return Err(err),
            }
        }
        let mut ann = AnnotatedSentence::new(sentence, opinions)?;
        loaded.duplicates_removed += ann.dedup_opinions();
        loaded.sentences.push(ann);
    }
    if loaded.duplicates_removed > 0 {
        info!("removed {} duplicate opinions", loaded.duplicates_removed);
    }
    if loaded.skipped_opinions > 0 {
        warn!("skipped {} opinions", loaded.skipped_opinions);
    }
    Ok(loaded)
}

/// Parse a corpus from JSON text; `path` is used in error messages.
pub fn parse_opinion_json(text: &str, path: &Path) -> Result<LoadedCorpus> {
    let raw: Vec<RawSentence> = serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    convert_corpus(&raw)
}

/// Load a corpus file, reporting skipped and duplicate opinions.
pub fn load_opinion_corpus(path: impl AsRef<Path>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_opinion_json(&text, path)
}

pub fn load_opinion_json(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>> {
    load_opinion_corpus(path).map(|loaded| loaded.sentences)
}

fn raw_element(sentence: &Sentence, span: Option<&Span>) -> RawElement {
    let mut element = RawElement::default();
    if let Some(span) = span {
        for (first, end) in span.runs() {
            let begin = sentence.tokens[first].char_range.0;
            let finish = sentence.tokens[end - 1].char_range.1;
            element.0.push(sentence.char_slice(begin, finish));
            element.1.push(format!("{}:{}", begin, finish));
        }
    }
    element
}

/// JSON records for a corpus; contiguous token runs become fragments.
pub fn to_raw(corpus: &[AnnotatedSentence]) -> Vec<RawSentence> {
    corpus
        .iter()
        .map(|ann| {
            let s = &ann.sentence;
            RawSentence {
                sent_id: s.sent_id.clone(),
                text: s.text.clone(),
                tokens: Some(s.tokens.iter().map(|t| t.char_range).collect()),
                opinions: ann
                    .opinions
                    .iter()
                    .map(|o| RawOpinion {
                        source: raw_element(s, o.holder.as_ref()),
                        target: raw_element(s, o.target.as_ref()),
                        polar_expression: raw_element(s, Some(&o.expression)),
                        polarity: Some(o.polarity.corpus_name().to_owned()),
                        intensity: None,
                    })
                    .collect(),
            }
        })
        .collect()
}

pub fn opinion_json_string(corpus: &[AnnotatedSentence]) -> String {
    serde_json::to_string_pretty(&to_raw(corpus)).expect("opinion records serialize")
}

pub fn write_opinion_json(corpus: &[AnnotatedSentence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = opinion_json_string(corpus);
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polarity;

    const UMUC: &str = r#"[{
        "sent_id": "umuc",
        "text": "Some others give the new UMUC 5 stars - don't believe them.",
        "tokens": [[0,4],[5,11],[12,16],[17,20],[21,24],[25,29],[30,31],[32,37],[38,39],[40,45],[46,53],[54,58]],
        "opinions": [
          {"Source": [["Some others"], ["0:11"]], "Target": [["the new UMUC"], ["17:29"]],
           "Polar_expression": [["5 stars"], ["30:37"]], "Polarity": "Positive", "Intensity": "Standard"},
          {"Source": [[], []], "Target": [["them"], ["54:58"]],
           "Polar_expression": [["don't believe"], ["40:53"]], "Polarity": "StrongNegative"}
        ]}]"#;

    fn parse(text: &str) -> Result<LoadedCorpus> {
        parse_opinion_json(text, Path::new("test.json"))
    }

    #[test]
    fn loads_umuc() {
        let loaded = parse(UMUC).unwrap();
        assert_eq!(loaded.sentences.len(), 1);
        let ann = &loaded.sentences[0];
        assert_eq!(ann.sentence.len(), 12);
        assert_eq!(ann.opinions.len(), 2);
        let first = &ann.opinions[0];
        assert_eq!(first.holder, Some(Span::range(0, 2).unwrap()));
        assert_eq!(first.target, Some(Span::range(3, 6).unwrap()));
        assert_eq!(first.expression, Span::range(6, 8).unwrap());
        assert_eq!(ann.opinions[1].polarity, Polarity::Negative);
        assert_eq!(ann.opinions[1].holder, None);
        assert_eq!(ann.opinions[1].target, Some(Span::range(11, 12).unwrap()));
    }

    #[test]
    fn empty_opinions_and_whitespace_fallback() {
        let loaded = parse(r#"[{"sent_id": "a", "text": "no  opinion here", "opinions": []}]"#).unwrap();
        let ann = &loaded.sentences[0];
        assert!(ann.opinions.is_empty());
        let forms: Vec<&str> = ann.sentence.tokens.iter().map(|t| t.form.as_str()).collect();
        assert_eq!(forms, ["no", "opinion", "here"]);
        assert_eq!(ann.sentence.tokens[1].char_range, (4, 11));
    }

    #[test]
    fn skips_and_dedups() {
        let text = r#"[{"sent_id": "a", "text": "good food", "opinions": [
            {"Polar_expression": [["good"], ["0:4"]], "Polarity": "Positive"},
            {"Polar_expression": [["good"], ["0:4"]], "Polarity": "positive"},
            {"Polar_expression": [["x"], ["20:22"]], "Polarity": "Positive"},
            {"Polar_expression": [["good"], ["0:4"]], "Polarity": "Mixed"},
            {"Polar_expression": [["good"], ["0:4"]], "Polarity": null}
        ]}]"#;
        let loaded = parse(text).unwrap();
        assert_eq!(loaded.sentences[0].opinions.len(), 1);
        assert_eq!(loaded.duplicates_removed, 1);
        assert_eq!(loaded.skipped_opinions, 3);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        match parse("[\n{\"sent_id\": 3}\n]") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn malformed_offset() {
        let text = r#"[{"sent_id": "a", "text": "good", "opinions": [
            {"Polar_expression": [["good"], ["zero:4"]], "Polarity": "Positive"}]}]"#;
        assert!(matches!(parse(text), Err(Error::InvalidSentence { .. })));
    }

    #[test]
    fn round_trip_preserves_opinions() {
        let loaded = parse(UMUC).unwrap();
        let again = parse(&opinion_json_string(&loaded.sentences)).unwrap();
        assert_eq!(again.sentences, loaded.sentences);
    }

    #[test]
    fn discontinuous_fragments() {
        let text = r#"[{"sent_id": "d", "text": "not very good at all", "opinions": [
            {"Polar_expression": [["not", "good"], ["0:3", "9:13"]], "Polarity": "Negative"}]}]"#;
        let loaded = parse(text).unwrap();
        assert_eq!(loaded.sentences[0].opinions[0].expression.indices(), &[0, 2]);
        let raw = to_raw(&loaded.sentences);
        assert_eq!(raw[0].opinions[0].polar_expression.1, ["0:3", "9:13"]);
    }
}
