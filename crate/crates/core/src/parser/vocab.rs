//! Symbol inventories and token featurization.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::codec::EncodingScheme;
use crate::error::{Error, Result};
use crate::io::EmbeddingTable;
use crate::model::{AnnotatedSentence, ArcLabel, Sentence};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const ROOT_ID: usize = 2;
const RESERVED: [&str; 3] = ["<pad>", "<unk>", "<root>"];

/// Dense string-to-id map with reserved PAD, UNK and ROOT entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Indexer {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Indexer {
    fn default() -> Self {
        Indexer::from(Vec::new())
    }
}

impl From<Vec<String>> for Indexer {
    fn from(items: Vec<String>) -> Self {
        let mut indexer = Indexer {
            items: Vec::new(),
            index: HashMap::new(),
        };
        for item in RESERVED.iter().map(|s| s.to_string()).chain(items) {
            indexer.add(&item);
        }
        indexer
    }
}

impl From<Indexer> for Vec<String> {
    fn from(indexer: Indexer) -> Self {
        indexer.items.into_iter().skip(RESERVED.len()).collect()
    }
}

impl Indexer {
    pub fn add(&mut self, item: &str) -> usize {
        if let Some(&id) = self.index.get(item) {
            return id;
        }
        let id = self.items.len();
        self.items.push(item.to_owned());
        self.index.insert(item.to_owned(), id);
        id
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn id(&self, item: &str) -> usize {
        self.get(item).unwrap_or(UNK)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.len() == RESERVED.len()
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }
}

/// Symbol inventories plus the label set of the encoding scheme. The
/// NONE label is the last label id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub words: Indexer,
    pub lemmas: Indexer,
    pub pos: Indexer,
    pub chars: Indexer,
    labels: Vec<ArcLabel>,
}

/// Ids of one sentence with the ROOT token prepended.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceFeatures {
    pub words: Vec<usize>,
    pub lemmas: Vec<usize>,
    pub pos: Vec<usize>,
    pub chars: Vec<Vec<usize>>,
}

impl SentenceFeatures {
    /// Number of nodes including ROOT.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn lemma_of(token: &crate::model::Token) -> String {
    token.lemma.clone().unwrap_or_else(|| token.form.to_lowercase())
}

impl Vocabulary {
    pub fn new(labels: Vec<ArcLabel>) -> Self {
        Vocabulary {
            words: Indexer::default(),
            lemmas: Indexer::default(),
            pos: Indexer::default(),
            chars: Indexer::default(),
            labels,
        }
    }

    /// Labels without NONE.
    pub fn labels(&self) -> &[ArcLabel] {
        &self.labels
    }

    /// Number of score columns, NONE included.
    pub fn num_labels(&self) -> usize {
        self.labels.len() + 1
    }

    pub fn none_id(&self) -> usize {
        self.labels.len()
    }

    pub fn label_id(&self, label: ArcLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn label(&self, id: usize) -> Option<ArcLabel> {
        self.labels.get(id).copied()
    }

    pub fn word_id(&self, form: &str) -> usize {
        self.words
            .get(form)
            .or_else(|| self.words.get(&form.to_lowercase()))
            .unwrap_or(UNK)
    }

    pub fn featurize(&self, sentence: &Sentence) -> SentenceFeatures {
        let mut feats = SentenceFeatures {
            words: vec![ROOT_ID],
            lemmas: vec![ROOT_ID],
            pos: vec![ROOT_ID],
            chars: vec![vec![ROOT_ID]],
        };
        for token in &sentence.tokens {
            feats.words.push(self.word_id(&token.form));
            feats.lemmas.push(self.lemmas.id(&lemma_of(token)));
            feats.pos.push(token.pos.as_deref().map_or(UNK, |p| self.pos.id(p)));
            let chars: Vec<usize> = token
                .form
                .chars()
                .map(|c| self.chars.id(c.encode_utf8(&mut [0; 4])))
                .collect();
            feats.chars.push(if chars.is_empty() { vec![UNK] } else { chars });
        }
        feats
    }
}

/// Collect symbol inventories from a training corpus. Pretrained words come
/// first, in table order, followed by unseen corpus forms.
pub fn build_vocab(
    corpus: &[AnnotatedSentence],
    scheme: &EncodingScheme,
    pretrained: Option<&EmbeddingTable>,
) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut vocab = Vocabulary::new(scheme.labels());
    if let Some(table) = pretrained {
        for word in table.words() {
            vocab.words.add(word);
        }
    }
    for token in corpus.iter().flat_map(|a| a.sentence.tokens.iter()) {
        vocab.words.add(&token.form);
        vocab.lemmas.add(&lemma_of(token));
        if let Some(pos) = &token.pos {
            vocab.pos.add(pos);
        }
        for c in token.form.chars() {
            vocab.chars.add(c.encode_utf8(&mut [0; 4]));
        }
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::HeadRule;
    use crate::model::{Opinion, Polarity, Span};
    use ndarray::Array2;

    fn corpus() -> Vec<AnnotatedSentence> {
        let s = Sentence::whitespace_tokenized("a", "Good food here").unwrap();
        let op = Opinion::new(
            None,
            Some(Span::range(1, 2).unwrap()),
            Span::range(0, 1).unwrap(),
            Polarity::Positive,
        );
        vec![AnnotatedSentence::new(s, vec![op]).unwrap()]
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(
            build_vocab(&[], &EncodingScheme::head_first(), None),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn label_inventory() {
        let v = build_vocab(&corpus(), &EncodingScheme::head_first(), None).unwrap();
        let names: Vec<String> = v.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(
            names,
            ["exp:positive", "exp:neutral", "exp:negative", "target", "holder"]
        );
        assert_eq!(v.none_id(), 5);
        assert_eq!(v.num_labels(), 6);

        let v = build_vocab(&corpus(), &EncodingScheme::new(HeadRule::HeadFirst, true), None).unwrap();
        assert_eq!(v.num_labels(), 11);
        assert!(v.labels().iter().any(|l| l.to_string() == "IN:target"));
        assert_eq!(v.none_id(), v.num_labels() - 1);
    }

    #[test]
    fn featurize_with_root_and_unknowns() {
        let table = EmbeddingTable::new(vec!["pretrained".into()], Array2::zeros((1, 2))).unwrap();
        let v = build_vocab(&corpus(), &EncodingScheme::head_first(), Some(&table)).unwrap();
        assert_eq!(v.words.get("pretrained"), Some(3));
        assert_eq!(v.words.get("Good"), Some(4));
        let s = Sentence::whitespace_tokenized("b", "good zzz").unwrap();
        let f = v.featurize(&s);
        assert_eq!(f.len(), 3);
        assert_eq!(f.words[0], ROOT_ID);
        assert_eq!(f.words[2], UNK);
        assert_eq!(f.lemmas[1], v.lemmas.id("good"));
        assert_eq!(f.pos[1], UNK);
        assert_eq!(f.chars[2], vec![v.chars.id("z"), v.chars.id("z"), v.chars.id("z")]);
    }

    #[test]
    fn indexer_serde_round_trip() {
        let v = build_vocab(&corpus(), &EncodingScheme::head_first(), None).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
