//! Reading syntactic trees and token annotations from CoNLL-U.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::codec::SyntaxMap;
use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, SynTree};

/// One CoNLL-U sentence, restricted to syntactic words.
#[derive(Clone, Debug, PartialEq)]
pub struct ConlluSentence {
    pub sent_id: String,
    pub forms: Vec<String>,
    pub lemmas: Vec<Option<String>>,
    pub upos: Vec<Option<String>>,
    pub xpos: Vec<Option<String>>,
    pub tree: SynTree,
}

impl ConlluSentence {
    /// Part-of-speech tag of a token, preferring the language-specific tag.
    pub fn pos(&self, idx: usize) -> Option<&str> {
        self.xpos[idx].as_deref().or(self.upos[idx].as_deref())
    }
}

fn field(value: &str) -> Option<String> {
    (value != "_").then(|| value.to_owned())
}

#[derive(Default)]
struct Block {
    sent_id: Option<String>,
    forms: Vec<String>,
    lemmas: Vec<Option<String>>,
    upos: Vec<Option<String>>,
    xpos: Vec<Option<String>>,
    heads: Vec<usize>,
    relations: Vec<String>,
}

impl Block {
    fn is_empty(&self) -> bool {
        self.sent_id.is_none() && self.forms.is_empty()
    }

    fn finish(self, path: &Path, line: usize) -> Result<ConlluSentence> {
        let sent_id = self.sent_id.ok_or_else(|| Error::MissingSentId {
            path: path.to_owned(),
            line,
        })?;
        let tree = SynTree::new(self.heads, self.relations)
            .map_err(|e| Error::parse(path, line, format!("sentence '{}': {}", sent_id, e)))?;
        Ok(ConlluSentence {
            sent_id,
            forms: self.forms,
            lemmas: self.lemmas,
            upos: self.upos,
            xpos: self.xpos,
            tree,
        })
    }
}

/// Parse CoNLL-U text. Multiword-token ranges and empty nodes are skipped.
pub fn parse_conllu(text: &str, path: &Path) -> Result<Vec<ConlluSentence>> {
    let mut sentences = Vec::new();
    let mut block = Block::default();
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(std::mem::take(&mut block).finish(path, line_no)?);
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    block.sent_id = Some(value.trim().to_owned());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 10 columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("invalid token id '{}'", cols[0])))?;
        if id != block.forms.len() + 1 {
            return Err(Error::parse(
                path,
                line_no,
                format!("token id {} out of sequence, expected {}", id, block.forms.len() + 1),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("invalid head '{}'", cols[6])))?;
        if cols[7] == "_" || cols[7].is_empty() {
            return Err(Error::parse(path, line_no, "missing dependency relation"));
        }
        block.forms.push(cols[1].to_owned());
        block.lemmas.push(field(cols[2]));
        block.upos.push(field(cols[3]));
        block.xpos.push(field(cols[4]));
        block.heads.push(head);
        block.relations.push(cols[7].to_owned());
    }
    if !block.is_empty() {
        sentences.push(block.finish(path, last_line)?);
    }
    Ok(sentences)
}

pub fn load_conllu(path: impl AsRef<Path>) -> Result<Vec<ConlluSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conllu(&text, path)
}

/// Syntactic trees keyed by sentence id.
pub fn load_conllu_syntax(path: impl AsRef<Path>) -> Result<SyntaxMap> {
    Ok(load_conllu(path)?.into_iter().map(|s| (s.sent_id, s.tree)).collect())
}

/// Copy lemmas and part-of-speech tags onto matching corpus sentences.
///
/// Sentences without a CoNLL-U counterpart are left unchanged; a token
/// count mismatch is an error.
pub fn attach_annotations(corpus: &mut [AnnotatedSentence], conllu: &[ConlluSentence]) -> Result<usize> {
    let by_id: HashMap<&str, &ConlluSentence> = conllu.iter().map(|s| (s.sent_id.as_str(), s)).collect();
    let mut attached = 0;
    for ann in corpus.iter_mut() {
        let Some(syn) = by_id.get(ann.sent_id()) else { continue };
        if syn.forms.len() != ann.sentence.len() {
            return Err(Error::SyntaxLength {
                sent_id: ann.sent_id().to_owned(),
                tree: syn.forms.len(),
                sentence: ann.sentence.len(),
            });
        }
        for (idx, token) in ann.sentence.tokens.iter_mut().enumerate() {
            token.lemma = syn.lemmas[idx].clone();
            token.pos = syn.pos(idx).map(str::to_owned);
        }
        attached += 1;
    }
    Ok(attached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{select_head, EncodingScheme, HeadRule};
    use crate::model::Span;

    const SAMPLE: &str = "# sent_id = s1\n# text = the new UMUC rocks\n\
1\tthe\tthe\tDET\tDT\t_\t3\tdet\t_\t_\n\
2\tnew\tnew\tADJ\tJJ\t_\t3\tamod\t_\t_\n\
3\tUMUC\tUMUC\tPROPN\tNNP\t_\t4\tnsubj\t_\t_\n\
4\trocks\trock\tVERB\t_\t_\t0\troot\t_\t_\n\
\n\
# sent_id = s2\n\
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n\
2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\
3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n\
4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n";

    fn parse(text: &str) -> Result<Vec<ConlluSentence>> {
        parse_conllu(text, Path::new("t.conllu"))
    }

    #[test]
    fn reads_trees() {
        let sents = parse(SAMPLE).unwrap();
        assert_eq!(sents.len(), 2);
        assert_eq!(sents[0].tree.heads, [3, 3, 4, 0]);
        assert_eq!(sents[0].tree.relations[3], "root");
        assert_eq!(sents[0].pos(0), Some("DT"));
        assert_eq!(sents[0].pos(3), Some("VERB"));
        assert_eq!(sents[1].forms, ["do", "n't", "go", "."]);
        assert_eq!(sents[1].lemmas[1].as_deref(), Some("not"));
    }

    #[test]
    fn punct_token_skipped_by_dep_labels() {
        let text = "# sent_id = p\n\
1\t\"\t\"\tPUNCT\t_\t_\t3\tpunct\t_\t_\n\
2\tgreat\tgreat\tADJ\t_\t_\t3\tamod\t_\t_\n\
3\tfood\tfood\tNOUN\t_\t_\t0\troot\t_\t_\n";
        let tree = &parse(text).unwrap()[0].tree;
        let span = Span::new([0, 1]).unwrap();
        let edges = EncodingScheme::new(HeadRule::DepEdges, false);
        let labels = EncodingScheme::new(HeadRule::DepLabels, false);
        assert_eq!(select_head(&span, &edges, Some(tree)), 0);
        assert_eq!(select_head(&span, &labels, Some(tree)), 1);
    }

    #[test]
    fn missing_sent_id() {
        let text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse(text), Err(Error::MissingSentId { line: 1, .. })));
    }

    #[test]
    fn malformed_lines() {
        let text = "# sent_id = a\n1\ta\ta\tX\t_\t_\tzero\troot\t_\t_\n";
        assert!(matches!(parse(text), Err(Error::Parse { line: 2, .. })));
        let text = "# sent_id = a\n1\ta\ta\n";
        assert!(matches!(parse(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn attaches_pos_and_lemma() {
        let sentence = crate::model::Sentence::from_forms("s1", &["the", "new", "UMUC", "rocks"]).unwrap();
        let mut corpus = vec![AnnotatedSentence::new(sentence, vec![]).unwrap()];
        let n = attach_annotations(&mut corpus, &parse(SAMPLE).unwrap()).unwrap();
        assert_eq!(n, 1);
        assert_eq!(corpus[0].sentence.tokens[3].lemma.as_deref(), Some("rock"));
        assert_eq!(corpus[0].sentence.tokens[0].pos.as_deref(), Some("DT"));
    }
}
