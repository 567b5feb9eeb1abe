//! Sentences, spans, opinion tuples and bi-lexical graphs.
//!
//! Spans index tokens from 0. Arcs live in a 1-based space where node 0 is
//! the virtual ROOT, as in CoNLL head numbering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node index of the virtual root in arc space.
pub const ROOT: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub lemma: Option<String>,
    pub pos: Option<String>,
    /// Half-open character (not byte) offsets into the sentence text.
    pub char_range: (usize, usize),
}

impl Token {
    pub fn new(form: impl Into<String>, char_range: (usize, usize)) -> Self {
        Token {
            form: form.into(),
            lemma: None,
            pos: None,
            char_range,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Construct a sentence, checking that token ranges are non-empty,
    /// ordered, non-overlapping and inside the text.
    pub fn new(sent_id: impl Into<String>, text: impl Into<String>, tokens: Vec<Token>) -> Result<Self> {
        let sent_id = sent_id.into();
        let text = text.into();
        let text_len = text.chars().count();
        let mut prev_end = 0;
        for (idx, token) in tokens.iter().enumerate() {
            let (begin, end) = token.char_range;
            let reason = if begin >= end {
                Some(format!("token {} has empty range {}:{}", idx, begin, end))
            } else if end > text_len {
                Some(format!(
                    "token {} range {}:{} exceeds text length {}",
                    idx, begin, end, text_len
                ))
            } else if idx > 0 && begin < prev_end {
                Some(format!("token {} overlaps or precedes its predecessor", idx))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::InvalidSentence { sent_id, reason });
            }
            prev_end = end;
        }

        Ok(Sentence { sent_id, text, tokens })
    }

    /// Build a sentence from pre-segmented forms joined by single spaces.
    pub fn from_forms<S: AsRef<str>>(sent_id: impl Into<String>, forms: &[S]) -> Result<Self> {
        let mut text = String::new();
        let mut tokens = Vec::with_capacity(forms.len());
        let mut offset = 0;
        for (idx, form) in forms.iter().enumerate() {
            let form = form.as_ref();
            if idx > 0 {
                text.push(' ');
                offset += 1;
            }
            let len = form.chars().count();
            tokens.push(Token::new(form, (offset, offset + len)));
            text.push_str(form);
            offset += len;
        }
        Sentence::new(sent_id, text, tokens)
    }

    /// Tokenize text on whitespace.
    pub fn whitespace_tokenized(sent_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let mut tokens = Vec::new();
        let mut start: Option<usize> = None;
        let mut form = String::new();
        for (idx, ch) in text.chars().enumerate() {
            if ch.is_whitespace() {
                if let Some(begin) = start.take() {
                    tokens.push(Token::new(std::mem::take(&mut form), (begin, idx)));
                }
            } else {
                if start.is_none() {
                    start = Some(idx);
                }
                form.push(ch);
            }
        }
        if let Some(begin) = start {
            tokens.push(Token::new(form, (begin, text.chars().count())));
        }
        Sentence::new(sent_id, text, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Text covered by a half-open character range.
    pub fn char_slice(&self, begin: usize, end: usize) -> String {
        self.text.chars().skip(begin).take(end.saturating_sub(begin)).collect()
    }
}

/// A non-empty, strictly increasing set of token indices.
///
/// Spans may be discontinuous.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Span(Vec<usize>);

impl Span {
    /// Construct a span from arbitrary indices; duplicates are merged.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidSpan("span must not be empty".to_owned()));
        }
        Ok(Span(set.into_iter().collect()))
    }

    /// Contiguous span `begin..end`.
    pub fn range(begin: usize, end: usize) -> Result<Self> {
        Span::new(begin..end)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0.binary_search(&idx).is_ok()
    }

    /// Number of shared tokens.
    pub fn overlap(&self, other: &Span) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Maximal contiguous runs as half-open index ranges.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for &idx in &self.0 {
            match runs.last_mut() {
                Some(run) if run.1 == idx => run.1 = idx + 1,
                _ => runs.push((idx, idx + 1)),
            }
        }
        runs
    }
}

impl TryFrom<Vec<usize>> for Span {
    type Error = Error;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        Span::new(value)
    }
}

impl From<Span> for Vec<usize> {
    fn from(span: Span) -> Self {
        span.0
    }
}

/// Number of tokens two spans share.
pub fn span_overlap(a: &Span, b: &Span) -> usize {
    a.overlap(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Neutral, Polarity::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Neutral => "neutral",
            Polarity::Negative => "negative",
        }
    }

    /// Capitalized name used in opinion corpora.
    pub fn corpus_name(self) -> &'static str {
        match self {
            Polarity::Positive => "Positive",
            Polarity::Neutral => "Neutral",
            Polarity::Negative => "Negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        normalize_polarity(s)
    }
}

/// Map a raw polarity annotation onto the three-way scheme.
///
/// Strong polarities collapse onto their base polarity; matching is
/// case-insensitive and ignores separators (`StrongPositive`,
/// `strong-positive` and `strong_positive` are equivalent).
pub fn normalize_polarity(raw: &str) -> Result<Polarity> {
    let folded: String = raw
        .chars()
        .filter(|c| !matches!(c, '-' | '_' | ' '))
        .flat_map(char::to_lowercase)
        .collect();
    match folded.as_str() {
        "positive" | "strongpositive" => Ok(Polarity::Positive),
        "negative" | "strongnegative" => Ok(Polarity::Negative),
        "neutral" => Ok(Polarity::Neutral),
        _ => Err(Error::UnknownPolarity(raw.to_owned())),
    }
}

/// The three span elements of an opinion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Holder,
    Target,
    Expression,
}

impl Element {
    pub const ALL: [Element; 3] = [Element::Holder, Element::Target, Element::Expression];
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "holder" | "source" => Ok(Element::Holder),
            "target" => Ok(Element::Target),
            "expression" | "exp" | "polar_expression" => Ok(Element::Expression),
            other => Err(Error::InvalidSpan(format!("unknown element '{}'", other))),
        }
    }
}

/// One opinion tuple (holder, target, expression, polarity).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Opinion {
    pub holder: Option<Span>,
    pub target: Option<Span>,
    pub expression: Span,
    pub polarity: Polarity,
}

impl Opinion {
    pub fn new(holder: Option<Span>, target: Option<Span>, expression: Span, polarity: Polarity) -> Self {
        Opinion {
            holder,
            target,
            expression,
            polarity,
        }
    }

    pub fn element(&self, element: Element) -> Option<&Span> {
        match element {
            Element::Holder => self.holder.as_ref(),
            Element::Target => self.target.as_ref(),
            Element::Expression => Some(&self.expression),
        }
    }

    fn max_index(&self) -> usize {
        Element::ALL
            .iter()
            .filter_map(|&el| self.element(el))
            .map(Span::last)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence: Sentence,
    pub opinions: Vec<Opinion>,
}

impl AnnotatedSentence {
    /// Construct an annotated sentence, checking span validity.
    ///
    /// Duplicates are kept; see [`AnnotatedSentence::dedup_opinions`].
    pub fn new(sentence: Sentence, opinions: Vec<Opinion>) -> Result<Self> {
        let n = sentence.len();
        if let Some(bad) = opinions.iter().find(|o| o.max_index() >= n) {
            return Err(Error::InvalidSpan(format!(
                "opinion span index {} out of range for '{}' with {} tokens",
                bad.max_index(),
                sentence.sent_id,
                n
            )));
        }
        Ok(AnnotatedSentence { sentence, opinions })
    }

    pub fn sent_id(&self) -> &str {
        &self.sentence.sent_id
    }

    /// Remove exact duplicate opinions, keeping first occurrences in order.
    /// Returns the number of removed duplicates.
    pub fn dedup_opinions(&mut self) -> usize {
        let mut seen = BTreeSet::new();
        let before = self.opinions.len();
        self.opinions.retain(|o| seen.insert(o.clone()));
        before - self.opinions.len()
    }
}

/// Relation an arc expresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Expression(Polarity),
    Target,
    Holder,
}

/// Arc label, optionally marked as span-internal (`IN:` prefix).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcLabel {
    pub role: Role,
    pub inside: bool,
}

impl ArcLabel {
    pub const fn new(role: Role, inside: bool) -> Self {
        ArcLabel { role, inside }
    }

    pub const fn expression(polarity: Polarity) -> Self {
        ArcLabel::new(Role::Expression(polarity), false)
    }

    pub const fn target() -> Self {
        ArcLabel::new(Role::Target, false)
    }

    pub const fn holder() -> Self {
        ArcLabel::new(Role::Holder, false)
    }

    pub fn is_expression(self) -> bool {
        matches!(self.role, Role::Expression(_))
    }

    /// The labels of an inventory: all relation labels, followed by the
    /// span-internal variants when `inlabel` is set.
    pub fn inventory(inlabel: bool) -> Vec<ArcLabel> {
        let roles: Vec<Role> = Polarity::ALL
            .iter()
            .map(|&p| Role::Expression(p))
            .chain([Role::Target, Role::Holder])
            .collect();
        let mut labels: Vec<ArcLabel> = roles.iter().map(|&r| ArcLabel::new(r, false)).collect();
        if inlabel {
            labels.extend(roles.iter().map(|&r| ArcLabel::new(r, true)));
        }
        labels
    }
}

impl fmt::Display for ArcLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inside {
            f.write_str("IN:")?;
        }
        match self.role {
            Role::Expression(p) => write!(f, "exp:{}", p),
            Role::Target => f.write_str("target"),
            Role::Holder => f.write_str("holder"),
        }
    }
}

impl FromStr for ArcLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (inside, rest) = match s.strip_prefix("IN:") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let role = match rest {
            "target" => Role::Target,
            "holder" => Role::Holder,
            _ => match rest.strip_prefix("exp:") {
                Some(pol) => Role::Expression(normalize_polarity(pol).map_err(|_| Error::UnknownLabel(s.to_owned()))?),
                None => return Err(Error::UnknownLabel(s.to_owned())),
            },
        };
        Ok(ArcLabel { role, inside })
    }
}

impl Serialize for ArcLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ArcLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    /// Head node; `ROOT` (0) or a 1-based token index.
    pub head: usize,
    /// 1-based dependent token index.
    pub dep: usize,
    pub label: ArcLabel,
}

impl Arc {
    pub fn new(head: usize, dep: usize, label: ArcLabel) -> Self {
        Arc { head, dep, label }
    }
}

/// Labeled arcs over a sentence of `n` tokens plus ROOT.
///
/// At most one arc exists per (head, dep) pair; nodes may have any number
/// of incoming arcs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseGraph {
    n: usize,
    arcs: BTreeMap<(usize, usize), ArcLabel>,
}

impl ParseGraph {
    pub fn new(n: usize) -> Self {
        ParseGraph {
            n,
            arcs: BTreeMap::new(),
        }
    }

    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = Arc>) -> Result<Self> {
        let mut graph = ParseGraph::new(n);
        for arc in arcs {
            graph.add(arc)?;
        }
        Ok(graph)
    }

    /// Check an arc against the graph invariants, ignoring duplicates.
    pub fn validate(&self, arc: &Arc) -> Result<()> {
        let reason = if arc.dep == ROOT {
            Some("ROOT cannot be a dependent")
        } else if arc.dep > self.n || arc.head > self.n {
            Some("node out of range")
        } else if arc.head == arc.dep {
            Some("self-loop")
        } else if arc.head == ROOT && !(arc.label.is_expression() && !arc.label.inside) {
            Some("ROOT arcs must carry an expression label")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::InvalidArc {
                head: arc.head,
                dep: arc.dep,
                reason: reason.to_owned(),
            }),
            None => Ok(()),
        }
    }

    /// Add an arc; duplicate (head, dep) pairs are rejected.
    pub fn add(&mut self, arc: Arc) -> Result<()> {
        self.validate(&arc)?;
        if self.arcs.contains_key(&(arc.head, arc.dep)) {
            return Err(Error::InvalidArc {
                head: arc.head,
                dep: arc.dep,
                reason: "duplicate (head, dep) pair".to_owned(),
            });
        }
        self.arcs.insert((arc.head, arc.dep), arc.label);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn label(&self, head: usize, dep: usize) -> Option<ArcLabel> {
        self.arcs.get(&(head, dep)).copied()
    }

    /// Arcs ordered by (head, dep).
    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        self.arcs.iter().map(|(&(head, dep), &label)| Arc { head, dep, label })
    }

    /// Incoming arcs of a dependent, ordered by head.
    pub fn incoming(&self, dep: usize) -> Vec<Arc> {
        self.arcs().filter(|a| a.dep == dep).collect()
    }
}

/// Syntactic dependency tree: per token a 1-based head (0 = root) and a
/// relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynTree {
    pub heads: Vec<usize>,
    pub relations: Vec<String>,
}

impl SynTree {
    pub fn new(heads: Vec<usize>, relations: Vec<String>) -> Result<Self> {
        if heads.len() != relations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} heads but {} relations",
                heads.len(),
                relations.len()
            )));
        }
        if let Some(pos) = relations.iter().position(|r| r.is_empty()) {
            return Err(Error::InvalidSentence {
                sent_id: String::new(),
                reason: format!("token {} has an empty relation", pos + 1),
            });
        }
        if let Some(pos) = heads.iter().position(|&h| h > heads.len()) {
            return Err(Error::InvalidSentence {
                sent_id: String::new(),
                reason: format!("token {} has head out of range", pos + 1),
            });
        }
        Ok(SynTree { heads, relations })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Whether the 0-based token's syntactic head lies outside `span`.
    pub fn has_external_head(&self, token: usize, span: &Span) -> bool {
        match self.heads[token] {
            0 => true,
            head => !span.contains(head - 1),
        }
    }
}

/// Map character ranges onto the tokens they overlap.
///
/// Every range must overlap at least one token.
pub fn align_offsets(sentence: &Sentence, char_ranges: &[(usize, usize)]) -> Result<Span> {
    let mut indices = BTreeSet::new();
    for &(begin, end) in char_ranges {
        let mut hit = false;
        for (idx, token) in sentence.tokens.iter().enumerate() {
            let (tb, te) = token.char_range;
            if tb < end && begin < te {
                indices.insert(idx);
                hit = true;
            }
        }
        if !hit {
            return Err(Error::Alignment {
                sent_id: sentence.sent_id.clone(),
                begin,
                end,
            });
        }
    }
    Span::new(indices)
}
