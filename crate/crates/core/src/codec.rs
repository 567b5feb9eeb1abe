//! Encoding of opinion tuples as bi-lexical dependency graphs and back.
//!
//! Every expression head hangs off ROOT with an `exp:<polarity>` arc. Other
//! expression tokens attach flatly to the expression head; holder and target
//! heads attach to the expression head and their remaining tokens attach to
//! their own span head. With `inlabel`, span-internal arcs carry the `IN:`
//! variant of the label.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, Arc, ArcLabel, Opinion, ParseGraph, Polarity, Role, Span, SynTree, ROOT};

/// Relations never chosen as span heads by [`HeadRule::DepLabels`] unless
/// nothing else is available.
pub const DEFAULT_BANNED_RELATIONS: [&str; 6] = ["punct", "obl", "det", "case", "mark", "cc"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadRule {
    HeadFirst,
    HeadFinal,
    DepEdges,
    DepLabels,
}

impl HeadRule {
    pub const ALL: [HeadRule; 4] = [
        HeadRule::HeadFirst,
        HeadRule::HeadFinal,
        HeadRule::DepEdges,
        HeadRule::DepLabels,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HeadRule::HeadFirst => "head-first",
            HeadRule::HeadFinal => "head-final",
            HeadRule::DepEdges => "dep-edges",
            HeadRule::DepLabels => "dep-labels",
        }
    }

    pub fn needs_syntax(self) -> bool {
        matches!(self, HeadRule::DepEdges | HeadRule::DepLabels)
    }
}

impl fmt::Display for HeadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeadRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HeadRule::ALL
            .iter()
            .copied()
            .find(|rule| rule.as_str() == s)
            .ok_or_else(|| Error::InvalidScheme(format!("unknown head rule '{}'", s)))
    }
}

/// Head selection rule plus label inventory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingScheme {
    head_rule: HeadRule,
    inlabel: bool,
    banned_relations: BTreeSet<String>,
}

impl EncodingScheme {
    /// Scheme with the default banned relations for `DepLabels`.
    pub fn new(head_rule: HeadRule, inlabel: bool) -> Self {
        let banned_relations = if head_rule == HeadRule::DepLabels {
            DEFAULT_BANNED_RELATIONS.iter().map(|s| s.to_string()).collect()
        } else {
            BTreeSet::new()
        };
        EncodingScheme {
            head_rule,
            inlabel,
            banned_relations,
        }
    }

    pub fn head_first() -> Self {
        EncodingScheme::new(HeadRule::HeadFirst, false)
    }

    pub fn head_final() -> Self {
        EncodingScheme::new(HeadRule::HeadFinal, false)
    }

    pub fn with_banned_relations<I, S>(mut self, relations: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let relations: BTreeSet<String> = relations.into_iter().map(Into::into).collect();
        if self.head_rule != HeadRule::DepLabels && !relations.is_empty() {
            return Err(Error::InvalidScheme(
                "banned relations only apply to dep-labels".to_owned(),
            ));
        }
        self.banned_relations = relations;
        Ok(self)
    }

    pub fn head_rule(&self) -> HeadRule {
        self.head_rule
    }

    pub fn inlabel(&self) -> bool {
        self.inlabel
    }

    pub fn banned_relations(&self) -> &BTreeSet<String> {
        &self.banned_relations
    }

    pub fn needs_syntax(&self) -> bool {
        self.head_rule.needs_syntax()
    }

    /// Label inventory of this scheme (without NONE).
    pub fn labels(&self) -> Vec<ArcLabel> {
        ArcLabel::inventory(self.inlabel)
    }

    fn is_banned(&self, relation: &str) -> bool {
        // Subtyped relations (obl:tmod) are banned through their base type.
        let base = relation.split(':').next().unwrap_or(relation);
        self.banned_relations.contains(relation) || self.banned_relations.contains(base)
    }

    fn internal(&self, role: Role) -> ArcLabel {
        ArcLabel::new(role, self.inlabel)
    }
}

impl fmt::Display for EncodingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head_rule)?;
        if self.inlabel {
            f.write_str("+inlabel")?;
        }
        Ok(())
    }
}

/// Choose the head token (0-based) of a span.
///
/// Syntax-based rules fall back to the first token when no tree is given or
/// no token qualifies, so the function is total.
pub fn select_head(span: &Span, scheme: &EncodingScheme, syn: Option<&SynTree>) -> usize {
    match (scheme.head_rule, syn) {
        (HeadRule::HeadFirst, _) => span.first(),
        (HeadRule::HeadFinal, _) => span.last(),
        (HeadRule::DepEdges, Some(tree)) => dep_edges_head(span, tree).unwrap_or(span.first()),
        (HeadRule::DepLabels, Some(tree)) => span
            .indices()
            .iter()
            .copied()
            .find(|&idx| tree.has_external_head(idx, span) && !scheme.is_banned(&tree.relations[idx]))
            .or_else(|| dep_edges_head(span, tree))
            .unwrap_or(span.first()),
        (_, None) => span.first(),
    }
}

fn dep_edges_head(span: &Span, tree: &SynTree) -> Option<usize> {
    span.indices()
        .iter()
        .copied()
        .find(|&idx| tree.has_external_head(idx, span))
}

/// One unrepresentable part of an encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LossEntry {
    /// Two required arcs share (head, dep); the first one is kept.
    Collision {
        sent_id: String,
        head: usize,
        dep: usize,
        kept: ArcLabel,
        dropped: ArcLabel,
    },
    /// A required arc would connect a token to itself.
    SelfLoop {
        sent_id: String,
        node: usize,
        dropped: ArcLabel,
    },
    /// The graph decodes to a different opinion set than the annotation.
    Unrecoverable {
        sent_id: String,
        missing: usize,
        spurious: usize,
    },
}

impl fmt::Display for LossEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossEntry::Collision {
                sent_id,
                head,
                dep,
                kept,
                dropped,
            } => write!(f, "{}\tcollision\t{}\t{}\t{}\t{}", sent_id, head, dep, kept, dropped),
            LossEntry::SelfLoop { sent_id, node, dropped } => {
                write!(f, "{}\tself-loop\t{}\t{}\t_\t{}", sent_id, node, node, dropped)
            }
            LossEntry::Unrecoverable {
                sent_id,
                missing,
                spurious,
            } => write!(
                f,
                "{}\tunrecoverable\tmissing={}\tspurious={}",
                sent_id, missing, spurious
            ),
        }
    }
}

/// Everything an encoding could not represent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LossReport {
    pub entries: Vec<LossEntry>,
}

impl LossReport {
    pub fn count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: LossReport) {
        self.entries.extend(other.entries);
    }

    pub fn collisions(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, LossEntry::Collision { .. }))
            .count()
    }
}

struct GraphBuilder<'a> {
    sent_id: &'a str,
    graph: ParseGraph,
    report: LossReport,
}

impl GraphBuilder<'_> {
    fn require(&mut self, head: usize, dep: usize, label: ArcLabel) {
        if head == dep {
            self.report.entries.push(LossEntry::SelfLoop {
                sent_id: self.sent_id.to_owned(),
                node: dep,
                dropped: label,
            });
            return;
        }
        match self.graph.label(head, dep) {
            Some(existing) if existing == label => {}
            Some(existing) => self.report.entries.push(LossEntry::Collision {
                sent_id: self.sent_id.to_owned(),
                head,
                dep,
                kept: existing,
                dropped: label,
            }),
            None => self
                .graph
                .add(Arc::new(head, dep, label))
                .expect("encoder only emits valid arcs"),
        }
    }

    /// Relation arc to the span head plus internal arcs from it.
    fn attach_span(
        &mut self,
        from: usize,
        span: &Span,
        role: Role,
        scheme: &EncodingScheme,
        syn: Option<&SynTree>,
    ) -> usize {
        let head = select_head(span, scheme, syn) + 1;
        self.require(from, head, ArcLabel::new(role, false));
        let internal = scheme.internal(role);
        for &idx in span.indices() {
            if idx + 1 != head {
                self.require(head, idx + 1, internal);
            }
        }
        head
    }
}

/// Encode all opinions of a sentence as one graph.
///
/// Conflicting arcs keep the first requirement in opinion order; every loss
/// is recorded in the returned report.
pub fn encode_sentence(
    ann: &AnnotatedSentence,
    scheme: &EncodingScheme,
    syn: Option<&SynTree>,
) -> Result<(ParseGraph, LossReport)> {
    let sent_id = ann.sent_id();
    let n = ann.sentence.len();
    if scheme.needs_syntax() {
        let tree = syn.ok_or_else(|| Error::MissingSyntax(sent_id.to_owned()))?;
        if tree.len() != n {
            return Err(Error::SyntaxLength {
                sent_id: sent_id.to_owned(),
                tree: tree.len(),
                sentence: n,
            });
        }
    }

    let mut builder = GraphBuilder {
        sent_id,
        graph: ParseGraph::new(n),
        report: LossReport::default(),
    };

    for opinion in &ann.opinions {
        let exp_head = builder.attach_span(
            ROOT,
            &opinion.expression,
            Role::Expression(opinion.polarity),
            scheme,
            syn,
        );
        if let Some(target) = &opinion.target {
            builder.attach_span(exp_head, target, Role::Target, scheme, syn);
        }
        if let Some(holder) = &opinion.holder {
            builder.attach_span(exp_head, holder, Role::Holder, scheme, syn);
        }
    }

    let GraphBuilder { graph, mut report, .. } = builder;

    let expected = product_normalize(&ann.opinions);
    let decoded: BTreeSet<Opinion> = decode_graph(&graph, scheme).opinions.into_iter().collect();
    if decoded != expected {
        report.entries.push(LossEntry::Unrecoverable {
            sent_id: sent_id.to_owned(),
            missing: expected.difference(&decoded).count(),
            spurious: decoded.difference(&expected).count(),
        });
    }

    Ok((graph, report))
}

/// Syntactic trees keyed by sentence id.
pub type SyntaxMap = HashMap<String, SynTree>;

/// Encode every sentence of a corpus, merging the loss reports.
pub fn encode_corpus(
    corpus: &[AnnotatedSentence],
    scheme: &EncodingScheme,
    syntax: Option<&SyntaxMap>,
) -> Result<(Vec<ParseGraph>, LossReport)> {
    let mut graphs = Vec::with_capacity(corpus.len());
    let mut report = LossReport::default();
    for ann in corpus {
        let syn = syntax.and_then(|map| map.get(ann.sent_id()));
        let (graph, sentence_report) = encode_sentence(ann, scheme, syn)?;
        graphs.push(graph);
        report.extend(sentence_report);
    }
    Ok((graphs, report))
}

/// Apply the decoder's grouping convention to gold opinions: opinions
/// sharing expression and polarity are expanded to the product of their
/// holders and targets.
pub fn product_normalize(opinions: &[Opinion]) -> BTreeSet<Opinion> {
    let mut groups: BTreeMap<(Span, Polarity), (BTreeSet<Span>, BTreeSet<Span>)> = BTreeMap::new();
    for op in opinions {
        let entry = groups.entry((op.expression.clone(), op.polarity)).or_default();
        entry.0.extend(op.holder.iter().cloned());
        entry.1.extend(op.target.iter().cloned());
    }

    let mut out = BTreeSet::new();
    for ((expression, polarity), (holders, targets)) in groups {
        for holder in optional_all(&holders) {
            for target in optional_all(&targets) {
                out.insert(Opinion::new(
                    holder.clone(),
                    target.clone(),
                    expression.clone(),
                    polarity,
                ));
            }
        }
    }
    out
}

fn optional_all(spans: &BTreeSet<Span>) -> Vec<Option<Span>> {
    if spans.is_empty() {
        vec![None]
    } else {
        spans.iter().cloned().map(Some).collect()
    }
}

/// Opinions read off a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedGraph {
    pub opinions: Vec<Opinion>,
    /// Arcs that took part in no decoding rule.
    pub ignored_arcs: usize,
}

struct Decoder<'a> {
    out: Vec<Vec<(usize, ArcLabel)>>,
    used: BTreeSet<(usize, usize)>,
    scheme: &'a EncodingScheme,
}

impl Decoder<'_> {
    /// Tokens reachable from `start` over arcs labeled `label`, including
    /// `start`, as a 0-based span.
    fn closure(&mut self, start: usize, label: ArcLabel) -> Span {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for &(dep, arc_label) in &self.out[node] {
                if arc_label == label {
                    self.used.insert((node, dep));
                    if seen.insert(dep) {
                        stack.push(dep);
                    }
                }
            }
        }
        Span::new(seen.into_iter().map(|node| node - 1)).expect("closure contains its start")
    }

    fn attached(&mut self, root: usize, role: Role) -> Vec<Option<Span>> {
        let heads: Vec<usize> = self.out[root]
            .iter()
            .filter(|(_, label)| *label == ArcLabel::new(role, false))
            .map(|&(dep, _)| dep)
            .collect();
        let mut spans = Vec::new();
        for head in heads {
            self.used.insert((root, head));
            let span = self.closure(head, self.scheme.internal(role));
            if !spans.contains(&Some(span.clone())) {
                spans.push(Some(span));
            }
        }
        if spans.is_empty() {
            spans.push(None);
        }
        spans
    }
}

/// Read opinions off a (possibly ill-formed) graph.
///
/// Output is ordered by expression root, then holder head, then target head.
/// Holders and targets attached to the same root are combined as a product.
pub fn decode_graph(graph: &ParseGraph, scheme: &EncodingScheme) -> DecodedGraph {
    let mut out = vec![Vec::new(); graph.n() + 1];
    for arc in graph.arcs() {
        out[arc.head].push((arc.dep, arc.label));
    }
    let roots: Vec<(usize, Polarity)> = out[ROOT]
        .iter()
        .filter_map(|&(dep, label)| match label.role {
            Role::Expression(p) if !label.inside => Some((dep, p)),
            _ => None,
        })
        .collect();

    let mut decoder = Decoder {
        out,
        used: BTreeSet::new(),
        scheme,
    };
    let mut opinions = Vec::new();
    let mut seen = BTreeSet::new();
    for (root, polarity) in roots {
        decoder.used.insert((ROOT, root));
        let expression = decoder.closure(root, scheme.internal(Role::Expression(polarity)));
        let holders = decoder.attached(root, Role::Holder);
        let targets = decoder.attached(root, Role::Target);
        for holder in &holders {
            for target in &targets {
                let op = Opinion::new(holder.clone(), target.clone(), expression.clone(), polarity);
                if seen.insert(op.clone()) {
                    opinions.push(op);
                }
            }
        }
    }

    DecodedGraph {
        opinions,
        ignored_arcs: graph.len() - decoder.used.len(),
    }
}
