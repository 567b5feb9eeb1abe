//! Seeded generators and brute-force reference implementations shared by
//! the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sentigraph::metrics::Counts;
use sentigraph::model::{
    AnnotatedSentence, Arc, ArcLabel, Element, Opinion, ParseGraph, Polarity, Sentence, Span, SynTree,
};

const WORDS: [&str; 16] = [
    "the", "food", "was", "great", "but", "service", "awful", "I", "think", "staff", "rude", "pizza", "nice", "very",
    "not", "they",
];

const RELATIONS: [&str; 10] = [
    "nsubj", "obj", "amod", "advmod", "punct", "det", "case", "obl", "cc", "conj",
];

pub fn polarity(rng: &mut ChaCha8Rng) -> Polarity {
    Polarity::ALL[rng.gen_range(0..Polarity::ALL.len())]
}

pub fn sentence(rng: &mut ChaCha8Rng, id: &str, n: usize) -> Sentence {
    let forms: Vec<&str> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
    Sentence::whitespace_tokenized(id, forms.join(" ")).unwrap()
}

/// A span of up to `max_len` tokens, usually contiguous.
pub fn span(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Span {
    let len = rng.gen_range(1..=max_len.min(n));
    if rng.gen_bool(0.8) {
        let start = rng.gen_range(0..=n - len);
        Span::range(start, start + len).unwrap()
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        Span::new(idx.into_iter().take(len)).unwrap()
    }
}

pub fn opinion(rng: &mut ChaCha8Rng, n: usize) -> Opinion {
    let holder = rng.gen_bool(0.5).then(|| span(rng, n, 3));
    let target = rng.gen_bool(0.7).then(|| span(rng, n, 3));
    Opinion::new(holder, target, span(rng, n, 3), polarity(rng))
}

/// Sentence with arbitrary, possibly overlapping opinions.
pub fn annotated(rng: &mut ChaCha8Rng, id: &str, max_n: usize, max_opinions: usize) -> AnnotatedSentence {
    let n = rng.gen_range(1..=max_n);
    let s = sentence(rng, id, n);
    let k = rng.gen_range(0..=max_opinions);
    let ops = (0..k).map(|_| opinion(rng, n)).collect();
    let mut ann = AnnotatedSentence::new(s, ops).unwrap();
    ann.dedup_opinions();
    ann
}

/// Sentence whose opinion elements occupy pairwise disjoint token sets, so
/// that every encoding is lossless.
pub fn lossless(rng: &mut ChaCha8Rng, id: &str, max_n: usize, max_opinions: usize) -> AnnotatedSentence {
    let k = rng.gen_range(0..=max_opinions);
    let shape: Vec<(bool, bool)> = (0..k).map(|_| (rng.gen_bool(0.5), rng.gen_bool(0.7))).collect();
    let elements: usize = shape.iter().map(|&(h, t)| 1 + usize::from(h) + usize::from(t)).sum();
    let n = rng.gen_range(elements.max(1)..=max_n.max(elements).max(1));
    let s = sentence(rng, id, n);
    let mut tokens: Vec<usize> = (0..n).collect();
    tokens.shuffle(rng);
    let mut spare = n - elements;
    let mut cursor = 0;
    let mut take = |rng: &mut ChaCha8Rng| {
        let extra = if spare > 0 { rng.gen_range(0..=spare.min(2)) } else { 0 };
        spare -= extra;
        let picked = &tokens[cursor..cursor + 1 + extra];
        cursor += 1 + extra;
        Span::new(picked.iter().copied()).unwrap()
    };
    let mut ops = Vec::new();
    for (has_holder, has_target) in shape {
        let expression = take(rng);
        let holder = has_holder.then(|| take(rng));
        let target = has_target.then(|| take(rng));
        ops.push(Opinion::new(holder, target, expression, polarity(rng)));
    }
    AnnotatedSentence::new(s, ops).unwrap()
}

/// Take a lossless sentence and make it unrepresentable: either a second
/// polarity on an existing expression (two labels for one ROOT arc) or a
/// target identical to the expression (a self-loop).
pub fn lossy(rng: &mut ChaCha8Rng, id: &str) -> AnnotatedSentence {
    loop {
        let mut ann = lossless(rng, id, 12, 3);
        let Some(first) = ann.opinions.first().cloned() else {
            continue;
        };
        let injected = if rng.gen_bool(0.5) {
            let other = Polarity::ALL.iter().copied().find(|&p| p != first.polarity).unwrap();
            Opinion::new(
                first.holder.clone(),
                first.target.clone(),
                first.expression.clone(),
                other,
            )
        } else {
            Opinion::new(
                first.holder.clone(),
                Some(first.expression.clone()),
                first.expression.clone(),
                first.polarity,
            )
        };
        ann.opinions.push(injected);
        return AnnotatedSentence::new(ann.sentence, ann.opinions).unwrap();
    }
}

/// Random projective-or-not dependency tree over `n` tokens.
pub fn tree(rng: &mut ChaCha8Rng, n: usize) -> SynTree {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for (pos, &tok) in order.iter().enumerate().skip(1) {
        heads[tok] = order[rng.gen_range(0..pos)] + 1;
    }
    let relations = (0..n)
        .map(|i| {
            if heads[i] == 0 {
                "root".to_owned()
            } else {
                RELATIONS[rng.gen_range(0..RELATIONS.len())].to_owned()
            }
        })
        .collect();
    SynTree::new(heads, relations).unwrap()
}

/// Random graph respecting the graph invariants.
pub fn graph(rng: &mut ChaCha8Rng, n: usize, labels: &[ArcLabel]) -> ParseGraph {
    let mut g = ParseGraph::new(n);
    let arcs = rng.gen_range(0..=2 * n);
    for _ in 0..arcs {
        let head = rng.gen_range(0..=n);
        let dep = rng.gen_range(1..=n);
        let label = labels[rng.gen_range(0..labels.len())];
        let arc = Arc::new(head, dep, label);
        if g.validate(&arc).is_ok() && g.label(head, dep).is_none() {
            g.add(arc).unwrap();
        }
    }
    g
}

/// Predicted corpus derived from `gold` by perturbing, dropping and adding
/// opinions.
pub fn perturbed(rng: &mut ChaCha8Rng, gold: &AnnotatedSentence, max_opinions: usize) -> AnnotatedSentence {
    let n = gold.sentence.len();
    let mut ops: Vec<Opinion> = Vec::new();
    for op in &gold.opinions {
        match rng.gen_range(0..4) {
            0 => {}
            1 => ops.push(op.clone()),
            2 => {
                let mut o = op.clone();
                if rng.gen_bool(0.5) {
                    o.polarity = polarity(rng);
                }
                if rng.gen_bool(0.5) {
                    o.target = rng.gen_bool(0.8).then(|| span(rng, n, 3));
                }
                if rng.gen_bool(0.5) {
                    o.expression = span(rng, n, 3);
                }
                ops.push(o);
            }
            _ => ops.push(opinion(rng, n)),
        }
    }
    while ops.len() < max_opinions && rng.gen_bool(0.3) {
        ops.push(opinion(rng, n));
    }
    let mut ann = AnnotatedSentence::new(gold.sentence.clone(), ops).unwrap();
    ann.dedup_opinions();
    ann
}

// Brute-force references.

pub fn f1(tp_p: f64, tp_r: f64, pred: f64, gold: f64) -> f64 {
    let p = if pred > 0.0 { tp_p / pred } else { 0.0 };
    let r = if gold > 0.0 { tp_r / gold } else { 0.0 };
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub fn counts_f1(c: &Counts) -> f64 {
    f1(c.tp_precision, c.tp_recall, c.pred, c.gold)
}

fn covers(ops: &[Opinion], element: Element, token: usize) -> bool {
    ops.iter().any(|o| {
        let span = match element {
            Element::Holder => o.holder.as_ref(),
            Element::Target => o.target.as_ref(),
            Element::Expression => Some(&o.expression),
        };
        span.is_some_and(|s| s.indices().contains(&token))
    })
}

/// Token-level counts by scanning every token position.
pub fn token_counts(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence], element: Element) -> (usize, usize, usize) {
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        for t in 0..g.sentence.len() {
            let in_g = covers(&g.opinions, element, t);
            let in_p = covers(&p.opinions, element, t);
            tp += usize::from(in_g && in_p);
            np += usize::from(in_p);
            ng += usize::from(in_g);
        }
    }
    (tp, np, ng)
}

fn unique<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

/// Targeted counts by pairwise comparison of unique (target, polarity) pairs.
pub fn targeted_counts(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence]) -> (usize, usize, usize) {
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let gu = unique(
            g.opinions
                .iter()
                .filter_map(|o| o.target.clone().map(|t| (t, o.polarity))),
        );
        let pu = unique(
            p.opinions
                .iter()
                .filter_map(|o| o.target.clone().map(|t| (t, o.polarity))),
        );
        tp += pu.iter().filter(|x| gu.contains(x)).count();
        np += pu.len();
        ng += gu.len();
    }
    (tp, np, ng)
}

/// Arc counts by scanning every (head, dep) cell.
pub fn arc_counts(gold: &[ParseGraph], pred: &[ParseGraph], labeled: bool) -> (usize, usize, usize) {
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        for h in 0..=g.n() {
            for d in 1..=g.n() {
                let (gl, pl) = (g.label(h, d), p.label(h, d));
                np += usize::from(pl.is_some());
                ng += usize::from(gl.is_some());
                let hit = match (gl, pl) {
                    (Some(a), Some(b)) => !labeled || a == b,
                    _ => false,
                };
                tp += usize::from(hit);
            }
        }
    }
    (tp, np, ng)
}

/// Every partial one-to-one assignment of `m` predictions to `k` golds,
/// restricted to allowed pairs.
pub fn assignments(m: usize, k: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    fn go(
        i: usize,
        m: usize,
        k: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        allowed: &dyn Fn(usize, usize) -> bool,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == m {
            out.push(cur.clone());
            return;
        }
        go(i + 1, m, k, used, cur, allowed, out);
        for j in 0..k {
            if !used[j] && allowed(i, j) {
                used[j] = true;
                cur.push((i, j));
                go(i + 1, m, k, used, cur, allowed, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut vec![false; k], &mut Vec::new(), allowed, &mut out);
    out
}

/// Overlap-based polarity counts: the largest set of one-to-one matches
/// between unique (expression, polarity) units.
pub fn polarity_counts(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence]) -> (usize, usize, usize) {
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let gu = unique(g.opinions.iter().map(|o| (o.expression.clone(), o.polarity)));
        let pu = unique(p.opinions.iter().map(|o| (o.expression.clone(), o.polarity)));
        let allowed =
            |i: usize, j: usize| pu[i].1 == gu[j].1 && pu[i].0.indices().iter().any(|t| gu[j].0.indices().contains(t));
        tp += assignments(pu.len(), gu.len(), &allowed)
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        np += pu.len();
        ng += gu.len();
    }
    (tp, np, ng)
}

fn ratio(a: &Span, b: &Span) -> (usize, usize, usize) {
    let inter = a.indices().iter().filter(|t| b.indices().contains(t)).count();
    (inter, a.indices().len(), b.indices().len())
}

/// Precision and recall weight of a prediction against a gold tuple, from
/// token-set intersections.
pub fn pair_weight(p: &Opinion, g: &Opinion, polar: bool) -> Option<(f64, f64)> {
    if polar && p.polarity != g.polarity {
        return None;
    }
    let pairs = [
        (p.holder.as_ref(), g.holder.as_ref()),
        (p.target.as_ref(), g.target.as_ref()),
        (Some(&p.expression), Some(&g.expression)),
    ];
    let mut wp = 0.0;
    let mut wr = 0.0;
    for pair in pairs {
        match pair {
            (None, None) => {
                wp += 1.0;
                wr += 1.0;
            }
            (Some(a), Some(b)) => {
                let (inter, la, lb) = ratio(a, b);
                if inter == 0 {
                    return None;
                }
                wp += inter as f64 / la as f64;
                wr += inter as f64 / lb as f64;
            }
            _ => return None,
        }
    }
    Some((wp / 3.0, wr / 3.0))
}

/// Per-sentence counts of the assignment with the largest total weight.
pub fn optimal_tuple_counts(gold: &AnnotatedSentence, pred: &AnnotatedSentence, polar: bool) -> Counts {
    let (g, p) = (&gold.opinions, &pred.opinions);
    let allowed = |i: usize, j: usize| pair_weight(&p[i], &g[j], polar).is_some();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for a in assignments(p.len(), g.len(), &allowed) {
        let (mut wp, mut wr) = (0.0, 0.0);
        for (i, j) in a {
            let (x, y) = pair_weight(&p[i], &g[j], polar).unwrap();
            wp += x;
            wr += y;
        }
        if wp + wr > best.0 + 1e-12 {
            best = (wp + wr, wp, wr);
        }
    }
    Counts {
        tp_precision: best.1,
        tp_recall: best.2,
        pred: p.len() as f64,
        gold: g.len() as f64,
    }
}

/// Exhaustive paired bootstrap: the share of all `n^n` resamples whose gain
/// is at least twice the observed gain.
pub fn exhaustive_bootstrap(a: &[Counts], b: &[Counts]) -> (f64, f64) {
    let n = a.len();
    let total = |c: &[Counts], idx: &[usize]| {
        let mut s = Counts::default();
        for &i in idx {
            s.tp_precision += c[i].tp_precision;
            s.tp_recall += c[i].tp_recall;
            s.pred += c[i].pred;
            s.gold += c[i].gold;
        }
        counts_f1(&s)
    };
    let all: Vec<usize> = (0..n).collect();
    let delta = total(a, &all) - total(b, &all);
    let samples = n.pow(n as u32);
    let mut hits = 0;
    let mut idx = vec![0; n];
    for code in 0..samples {
        let mut c = code;
        for slot in idx.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        if total(a, &idx) - total(b, &idx) >= 2.0 * delta {
            hits += 1;
        }
    }
    (delta, hits as f64 / samples as f64)
}

pub fn opinion_set(ops: &[Opinion]) -> BTreeSet<Opinion> {
    ops.iter().cloned().collect()
}
