//! Span- and tuple-level metrics over decoded opinions.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::model::{AnnotatedSentence, Element, Opinion, Polarity, Span};

use super::prf::{Counts, Prf};

/// Pair gold and predicted sentences by `sent_id`, in gold order.
pub fn align_corpora<'a>(
    gold: &'a [AnnotatedSentence],
    pred: &'a [AnnotatedSentence],
) -> Result<Vec<(&'a AnnotatedSentence, &'a AnnotatedSentence)>> {
    if gold.len() != pred.len() {
        return Err(Error::MisalignedCorpora(format!(
            "gold has {} sentences, prediction has {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut by_id: HashMap<&str, &AnnotatedSentence> = HashMap::with_capacity(pred.len());
    for ann in pred {
        if by_id.insert(ann.sent_id(), ann).is_some() {
            return Err(Error::MisalignedCorpora(format!(
                "duplicate sent_id '{}' in prediction",
                ann.sent_id()
            )));
        }
    }
    gold.iter()
        .map(|g| {
            by_id
                .get(g.sent_id())
                .map(|&p| (g, p))
                .ok_or_else(|| Error::MisalignedCorpora(format!("no prediction for '{}'", g.sent_id())))
        })
        .collect()
}

fn token_union(opinions: &[Opinion], element: Element) -> BTreeSet<usize> {
    opinions
        .iter()
        .filter_map(|o| o.element(element))
        .flat_map(|s| s.indices().iter().copied())
        .collect()
}

/// Token-level counts for one element in one sentence.
pub fn token_span_counts(gold: &[Opinion], pred: &[Opinion], element: Element) -> Counts {
    let gold_tokens = token_union(gold, element);
    let pred_tokens = token_union(pred, element);
    let tp = gold_tokens.intersection(&pred_tokens).count();
    Counts::exact(tp, pred_tokens.len(), gold_tokens.len())
}

/// Micro-averaged token-level F1 of holders, targets or expressions.
pub fn token_span_f1(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence], element: Element) -> Result<Prf> {
    Ok(align_corpora(gold, pred)?
        .into_iter()
        .map(|(g, p)| token_span_counts(&g.opinions, &p.opinions, element))
        .sum::<Counts>()
        .prf())
}

/// Token-level F1 macro-averaged over polarity classes: each class is
/// scored on the element tokens of opinions with that polarity, and the
/// classes occurring in gold or prediction are averaged.
pub fn macro_token_span_f1(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence], element: Element) -> Result<f64> {
    let pairs = align_corpora(gold, pred)?;
    let mut scores = Vec::new();
    for polarity in Polarity::ALL {
        let counts: Counts = pairs
            .iter()
            .map(|(g, p)| {
                let g: Vec<Opinion> = g.opinions.iter().filter(|o| o.polarity == polarity).cloned().collect();
                let p: Vec<Opinion> = p.opinions.iter().filter(|o| o.polarity == polarity).cloned().collect();
                token_span_counts(&g, &p, element)
            })
            .sum();
        if counts.gold > 0.0 || counts.pred > 0.0 {
            scores.push(counts.f1());
        }
    }
    Ok(if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    })
}

fn targeted_units(opinions: &[Opinion]) -> BTreeSet<(&Span, Polarity)> {
    opinions
        .iter()
        .filter_map(|o| o.target.as_ref().map(|t| (t, o.polarity)))
        .collect()
}

/// Exact (target, polarity) matches in one sentence.
pub fn targeted_counts(gold: &[Opinion], pred: &[Opinion]) -> Counts {
    let gold_units = targeted_units(gold);
    let pred_units = targeted_units(pred);
    let tp = gold_units.intersection(&pred_units).count();
    Counts::exact(tp, pred_units.len(), gold_units.len())
}

/// Micro F1 over deduplicated (target span, polarity) pairs.
pub fn targeted_f1(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence]) -> Result<Prf> {
    Ok(align_corpora(gold, pred)?
        .into_iter()
        .map(|(g, p)| targeted_counts(&g.opinions, &p.opinions))
        .sum::<Counts>()
        .prf())
}

/// Precision and recall weights of a predicted tuple against a gold tuple,
/// or `None` if they cannot match.
///
/// Each element contributes `|p∩g|/|p|` (precision) and `|p∩g|/|g|`
/// (recall); two absent elements contribute 1. The weights are averaged over
/// holder, target and expression.
pub fn tuple_weights(pred: &Opinion, gold: &Opinion, polar: bool) -> Option<(f64, f64)> {
    if polar && pred.polarity != gold.polarity {
        return None;
    }
    let (mut wp, mut wr) = (0.0, 0.0);
    for element in Element::ALL {
        match (pred.element(element), gold.element(element)) {
            (None, None) => {
                wp += 1.0;
                wr += 1.0;
            }
            (Some(p), Some(g)) => {
                let overlap = p.overlap(g);
                if overlap == 0 {
                    return None;
                }
                wp += overlap as f64 / p.len() as f64;
                wr += overlap as f64 / g.len() as f64;
            }
            _ => return None,
        }
    }
    Some((wp / 3.0, wr / 3.0))
}

/// Greedy one-to-one tuple matching for one sentence.
///
/// Candidate pairs are taken in order of descending summed weight, ties
/// broken by prediction index and then gold index.
pub fn match_tuples(gold: &[Opinion], pred: &[Opinion], polar: bool) -> Vec<(usize, usize, f64, f64)> {
    let mut candidates = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        for (gi, g) in gold.iter().enumerate() {
            if let Some((wp, wr)) = tuple_weights(p, g, polar) {
                candidates.push((pi, gi, wp, wr));
            }
        }
    }
    candidates.sort_by(|a, b| {
        (b.2 + b.3)
            .total_cmp(&(a.2 + a.3))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut pred_used = vec![false; pred.len()];
    let mut gold_used = vec![false; gold.len()];
    let mut matches = Vec::new();
    for (pi, gi, wp, wr) in candidates {
        if !pred_used[pi] && !gold_used[gi] {
            pred_used[pi] = true;
            gold_used[gi] = true;
            matches.push((pi, gi, wp, wr));
        }
    }
    matches
}

/// Overlap-weighted tuple counts for one sentence.
pub fn sentiment_graph_counts(gold: &[Opinion], pred: &[Opinion], polar: bool) -> Counts {
    let matches = match_tuples(gold, pred, polar);
    Counts {
        tp_precision: matches.iter().map(|m| m.2).sum(),
        tp_recall: matches.iter().map(|m| m.3).sum(),
        pred: pred.len() as f64,
        gold: gold.len() as f64,
    }
}

/// Sentiment graph F1: SF1 with `polar`, NSF1 without.
pub fn sentiment_graph_f1(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence], polar: bool) -> Result<Prf> {
    Ok(align_corpora(gold, pred)?
        .into_iter()
        .map(|(g, p)| sentiment_graph_counts(&g.opinions, &p.opinions, polar))
        .sum::<Counts>()
        .prf())
}

fn expression_units(opinions: &[Opinion]) -> Vec<(&Span, Polarity)> {
    opinions
        .iter()
        .map(|o| (&o.expression, o.polarity))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Maximum matching of predicted to gold expressions that overlap and share
/// polarity.
pub fn polarity_overlap_counts(gold: &[Opinion], pred: &[Opinion]) -> Counts {
    let gold_units = expression_units(gold);
    let pred_units = expression_units(pred);
    let edges: Vec<Vec<usize>> = pred_units
        .iter()
        .map(|(pe, pp)| {
            gold_units
                .iter()
                .enumerate()
                .filter(|(_, (ge, gp))| pp == gp && pe.overlap(ge) > 0)
                .map(|(gi, _)| gi)
                .collect()
        })
        .collect();

    let mut gold_match: Vec<Option<usize>> = vec![None; gold_units.len()];
    let mut tp = 0;
    for pi in 0..pred_units.len() {
        let mut visited = vec![false; gold_units.len()];
        if augment(pi, &edges, &mut visited, &mut gold_match) {
            tp += 1;
        }
    }
    Counts::exact(tp, pred_units.len(), gold_units.len())
}

fn augment(pi: usize, edges: &[Vec<usize>], visited: &mut [bool], gold_match: &mut [Option<usize>]) -> bool {
    for &gi in &edges[pi] {
        if visited[gi] {
            continue;
        }
        visited[gi] = true;
        let free = match gold_match[gi] {
            None => true,
            Some(other) => augment(other, edges, visited, gold_match),
        };
        if free {
            gold_match[gi] = Some(pi);
            return true;
        }
    }
    false
}

/// Polarity F1: a predicted expression is correct if it overlaps an
/// unconsumed gold expression of the same polarity.
pub fn polarity_overlap_f1(gold: &[AnnotatedSentence], pred: &[AnnotatedSentence]) -> Result<Prf> {
    Ok(align_corpora(gold, pred)?
        .into_iter()
        .map(|(g, p)| polarity_overlap_counts(&g.opinions, &p.opinions))
        .sum::<Counts>()
        .prf())
}

/// Sentences whose gold opinions have at least two distinct targets.
pub fn filter_multi_target(corpus: &[AnnotatedSentence]) -> Vec<AnnotatedSentence> {
    corpus
        .iter()
        .filter(|ann| {
            ann.opinions
                .iter()
                .filter_map(|o| o.target.as_ref())
                .collect::<BTreeSet<_>>()
                .len()
                >= 2
        })
        .cloned()
        .collect()
}

/// Keep the predictions for the sentences of `subset`.
pub fn restrict_to(subset: &[AnnotatedSentence], corpus: &[AnnotatedSentence]) -> Vec<AnnotatedSentence> {
    let ids: BTreeSet<&str> = subset.iter().map(|a| a.sent_id()).collect();
    corpus.iter().filter(|a| ids.contains(a.sent_id())).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Polarity::*, Sentence};

    fn span(idx: &[usize]) -> Span {
        Span::new(idx.iter().copied()).unwrap()
    }

    fn corpus(id: &str, opinions: Vec<Opinion>) -> Vec<AnnotatedSentence> {
        let forms: Vec<String> = (0..12).map(|i| format!("t{}", i)).collect();
        vec![AnnotatedSentence::new(Sentence::from_forms(id, &forms).unwrap(), opinions).unwrap()]
    }

    fn full(target: &[usize], pol: Polarity) -> Opinion {
        Opinion::new(Some(span(&[0, 1])), Some(span(target)), span(&[6, 7]), pol)
    }

    #[test]
    fn token_target_partial() {
        let gold = corpus("s", vec![full(&[3, 4, 5], Positive)]);
        let pred = corpus("s", vec![full(&[3, 4], Positive)]);
        let prf = token_span_f1(&gold, &pred, Element::Target).unwrap();
        // tp = |{3,4,5} ∩ {3,4}| = 2, pred = 2, gold = 3.
        assert_eq!(prf.precision, 1.0);
        assert!((prf.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((prf.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn token_identity_and_empty() {
        let gold = corpus("s", vec![full(&[3, 4, 5], Positive)]);
        for el in Element::ALL {
            assert_eq!(token_span_f1(&gold, &gold, el).unwrap().f1, 1.0);
        }
        let empty = corpus("s", vec![]);
        let prf = token_span_f1(&gold, &empty, Element::Target).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn misaligned() {
        let gold = corpus("a", vec![]);
        let pred = corpus("b", vec![]);
        assert!(matches!(
            token_span_f1(&gold, &pred, Element::Target),
            Err(Error::MisalignedCorpora(_))
        ));
        assert!(matches!(targeted_f1(&gold, &[]), Err(Error::MisalignedCorpora(_))));
    }

    #[test]
    fn targeted_examples() {
        let gold = corpus("s", vec![full(&[3, 4, 5], Positive)]);
        let exact = targeted_f1(&gold, &corpus("s", vec![full(&[3, 4, 5], Positive)])).unwrap();
        assert_eq!(exact.tp_precision_weight, 1.0);
        let partial = targeted_f1(&gold, &corpus("s", vec![full(&[3, 4], Positive)])).unwrap();
        assert_eq!(
            (partial.tp_precision_weight, partial.pred_total, partial.gold_total),
            (0.0, 1.0, 1.0)
        );
        let flipped = targeted_f1(&gold, &corpus("s", vec![full(&[3, 4, 5], Negative)])).unwrap();
        assert_eq!(flipped.tp_precision_weight, 0.0);
    }

    #[test]
    fn sentiment_graph_single_tuple() {
        let gold = corpus("s", vec![full(&[3, 4, 5], Positive)]);
        let pred = corpus("s", vec![full(&[3, 4], Positive)]);
        let sf1 = sentiment_graph_f1(&gold, &pred, true).unwrap();
        // P = mean(1, 2/2, 1) = 1, R = mean(1, 2/3, 1) = 8/9.
        assert!((sf1.precision - 1.0).abs() < 1e-12);
        assert!((sf1.recall - 8.0 / 9.0).abs() < 1e-12);
        let expected = 2.0 * (8.0 / 9.0) / (1.0 + 8.0 / 9.0);
        assert!((sf1.f1 - expected).abs() < 1e-12);
        assert!((sf1.f1 - 0.9412).abs() < 1e-4);

        let flipped = corpus("s", vec![full(&[3, 4], Negative)]);
        let sf1 = sentiment_graph_f1(&gold, &flipped, true).unwrap();
        assert_eq!((sf1.precision, sf1.recall, sf1.f1), (0.0, 0.0, 0.0));
        let nsf1 = sentiment_graph_f1(&gold, &flipped, false).unwrap();
        assert!((nsf1.f1 - expected).abs() < 1e-12);
    }

    #[test]
    fn absent_elements() {
        let gold = Opinion::new(None, Some(span(&[2])), span(&[3]), Positive);
        let same = gold.clone();
        assert_eq!(tuple_weights(&same, &gold, true), Some((1.0, 1.0)));
        let with_holder = Opinion::new(Some(span(&[0])), Some(span(&[2])), span(&[3]), Positive);
        assert_eq!(tuple_weights(&with_holder, &gold, true), None);
    }

    #[test]
    fn greedy_consumes_each_tuple_once() {
        let gold = vec![full(&[3, 4, 5], Positive)];
        let pred = vec![full(&[3, 4, 5], Positive), full(&[3, 4, 5], Positive)];
        let counts = sentiment_graph_counts(&gold, &pred, true);
        assert_eq!((counts.tp_precision, counts.pred, counts.gold), (1.0, 2.0, 1.0));
    }

    #[test]
    fn polarity_overlap_examples() {
        let g = vec![Opinion::new(None, None, span(&[6, 7]), Positive)];
        let hit = polarity_overlap_counts(&g, &[Opinion::new(None, None, span(&[6]), Positive)]);
        assert_eq!(hit, Counts::exact(1, 1, 1));
        let miss = polarity_overlap_counts(&g, &[Opinion::new(None, None, span(&[6]), Negative)]);
        assert_eq!(miss, Counts::exact(0, 1, 1));
        let empty = polarity_overlap_counts(&[], &[]);
        assert_eq!(empty, Counts::exact(0, 0, 0));
        assert_eq!(empty.f1(), 0.0);
    }

    #[test]
    fn polarity_overlap_uses_maximum_matching() {
        // Pred A overlaps both golds, pred B only the first. A first-fit
        // matcher would pair A with the first gold and leave B unmatched.
        let gold = vec![
            Opinion::new(None, None, span(&[1, 2]), Positive),
            Opinion::new(None, None, span(&[3]), Positive),
        ];
        let pred = vec![
            Opinion::new(None, None, span(&[2, 3]), Positive),
            Opinion::new(None, None, span(&[1]), Positive),
        ];
        assert_eq!(polarity_overlap_counts(&gold, &pred), Counts::exact(2, 2, 2));
    }

    #[test]
    fn multi_target_filter() {
        let mut c = corpus(
            "two",
            vec![
                full(&[3, 4, 5], Positive),
                Opinion::new(None, Some(span(&[11])), span(&[9, 10]), Negative),
            ],
        );
        c.extend(corpus(
            "one",
            vec![full(&[3, 4, 5], Positive), full(&[3, 4, 5], Negative)],
        ));
        let kept = filter_multi_target(&c);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].sent_id(), "two");
        assert_eq!(filter_multi_target(&kept), kept);
    }

    #[test]
    fn macro_over_polarities() {
        let gold = corpus("s", vec![full(&[3], Positive), full(&[5], Negative)]);
        let pred = corpus("s", vec![full(&[3], Positive)]);
        // positive: F = 1, negative: F = 0.
        assert!((macro_token_span_f1(&gold, &pred, Element::Target).unwrap() - 0.5).abs() < 1e-12);
    }
}
