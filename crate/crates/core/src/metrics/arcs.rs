//! Unlabeled and labeled arc F1 over parse graphs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::ParseGraph;

use super::prf::{Counts, Prf};

/// Arc counts for one sentence; ROOT arcs are included.
pub fn arc_counts(gold: &ParseGraph, pred: &ParseGraph, labeled: bool) -> Counts {
    if labeled {
        let g: BTreeSet<_> = gold.arcs().collect();
        let p: BTreeSet<_> = pred.arcs().collect();
        Counts::exact(g.intersection(&p).count(), p.len(), g.len())
    } else {
        let g: BTreeSet<_> = gold.arcs().map(|a| (a.head, a.dep)).collect();
        let p: BTreeSet<_> = pred.arcs().map(|a| (a.head, a.dep)).collect();
        Counts::exact(g.intersection(&p).count(), p.len(), g.len())
    }
}

fn check_lengths(gold: &[ParseGraph], pred: &[ParseGraph]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::MisalignedCorpora(format!(
            "{} gold graphs, {} predicted graphs",
            gold.len(),
            pred.len()
        )));
    }
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.n() != p.n() {
            return Err(Error::LengthMismatch {
                index,
                gold: g.n(),
                pred: p.n(),
            });
        }
    }
    Ok(())
}

/// Per-sentence arc counts for aligned graph lists.
pub fn arc_sentence_counts(gold: &[ParseGraph], pred: &[ParseGraph], labeled: bool) -> Result<Vec<Counts>> {
    check_lengths(gold, pred)?;
    Ok(gold.iter().zip(pred).map(|(g, p)| arc_counts(g, p, labeled)).collect())
}

/// UF1 (`labeled = false`) or LF1 (`labeled = true`).
pub fn arc_f1(gold: &[ParseGraph], pred: &[ParseGraph], labeled: bool) -> Result<Prf> {
    Ok(arc_sentence_counts(gold, pred, labeled)?
        .into_iter()
        .sum::<Counts>()
        .prf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Arc, ArcLabel, Polarity};

    fn graph(arcs: &[(usize, usize, ArcLabel)]) -> ParseGraph {
        ParseGraph::from_arcs(5, arcs.iter().map(|&(h, d, l)| Arc::new(h, d, l))).unwrap()
    }

    #[test]
    fn identical_and_relabeled() {
        let pos = ArcLabel::expression(Polarity::Positive);
        let gold = vec![graph(&[
            (0, 2, pos),
            (2, 1, ArcLabel::target()),
            (2, 3, ArcLabel::holder()),
        ])];
        assert_eq!(arc_f1(&gold, &gold, false).unwrap().f1, 1.0);
        assert_eq!(arc_f1(&gold, &gold, true).unwrap().f1, 1.0);

        let pred = vec![graph(&[
            (0, 2, pos),
            (2, 1, ArcLabel::holder()),
            (2, 3, ArcLabel::holder()),
        ])];
        assert_eq!(arc_f1(&gold, &pred, false).unwrap().f1, 1.0);
        let lf1 = arc_f1(&gold, &pred, true).unwrap();
        assert!((lf1.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction() {
        let pos = ArcLabel::expression(Polarity::Positive);
        let gold = vec![graph(&[(0, 2, pos)])];
        let pred = vec![ParseGraph::new(5)];
        assert_eq!(arc_f1(&gold, &pred, true).unwrap().f1, 0.0);
    }

    #[test]
    fn length_mismatch() {
        let gold = vec![ParseGraph::new(5)];
        let pred = vec![ParseGraph::new(4)];
        assert!(matches!(
            arc_f1(&gold, &pred, false),
            Err(Error::LengthMismatch {
                index: 0,
                gold: 5,
                pred: 4
            })
        ));
    }
}
