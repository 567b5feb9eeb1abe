//! Arc-label score tensors, the joint softmax loss and argmax decoding.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::model::{Arc, ParseGraph, ROOT};

use super::vocab::Vocabulary;

/// Scores indexed by label, head node (0 = ROOT) and dependent token.
///
/// The dependent axis has `n` entries; index `j` is arc-space node `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTensor {
    data: Array3<f64>,
}

impl ScoreTensor {
    pub fn zeros(n: usize, labels: usize) -> Self {
        ScoreTensor {
            data: Array3::zeros((labels, n + 1, n)),
        }
    }

    pub fn from_array(data: Array3<f64>) -> Result<Self> {
        let (_, heads, deps) = data.dim();
        if heads != deps + 1 {
            return Err(Error::DimensionMismatch(format!(
                "score tensor has {} heads for {} dependents",
                heads, deps
            )));
        }
        Ok(ScoreTensor { data })
    }

    /// Sentence length in tokens.
    pub fn n(&self) -> usize {
        self.data.dim().2
    }

    /// Number of labels including NONE.
    pub fn labels(&self) -> usize {
        self.data.dim().0
    }

    /// Shape as (heads including ROOT, dependents, labels).
    pub fn shape(&self) -> (usize, usize, usize) {
        let (l, h, d) = self.data.dim();
        (h, d, l)
    }

    /// Score of `label` for the arc `head → dep` in arc space.
    pub fn get(&self, head: usize, dep: usize, label: usize) -> f64 {
        self.data[[label, head, dep - 1]]
    }

    pub fn set(&mut self, head: usize, dep: usize, label: usize, value: f64) {
        self.data[[label, head, dep - 1]] = value;
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<f64> {
        &mut self.data
    }
}

/// Gold label id per (head, dep) cell, NONE where there is no arc.
pub fn gold_labels(gold: &ParseGraph, vocab: &Vocabulary) -> Result<Array2<usize>> {
    let n = gold.n();
    let mut labels = Array2::from_elem((n + 1, n), vocab.none_id());
    for arc in gold.arcs() {
        labels[[arc.head, arc.dep - 1]] = vocab.label_id(arc.label)?;
    }
    Ok(labels)
}

/// Joint softmax cross-entropy over labels and NONE for every non-self
/// (head, dep) cell. NONE-gold cells are weighted by `none_weight`; the loss
/// is averaged over the `n²` cells. Returns the loss and its gradient with
/// respect to the scores.
pub fn loss_and_grad(
    scores: &ScoreTensor,
    gold: &ParseGraph,
    vocab: &Vocabulary,
    none_weight: f64,
) -> Result<(f64, ScoreTensor)> {
    let n = scores.n();
    if gold.n() != n || scores.labels() != vocab.num_labels() {
        return Err(Error::DimensionMismatch(format!(
            "scores are {:?}, gold has {} tokens and {} labels",
            scores.shape(),
            gold.n(),
            vocab.num_labels()
        )));
    }
    let gold = gold_labels(gold, vocab)?;
    let none = vocab.none_id();
    let labels = scores.labels();
    let mut grad = ScoreTensor::zeros(n, labels);
    if n == 0 {
        return Ok((0.0, grad));
    }
    let cells = (n * n) as f64;
    let mut loss = 0.0;
    let mut probs = vec![0.0; labels];
    for head in 0..=n {
        for dep in 1..=n {
            if head == dep {
                continue;
            }
            let max = (0..labels)
                .map(|l| scores.get(head, dep, l))
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (l, p) in probs.iter_mut().enumerate() {
                *p = (scores.get(head, dep, l) - max).exp();
                total += *p;
            }
            let target = gold[[head, dep - 1]];
            let weight = if target == none { none_weight } else { 1.0 };
            let log_z = max + total.ln();
            loss += weight * (log_z - scores.get(head, dep, target));
            for (l, p) in probs.iter().enumerate() {
                let indicator = if l == target { 1.0 } else { 0.0 };
                grad.set(head, dep, l, weight * (p / total - indicator) / cells);
            }
        }
    }
    Ok((loss / cells, grad))
}

/// Per-cell argmax; an arc is emitted unless NONE wins. Ties go to NONE,
/// then to the lowest label id. Cells that would violate graph invariants
/// (self-loops, non-expression labels from ROOT) yield no arc.
pub fn predict_from_scores(scores: &ScoreTensor, vocab: &Vocabulary) -> ParseGraph {
    let n = scores.n();
    let none = vocab.none_id();
    let mut graph = ParseGraph::new(n);
    for head in 0..=n {
        for dep in 1..=n {
            if head == dep {
                continue;
            }
            let mut best = none;
            let mut best_score = scores.get(head, dep, none);
            for l in 0..scores.labels() {
                let s = scores.get(head, dep, l);
                if l != none && s > best_score {
                    best = l;
                    best_score = s;
                }
            }
            if best == none {
                continue;
            }
            let Some(label) = vocab.label(best) else { continue };
            let arc = Arc::new(head, dep, label);
            if head == ROOT && graph.validate(&arc).is_err() {
                continue;
            }
            graph.add(arc).expect("cells are visited once and validated");
        }
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArcLabel, Polarity};

    fn vocab4() -> Vocabulary {
        Vocabulary::new(vec![
            ArcLabel::expression(Polarity::Positive),
            ArcLabel::expression(Polarity::Negative),
            ArcLabel::target(),
            ArcLabel::holder(),
        ])
    }

    #[test]
    fn uniform_scores_give_log_labels() {
        let vocab = vocab4();
        let scores = ScoreTensor::zeros(4, 5);
        let gold = ParseGraph::from_arcs(4, [Arc::new(0, 2, ArcLabel::expression(Polarity::Positive))]).unwrap();
        let (loss, _) = loss_and_grad(&scores, &gold, &vocab, 1.0).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_scores_approach_zero_loss() {
        let vocab = vocab4();
        let gold = ParseGraph::from_arcs(3, [Arc::new(1, 2, ArcLabel::target())]).unwrap();
        let labels = gold_labels(&gold, &vocab).unwrap();
        let mut last = f64::INFINITY;
        for scale in [1.0, 10.0, 100.0] {
            let mut scores = ScoreTensor::zeros(3, 5);
            for h in 0..=3 {
                for d in 1..=3 {
                    scores.set(h, d, labels[[h, d - 1]], scale);
                }
            }
            let (loss, _) = loss_and_grad(&scores, &gold, &vocab, 1.0).unwrap();
            assert!(loss < last);
            last = loss;
        }
        assert!(last < 1e-40);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let vocab = vocab4();
        let gold = ParseGraph::from_arcs(
            3,
            [
                Arc::new(0, 1, ArcLabel::expression(Polarity::Negative)),
                Arc::new(1, 3, ArcLabel::holder()),
            ],
        )
        .unwrap();
        let mut scores = ScoreTensor::zeros(3, 5);
        let mut x = 0.3;
        for v in scores.data_mut().iter_mut() {
            x = (x * 7.31 + 0.17) % 2.0;
            *v = x - 1.0;
        }
        let (_, grad) = loss_and_grad(&scores, &gold, &vocab, 0.4).unwrap();
        for idx in 0..scores.data().len() {
            let mut plus = scores.clone();
            let mut minus = scores.clone();
            plus.data_mut().as_slice_mut().unwrap()[idx] += 1e-6;
            minus.data_mut().as_slice_mut().unwrap()[idx] -= 1e-6;
            let lp = loss_and_grad(&plus, &gold, &vocab, 0.4).unwrap().0;
            let lm = loss_and_grad(&minus, &gold, &vocab, 0.4).unwrap().0;
            let numeric = (lp - lm) / 2e-6;
            let analytic = grad.data().as_slice().unwrap()[idx];
            assert!((numeric - analytic).abs() < 1e-8, "{} {} {}", idx, numeric, analytic);
        }
    }

    #[test]
    fn argmax_prediction() {
        let vocab = vocab4();
        let mut scores = ScoreTensor::zeros(3, 5);
        assert!(predict_from_scores(&scores, &vocab).is_empty());
        scores.set(0, 2, 0, 1.0);
        scores.set(0, 3, 2, 1.0);
        scores.set(2, 1, 3, 2.0);
        scores.set(2, 2, 3, 9.0);
        let g = predict_from_scores(&scores, &vocab);
        let arcs: Vec<Arc> = g.arcs().collect();
        assert_eq!(
            arcs,
            [
                Arc::new(0, 2, ArcLabel::expression(Polarity::Positive)),
                Arc::new(2, 1, ArcLabel::holder())
            ]
        );
    }
}
