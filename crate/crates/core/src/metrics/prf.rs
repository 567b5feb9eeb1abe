use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Additive evaluation counts.
///
/// Precision and recall numerators differ for overlap-weighted metrics, so
/// both are kept; for count-based metrics they are equal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub tp_precision: f64,
    pub tp_recall: f64,
    pub pred: f64,
    pub gold: f64,
}

impl Counts {
    pub fn exact(tp: usize, pred: usize, gold: usize) -> Self {
        Counts {
            tp_precision: tp as f64,
            tp_recall: tp as f64,
            pred: pred as f64,
            gold: gold as f64,
        }
    }

    pub fn prf(&self) -> Prf {
        Prf::from_counts(*self)
    }

    pub fn f1(&self) -> f64 {
        self.prf().f1
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            tp_precision: self.tp_precision + rhs.tp_precision,
            tp_recall: self.tp_recall + rhs.tp_recall,
            pred: self.pred + rhs.pred,
            gold: self.gold + rhs.gold,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

impl Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), Add::add)
    }
}

/// Precision, recall and F1 together with the totals they derive from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub tp_precision_weight: f64,
    pub tp_recall_weight: f64,
    pub pred_total: f64,
    pub gold_total: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(counts: Counts) -> Self {
        let precision = ratio(counts.tp_precision, counts.pred);
        let recall = ratio(counts.tp_recall, counts.gold);
        Prf {
            tp_precision_weight: counts.tp_precision,
            tp_recall_weight: counts.tp_recall,
            pred_total: counts.pred,
            gold_total: counts.gold,
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

fn ratio(num: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        num / denom
    } else {
        0.0
    }
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_denominators() {
        let prf = Counts::exact(0, 0, 0).prf();
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
        let prf = Counts::exact(0, 0, 3).prf();
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn counts_add() {
        let total: Counts = [Counts::exact(1, 2, 3), Counts::exact(2, 2, 2)].into_iter().sum();
        assert_eq!(total, Counts::exact(3, 4, 5));
        let prf = total.prf();
        assert!((prf.precision - 0.75).abs() < 1e-12);
        assert!((prf.recall - 0.6).abs() < 1e-12);
        assert!((prf.f1 - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-12);
    }
}
