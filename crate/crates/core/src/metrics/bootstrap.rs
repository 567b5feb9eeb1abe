//! Paired bootstrap significance test over sentence-level counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::prf::Counts;
use super::report::{sentence_counts, Evaluated, Metric};

pub const DEFAULT_ITERATIONS: usize = 10_000;

/// Outcome of a paired bootstrap test of system A against system B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapResult {
    /// Observed gain of A over B.
    pub delta: f64,
    pub p_value: f64,
    /// Number of resamples evaluated.
    pub samples: usize,
    /// Whether every possible resample was enumerated.
    pub exhaustive: bool,
}

fn resample_gain(a: &[Counts], b: &[Counts], indices: &[usize]) -> f64 {
    let sa: Counts = indices.iter().map(|&i| a[i]).sum();
    let sb: Counts = indices.iter().map(|&i| b[i]).sum();
    sa.f1() - sb.f1()
}

fn exhaustive_count(n: usize, iterations: usize) -> Option<usize> {
    let mut total: usize = 1;
    for _ in 0..n {
        total = total.checked_mul(n)?;
        if total > iterations {
            return None;
        }
    }
    Some(total)
}

/// One-sided test that A beats B: with observed gain `delta = F(A) - F(B)`,
/// the p-value is the fraction of resamples whose gain is at least
/// `2 * delta`.
///
/// When the number of distinct ordered resamples `n^n` does not exceed
/// `iterations`, all of them are enumerated instead of sampled.
pub fn paired_bootstrap(a: &[Counts], b: &[Counts], iterations: usize, seed: u64) -> Result<BootstrapResult> {
    if a.len() != b.len() {
        return Err(Error::MisalignedCorpora(format!(
            "system A has {} sentences, system B has {}",
            a.len(),
            b.len()
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidHyperparams("iterations must be at least 1".to_owned()));
    }
    let n = a.len();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    let all: Vec<usize> = (0..n).collect();
    let delta = resample_gain(a, b, &all);
    let threshold = 2.0 * delta;

    let mut hits = 0usize;
    let mut indices = vec![0usize; n];
    if let Some(total) = exhaustive_count(n, iterations) {
        for code in 0..total {
            let mut rest = code;
            for slot in indices.iter_mut() {
                *slot = rest % n;
                rest /= n;
            }
            if resample_gain(a, b, &indices) >= threshold {
                hits += 1;
            }
        }
        return Ok(BootstrapResult {
            delta,
            p_value: hits as f64 / total as f64,
            samples: total,
            exhaustive: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..iterations {
        for slot in indices.iter_mut() {
            *slot = rng.gen_range(0..n);
        }
        if resample_gain(a, b, &indices) >= threshold {
            hits += 1;
        }
    }
    Ok(BootstrapResult {
        delta,
        p_value: hits as f64 / iterations as f64,
        samples: iterations,
        exhaustive: false,
    })
}

/// Bootstrap test of `metric` for two systems against the same gold corpus.
pub fn bootstrap_significance(
    metric: Metric,
    gold: Evaluated<'_>,
    pred_a: Evaluated<'_>,
    pred_b: Evaluated<'_>,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let a = sentence_counts(metric, gold, pred_a)?;
    let b = sentence_counts(metric, gold, pred_b)?;
    paired_bootstrap(&a, &b, iterations, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_systems() {
        let a = vec![
            Counts::exact(1, 2, 3),
            Counts::exact(0, 1, 1),
            Counts::exact(2, 2, 2),
            Counts::exact(1, 1, 4),
        ];
        let r = paired_bootstrap(&a, &a, 1000, 3).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn dominance_gives_small_p() {
        let a: Vec<Counts> = (0..40).map(|_| Counts::exact(3, 3, 3)).collect();
        let b: Vec<Counts> = (0..40).map(|i| Counts::exact(i % 2, 3, 3)).collect();
        let r = paired_bootstrap(&a, &b, 2000, 7).unwrap();
        assert!(!r.exhaustive);
        assert!(r.p_value < 0.01, "{}", r.p_value);
    }

    #[test]
    fn enumerates_small_corpora() {
        let a = vec![Counts::exact(1, 1, 1), Counts::exact(0, 1, 1), Counts::exact(1, 2, 1)];
        let b = vec![Counts::exact(0, 1, 1), Counts::exact(1, 1, 1), Counts::exact(0, 1, 1)];
        let r = paired_bootstrap(&a, &b, 10_000, 0).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.samples, 27);
        let sampled = paired_bootstrap(&a, &b, 26, 0).unwrap();
        assert!(!sampled.exhaustive);
    }

    #[test]
    fn seeded_determinism() {
        let a: Vec<Counts> = (0..10).map(|i| Counts::exact(i % 3, 3, 3)).collect();
        let b: Vec<Counts> = (0..10).map(|i| Counts::exact(i % 2, 3, 3)).collect();
        let r1 = paired_bootstrap(&a, &b, 500, 11).unwrap();
        let r2 = paired_bootstrap(&a, &b, 500, 11).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn rejects_bad_input() {
        let a = vec![Counts::exact(1, 1, 1)];
        assert!(paired_bootstrap(&a, &[], 10, 0).is_err());
        assert!(paired_bootstrap(&a, &a, 0, 0).is_err());
    }
}
