//! Scoring metrics and the one-sided Welch test.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

/// Relative tolerance of `threshold_match`.
pub const THRESHOLD: f64 = 0.005;
pub const BOOTSTRAP_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("{predictions} predictions for {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no values to score")]
    Empty,
    #[error("all truths are identical, so R^2 is undefined")]
    DegenerateTruths,
    #[error("bootstrap F1 needs both true classes present")]
    SingleClassTruth,
    #[error("a sample has {len} values; at least 2 are needed")]
    SampleTooSmall { len: usize },
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

/// 1 when `answer` is within 0.5% of `truth` (inclusive), else 0.
pub fn threshold_match(answer: f64, truth: f64) -> f64 {
    if !answer.is_finite() {
        return 0.0;
    }
    ((answer - truth).abs() <= THRESHOLD * truth.abs()) as u8 as f64
}

/// Fraction of the truth list found in the answer. Duplicate answers count once.
pub fn set_overlap(answer: &[String], truth: &[String]) -> f64 {
    let truth: HashSet<&str> = truth.iter().map(String::as_str).collect();
    if truth.is_empty() {
        return answer.is_empty() as u8 as f64;
    }
    let answer: HashSet<&str> = answer.iter().map(String::as_str).collect();
    answer.intersection(&truth).count() as f64 / truth.len() as f64
}

pub fn membership(answer: &str, correct: &[String]) -> f64 {
    correct.iter().any(|c| c == answer) as u8 as f64
}

pub fn exact_match(answer: &str, truth: &str) -> f64 {
    (answer == truth) as u8 as f64
}

/// Coefficient of determination, 1 - SS_res / SS_tot. Unclamped.
pub fn r2(predictions: &[f64], truths: &[f64]) -> Result<f64, MetricError> {
    if predictions.len() != truths.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(MetricError::Empty);
    }
    if predictions.iter().chain(truths).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let ss_tot: f64 = truths.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::DegenerateTruths);
    }
    let ss_res: f64 = predictions.iter().zip(truths).map(|(p, t)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// F1 of the positive class over (predicted positive, truly positive)
/// pairs; `None` when there are no predicted or no true positives.
pub fn f1(pairs: impl IntoIterator<Item = (bool, bool)>) -> Option<f64> {
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for (p, t) in pairs {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp + fp == 0 || tp + fneg == 0 {
        return None;
    }
    Some(2.0 * tp as f64 / (2 * tp + fp + fneg) as f64)
}

/// Mean positive-class F1 over `iterations` resamples with replacement.
/// Resamples whose F1 is undefined count as 0.
pub fn bootstrap_f1(pairs: &[(bool, bool)], iterations: usize, seed: u64) -> Result<f64, MetricError> {
    let positives = pairs.iter().filter(|(_, t)| *t).count();
    if positives == 0 || positives == pairs.len() {
        return Err(MetricError::SingleClassTruth);
    }
    if iterations == 0 {
        return Err(MetricError::Empty);
    }
    let n = pairs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..iterations {
        let sample = (0..n).map(|_| pairs[rng.gen_range(0..n)]);
        total += f1(sample).unwrap_or(0.0);
    }
    Ok(total / iterations as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// p for the alternative mean(a) < mean(b).
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    // Identical values have exactly zero variance; summation rounding
    // would otherwise leave a tiny positive one.
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// One-sided Welch t-test of mean(a) < mean(b) with Welch-Satterthwaite
/// degrees of freedom.
pub fn welch_t_one_sided(a: &[f64], b: &[f64]) -> Result<WelchTest, MetricError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(MetricError::SampleTooSmall { len: s.len() });
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(MetricError::NonFinite);
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|_| MetricError::NonFinite)?;
    Ok(WelchTest {
        t,
        df,
        p_value: dist.cdf(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_boundary_is_inclusive() {
        assert_eq!(threshold_match(201.0, 200.0), 1.0);
        assert_eq!(threshold_match(201.5, 200.0), 0.0);
        assert_eq!(threshold_match(0.0, 0.0), 1.0);
    }

    #[test]
    fn overlap_counts_duplicates_once() {
        let t: Vec<String> = ["a", "b", "c", "d", "e"].map(String::from).to_vec();
        let a: Vec<String> = ["a", "a", "c", "e", "z"].map(String::from).to_vec();
        assert!((set_overlap(&a, &t) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Ok(1.0));
        assert_eq!(r2(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Ok(0.0));
        assert!((r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 0.785_714_285_714).abs() < 1e-9);
        assert_eq!(r2(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch { predictions: 1, truths: 2 }));
        assert_eq!(r2(&[1.0, 2.0], &[3.0, 3.0]), Err(MetricError::DegenerateTruths));
    }

    #[test]
    fn bootstrap_extremes() {
        let perfect: Vec<(bool, bool)> = (0..20).map(|i| (i % 3 == 0, i % 3 == 0)).collect();
        assert_eq!(bootstrap_f1(&perfect, 200, 1), Ok(1.0));
        let negative: Vec<(bool, bool)> = (0..20).map(|i| (false, i % 2 == 0)).collect();
        assert_eq!(bootstrap_f1(&negative, 200, 1), Ok(0.0));
        assert_eq!(bootstrap_f1(&[(true, true), (false, true)], 10, 1), Err(MetricError::SingleClassTruth));
    }

    #[test]
    fn welch_identical_and_separated() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((welch_t_one_sided(&a, &a).unwrap().p_value - 0.5).abs() < 1e-12);
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert!(welch_t_one_sided(&a, &b).unwrap().p_value < 1e-3);
        assert_eq!(welch_t_one_sided(&[1.0, 1.0], &[2.0, 2.0]), Err(MetricError::ZeroVariance));
        assert_eq!(welch_t_one_sided(&[1.0], &a), Err(MetricError::SampleTooSmall { len: 1 }));
    }
}
