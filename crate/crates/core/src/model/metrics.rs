//! Multiclass evaluation: confusion matrix, per-class F1, macro-F1 and
//! accuracy.

use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::error::{Error, Result};

const K: usize = PersonalityClass::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class_f1: [f64; K],
    /// `confusion[truth][predicted]`.
    pub confusion: [[usize; K]; K],
}

pub fn evaluate(predictions: &[PersonalityClass], truth: &[PersonalityClass]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(Error::validation(format!(
            "{} predictions but {} truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::validation("nothing to evaluate"));
    }
    let mut confusion = [[0usize; K]; K];
    for (p, t) in predictions.iter().zip(truth) {
        confusion[t.index()][p.index()] += 1;
    }
    let mut per_class_f1 = [0.0; K];
    for k in 0..K {
        let tp = confusion[k][k] as f64;
        let predicted: usize = (0..K).map(|t| confusion[t][k]).sum();
        let actual: usize = confusion[k].iter().sum();
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if actual == 0 { 0.0 } else { tp / actual as f64 };
        per_class_f1[k] = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
    }
    let correct: usize = (0..K).map(|k| confusion[k][k]).sum();
    Ok(Metrics {
        macro_f1: per_class_f1.iter().sum::<f64>() / K as f64,
        accuracy: correct as f64 / truth.len() as f64,
        per_class_f1,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use PersonalityClass::*;

    #[test]
    fn perfect_predictions() {
        let t = [Analyst, Diplomat, Sentinel, Explorer];
        let m = evaluate(&t, &t).unwrap();
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn constant_prediction_on_balanced_truth() {
        let truth: Vec<_> = PersonalityClass::ALL.iter().flat_map(|&c| [c; 5]).collect();
        let m = evaluate(&[Diplomat; 20], &truth).unwrap();
        assert!((m.accuracy - 0.25).abs() < 1e-15);
        assert!((m.per_class_f1[1] - 0.4).abs() < 1e-15);
        assert!((m.macro_f1 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatch_and_empty() {
        assert!(evaluate(&[Analyst], &[]).is_err());
        assert!(evaluate(&[], &[]).is_err());
    }

    fn class() -> impl Strategy<Value = PersonalityClass> {
        (0usize..4).prop_map(|i| PersonalityClass::from_index(i).unwrap())
    }

    proptest! {
        #[test]
        fn bounded_and_consistent(pairs in proptest::collection::vec((class(), class()), 1..200)) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let m = evaluate(&p, &t).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.macro_f1));
            prop_assert!((0.0..=1.0).contains(&m.accuracy));
            for c in PersonalityClass::ALL {
                let row: usize = m.confusion[c.index()].iter().sum();
                prop_assert_eq!(row, t.iter().filter(|&&x| x == c).count());
            }
            let trace: usize = (0..4).map(|k| m.confusion[k][k]).sum();
            prop_assert_eq!(m.accuracy, trace as f64 / t.len() as f64);
        }
    }
}
