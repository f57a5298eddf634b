use std::collections::HashMap;

use crate::{Error, Result};

#[derive(Default)]
struct Counts {
    support: usize,
    predicted: usize,
    correct: usize,
}

/// Support-weighted mean of per-class F1 over the gold classes. A class with
/// P + R = 0 scores 0.
pub fn weighted_f1<S: AsRef<str>, T: AsRef<str>>(predictions: &[S], golds: &[T]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} golds",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Contract("weighted F1 of an empty set".into()));
    }
    let mut counts: HashMap<&str, Counts> = HashMap::new();
    for (p, g) in predictions.iter().zip(golds) {
        let (p, g) = (p.as_ref(), g.as_ref());
        counts.entry(g).or_default().support += 1;
        counts.entry(p).or_default().predicted += 1;
        if p == g {
            counts.entry(g).or_default().correct += 1;
        }
    }
    let n = golds.len() as f64;
    let mut classes: Vec<_> = counts.into_iter().collect();
    classes.sort_by(|a, b| a.0.cmp(b.0));
    let score = classes
        .iter()
        .filter(|(_, c)| c.support > 0)
        .map(|(_, c)| {
            let f1 = if c.correct == 0 {
                0.0
            } else {
                2.0 * c.correct as f64 / (c.support + c.predicted) as f64
            };
            c.support as f64 / n * f1
        })
        .sum();
    Ok(score)
}

/// Weighted F1 of always predicting the most frequent training label
/// (ties broken by label order).
pub fn majority_baseline<S: AsRef<str>, T: AsRef<str>>(train_labels: &[S], golds: &[T]) -> Result<f64> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for label in train_labels {
        *counts.entry(label.as_ref()).or_default() += 1;
    }
    let majority = counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(l, _)| l)
        .ok_or_else(|| Error::Contract("majority baseline of an empty training set".into()))?;
    weighted_f1(&vec![majority; golds.len()], golds)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn hand_example() {
        let f = weighted_f1(&["a", "b", "b", "b"], &["a", "a", "b", "b"]).unwrap();
        assert!((f - 11.0 / 15.0).abs() < 1e-12, "{f}");
    }

    #[test]
    fn perfect_and_single_class() {
        assert_eq!(weighted_f1(&["x", "y"], &["x", "y"]).unwrap(), 1.0);
        assert_eq!(weighted_f1(&["x", "x"], &["x", "x"]).unwrap(), 1.0);
        assert_eq!(weighted_f1(&["y"], &["x"]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(weighted_f1::<&str, &str>(&[], &[]).is_err());
        assert!(weighted_f1(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn baseline() {
        let f = majority_baseline(&["a", "a", "b"], &["a", "b", "a", "a"]).unwrap();
        // F1_a = 2*3/(3+4) ; weight 3/4
        assert!((f - 0.75 * 6.0 / 7.0).abs() < 1e-12);
    }

    /// Balanced support with a prediction pattern that maps each class onto
    /// every class equally often: weighted F1 equals accuracy.
    #[test]
    fn equals_accuracy_on_symmetric_confusion() {
        let classes = ["a", "b", "c"];
        let mut golds = Vec::new();
        let mut preds = Vec::new();
        for (i, g) in classes.iter().enumerate() {
            for k in 0..6 {
                golds.push(*g);
                // 4 right, then one shift by 1 and one by 2
                let shift = match k {
                    4 => 1,
                    5 => 2,
                    _ => 0,
                };
                preds.push(classes[(i + shift) % 3]);
            }
        }
        let accuracy = 12.0 / 18.0;
        assert!((weighted_f1(&preds, &golds).unwrap() - accuracy).abs() < 1e-12);
    }

    type Pairs = Vec<(u8, u8)>;

    fn pairs_and_shuffle() -> impl Strategy<Value = (Pairs, Pairs)> {
        prop::collection::vec((0u8..4, 0u8..4), 1..60)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))
    }

    fn split(pairs: &[(u8, u8)]) -> (Vec<String>, Vec<String>) {
        pairs.iter().map(|&(p, g)| (p.to_string(), g.to_string())).unzip()
    }

    proptest! {
        #[test]
        fn permutation_invariant((pairs, shuffled) in pairs_and_shuffle()) {
            let (preds, golds) = split(&pairs);
            let (p2, g2) = split(&shuffled);
            let base = weighted_f1(&preds, &golds).unwrap();
            prop_assert!((weighted_f1(&p2, &g2).unwrap() - base).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }
}
