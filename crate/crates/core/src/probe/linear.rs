use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::weighted_f1;
use crate::{Error, Result};

/// Optimiser settings. Adam with the usual moment decay rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a dev improvement before stopping.
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds the initial weights; shared by every probe of a given shape.
    pub init_seed: u64,
    /// Seeds the per-epoch mini-batch order.
    pub shuffle_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 20,
            patience: 3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_seed: 42,
            shuffle_seed: 0,
        }
    }
}

impl HyperParams {
    pub fn check(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.batch_size > 0
            && self.max_epochs > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid probe hyperparameters: {self:?}")))
        }
    }
}

/// Feature rows with their gold labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f32>,
    labels: Vec<String>,
}

impl Dataset {
    /// Panics when `features.len() != dim * labels.len()`.
    pub fn new(dim: usize, features: Vec<f32>, labels: Vec<String>) -> Self {
        assert_eq!(features.len(), dim * labels.len(), "feature matrix shape");
        Dataset { dim, features, labels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }
}

/// Weights `[classes x dim]` row-major and bias `[classes]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub dim: usize,
    pub classes: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Params {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        Params {
            dim,
            classes,
            weights: vec![0.0; dim * classes],
            bias: vec![0.0; classes],
        }
    }

    fn logits(&self, x: &[f32], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.dim..(c + 1) * self.dim];
            *o = self.bias[c] + w.iter().zip(x).map(|(w, &x)| w * x as f64).sum::<f64>();
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }
}

/// Initial parameters for a `(dim, classes)` probe: uniform in
/// `[-1/sqrt(dim), 1/sqrt(dim))`, a pure function of the seed and shape.
pub fn init_params(init_seed: u64, dim: usize, classes: usize) -> Params {
    let mut hasher = Sha256::new();
    hasher.update(b"probe-init");
    hasher.update(init_seed.to_le_bytes());
    hasher.update((dim as u64).to_le_bytes());
    hasher.update((classes as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
    let bound = 1.0 / (dim.max(1) as f64).sqrt();
    let mut params = Params::zeros(dim, classes);
    for v in params.values_mut() {
        *v = rng.random_range(-bound..bound);
    }
    params
}

/// Log-sum-exp stabilised softmax in place; returns the log normaliser.
fn softmax(logits: &mut [f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_z = max + sum.ln();
    for z in logits.iter_mut() {
        *z = (*z - log_z).exp();
    }
    log_z
}

/// Mean cross-entropy over `rows` and its gradient, accumulated into `grad`.
fn batch_loss_grad(params: &Params, data: &Dataset, targets: &[usize], rows: &[usize], grad: &mut Params) -> f64 {
    grad.weights.iter_mut().for_each(|g| *g = 0.0);
    grad.bias.iter_mut().for_each(|g| *g = 0.0);
    let mut probs = vec![0.0; params.classes];
    let mut loss = 0.0;
    let scale = 1.0 / rows.len() as f64;
    for &i in rows {
        let x = data.row(i);
        params.logits(x, &mut probs);
        let y = targets[i];
        let z_y = probs[y];
        let log_z = softmax(&mut probs);
        loss += log_z - z_y;
        probs[y] -= 1.0;
        for (c, &delta) in probs.iter().enumerate() {
            let delta = delta * scale;
            grad.bias[c] += delta;
            let g = &mut grad.weights[c * params.dim..(c + 1) * params.dim];
            for (g, &x) in g.iter_mut().zip(x) {
                *g += delta * x as f64;
            }
        }
    }
    loss * scale
}

/// Mean softmax cross-entropy of `params` on rows of `features` (row-major,
/// width `params.dim`) with class indices `targets`, and its gradient.
pub fn loss_and_grad(params: &Params, features: &[f32], targets: &[usize]) -> (f64, Params) {
    let data = Dataset::new(params.dim, features.to_vec(), vec![String::new(); targets.len()]);
    let rows: Vec<usize> = (0..targets.len()).collect();
    let mut grad = Params::zeros(params.dim, params.classes);
    let loss = batch_loss_grad(params, &data, targets, &rows, &mut grad);
    (loss, grad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub params: Params,
    /// Class labels in index order: the sorted labels seen in training.
    pub classes: Vec<String>,
    pub init_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub probe: LinearProbe,
    pub epochs: usize,
    pub best_epoch: usize,
    /// Dev weighted-F1 of the returned parameters (`None` without dev data).
    pub dev_f1: Option<f64>,
}

impl LinearProbe {
    fn predict_index(&self, x: &[f32], logits: &mut [f64]) -> usize {
        self.params.logits(x, logits);
        let mut best = 0;
        for (c, &z) in logits.iter().enumerate() {
            if z > logits[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, data: &Dataset) -> Vec<&str> {
        let mut logits = vec![0.0; self.classes.len()];
        (0..data.len())
            .map(|i| self.classes[self.predict_index(data.row(i), &mut logits)].as_str())
            .collect()
    }

    /// Weighted F1 on `data`. Labels unseen in training are always wrong.
    pub fn score(&self, data: &Dataset) -> Result<f64> {
        if data.dim() != self.params.dim {
            return Err(Error::Probe(format!(
                "dataset width {} differs from probe width {}",
                data.dim(),
                self.params.dim
            )));
        }
        weighted_f1(&self.predict(data), data.labels())
    }

    /// Fit on `train`, early-stopping on `dev` weighted-F1 and returning the
    /// dev-best parameters. Deterministic in the data order and `hyper`.
    pub fn train(train: &Dataset, dev: &Dataset, hyper: &HyperParams) -> Result<TrainOutcome> {
        hyper.check()?;
        if train.is_empty() {
            return Err(Error::Probe("empty training set".into()));
        }
        if !dev.is_empty() && dev.dim() != train.dim() {
            return Err(Error::Probe(format!(
                "dev width {} differs from train width {}",
                dev.dim(),
                train.dim()
            )));
        }
        let mut classes: Vec<String> = train.labels().to_vec();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::Probe(format!(
                "training split has a single class ({})",
                classes[0]
            )));
        }
        let targets: Vec<usize> = train
            .labels()
            .iter()
            .map(|l| classes.binary_search(l).unwrap())
            .collect();

        let dim = train.dim();
        let mut probe = LinearProbe {
            params: init_params(hyper.init_seed, dim, classes.len()),
            classes,
            init_seed: hyper.init_seed,
        };
        let mut grad = Params::zeros(dim, probe.classes.len());
        let mut m = Params::zeros(dim, probe.classes.len());
        let mut v = Params::zeros(dim, probe.classes.len());
        let mut step = 0i32;

        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(hyper.shuffle_seed);
        let mut order: Vec<usize> = (0..train.len()).collect();

        let mut best: Option<(f64, Params, usize)> = None;
        let mut stale = 0;
        let mut epochs = 0;

        for epoch in 1..=hyper.max_epochs {
            epochs = epoch;
            order.shuffle(&mut shuffle_rng);
            for (b, rows) in order.chunks(hyper.batch_size).enumerate() {
                let loss = batch_loss_grad(&probe.params, train, &targets, rows, &mut grad);
                if !loss.is_finite() {
                    let max_x = rows
                        .iter()
                        .flat_map(|&i| train.row(i))
                        .fold(0f32, |a, x| a.max(x.abs()));
                    let max_w = probe.params.values().fold(0f64, |a, w| a.max(w.abs()));
                    return Err(Error::Probe(format!(
                        "non-finite loss at epoch {epoch}, batch {b} (max |x| = {max_x}, max |w| = {max_w})"
                    )));
                }
                step += 1;
                let c1 = 1.0 - hyper.beta1.powi(step);
                let c2 = 1.0 - hyper.beta2.powi(step);
                let grads = grad.values();
                let moments = m.values_mut().zip(v.values_mut());
                for ((p, g), (m, v)) in probe.params.values_mut().zip(grads).zip(moments) {
                    *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
                    *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
                    *p -= hyper.learning_rate * (*m / c1) / ((*v / c2).sqrt() + hyper.epsilon);
                }
            }
            if !probe.params.is_finite() {
                return Err(Error::Probe(format!("non-finite parameters after epoch {epoch}")));
            }
            if dev.is_empty() {
                continue;
            }
            let f1 = probe.score(dev)?;
            log::debug!("epoch {epoch}: dev weighted-F1 {f1:.4}");
            match &best {
                Some((b, _, _)) if f1 <= *b => {
                    stale += 1;
                    if stale >= hyper.patience.max(1) {
                        break;
                    }
                }
                _ => {
                    best = Some((f1, probe.params.clone(), epoch));
                    stale = 0;
                }
            }
        }

        let (dev_f1, best_epoch) = match best {
            Some((f1, params, epoch)) => {
                probe.params = params;
                (Some(f1), epoch)
            }
            None => (None, epochs),
        };
        Ok(TrainOutcome {
            probe,
            epochs,
            best_epoch,
            dev_f1,
        })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;

    fn numeric_grad(params: &Params, x: &[f32], y: &[usize]) -> Vec<f64> {
        let h = 1e-6;
        let n = params.weights.len() + params.bias.len();
        (0..n)
            .map(|k| {
                let mut plus = params.clone();
                let mut minus = params.clone();
                *plus.values_mut().nth(k).unwrap() += h;
                *minus.values_mut().nth(k).unwrap() -= h;
                (loss_and_grad(&plus, x, y).0 - loss_and_grad(&minus, x, y).0) / (2.0 * h)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gradient_matches_finite_differences(
            dim in 1usize..=8,
            classes in 2usize..=5,
            seed in any::<u64>(),
            n in 1usize..10,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut params = init_params(seed, dim, classes);
            params.values_mut().for_each(|v| *v *= 3.0);
            let x: Vec<f32> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
            let (_, grad) = loss_and_grad(&params, &x, &y);
            for (a, f) in grad.values().zip(numeric_grad(&params, &x, &y)) {
                let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-6);
                prop_assert!(rel < 1e-4, "analytic {a} numeric {f}");
            }
        }
    }

    #[test]
    fn softmax_survives_large_logits() {
        let mut z = [1000.0, 999.0, -1000.0];
        let log_z = softmax(&mut z);
        assert!(log_z.is_finite());
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn separable(n: usize) -> Dataset {
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let t = i as f32 / n as f32;
            let jitter = (t * 37.0).sin() * 0.5;
            if i % 2 == 0 {
                feats.extend([2.0 + jitter, 1.0 + t]);
                labels.push("pos".to_string());
            } else {
                feats.extend([-2.0 - jitter, 1.0 + t]);
                labels.push("neg".to_string());
            }
        }
        Dataset::new(2, feats, labels)
    }

    #[test]
    fn separable_two_class() {
        let out = LinearProbe::train(&separable(20_000), &separable(400), &HyperParams::default()).unwrap();
        assert_eq!(out.dev_f1, Some(1.0));
        assert!(out.epochs <= 20);
    }

    #[test]
    fn single_class_is_an_error() {
        let ds = Dataset::new(1, vec![0.0, 1.0], vec!["a".into(), "a".into()]);
        assert!(matches!(LinearProbe::train(&ds, &ds, &HyperParams::default()), Err(Error::Probe(_))));
    }

    #[test]
    fn unseen_dev_class_scores_zero() {
        let train = separable(2_000);
        let out = LinearProbe::train(&train, &train, &HyperParams::default()).unwrap();
        let dev = Dataset::new(2, vec![2.0, 1.0, -2.0, 1.0], vec!["other".into(), "neg".into()]);
        let f = out.probe.score(&dev).unwrap();
        assert!((f - 0.5).abs() < 1e-12, "{f}");
    }

    #[test]
    fn nan_features_are_reported() {
        let mut train = separable(10);
        train.features[3] = f32::NAN;
        let err = LinearProbe::train(&train, &separable(10), &HyperParams::default()).unwrap_err();
        assert!(err.to_string().contains("non-finite loss"), "{err}");
    }

    #[test]
    fn init_depends_only_on_seed_and_shape() {
        assert_eq!(init_params(42, 4, 3), init_params(42, 4, 3));
        assert_ne!(init_params(42, 4, 3), init_params(43, 4, 3));
        let p = init_params(7, 16, 2);
        assert!(p.values().all(|v| v.abs() < 0.25));
    }
}
