use serde::{Deserialize, Serialize};

use crate::datasets::{LabeledSet, TaskKind};
use crate::error::{Error, Result};
use crate::numkit::{Rng, Vector};

use super::model::{batch_loss_and_grad, predict, LossKind, Model, ModelGrads};

/// Stream of the seeded generator reserved for batch shuffling. Stream 0 is
/// left for weight initialization.
pub const SHUFFLE_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    pub loss: LossKind,
    #[serde(default)]
    pub reversible: bool,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize, seed: u64, loss: LossKind) -> Self {
        Self {
            learning_rate,
            batch_size,
            epochs,
            seed,
            loss,
            reversible: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be a nonnegative number, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidCount("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Data loss (no regularizer) of one pass over a set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    /// Metrics of the untrained model, reported as epoch 0.
    pub initial: EpochStats,
    /// One entry per completed epoch, numbered from 1.
    pub epochs: Vec<EpochStats>,
    pub diverged: bool,
}

impl TrainRecord {
    pub fn last(&self) -> &EpochStats {
        self.epochs.last().unwrap_or(&self.initial)
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }
}

/// Mean per-sample loss over `set`, and the fraction of correct 0.5-threshold
/// decisions for binary sets.
pub fn evaluate(m: &Model, set: &LabeledSet, loss: LossKind) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::InvalidCount("cannot evaluate on an empty set".into()));
    }
    let mut total = 0.0;
    let mut correct = 0usize;
    for (x, y) in set.iter() {
        let out = predict(m, x)?;
        total += loss.value(&out, y);
        if set.kind == TaskKind::Binary && (out[0] >= 0.5) == (y[0] >= 0.5) {
            correct += 1;
        }
    }
    let n = set.len() as f64;
    Ok(Evaluation {
        loss: total / n,
        accuracy: (set.kind == TaskKind::Binary).then(|| correct as f64 / n),
    })
}

/// Mean loss over `batch` plus the regularizer, and the full gradient.
pub fn loss_and_grad(m: &Model, batch: &[(&Vector, &Vector)], cfg: &TrainConfig) -> Result<(f64, ModelGrads)> {
    batch_loss_and_grad(m, batch, cfg.loss, cfg.reversible)
}

fn epoch_stats(m: &Model, epoch: usize, train: &LabeledSet, val: &LabeledSet, loss: LossKind) -> Option<EpochStats> {
    let tr = evaluate(m, train, loss).ok()?;
    let va = evaluate(m, val, loss).ok()?;
    let stats = EpochStats {
        epoch,
        train_loss: tr.loss,
        val_loss: va.loss,
        val_accuracy: va.accuracy,
    };
    (stats.train_loss.is_finite() && stats.val_loss.is_finite()).then_some(stats)
}

/// Mini-batch gradient descent. Batches come from a fresh seeded shuffle each
/// epoch; the final short batch is kept. Training stops early, with
/// `diverged` set, when a loss becomes non-finite or a block solve fails.
pub fn train(m: &mut Model, train_set: &LabeledSet, val_set: &LabeledSet, cfg: &TrainConfig) -> Result<TrainRecord> {
    cfg.validate()?;
    m.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidCount("training and validation sets must be nonempty".into()));
    }
    let nan = EpochStats {
        epoch: 0,
        train_loss: f64::NAN,
        val_loss: f64::NAN,
        val_accuracy: None,
    };
    let mut record = TrainRecord {
        initial: nan,
        epochs: Vec::with_capacity(cfg.epochs),
        diverged: false,
    };
    match epoch_stats(m, 0, train_set, val_set, cfg.loss) {
        Some(s) => record.initial = s,
        None => {
            record.diverged = true;
            return Ok(record);
        }
    }

    let mut rng = Rng::with_stream(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| (&train_set.inputs[i], &train_set.targets[i])));
            match batch_loss_and_grad(m, &batch, cfg.loss, cfg.reversible) {
                Ok((_, grads)) => m.apply_step(&grads, cfg.learning_rate),
                Err(_) => {
                    record.diverged = true;
                    return Ok(record);
                }
            }
        }
        match epoch_stats(m, epoch, train_set, val_set, cfg.loss) {
            Some(s) if m.is_finite() => record.epochs.push(s),
            _ => {
                record.diverged = true;
                return Ok(record);
            }
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::ActivationKind;
    use crate::datasets::make_regression;
    use crate::network::ModelSpec;

    fn setup() -> (Model, LabeledSet, LabeledSet) {
        let spec = ModelSpec::new(1, 3, 1, 3, 0.5, ActivationKind::Tanh);
        let m = Model::init(spec, &mut Rng::new(5)).unwrap();
        let (tr, va) = make_regression(0, 12, 7).unwrap();
        (m, tr, va)
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let (mut m, tr, va) = setup();
        let before = m.clone();
        let cfg = TrainConfig::new(0.0, 4, 3, 1, LossKind::SquaredError);
        let rec = train(&mut m, &tr, &va, &cfg).unwrap();
        assert_eq!(m, before);
        assert!(!rec.diverged);
        assert_eq!(rec.epochs.len(), 3);
        for e in &rec.epochs {
            assert_eq!(e.train_loss, rec.initial.train_loss);
            assert_eq!(e.val_loss, rec.initial.val_loss);
        }
    }

    #[test]
    fn full_batch_epoch_is_one_gradient_step() {
        let (mut m, tr, va) = setup();
        let cfg = TrainConfig::new(0.05, tr.len(), 1, 9, LossKind::SquaredError);
        let batch: Vec<_> = tr.iter().collect();
        let (_, grads) = loss_and_grad(&m, &batch, &cfg).unwrap();
        let mut expected = m.clone();
        expected.apply_step(&grads, cfg.learning_rate);
        train(&mut m, &tr, &va, &cfg).unwrap();
        // Summation order differs after the shuffle.
        for (a, b) in m.flatten().iter().zip(expected.flatten()) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn same_seed_same_record() {
        let (m0, tr, va) = setup();
        let cfg = TrainConfig::new(0.02, 4, 4, 3, LossKind::SquaredError);
        let (mut a, mut b) = (m0.clone(), m0);
        let ra = train(&mut a, &tr, &va, &cfg).unwrap();
        let rb = train(&mut b, &tr, &va, &cfg).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_flagged() {
        let (mut m, tr, va) = setup();
        let cfg = TrainConfig::new(1e6, 4, 5, 3, LossKind::SquaredError);
        let rec = train(&mut m, &tr, &va, &cfg).unwrap();
        assert!(rec.diverged);
        assert!(rec.epochs.len() < 5);
    }

    #[test]
    fn rejects_bad_config() {
        let (mut m, tr, va) = setup();
        let cfg = TrainConfig::new(0.1, 0, 1, 0, LossKind::SquaredError);
        assert!(matches!(train(&mut m, &tr, &va, &cfg), Err(Error::InvalidCount(_))));
    }
}
