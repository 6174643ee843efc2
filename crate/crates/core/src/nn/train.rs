//! Seeded mini-batch training loop.

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

use super::adam::{adam_step, AdamState};
use super::backward::backward;
use super::forward::pad_mask;
use super::matrix::Matrix;
use super::IntentModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Probabilities are clipped into `[prob_clip, 1 - prob_clip]` before
    /// the loss.
    pub prob_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 8,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            prob_clip: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.epochs < 1
            || self.batch_size < 1
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || self.epsilon <= 0.0
            || self.prob_clip <= 0.0
            || self.prob_clip >= 0.5
        {
            return Err(Error::InvalidConfig(
                "train config out of range".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean per-sample loss, one entry per epoch.
    pub epoch_loss: Vec<f64>,
}

/// Train in place: seeded shuffling, mini-batches with mean-gradient
/// accumulation, one optimizer step per batch. Deterministic for a fixed
/// seed (single-threaded throughout).
pub fn train(
    model: &mut IntentModel,
    data: &[(EmbeddingMatrix, Vec<f64>)],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    for (x, target) in data {
        if x.m() != model.config.feature_dim {
            return Err(Error::DimMismatch {
                expected: model.config.feature_dim,
                got: x.m(),
            });
        }
        if target.len() != model.config.labels {
            return Err(Error::LengthMismatch {
                left: target.len(),
                right: model.config.labels,
            });
        }
    }

    // Pad once up front.
    let prepared: Vec<(Matrix, Vec<bool>, &[f64])> = data
        .iter()
        .map(|(x, t)| {
            let (seq, mask) = pad_mask(x, model.config.max_functions)?;
            Ok((seq, mask, t.as_slice()))
        })
        .collect::<Result<_>>()?;

    let mut flat = model.flat_params();
    let mut opt = AdamState::new(flat.len());
    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad_acc = model.zeros_like();
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let (seq, mask, target) = &prepared[i];
                let (loss, grads) = backward(model, seq, mask, target, config.prob_clip)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                loss_sum += loss;
                grad_acc.add_scaled(&grads, weight);
            }
            let flat_grads = grad_acc.flat_params();
            adam_step(&mut flat, &flat_grads, &mut opt, config)?;
            model.set_flat_params(&flat)?;
        }
        let mean = loss_sum / prepared.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_loss.push(mean);
    }

    Ok(TrainReport { epoch_loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Embedding;
    use crate::nn::{ModelConfig, Variant};

    fn small_config() -> ModelConfig {
        ModelConfig {
            max_functions: 4,
            feature_dim: 6,
            hidden: 5,
            labels: 10,
            variant: Variant::Bilstm,
        }
    }

    fn toy_data(n: usize, m: usize, seed: u64) -> Vec<(EmbeddingMatrix, Vec<f64>)> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                let rows = (0..3)
                    .map(|_| {
                        Embedding::new((0..m).map(|_| rng.uniform(-1.0, 1.0)).collect())
                            .unwrap()
                    })
                    .collect();
                let x = EmbeddingMatrix::new(rows, m).unwrap();
                let t: Vec<f64> = (0..10).map(|_| f64::from(rng.below(2) as u32)).collect();
                (x, t)
            })
            .collect()
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let mut model = IntentModel::new(small_config(), 1).unwrap();
        assert!(matches!(
            train(&mut model, &[], &TrainConfig::default()),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn same_seed_trains_bit_identically() {
        let data = toy_data(12, 6, 7);
        let config = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 5,
            ..TrainConfig::default()
        };
        let mut a = IntentModel::new(small_config(), 2).unwrap();
        let mut b = IntentModel::new(small_config(), 2).unwrap();
        let ra = train(&mut a, &data, &config).unwrap();
        let rb = train(&mut b, &data, &config).unwrap();
        assert_eq!(a, b, "parameters must match bit-for-bit");
        assert_eq!(ra.epoch_loss, rb.epoch_loss);
    }

    #[test]
    fn loss_history_has_one_entry_per_epoch() {
        let data = toy_data(8, 6, 3);
        let config = TrainConfig {
            epochs: 4,
            batch_size: 8,
            seed: 1,
            ..TrainConfig::default()
        };
        let mut model = IntentModel::new(small_config(), 9).unwrap();
        let report = train(&mut model, &data, &config).unwrap();
        assert_eq!(report.epoch_loss.len(), 4);
        assert!(report.epoch_loss.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn poisoned_parameters_abort_with_the_epoch() {
        let mut model = IntentModel::new(small_config(), 4).unwrap();
        // Poison the head bias (the last parameter block): the recurrence
        // stays finite, the loss does not.
        let mut flat = model.flat_params();
        let last = flat.len() - 1;
        flat[last] = f64::NAN;
        model.set_flat_params(&flat).unwrap();
        let data = toy_data(4, 6, 5);
        match train(&mut model, &data, &TrainConfig::default()) {
            Err(Error::Diverged { epoch }) => assert_eq!(epoch, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_mismatched_feature_dim() {
        let mut model = IntentModel::new(small_config(), 1).unwrap();
        let data = toy_data(2, 5, 1);
        assert!(matches!(
            train(&mut model, &data, &TrainConfig::default()),
            Err(Error::DimMismatch { .. })
        ));
    }
}
