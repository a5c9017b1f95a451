use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::ops::{class_weights, loss_and_grad_params, weighted_cross_entropy, ClassWeighting};
use super::spec::{ModelParams, ModelSpec};
use crate::data::TrialSet;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

/// Victim training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_epochs: 100,
            batch_size: 32,
            patience: 10,
            seed: 0,
            class_weighting: ClassWeighting::Inverse,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| b > 0.0 && b < 1.0;
        if !unit(self.adam_beta1) || !unit(self.adam_beta2) {
            return Err(Error::invalid("adam betas must lie in (0, 1)"));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("patience, batch_size and max_epochs must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    /// Mean mini-batch training loss per epoch.
    pub training_curve: Vec<f64>,
    /// Validation loss after each epoch.
    pub validation_curve: Vec<f64>,
    pub stopped_early: bool,
}

/// Trains a classifier with class-weighted cross-entropy, Adam and early
/// stopping on the validation loss.
///
/// Returns the parameters from the epoch with the lowest validation loss.
pub fn fit_victim(
    spec: &ModelSpec,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &TrainConfig,
) -> Result<(ModelParams, FitReport)> {
    let init = ModelParams::init(spec, derive_seed(cfg.seed, "init"))?;
    fit_from(init, train, val, cfg)
}

/// Same as [`fit_victim`] but starting from given parameters.
pub fn fit_from(
    mut params: ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &TrainConfig,
) -> Result<(ModelParams, FitReport)> {
    cfg.validate()?;
    let spec = params.spec().clone();
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if val.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    for (name, set) in [("training", train), ("validation", val)] {
        if set.shape() != (spec.input_channels, spec.input_samples) {
            return Err(Error::shape(format!(
                "{name} trials are {:?}, model expects {}x{}",
                set.shape(),
                spec.input_channels,
                spec.input_samples
            )));
        }
    }

    let weights = class_weights(train.labels(), spec.num_classes, cfg.class_weighting);
    let adam = cfg.adam();
    let mut state = AdamState::new(params.num_params());
    let mut rng = seeded(derive_seed(cfg.seed, "batches"));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut training_curve = Vec::new();
    let mut validation_curve = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let trials: Vec<_> = batch.iter().map(|&i| train.trials()[i].clone()).collect();
            let labels: Vec<_> = batch.iter().map(|&i| train.labels()[i]).collect();
            let (loss, grad) = loss_and_grad_params(&params, &trials, &labels, &weights)?;
            epoch_loss += loss * batch.len() as f64;
            state.step_iter(params.flat_mut(), grad.flat(), &adam);
        }
        training_curve.push(epoch_loss / train.len() as f64);

        let val_loss = weighted_cross_entropy(&params, val.trials(), val.labels(), &weights)?;
        validation_curve.push(val_loss);
        if val_loss < best_loss {
            best_loss = val_loss;
            best = params.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let report = FitReport {
        epochs_run: training_curve.len(),
        best_epoch,
        best_validation_loss: best_loss,
        training_curve,
        validation_curve,
        stopped_early,
    };
    Ok((best, report))
}
