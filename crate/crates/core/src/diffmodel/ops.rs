use serde::{Deserialize, Serialize};

use super::spec::ModelParams;
use super::trial::TrialMatrix;
use crate::error::{Error, Result};

/// Floor applied inside `log(p)` for cross-entropy and attack losses.
pub const LOG_PROB_FLOOR: f64 = 1e-12;

/// Scalar function of the model output whose input gradient is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputObjective {
    /// Raw logit `f_j`.
    Logit(usize),
    /// `log p_y`, the non-target attack loss.
    LogProb(usize),
    /// `-log p_y`, the target attack loss.
    NegLogProb(usize),
}

/// How per-class training weights are derived from label frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    /// Inverse class proportion, renormalized to mean 1 over present classes.
    #[default]
    Inverse,
    Uniform,
}

pub fn forward(params: &ModelParams, trial: &TrialMatrix) -> Result<Vec<f64>> {
    Ok(params.run_trial(trial)?.probs)
}

pub fn logits(params: &ModelParams, trial: &TrialMatrix) -> Result<Vec<f64>> {
    Ok(params.run_trial(trial)?.logits)
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_label(params: &ModelParams, trial: &TrialMatrix) -> Result<usize> {
    // argmax over logits equals argmax over softmax but avoids ties created by
    // rounding in the exponentials
    Ok(argmax(&params.run_trial(trial)?.logits))
}

pub fn predict_labels(params: &ModelParams, trials: &[TrialMatrix]) -> Result<Vec<usize>> {
    trials.iter().map(|t| predict_label(params, t)).collect()
}

/// Per-class weights for `labels` over `num_classes` classes.
pub fn class_weights(labels: &[usize], num_classes: usize, rule: ClassWeighting) -> Vec<f64> {
    match rule {
        ClassWeighting::Uniform => vec![1.0; num_classes],
        ClassWeighting::Inverse => {
            let mut counts = vec![0usize; num_classes];
            for &y in labels {
                if y < num_classes {
                    counts[y] += 1;
                }
            }
            let n = labels.len() as f64;
            let raw: Vec<f64> = counts
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { n / c as f64 })
                .collect();
            let present = counts.iter().filter(|&&c| c > 0).count();
            if present == 0 {
                return vec![1.0; num_classes];
            }
            let mean = raw.iter().sum::<f64>() / present as f64;
            raw.into_iter().map(|w| w / mean).collect()
        }
    }
}

fn check_batch(
    params: &ModelParams,
    trials: &[TrialMatrix],
    labels: &[usize],
    weights: &[f64],
) -> Result<()> {
    let k = params.spec().num_classes;
    if trials.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if trials.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} trials but {} labels",
            trials.len(),
            labels.len()
        )));
    }
    if weights.len() != k {
        return Err(Error::shape(format!("{} class weights for {k} classes", weights.len())));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::invalid(format!("label {y} out of range for {k} classes")));
    }
    Ok(())
}

/// Mean over trials of `-weight[y] * log(max(p_y, 1e-12))`.
pub fn weighted_cross_entropy(
    params: &ModelParams,
    trials: &[TrialMatrix],
    labels: &[usize],
    weights: &[f64],
) -> Result<f64> {
    check_batch(params, trials, labels, weights)?;
    let mut total = 0.0;
    for (x, &y) in trials.iter().zip(labels) {
        let p = params.run_trial(x)?.probs;
        total -= weights[y] * p[y].max(LOG_PROB_FLOOR).ln();
    }
    Ok(total / trials.len() as f64)
}

/// Loss and exact parameter gradient of [`weighted_cross_entropy`].
pub fn loss_and_grad_params(
    params: &ModelParams,
    trials: &[TrialMatrix],
    labels: &[usize],
    weights: &[f64],
) -> Result<(f64, ModelParams)> {
    check_batch(params, trials, labels, weights)?;
    let n = trials.len() as f64;
    let mut grad = params.zeros_like();
    let mut total = 0.0;
    for (x, &y) in trials.iter().zip(labels) {
        let pass = params.run_trial(x)?;
        let py = pass.probs[y];
        total -= weights[y] * py.max(LOG_PROB_FLOOR).ln();
        if py <= LOG_PROB_FLOOR {
            continue;
        }
        let scale = weights[y] / n;
        let dlogits: Vec<f64> = pass
            .probs
            .iter()
            .enumerate()
            .map(|(j, p)| scale * (p - if j == y { 1.0 } else { 0.0 }))
            .collect();
        params.backward(&pass.cache, &dlogits, Some(&mut grad), None);
    }
    Ok((total / n, grad))
}

pub fn grad_params(
    params: &ModelParams,
    trials: &[TrialMatrix],
    labels: &[usize],
    weights: &[f64],
) -> Result<ModelParams> {
    loss_and_grad_params(params, trials, labels, weights).map(|(_, g)| g)
}

fn objective_dlogits(objective: InputObjective, probs: &[f64]) -> Result<Vec<f64>> {
    let k = probs.len();
    let (class, sign) = match objective {
        InputObjective::Logit(j) => (j, 0.0),
        InputObjective::LogProb(y) => (y, 1.0),
        InputObjective::NegLogProb(y) => (y, -1.0),
    };
    if class >= k {
        return Err(Error::invalid(format!("class {class} out of range for {k} classes")));
    }
    Ok(match objective {
        InputObjective::Logit(_) => (0..k).map(|i| if i == class { 1.0 } else { 0.0 }).collect(),
        _ => probs
            .iter()
            .enumerate()
            .map(|(i, p)| sign * (if i == class { 1.0 } else { 0.0 } - p))
            .collect(),
    })
}

/// Value of `objective` at `trial`, with `log` floored at [`LOG_PROB_FLOOR`].
pub fn objective_value(
    params: &ModelParams,
    trial: &TrialMatrix,
    objective: InputObjective,
) -> Result<f64> {
    let pass = params.run_trial(trial)?;
    objective_dlogits(objective, &pass.probs)?;
    Ok(match objective {
        InputObjective::Logit(j) => pass.logits[j],
        InputObjective::LogProb(y) => pass.probs[y].max(LOG_PROB_FLOOR).ln(),
        InputObjective::NegLogProb(y) => -pass.probs[y].max(LOG_PROB_FLOOR).ln(),
    })
}

/// Exact gradient of `objective` with respect to every input entry.
pub fn grad_input(
    params: &ModelParams,
    trial: &TrialMatrix,
    objective: InputObjective,
) -> Result<TrialMatrix> {
    let pass = params.run_trial(trial)?;
    let dlogits = objective_dlogits(objective, &pass.probs)?;
    let mut dx = vec![0.0; trial.as_slice().len()];
    params.backward(&pass.cache, &dlogits, None, Some(&mut dx));
    Ok(TrialMatrix::from_raw(trial.channels(), trial.samples(), dx))
}

/// Logits and the input gradient of every logit at `trial`.
pub fn logit_jacobian(
    params: &ModelParams,
    trial: &TrialMatrix,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let pass = params.run_trial(trial)?;
    let k = pass.logits.len();
    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let mut dx = vec![0.0; trial.as_slice().len()];
        params.backward(&pass.cache, &e, None, Some(&mut dx));
        rows.push(dx);
    }
    Ok((pass.logits, rows))
}
