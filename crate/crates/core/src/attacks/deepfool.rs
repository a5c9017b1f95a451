//! DeepFool for a single trial.

use crate::diffmodel::{argmax, logit_jacobian, ModelParams, TrialMatrix};
use crate::error::{Error, Result};

/// Gradient norms below this are treated as degenerate.
pub const DEGENERATE_GRADIENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DeepFoolOutcome {
    /// Accumulated perturbation, already scaled by `1 + overshoot`.
    pub perturbation: TrialMatrix,
    pub iterations: usize,
    /// Whether the label of `x + perturbation` differs from the clean label.
    pub flipped: bool,
}

/// Minimal perturbation that moves `trial` across the nearest linearized
/// decision boundary.
///
/// Each step linearizes the margins `f_j - f_k` (`k` the original label) and
/// takes the closed-form step `-(g / |w|^2) w` towards the closest one. The
/// loop stops as soon as `x + (1 + overshoot) r` changes label or after
/// `max_iter` steps.
pub fn deepfool(
    params: &ModelParams,
    trial: &TrialMatrix,
    overshoot: f64,
    max_iter: usize,
) -> Result<TrialMatrix> {
    deepfool_detailed(params, trial, overshoot, max_iter).map(|o| o.perturbation)
}

pub fn deepfool_detailed(
    params: &ModelParams,
    trial: &TrialMatrix,
    overshoot: f64,
    max_iter: usize,
) -> Result<DeepFoolOutcome> {
    let (c, t) = trial.shape();
    let d = c * t;
    let scale = 1.0 + overshoot;
    let (logits0, _) = logit_jacobian(params, trial)?;
    let original = argmax(&logits0);

    let mut total = vec![0.0; d];
    let mut current = trial.clone();
    let mut iterations = 0;
    let mut label = original;
    while label == original && iterations < max_iter {
        let (logits, grads) = logit_jacobian(params, &current)?;
        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        let mut largest_norm: f64 = 0.0;
        for j in (0..logits.len()).filter(|&j| j != original) {
            // margin g_j = f_original - f_j > 0 while the label holds
            let w: Vec<f64> = grads[original].iter().zip(&grads[j]).map(|(a, b)| a - b).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            largest_norm = largest_norm.max(norm);
            if norm < DEGENERATE_GRADIENT {
                continue;
            }
            let margin = logits[original] - logits[j];
            let distance = margin.abs() / norm;
            if best.as_ref().is_none_or(|(dist, _, _)| distance < *dist) {
                best = Some((distance, margin, w));
            }
        }
        let Some((_, margin, w)) = best else {
            return Err(Error::DegenerateGradient { norm: largest_norm });
        };
        let norm_sq: f64 = w.iter().map(|x| x * x).sum();
        let step = -margin / norm_sq;
        for (r, wi) in total.iter_mut().zip(&w) {
            *r += step * wi;
        }
        iterations += 1;

        for ((cur, x0), r) in current.as_mut_slice().iter_mut().zip(trial.as_slice()).zip(&total) {
            *cur = x0 + scale * r;
        }
        label = argmax(&crate::diffmodel::logits(params, &current)?);
    }

    let perturbation = TrialMatrix::from_raw(c, t, total.iter().map(|r| scale * r).collect());
    Ok(DeepFoolOutcome {
        perturbation,
        iterations,
        flipped: label != original,
    })
}
