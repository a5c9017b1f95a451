use serde::{Deserialize, Serialize};

use super::set::TrialSet;
use crate::diffmodel::TrialMatrix;

const STD_FLOOR: f64 = 1e-8;

/// Per-trial normalization applied before training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Normalization {
    /// Subtract the trial mean, divide by 10, clip to `[-5, 5]`.
    MeanShiftClip,
    /// `(x - mean) / std` over the whole trial.
    ZScore,
    /// Per-channel exponential moving standardization along time.
    EmaStandardize { decay: f64 },
}

impl Normalization {
    pub fn ema() -> Self {
        Normalization::EmaStandardize { decay: 0.999 }
    }

    pub fn apply(&self, trial: &TrialMatrix) -> TrialMatrix {
        let mut out = trial.clone();
        let v = out.as_mut_slice();
        match *self {
            Normalization::MeanShiftClip => {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                v.iter_mut().for_each(|x| *x = ((*x - mean) / 10.0).clamp(-5.0, 5.0));
            }
            Normalization::ZScore => {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
                let std = std.max(STD_FLOOR);
                v.iter_mut().for_each(|x| *x = (*x - mean) / std);
            }
            Normalization::EmaStandardize { decay } => {
                let t = trial.samples();
                for row in v.chunks_mut(t) {
                    ema_standardize_row(row, decay);
                }
            }
        }
        out
    }
}

/// Running mean/variance with `mu_0 = x_0`, `var_0 = 1`, then
/// `mu_t = d mu_{t-1} + (1-d) x_t`, `var_t = d var_{t-1} + (1-d)(x_t - mu_t)^2`.
fn ema_standardize_row(row: &mut [f64], decay: f64) {
    let Some(&first) = row.first() else { return };
    let mut mean = first;
    let mut var = 1.0;
    row[0] = 0.0;
    for x in row.iter_mut().skip(1) {
        mean = decay * mean + (1.0 - decay) * *x;
        let d = *x - mean;
        var = decay * var + (1.0 - decay) * d * d;
        *x = d / var.sqrt().max(STD_FLOOR);
    }
}

pub fn normalize(set: &TrialSet, mode: Normalization) -> TrialSet {
    set.map_trials(|t| mode.apply(t))
}
