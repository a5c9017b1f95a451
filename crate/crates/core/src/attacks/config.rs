use serde::{Deserialize, Serialize};

use super::uap::{Constraint, NormOrder, UapMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Push every trial away from its reference label.
    #[default]
    NonTarget,
    /// Pull every trial into the given class.
    Target(usize),
}

/// Where the non-target reference label `y` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    True,
    /// The victim's prediction on the clean trial.
    #[default]
    Predicted,
}

/// Parameters shared by the crafting algorithms.
///
/// [`AttackConfig::default`] is the TLM configuration (`xi = 0.2`,
/// `delta = 1.0`, 500 epochs, `alpha = 0`, no constraint, predicted labels,
/// early stopping with patience 10); [`AttackConfig::deepfool_uap`] is the
/// DeepFool-UAP configuration (`delta = 0.8`, 10 passes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub xi: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub alpha: f64,
    pub norm: NormOrder,
    pub batch_size: usize,
    pub kind: AttackKind,
    pub constraint: Constraint,
    pub seed: u64,
    /// DeepFool overshoot.
    pub overshoot: f64,
    /// Inner DeepFool iteration cap.
    pub deepfool_max_iter: usize,
    pub label_source: LabelSource,
    /// `Full` or `ChannelInvariant`; mini templates go through
    /// [`crate::attacks::craft_mini_uap`].
    pub mode: UapMode,
    /// Adam step size for TLM; `None` uses `xi / 50`, so the budget is
    /// crossed in a few dozen steps whatever the data scale while the steps
    /// stay small enough not to lock onto a one-class flip.
    pub learning_rate: Option<f64>,
    /// Epochs without improvement of the validation metric before TLM stops.
    pub patience: Option<usize>,
    /// Random placements per validation trial for mini templates.
    pub placements: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            xi: 0.2,
            delta: 1.0,
            max_iter: 500,
            alpha: 0.0,
            norm: NormOrder::Inf,
            batch_size: 32,
            kind: AttackKind::NonTarget,
            constraint: Constraint::None,
            seed: 0,
            overshoot: 0.02,
            deepfool_max_iter: 50,
            label_source: LabelSource::Predicted,
            mode: UapMode::Full,
            learning_rate: None,
            patience: Some(10),
            placements: 30,
        }
    }
}

impl AttackConfig {
    pub fn tlm() -> Self {
        Self::default()
    }

    pub fn deepfool_uap() -> Self {
        Self {
            delta: 0.8,
            max_iter: 10,
            ..Self::default()
        }
    }

    /// Adam step size actually used by TLM.
    pub fn step_size(&self) -> f64 {
        self.learning_rate.unwrap_or(self.xi / 50.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0) || !self.xi.is_finite() {
            return Err(Error::invalid("xi must be positive"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid("delta must lie in [0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        if !(self.overshoot >= 0.0) {
            return Err(Error::invalid("overshoot must be non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if self.placements == 0 {
            return Err(Error::invalid("placements must be positive"));
        }
        if !(self.step_size() > 0.0) || !self.step_size().is_finite() {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.mode == UapMode::Mini {
            return Err(Error::invalid("mini templates are crafted with craft_mini_uap"));
        }
        Ok(())
    }
}
