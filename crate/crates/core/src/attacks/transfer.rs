use serde::{Deserialize, Serialize};

use super::config::{AttackConfig, AttackKind};
use super::craft::{df_uap, tlm_uap, AttackResult};
use crate::data::TrialSet;
use crate::diffmodel::{fit_victim, ModelParams, ModelSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, PlacementPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CraftMethod {
    DeepFool,
    Tlm,
}

/// Runs `method` against `params`, crafting on `train` (DeepFool ignores `val`).
pub fn craft(
    method: CraftMethod,
    params: &ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    match method {
        CraftMethod::DeepFool => df_uap(params, train, cfg),
        CraftMethod::Tlm => tlm_uap(params, train, val, cfg),
    }
}

/// The attacker's stand-in for the victim.
#[derive(Debug, Clone, PartialEq)]
pub enum Substitute {
    /// Train a fresh model of this architecture on the attacker's data.
    Train { spec: ModelSpec, train: TrainConfig },
    /// Use these parameters as-is.
    Given(ModelParams),
}

/// Gray-box attack: craft a perturbation on a substitute model and report its
/// effect on the victim over `test`.
pub fn substitute_transfer(
    train: &TrialSet,
    val: &TrialSet,
    test: &TrialSet,
    substitute: &Substitute,
    victim: &ModelParams,
    method: CraftMethod,
    cfg: &AttackConfig,
) -> Result<EvalReport> {
    let trained;
    let surrogate = match substitute {
        Substitute::Given(p) => p,
        Substitute::Train { spec, train: tc } => {
            trained = fit_victim(spec, train, val, tc)?.0;
            &trained
        }
    };
    let vs = victim.spec();
    let ss = surrogate.spec();
    if (vs.input_channels, vs.input_samples) != (ss.input_channels, ss.input_samples) {
        return Err(Error::shape("substitute and victim disagree on the input shape"));
    }
    let result = craft(method, surrogate, train, val, cfg)?;
    let target = match cfg.kind {
        AttackKind::Target(t) => Some(t),
        AttackKind::NonTarget => None,
    };
    evaluate(victim, test, Some(&result.uap), target, PlacementPolicy::default())
}
