//! Universal perturbation crafting: DeepFool, the DeepFool-based UAP, the
//! total-loss-minimization UAP and its channel-invariant and mini variants,
//! and gray-box transfer.

mod config;
mod craft;
mod deepfool;
mod file;
mod transfer;
mod uap;

pub use config::{AttackConfig, AttackKind, LabelSource};
pub use craft::{
    craft_mini_uap, craft_mini_uap_observed, df_uap, df_uap_observed, tlm_uap, tlm_uap_observed,
    AttackObserver, AttackResult, NormMonitor,
};
pub use deepfool::{deepfool, deepfool_detailed, DeepFoolOutcome, DEGENERATE_GRADIENT};
pub use file::{decode_uap, encode_uap, load_uap, save_uap, uap_to_csv, UAP_MAGIC, UAP_VERSION};
pub use transfer::{craft, substitute_transfer, CraftMethod, Substitute};
pub use uap::{
    apply_uap, constraint_gradient, constraint_penalty, project, Constraint, NormOrder, Placement,
    Uap, UapMode,
};

use crate::diffmodel::{objective_value, InputObjective, ModelParams, TrialMatrix};
use crate::error::Result;

/// Attack loss at a perturbed trial: `log p_y` for non-target attacks with
/// reference label `y`, `-log p_{y_t}` for target attacks.
pub fn attack_loss(params: &ModelParams, perturbed: &TrialMatrix, kind: AttackKind, reference_label: usize) -> Result<f64> {
    let objective = match kind {
        AttackKind::NonTarget => InputObjective::LogProb(reference_label),
        AttackKind::Target(t) => InputObjective::NegLogProb(t),
    };
    objective_value(params, perturbed, objective)
}
