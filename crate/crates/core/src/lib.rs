//! Universal adversarial perturbations for classifiers of multichannel
//! time-series trials (EEG-shaped `C x T` inputs).
//!
//! The crate is organized around five pieces:
//!
//! - [`diffmodel`]: small differentiable victims (affine and a shallow
//!   band-power CNN) with exact parameter and input gradients, Adam, and
//!   class-weighted training with early stopping.
//! - [`attacks`]: single-trial DeepFool, the DeepFool-based UAP, the
//!   total-loss-minimization (TLM) UAP for non-target and target attacks,
//!   channel-invariant and mini (randomly placed) variants, and gray-box
//!   transfer through a substitute model.
//! - [`data`]: the trial-set container, a synthetic EEG-like generator,
//!   per-trial normalizations, cross-validation splits and the binary trial
//!   file.
//! - [`eval`]: RCA/BCA, attack success rate, target rate, signal to
//!   perturbation ratio, the clipped-Gaussian noise baseline and the
//!   experiment runner that produces report tables.
//! - [`cli`]: the `uapforge` command line front end.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod attacks;
pub mod cli;
pub mod data;
pub mod diffmodel;
mod error;
pub mod eval;
mod rng;

pub use attacks::{
    apply_uap, craft_mini_uap, deepfool, df_uap, project, substitute_transfer, tlm_uap,
    AttackConfig, AttackKind, AttackResult, Constraint, LabelSource, NormOrder, Placement, Uap,
    UapMode,
};
pub use data::{SynthConfig, TrialSet};
pub use diffmodel::{ModelKind, ModelParams, ModelSpec, TrainConfig, TrialMatrix};
pub use error::{Error, Result};
pub use eval::EvalReport;
