//! Differentiable victim classifiers with hand-written backpropagation.

mod adam;
mod io;
mod net;
mod ops;
mod spec;
mod train;
mod trial;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use net::softmax;
pub use ops::{
    argmax, class_weights, forward, grad_input, grad_params, logit_jacobian, logits,
    loss_and_grad_params, objective_value, predict_label, predict_labels, weighted_cross_entropy,
    ClassWeighting, InputObjective, LOG_PROB_FLOOR,
};
pub use spec::{CnnDims, ModelKind, ModelParams, ModelSpec};
pub use train::{fit_from, fit_victim, FitReport, TrainConfig};
pub use trial::TrialMatrix;

