//! The two universal-perturbation crafting loops.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{AttackConfig, AttackKind, LabelSource};
use super::deepfool::deepfool;
use super::uap::{apply_uap, constraint_gradient, project_in_place, Placement, Uap, UapMode};
use crate::data::TrialSet;
use crate::diffmodel::{grad_input, predict_labels, AdamConfig, AdamState, InputObjective, ModelParams};
use crate::error::{Error, Result};
use crate::eval::{asr, target_rate, PlacementPolicy};
use crate::rng::{derive_seed, seeded};

/// Output of a crafting run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub uap: Uap,
    /// Epochs (passes over the data) actually executed.
    pub iterations_run: usize,
    /// Best validation ASR, or target rate for target attacks. For the
    /// DeepFool UAP this is the ASR on the crafting set.
    pub best_validation_metric: f64,
    /// Metric after every epoch.
    pub metric_curve: Vec<f64>,
}

/// Hooks into the crafting loops; every method defaults to a no-op.
pub trait AttackObserver {
    /// Called with the perturbation values right after every projection.
    fn on_projection(&mut self, _values: &[f64]) {}
    fn on_epoch(&mut self, _epoch: usize, _metric: f64) {}
}

impl AttackObserver for () {}

/// Records the largest norm seen after any projection.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormMonitor {
    pub projections: usize,
    pub max_norm: f64,
    pub violations: usize,
    pub bound: f64,
    pub norm: Option<super::NormOrder>,
}

impl NormMonitor {
    pub fn new(norm: super::NormOrder, xi: f64) -> Self {
        Self {
            bound: xi + 1e-9,
            norm: Some(norm),
            ..Default::default()
        }
    }
}

impl AttackObserver for NormMonitor {
    fn on_projection(&mut self, values: &[f64]) {
        let n = self.norm.unwrap_or(super::NormOrder::Inf).norm(values);
        self.projections += 1;
        self.max_norm = self.max_norm.max(n);
        if n > self.bound {
            self.violations += 1;
        }
    }
}

/// DeepFool-based universal perturbation (non-target only).
///
/// Each pass visits the trials in a freshly shuffled order; trials not yet
/// fooled by `v` contribute a DeepFool step computed at `x + v`, after which
/// `v` is projected back onto the `xi` ball. The loop ends once the ASR on the
/// crafting set reaches `delta` or after `max_iter` passes.
pub fn df_uap(params: &ModelParams, trials: &TrialSet, cfg: &AttackConfig) -> Result<AttackResult> {
    df_uap_observed(params, trials, cfg, &mut ())
}

pub fn df_uap_observed(
    params: &ModelParams,
    trials: &TrialSet,
    cfg: &AttackConfig,
    observer: &mut dyn AttackObserver,
) -> Result<AttackResult> {
    cfg.validate()?;
    if cfg.kind != AttackKind::NonTarget {
        return Err(Error::invalid("the DeepFool UAP supports non-target attacks only"));
    }
    if cfg.mode != UapMode::Full {
        return Err(Error::invalid("the DeepFool UAP crafts full perturbations only"));
    }
    if trials.is_empty() {
        return Err(Error::invalid("empty trial set"));
    }
    let (c, t) = trials.shape();
    let mut uap = Uap::zeros_for(UapMode::Full, c, t, cfg.xi, cfg.norm)?;
    let clean = predict_labels(params, trials.trials())?;
    let mut rng = seeded(derive_seed(cfg.seed, "df-order"));
    let mut order: Vec<usize> = (0..trials.len()).collect();
    let policy = PlacementPolicy::default();

    let mut curve = Vec::new();
    let mut current = asr(params, trials, &uap, policy)?;
    let mut epochs = 0;
    for epoch in 1..=cfg.max_iter {
        if current >= cfg.delta {
            break;
        }
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &trials.trials()[i];
            let shifted = apply_uap(x, &uap, None)?;
            if crate::diffmodel::predict_label(params, &shifted)? != clean[i] {
                continue;
            }
            let step = deepfool(params, &shifted, cfg.overshoot, cfg.deepfool_max_iter)?;
            let v = uap.values_mut();
            v.iter_mut().zip(step.as_slice()).for_each(|(a, b)| *a += b);
            project_in_place(v, cfg.norm, cfg.xi);
            observer.on_projection(uap.values());
        }
        epochs = epoch;
        current = asr(params, trials, &uap, policy)?;
        curve.push(current);
        observer.on_epoch(epoch, current);
    }
    Ok(AttackResult {
        uap,
        iterations_run: epochs,
        best_validation_metric: current,
        metric_curve: curve,
    })
}

/// Template geometry for the TLM loop.
#[derive(Debug, Clone, Copy)]
struct Template {
    mode: UapMode,
    rows: usize,
    cols: usize,
}

/// Total-loss-minimization universal perturbation.
///
/// Minimizes the mean attack loss over mini-batches of `train` plus
/// `alpha` times the constraint penalty with Adam, projecting onto the `xi`
/// ball after every step. After each epoch the validation ASR (target rate
/// for target attacks) is measured and the best perturbation is kept; the
/// loop stops when that metric exceeds `delta`, after `patience` epochs
/// without improvement, or after `max_iter` epochs.
pub fn tlm_uap(params: &ModelParams, train: &TrialSet, val: &TrialSet, cfg: &AttackConfig) -> Result<AttackResult> {
    tlm_uap_observed(params, train, val, cfg, &mut ())
}

pub fn tlm_uap_observed(
    params: &ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &AttackConfig,
    observer: &mut dyn AttackObserver,
) -> Result<AttackResult> {
    cfg.validate()?;
    let (c, t) = train.shape();
    let template = match cfg.mode {
        UapMode::ChannelInvariant => Template {
            mode: UapMode::ChannelInvariant,
            rows: 1,
            cols: t,
        },
        _ => Template {
            mode: UapMode::Full,
            rows: c,
            cols: t,
        },
    };
    tlm_loop(params, train, val, cfg, template, observer)
}

/// TLM with a `rows x cols` template placed at a fresh uniform location for
/// every training trial in every epoch; validation averages over
/// `cfg.placements` random placements per trial.
pub fn craft_mini_uap(
    params: &ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &AttackConfig,
    shape: (usize, usize),
) -> Result<AttackResult> {
    craft_mini_uap_observed(params, train, val, cfg, shape, &mut ())
}

pub fn craft_mini_uap_observed(
    params: &ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &AttackConfig,
    (rows, cols): (usize, usize),
    observer: &mut dyn AttackObserver,
) -> Result<AttackResult> {
    let (c, t) = train.shape();
    if rows == 0 || cols == 0 || rows > c || cols > t {
        return Err(Error::shape(format!(
            "mini template {rows}x{cols} must fit inside {c}x{t} trials"
        )));
    }
    let cfg = AttackConfig {
        mode: UapMode::Full,
        ..cfg.clone()
    };
    let template = Template {
        mode: UapMode::Mini,
        rows,
        cols,
    };
    tlm_loop(params, train, val, &cfg, template, observer)
}

fn reference_objectives(params: &ModelParams, set: &TrialSet, cfg: &AttackConfig) -> Result<Vec<InputObjective>> {
    let k = params.spec().num_classes;
    match cfg.kind {
        AttackKind::Target(yt) => {
            if yt >= k {
                return Err(Error::invalid(format!("target class {yt} out of range for {k} classes")));
            }
            Ok(vec![InputObjective::NegLogProb(yt); set.len()])
        }
        AttackKind::NonTarget => {
            let labels = match cfg.label_source {
                LabelSource::Predicted => predict_labels(params, set.trials())?,
                LabelSource::True => set.labels().to_vec(),
            };
            Ok(labels.into_iter().map(InputObjective::LogProb).collect())
        }
    }
}

fn tlm_loop(
    params: &ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    cfg: &AttackConfig,
    template: Template,
    observer: &mut dyn AttackObserver,
) -> Result<AttackResult> {
    if train.is_empty() {
        return Err(Error::invalid("empty training batch"));
    }
    if val.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    if val.shape() != train.shape() {
        return Err(Error::shape("training and validation trials differ in shape"));
    }
    let (c, t) = train.shape();
    let objectives = reference_objectives(params, train, cfg)?;

    let mut uap = Uap::zeros(template.mode, template.rows, template.cols, cfg.xi, cfg.norm)?;
    let adam = AdamConfig {
        learning_rate: cfg.step_size(),
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(uap.values().len());
    let mut batch_rng = seeded(derive_seed(cfg.seed, "tlm-batches"));
    let mut place_rng = seeded(derive_seed(cfg.seed, "tlm-placements"));
    let policy = PlacementPolicy::Random {
        count: cfg.placements,
        seed: derive_seed(cfg.seed, "tlm-val-placements"),
    };
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best = uap.clone();
    let mut best_metric = 0.0;
    let mut since_best = 0;
    let mut curve = Vec::new();

    for epoch in 1..=cfg.max_iter {
        order.shuffle(&mut batch_rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; uap.values().len()];
            for &i in batch {
                let placement = (template.mode == UapMode::Mini)
                    .then(|| Placement::sample(&mut place_rng, uap.shape(), (c, t)));
                let x = apply_uap(&train.trials()[i], &uap, placement)?;
                let g = grad_input(params, &x, objectives[i])?;
                uap.pullback(g.as_slice(), t, placement, &mut grad);
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            if cfg.alpha > 0.0 {
                for (g, p) in grad.iter_mut().zip(constraint_gradient(uap.values(), cfg.constraint)) {
                    *g += cfg.alpha * p;
                }
            }
            let v = uap.values_mut();
            state.step_iter(v.iter_mut(), grad.into_iter(), &adam);
            project_in_place(v, cfg.norm, cfg.xi);
            observer.on_projection(uap.values());
        }

        let metric = match cfg.kind {
            AttackKind::NonTarget => asr(params, val, &uap, policy)?,
            AttackKind::Target(yt) => target_rate(params, val, &uap, yt, policy)?,
        };
        curve.push(metric);
        observer.on_epoch(epoch, metric);
        if metric > best_metric {
            best_metric = metric;
            best = uap.clone();
            since_best = 0;
        } else {
            since_best += 1;
        }
        if best_metric > cfg.delta {
            break;
        }
        if cfg.patience.is_some_and(|p| since_best >= p) {
            break;
        }
    }

    Ok(AttackResult {
        uap: best,
        iterations_run: curve.len(),
        best_validation_metric: best_metric,
        metric_curve: curve,
    })
}
