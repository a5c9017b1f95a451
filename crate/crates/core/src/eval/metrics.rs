use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize, Serializer};

use crate::attacks::{apply_uap, Placement, Uap, UapMode};
use crate::data::TrialSet;
use crate::diffmodel::{predict_label, predict_labels, ModelParams, TrialMatrix};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Where mini templates are placed during evaluation. Ignored for full and
/// channel-invariant perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementPolicy {
    Fixed(Placement),
    /// `count` independent uniform placements per trial.
    Random { count: usize, seed: u64 },
}

impl Default for PlacementPolicy {
    fn default() -> Self {
        PlacementPolicy::Random { count: 30, seed: 0 }
    }
}

impl PlacementPolicy {
    /// Placements for every trial of a `channels x samples` set of size `n`.
    pub fn placements(&self, uap: &Uap, n: usize, channels: usize, samples: usize) -> Vec<Vec<Option<Placement>>> {
        if uap.mode() != UapMode::Mini {
            return vec![vec![None]; n];
        }
        match *self {
            PlacementPolicy::Fixed(p) => vec![vec![Some(p)]; n],
            PlacementPolicy::Random { count, seed } => {
                let mut rng = seeded(seed);
                (0..n)
                    .map(|_| {
                        (0..count)
                            .map(|_| Some(Placement::sample(&mut rng, uap.shape(), (channels, samples))))
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Raw and balanced classification accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub rca: f64,
    pub bca: f64,
    /// Per-class accuracy; `None` for classes absent from the labels.
    pub per_class: Vec<Option<f64>>,
}

/// RCA is the fraction of correct predictions; BCA the unweighted mean of the
/// per-class accuracies over classes present in `labels`.
pub fn rca_bca(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<Accuracy> {
    if predictions.is_empty() {
        return Err(Error::invalid("rca_bca on empty input"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let k = num_classes.max(labels.iter().map(|&y| y + 1).max().unwrap_or(0));
    let mut total = vec![0usize; k];
    let mut correct = vec![0usize; k];
    for (&p, &y) in predictions.iter().zip(labels) {
        total[y] += 1;
        if p == y {
            correct[y] += 1;
        }
    }
    let per_class: Vec<Option<f64>> = total
        .iter()
        .zip(&correct)
        .map(|(&t, &c)| (t > 0).then(|| c as f64 / t as f64))
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    Ok(Accuracy {
        rca: correct.iter().sum::<usize>() as f64 / predictions.len() as f64,
        bca: present.iter().sum::<f64>() / present.len() as f64,
        per_class,
    })
}

/// Predictions of `params` on every perturbed copy of every trial.
///
/// Non-mini perturbations give one prediction per trial; mini templates give
/// one per placement drawn by `policy`.
pub fn perturbed_predictions(
    params: &ModelParams,
    set: &TrialSet,
    uap: &Uap,
    policy: PlacementPolicy,
) -> Result<Vec<Vec<usize>>> {
    let (c, t) = set.shape();
    let placements = policy.placements(uap, set.len(), c, t);
    set.trials()
        .iter()
        .zip(placements)
        .map(|(x, ps)| {
            ps.into_iter()
                .map(|p| predict_label(params, &apply_uap(x, uap, p)?))
                .collect()
        })
        .collect()
}

fn flip_rate(reference: &[usize], perturbed: &[Vec<usize>]) -> f64 {
    let mut flips = 0usize;
    let mut total = 0usize;
    for (r, ps) in reference.iter().zip(perturbed) {
        flips += ps.iter().filter(|p| *p != r).count();
        total += ps.len();
    }
    if total == 0 {
        0.0
    } else {
        flips as f64 / total as f64
    }
}

fn hit_rate(target: usize, perturbed: &[Vec<usize>]) -> f64 {
    let total: usize = perturbed.iter().map(Vec::len).sum();
    let hits = perturbed.iter().flatten().filter(|&&p| p == target).count();
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Attack success rate: fraction of perturbed trials whose prediction differs
/// from the prediction on the clean trial. True labels are never read.
pub fn asr(params: &ModelParams, clean: &TrialSet, uap: &Uap, policy: PlacementPolicy) -> Result<f64> {
    let reference = predict_labels(params, clean.trials())?;
    Ok(flip_rate(&reference, &perturbed_predictions(params, clean, uap, policy)?))
}

/// Fraction of perturbed trials classified as `target_class`.
pub fn target_rate(
    params: &ModelParams,
    set: &TrialSet,
    uap: &Uap,
    target_class: usize,
    policy: PlacementPolicy,
) -> Result<f64> {
    let k = params.spec().num_classes;
    if target_class >= k {
        return Err(Error::invalid(format!("target class {target_class} out of range for {k} classes")));
    }
    Ok(hit_rate(target_class, &perturbed_predictions(params, set, uap, policy)?))
}

/// `10 log10(mean_i |x_i|^2 / |v_i|^2)`; `+inf` when every perturbation is zero.
pub fn spr_db_from(clean: &[TrialMatrix], perturbations: &[TrialMatrix]) -> Result<f64> {
    if clean.is_empty() {
        return Err(Error::invalid("signal-to-perturbation ratio of an empty set"));
    }
    let mut sum = 0.0;
    for (x, v) in clean.iter().zip(perturbations) {
        let pv = v.energy();
        if pv == 0.0 {
            return Ok(f64::INFINITY);
        }
        sum += x.energy() / pv;
    }
    Ok(10.0 * (sum / clean.len() as f64).log10())
}

/// SPR of the effective perturbation each trial receives (mini templates
/// zero-padded to the trial shape).
pub fn spr_db(clean: &TrialSet, uap: &Uap, policy: PlacementPolicy) -> Result<f64> {
    let (c, t) = clean.shape();
    let placements = policy.placements(uap, clean.len(), c, t);
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (x, ps) in clean.trials().iter().zip(placements) {
        for p in ps {
            xs.push(x.clone());
            vs.push(uap.effective(c, t, p)?);
        }
    }
    spr_db_from(&xs, &vs)
}

/// Adds `xi * clip(z, -1, 1)` with `z ~ N(0, 1)` i.i.d. to every entry.
pub fn noise_baseline(set: &TrialSet, xi: f64, seed: u64) -> Result<TrialSet> {
    if !(xi > 0.0) {
        return Err(Error::invalid("xi must be positive"));
    }
    let mut rng = seeded(seed);
    Ok(set.map_trials(|trial| {
        let values = trial
            .as_slice()
            .iter()
            .map(|&x| x + clipped_noise(rng.sample(StandardNormal), xi))
            .collect();
        TrialMatrix::new(trial.channels(), trial.samples(), values).expect("finite")
    }))
}

/// `xi * max(-1, min(1, z))`.
pub fn clipped_noise(z: f64, xi: f64) -> f64 {
    xi * z.clamp(-1.0, 1.0)
}

fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// Metrics of one (model, data, perturbation) triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rca: f64,
    pub bca: f64,
    pub per_class_rca: Vec<Option<f64>>,
    /// Against the model's clean predictions.
    pub asr: f64,
    pub target_rate: Option<f64>,
    /// `+inf` for an unperturbed evaluation.
    #[serde(serialize_with = "serialize_db")]
    pub spr_db: f64,
    pub n: usize,
}

impl EvalReport {
    fn from_predictions(
        labels: &[usize],
        num_classes: usize,
        clean_predictions: &[usize],
        perturbed: &[Vec<usize>],
        target: Option<usize>,
        spr_db: f64,
    ) -> Result<Self> {
        let mut flat_pred = Vec::new();
        let mut flat_labels = Vec::new();
        for (ps, &y) in perturbed.iter().zip(labels) {
            flat_pred.extend_from_slice(ps);
            flat_labels.extend(std::iter::repeat_n(y, ps.len()));
        }
        let acc = rca_bca(&flat_pred, &flat_labels, num_classes)?;
        Ok(Self {
            rca: acc.rca,
            bca: acc.bca,
            per_class_rca: acc.per_class,
            asr: flip_rate(clean_predictions, perturbed),
            target_rate: target.map(|t| hit_rate(t, perturbed)),
            spr_db,
            n: labels.len(),
        })
    }

    /// Field-wise mean over reports (trial counts are summed).
    pub fn mean(reports: &[EvalReport]) -> Option<EvalReport> {
        let first = reports.first()?;
        let m = reports.len() as f64;
        let avg = |f: &dyn Fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / m;
        let k = reports.iter().map(|r| r.per_class_rca.len()).max().unwrap_or(0);
        let per_class_rca = (0..k)
            .map(|j| {
                let vals: Vec<f64> = reports
                    .iter()
                    .filter_map(|r| r.per_class_rca.get(j).copied().flatten())
                    .collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        Some(EvalReport {
            rca: avg(&|r| r.rca),
            bca: avg(&|r| r.bca),
            per_class_rca,
            asr: avg(&|r| r.asr),
            target_rate: first
                .target_rate
                .map(|_| avg(&|r| r.target_rate.unwrap_or(0.0))),
            spr_db: avg(&|r| r.spr_db),
            n: reports.iter().map(|r| r.n).sum(),
        })
    }
}

/// Evaluates `params` on `set`, optionally perturbed by `uap`.
pub fn evaluate(
    params: &ModelParams,
    set: &TrialSet,
    uap: Option<&Uap>,
    target: Option<usize>,
    policy: PlacementPolicy,
) -> Result<EvalReport> {
    if set.is_empty() {
        return Err(Error::invalid("evaluation on an empty set"));
    }
    let k = params.spec().num_classes;
    if let Some(t) = target.filter(|&t| t >= k) {
        return Err(Error::invalid(format!("target class {t} out of range for {k} classes")));
    }
    let clean = predict_labels(params, set.trials())?;
    let (perturbed, spr) = match uap {
        None => (clean.iter().map(|&p| vec![p]).collect(), f64::INFINITY),
        Some(u) => (perturbed_predictions(params, set, u, policy)?, spr_db(set, u, policy)?),
    };
    EvalReport::from_predictions(set.labels(), k.max(set.num_classes()), &clean, &perturbed, target, spr)
}

/// Evaluates `params` on `noisy`, a perturbed copy of `clean` with the same order.
pub fn evaluate_noisy(
    params: &ModelParams,
    clean: &TrialSet,
    noisy: &TrialSet,
    target: Option<usize>,
) -> Result<EvalReport> {
    if clean.len() != noisy.len() || clean.shape() != noisy.shape() {
        return Err(Error::shape("noisy set does not match the clean set"));
    }
    if clean.is_empty() {
        return Err(Error::invalid("evaluation on an empty set"));
    }
    let k = params.spec().num_classes;
    let clean_pred = predict_labels(params, clean.trials())?;
    let perturbed: Vec<Vec<usize>> = predict_labels(params, noisy.trials())?
        .into_iter()
        .map(|p| vec![p])
        .collect();
    let deltas: Vec<TrialMatrix> = clean
        .trials()
        .iter()
        .zip(noisy.trials())
        .map(|(x, y)| {
            let d = y.as_slice().iter().zip(x.as_slice()).map(|(a, b)| a - b).collect();
            TrialMatrix::new(x.channels(), x.samples(), d).expect("finite")
        })
        .collect();
    let spr = spr_db_from(clean.trials(), &deltas)?;
    EvalReport::from_predictions(clean.labels(), k.max(clean.num_classes()), &clean_pred, &perturbed, target, spr)
}
