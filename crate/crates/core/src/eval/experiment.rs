use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, evaluate_noisy, noise_baseline, EvalReport, PlacementPolicy};
use crate::attacks::{
    craft, craft_mini_uap, substitute_transfer, AttackConfig, AttackKind, CraftMethod, Substitute,
};
use crate::data::{
    gen_synthetic, loso_indices, within_subject_blocks, FoldIndices, SplitKind, SynthConfig,
    TrialSet, NUM_BLOCKS,
};
use crate::diffmodel::{fit_victim, ModelParams, ModelSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// A named victim architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimSpec {
    pub name: String,
    pub spec: ModelSpec,
}

/// One column of the experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case")]
pub enum AttackSpec {
    /// Clipped Gaussian noise at the same budget.
    Noise { name: String, config: AttackConfig },
    /// White-box perturbation crafted on the victim itself.
    WhiteBox {
        name: String,
        method: CraftMethod,
        config: AttackConfig,
    },
    /// White-box template of `rows x cols` at random placements.
    Mini {
        name: String,
        rows: usize,
        cols: usize,
        config: AttackConfig,
    },
    /// Crafted on a substitute trained on the same training fold.
    GrayBox {
        name: String,
        substitute: ModelSpec,
        method: CraftMethod,
        config: AttackConfig,
    },
}

impl AttackSpec {
    pub fn name(&self) -> &str {
        match self {
            AttackSpec::Noise { name, .. }
            | AttackSpec::WhiteBox { name, .. }
            | AttackSpec::Mini { name, .. }
            | AttackSpec::GrayBox { name, .. } => name,
        }
    }

    pub fn config(&self) -> &AttackConfig {
        match self {
            AttackSpec::Noise { config, .. }
            | AttackSpec::WhiteBox { config, .. }
            | AttackSpec::Mini { config, .. }
            | AttackSpec::GrayBox { config, .. } => config,
        }
    }
}

/// Everything that determines an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentDescriptor {
    pub dataset: String,
    pub data: SynthConfig,
    pub split: SplitKind,
    /// Run only the first `n` folds (all when `None`).
    pub max_folds: Option<usize>,
    pub victims: Vec<VictimSpec>,
    pub train: TrainConfig,
    pub attacks: Vec<AttackSpec>,
    /// Multiply every attack's `xi` by the value standard deviation of the
    /// training fold.
    pub xi_relative_to_std: bool,
    /// Share of the training fold the attacker crafts on (its leading part).
    pub craft_fraction: f64,
    pub seed: u64,
}

impl Default for ExperimentDescriptor {
    fn default() -> Self {
        let data = SynthConfig::default();
        Self {
            dataset: "synthetic".into(),
            split: SplitKind::LeaveOneSubjectOut,
            max_folds: None,
            victims: vec![VictimSpec {
                name: "small_cnn".into(),
                spec: ModelSpec::small_cnn(data.channels, data.samples, data.num_classes),
            }],
            train: TrainConfig {
                learning_rate: 1e-2,
                ..TrainConfig::default()
            },
            attacks: Vec::new(),
            xi_relative_to_std: false,
            craft_fraction: 1.0,
            seed: 0,
            data,
        }
    }
}

/// One line of the report table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub cell: String,
    pub dataset: String,
    pub split: String,
    pub victim: String,
    pub attack: String,
    pub report: EvalReport,
    /// Per-fold reports behind the mean.
    pub folds: Vec<EvalReport>,
}

pub const CLEAN: &str = "clean";

pub fn split_name(kind: SplitKind) -> &'static str {
    match kind {
        SplitKind::WithinSubjectBlocks => "within",
        SplitKind::LeaveOneSubjectOut => "loso",
    }
}

/// Generates the data described by `desc` and runs [`run_on`].
pub fn run_experiment(desc: &ExperimentDescriptor) -> Result<Vec<ReportRow>> {
    let data = SynthConfig {
        seed: derive_seed(desc.seed, "data"),
        ..desc.data.clone()
    };
    run_on(desc, &gen_synthetic(&data)?)
}

/// Runs the split protocol of `desc` on `set`: for every victim and fold the
/// victim is trained on the training part, every attack is crafted on the
/// training part and evaluated on the test part. Rows hold means over folds,
/// clean baseline first, then attacks in descriptor order, per victim.
pub fn run_on(desc: &ExperimentDescriptor, set: &TrialSet) -> Result<Vec<ReportRow>> {
    if desc.victims.is_empty() {
        return Err(Error::invalid("experiment names no victim"));
    }
    if !(desc.craft_fraction > 0.0 && desc.craft_fraction <= 1.0) {
        return Err(Error::invalid("craft_fraction must lie in (0, 1]"));
    }
    let folds = folds(desc, set)?;
    let split = split_name(desc.split);
    let mut rows = Vec::new();
    for victim in &desc.victims {
        let mut per_column: Vec<Vec<EvalReport>> = vec![Vec::new(); desc.attacks.len() + 1];
        for (f, fold) in folds.iter().enumerate() {
            let train = set.subset(&fold.train);
            let val = set.subset(&fold.val);
            let test = set.subset(&fold.test);
            let cell = |attack: &str| format!("{}/{}/fold{f}", victim.name, attack);
            let tc = TrainConfig {
                seed: derive_seed(desc.seed, &cell("victim")),
                ..desc.train.clone()
            };
            let params = fit_victim(&victim.spec, &train, &val, &tc)
                .map_err(|e| in_cell(&cell(CLEAN), e))?
                .0;
            per_column[0].push(
                evaluate(&params, &test, None, None, PlacementPolicy::default())
                    .map_err(|e| in_cell(&cell(CLEAN), e))?,
            );
            let scale = if desc.xi_relative_to_std { train.value_std() } else { 1.0 };
            let keep = ((train.len() as f64 * desc.craft_fraction).ceil() as usize).clamp(1, train.len());
            let craft_set = train.subset(&(0..keep).collect::<Vec<_>>());
            for (a, attack) in desc.attacks.iter().enumerate() {
                let id = cell(attack.name());
                let report = run_attack(attack, &params, &craft_set, &val, &test, &tc, scale, derive_seed(desc.seed, &id))
                    .map_err(|e| in_cell(&id, e))?;
                per_column[a + 1].push(report);
            }
        }
        let names = std::iter::once(CLEAN).chain(desc.attacks.iter().map(|a| a.name()));
        for (name, reports) in names.zip(per_column) {
            rows.push(ReportRow {
                cell: format!("{}/{}", victim.name, name),
                dataset: desc.dataset.clone(),
                split: split.into(),
                victim: victim.name.clone(),
                attack: name.into(),
                report: EvalReport::mean(&reports).expect("at least one fold"),
                folds: reports,
            });
        }
    }
    Ok(rows)
}

fn in_cell(cell: &str, e: Error) -> Error {
    Error::InCell {
        cell: cell.into(),
        source: Box::new(e),
    }
}

fn folds(desc: &ExperimentDescriptor, set: &TrialSet) -> Result<Vec<FoldIndices>> {
    let mut folds = match desc.split {
        SplitKind::WithinSubjectBlocks => {
            let plan = within_subject_blocks(set)?;
            (0..NUM_BLOCKS).map(|f| plan.within_fold(f)).collect::<Result<Vec<_>>>()?
        }
        SplitKind::LeaveOneSubjectOut => set
            .subject_ids()
            .into_iter()
            .map(|s| loso_indices(set, s, derive_seed(desc.seed, &format!("loso{s}"))))
            .collect::<Result<Vec<_>>>()?,
    };
    if let Some(n) = desc.max_folds {
        if n == 0 {
            return Err(Error::invalid("max_folds must be at least 1"));
        }
        folds.truncate(n);
    }
    Ok(folds)
}

#[allow(clippy::too_many_arguments)]
fn run_attack(
    attack: &AttackSpec,
    params: &ModelParams,
    train: &TrialSet,
    val: &TrialSet,
    test: &TrialSet,
    victim_train: &TrainConfig,
    scale: f64,
    seed: u64,
) -> Result<EvalReport> {
    let cfg = AttackConfig {
        xi: attack.config().xi * scale,
        seed,
        ..attack.config().clone()
    };
    let target = match cfg.kind {
        AttackKind::Target(t) => Some(t),
        AttackKind::NonTarget => None,
    };
    let policy = PlacementPolicy::Random {
        count: cfg.placements,
        seed: derive_seed(seed, "eval-placements"),
    };
    match attack {
        AttackSpec::Noise { .. } => {
            let noisy = noise_baseline(test, cfg.xi, derive_seed(seed, "noise"))?;
            evaluate_noisy(params, test, &noisy, target)
        }
        AttackSpec::WhiteBox { method, .. } => {
            let r = craft(*method, params, train, val, &cfg)?;
            evaluate(params, test, Some(&r.uap), target, policy)
        }
        AttackSpec::Mini { rows, cols, .. } => {
            let r = craft_mini_uap(params, train, val, &cfg, (*rows, *cols))?;
            evaluate(params, test, Some(&r.uap), target, policy)
        }
        AttackSpec::GrayBox { substitute, method, .. } => {
            let sub = Substitute::Train {
                spec: substitute.clone(),
                train: TrainConfig {
                    seed: derive_seed(seed, "substitute"),
                    ..victim_train.clone()
                },
            };
            substitute_transfer(train, val, test, &sub, params, *method, &cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentDescriptor {
        let data = SynthConfig {
            channels: 2,
            samples: 16,
            trials_per_class: 10,
            num_subjects: 2,
            ..SynthConfig::default()
        };
        ExperimentDescriptor {
            victims: vec![VictimSpec {
                name: "affine".into(),
                spec: ModelSpec::affine(2, 16, 2),
            }],
            train: TrainConfig {
                max_epochs: 5,
                ..TrainConfig::default()
            },
            data,
            ..ExperimentDescriptor::default()
        }
    }

    #[test]
    fn no_attacks_gives_only_clean_rows() {
        let rows = run_experiment(&tiny()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].attack, CLEAN);
        assert_eq!(rows[0].folds.len(), 2);
        assert_eq!(rows[0].report.asr, 0.0);
    }

    #[test]
    fn clean_cell_matches_direct_evaluation() {
        let desc = ExperimentDescriptor {
            max_folds: Some(1),
            ..tiny()
        };
        let set = gen_synthetic(&SynthConfig {
            seed: derive_seed(desc.seed, "data"),
            ..desc.data.clone()
        })
        .unwrap();
        let rows = run_on(&desc, &set).unwrap();
        let fold = &folds(&desc, &set).unwrap()[0];
        let tc = TrainConfig {
            seed: derive_seed(desc.seed, "affine/victim/fold0"),
            ..desc.train.clone()
        };
        let params = fit_victim(&desc.victims[0].spec, &set.subset(&fold.train), &set.subset(&fold.val), &tc)
            .unwrap()
            .0;
        let preds = crate::diffmodel::predict_labels(&params, set.subset(&fold.test).trials()).unwrap();
        let direct = super::super::rca_bca(&preds, set.subset(&fold.test).labels(), 2).unwrap();
        assert_eq!(rows[0].report.rca, direct.rca);
        assert_eq!(rows[0].report.bca, direct.bca);
    }

    #[test]
    fn output_is_a_function_of_the_descriptor() {
        let mut desc = tiny();
        desc.attacks = vec![
            AttackSpec::Noise {
                name: "noise".into(),
                config: AttackConfig::default(),
            },
            AttackSpec::WhiteBox {
                name: "tlm".into(),
                method: CraftMethod::Tlm,
                config: AttackConfig {
                    max_iter: 3,
                    ..AttackConfig::default()
                },
            },
        ];
        let a = run_experiment(&desc).unwrap();
        let b = run_experiment(&desc).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a[1].cell, "affine/noise");
    }

    #[test]
    fn failing_cell_is_named() {
        let mut desc = tiny();
        desc.attacks = vec![AttackSpec::WhiteBox {
            name: "bad".into(),
            method: CraftMethod::Tlm,
            config: AttackConfig {
                kind: AttackKind::Target(9),
                ..AttackConfig::default()
            },
        }];
        let err = run_experiment(&desc).unwrap_err().to_string();
        assert!(err.contains("affine/bad/fold0"), "{err}");
    }
}
