//! Shared setup for the examples: synthetic data, one leave-one-subject-out
//! fold and a trained small CNN victim.

// not every example reads every field
#![allow(dead_code)]

use uapforge::data::{gen_synthetic, loso_split};
use uapforge::diffmodel::fit_victim;
use uapforge::{ModelParams, ModelSpec, Result, SynthConfig, TrainConfig, TrialSet};

pub struct Setup {
    pub train: TrialSet,
    pub val: TrialSet,
    pub test: TrialSet,
    pub victim: ModelParams,
}

/// Default generator with `classes` classes; the last subject is held out.
pub fn setup(classes: usize, seed: u64) -> Result<Setup> {
    let cfg = SynthConfig { num_classes: classes, seed, ..SynthConfig::default() };
    let set = gen_synthetic(&cfg)?;
    let (train, val, test) = loso_split(&set, cfg.num_subjects as u32 - 1, seed)?;
    let spec = ModelSpec::small_cnn(set.channels(), set.samples(), classes);
    let tc = TrainConfig { learning_rate: 1e-2, seed, ..TrainConfig::default() };
    let victim = fit_victim(&spec, &train, &val, &tc)?.0;
    Ok(Setup { train, val, test, victim })
}
