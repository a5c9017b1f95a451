//! Gray-box attack: the attacker knows the training data but not the
//! victim, trains its own substitute and transfers the perturbation.
//!
//! `cargo run --release --example gray_box_transfer -- [seed]`

#[path = "common/mod.rs"]
mod common;

use uapforge::attacks::{substitute_transfer, CraftMethod, Substitute};
use uapforge::eval::evaluate;
use uapforge::{AttackConfig, ModelSpec, TrainConfig};

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(2, seed)?;
    let (c, t) = s.train.shape();
    let cfg = AttackConfig { xi: 0.2 * s.train.value_std(), seed, ..AttackConfig::tlm() };
    let train = TrainConfig { learning_rate: 1e-2, seed: seed + 1, ..TrainConfig::default() };
    let clean = evaluate(&s.victim, &s.test, None, None, Default::default())?;
    println!("clean victim rca {:.3}", clean.rca);
    for (name, spec) in [("affine", ModelSpec::affine(c, t, 2)), ("small_cnn", ModelSpec::small_cnn(c, t, 2))] {
        let sub = Substitute::Train { spec, train: train.clone() };
        let report = substitute_transfer(&s.train, &s.val, &s.test, &sub, &s.victim, CraftMethod::Tlm, &cfg)?;
        println!("{name} substitute: victim rca {:.3}, asr {:.3}", report.rca, report.asr);
    }
    let white = Substitute::Given(s.victim.clone());
    let report = substitute_transfer(&s.train, &s.val, &s.test, &white, &s.victim, CraftMethod::Tlm, &cfg)?;
    println!("victim itself (white box): rca {:.3}", report.rca);
    Ok(())
}
