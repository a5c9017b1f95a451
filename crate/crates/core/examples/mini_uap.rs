//! Mini UAPs: templates smaller than the trial, placed at random offsets
//! during crafting and evaluation.
//!
//! `cargo run --release --example mini_uap -- [seed]`

#[path = "common/mod.rs"]
mod common;

use uapforge::attacks::craft_mini_uap;
use uapforge::eval::{evaluate, PlacementPolicy};
use uapforge::{AttackConfig, AttackKind};

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(4, seed)?;
    let (c, t) = s.train.shape();
    let cfg = AttackConfig { xi: 0.2 * s.train.value_std(), seed, kind: AttackKind::Target(0), ..AttackConfig::tlm() };
    let policy = PlacementPolicy::Random { count: 30, seed };
    for shape in [(c, t), (c, t / 2), (c / 2, t / 2), (c / 4, t / 4)] {
        let uap = craft_mini_uap(&s.victim, &s.train, &s.val, &cfg, shape)?.uap;
        let report = evaluate(&s.victim, &s.test, Some(&uap), Some(0), policy)?;
        println!("{}x{}: target rate {:.3}", shape.0, shape.1, report.target_rate.unwrap_or(0.0));
    }
    Ok(())
}
