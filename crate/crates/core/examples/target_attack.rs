//! Target TLM-UAPs on a 4-class victim: one perturbation per target class.
//!
//! `cargo run --release --example target_attack -- [seed]`

#[path = "common/mod.rs"]
mod common;

use uapforge::attacks::tlm_uap;
use uapforge::eval::evaluate;
use uapforge::{AttackConfig, AttackKind};

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(4, seed)?;
    let xi = 0.2 * s.train.value_std();
    for t in 0..4 {
        let cfg = AttackConfig { xi, seed, kind: AttackKind::Target(t), ..AttackConfig::tlm() };
        let result = tlm_uap(&s.victim, &s.train, &s.val, &cfg)?;
        let report = evaluate(&s.victim, &s.test, Some(&result.uap), Some(t), Default::default())?;
        println!(
            "target {t}: test target rate {:.3} after {} epochs",
            report.target_rate.unwrap_or(0.0),
            result.iterations_run
        );
    }
    Ok(())
}
