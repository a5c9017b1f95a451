//! Non-target TLM-UAP against a trained victim, with the per-epoch
//! validation ASR curve.
//!
//! `cargo run --release --example tlm_nontarget -- [seed]`

#[path = "common/mod.rs"]
mod common;

use uapforge::attacks::tlm_uap;
use uapforge::eval::evaluate;
use uapforge::AttackConfig;

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(2, seed)?;
    let cfg = AttackConfig { xi: 0.2 * s.train.value_std(), seed, ..AttackConfig::tlm() };
    let result = tlm_uap(&s.victim, &s.train, &s.val, &cfg)?;
    let curve: Vec<String> = result.metric_curve.iter().map(|m| format!("{m:.2}")).collect();
    println!("validation asr per epoch: {}", curve.join(" "));
    println!("|v|_inf = {:.4} (xi {:.4})", result.uap.norm_value(), cfg.xi);

    let clean = evaluate(&s.victim, &s.test, None, None, Default::default())?;
    let attacked = evaluate(&s.victim, &s.test, Some(&result.uap), None, Default::default())?;
    println!("test rca {:.3} -> {:.3}, asr {:.3}, spr {:.1} dB", clean.rca, attacked.rca, attacked.asr, attacked.spr_db);
    Ok(())
}
