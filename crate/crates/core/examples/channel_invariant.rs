//! A single 1 x T waveform added to every channel, compared with a full
//! C x T perturbation under the same budget.
//!
//! `cargo run --release --example channel_invariant -- [seed]`

#[path = "common/mod.rs"]
mod common;

use uapforge::attacks::tlm_uap;
use uapforge::eval::evaluate;
use uapforge::{AttackConfig, UapMode};

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(2, seed)?;
    let xi = 0.2 * s.train.value_std();
    for mode in [UapMode::Full, UapMode::ChannelInvariant] {
        let cfg = AttackConfig { xi, seed, mode, ..AttackConfig::tlm() };
        let uap = tlm_uap(&s.victim, &s.train, &s.val, &cfg)?.uap;
        let report = evaluate(&s.victim, &s.test, Some(&uap), None, Default::default())?;
        println!("{mode:?}: shape {:?}, test rca {:.3}, asr {:.3}", uap.shape(), report.rca, report.asr);
    }
    Ok(())
}
