//! DeepFool-based UAP against TLM-UAP on the same victim and budget.
//!
//! `cargo run --release --example df_vs_tlm -- [seed]`

#[path = "common/mod.rs"]
mod common;

use std::time::Instant;

use uapforge::attacks::{craft, CraftMethod};
use uapforge::eval::evaluate;
use uapforge::AttackConfig;

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(2, seed)?;
    let xi = 0.2 * s.train.value_std();
    for (method, base) in [(CraftMethod::DeepFool, AttackConfig::deepfool_uap()), (CraftMethod::Tlm, AttackConfig::tlm())] {
        let cfg = AttackConfig { xi, seed, ..base };
        let start = Instant::now();
        let result = craft(method, &s.victim, &s.train, &s.val, &cfg)?;
        let report = evaluate(&s.victim, &s.test, Some(&result.uap), None, Default::default())?;
        println!(
            "{method:?}: {} passes in {:.1?}, test rca {:.3}, asr {:.3}, spr {:.1} dB",
            result.iterations_run,
            start.elapsed(),
            report.rca,
            report.asr,
            report.spr_db
        );
    }
    Ok(())
}
