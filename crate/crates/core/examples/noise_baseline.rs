//! Clipped Gaussian noise with the same amplitude budget as the UAPs: the
//! victim should barely notice it.
//!
//! `cargo run --release --example noise_baseline -- [seed]`

#[path = "common/mod.rs"]
mod common;

use uapforge::eval::{evaluate, evaluate_noisy, noise_baseline};

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let s = common::setup(2, seed)?;
    let clean = evaluate(&s.victim, &s.test, None, None, Default::default())?;
    println!("clean rca {:.3}", clean.rca);
    for scale in [0.1, 0.2, 0.5, 1.0] {
        let xi = scale * s.train.value_std();
        let noisy = noise_baseline(&s.test, xi, seed)?;
        let report = evaluate_noisy(&s.victim, &s.test, &noisy, None)?;
        println!("noise xi {xi:.3}: rca {:.3}, asr {:.3}, spr {:.1} dB", report.rca, report.asr, report.spr_db);
    }
    Ok(())
}
