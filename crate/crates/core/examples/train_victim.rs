//! Trains the small band-power CNN on synthetic EEG-like trials and reports
//! held-out-subject accuracy.
//!
//! `cargo run --release --example train_victim -- [classes] [seed]`

use uapforge::data::{gen_synthetic, loso_split};
use uapforge::diffmodel::fit_victim;
use uapforge::eval::evaluate;
use uapforge::{ModelSpec, SynthConfig, TrainConfig};

fn main() -> uapforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let classes = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = SynthConfig { num_classes: classes, seed, ..SynthConfig::default() };
    let set = gen_synthetic(&cfg)?;
    let (train, val, test) = loso_split(&set, 3, seed)?;
    println!("train {} / val {} / test {} trials, value std {:.3}", train.len(), val.len(), test.len(), train.value_std());

    let spec = ModelSpec::small_cnn(set.channels(), set.samples(), classes);
    let tc = TrainConfig { learning_rate: 1e-2, seed, ..TrainConfig::default() };
    let (victim, fit) = fit_victim(&spec, &train, &val, &tc)?;
    println!(
        "{} parameters, {} epochs (best {}), early stop {}",
        victim.num_params(),
        fit.epochs_run,
        fit.best_epoch,
        fit.stopped_early
    );
    let report = evaluate(&victim, &test, None, None, Default::default())?;
    println!("held-out subject: rca {:.3} bca {:.3}", report.rca, report.bca);
    Ok(())
}
