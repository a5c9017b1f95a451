//! Writes and reads back the three on-disk formats: the binary trial file
//! with its JSON sidecar, model JSON and the binary UAP file.
//!
//! `cargo run --example file_formats -- [dir]`

use std::path::PathBuf;

use uapforge::attacks::{load_uap, save_uap};
use uapforge::data::{gen_synthetic, read_trials, write_trials};
use uapforge::diffmodel::{load_model, save_model};
use uapforge::{ModelParams, ModelSpec, NormOrder, SynthConfig, Uap, UapMode};

fn main() -> uapforge::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let set = gen_synthetic(&SynthConfig { trials_per_class: 10, ..SynthConfig::default() })?;
    let trials = dir.join("example.eegb");
    write_trials(&set, &trials)?;
    println!("{}: {} trials, equal after reload: {}", trials.display(), set.len(), read_trials(&trials)? == set);

    let params = ModelParams::init(&ModelSpec::small_cnn(set.channels(), set.samples(), 2), 1)?;
    let model = dir.join("example-model.json");
    save_model(&params, &model)?;
    println!("{}: {} parameters, equal after reload: {}", model.display(), params.num_params(), load_model(&model)? == params);

    let values: Vec<f64> = (0..set.samples()).map(|i| 0.1 * (i as f64 / 5.0).sin()).collect();
    let uap = Uap::new(UapMode::ChannelInvariant, 1, set.samples(), values, 0.1, NormOrder::Inf)?;
    let file = dir.join("example.uapf");
    save_uap(&uap, &file)?;
    println!("{}: shape {:?}, equal after reload: {}", file.display(), uap.shape(), load_uap(&file)? == uap);
    Ok(())
}
