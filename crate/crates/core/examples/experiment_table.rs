//! White-box and gray-box table on synthetic 2-class data: clean baseline,
//! clipped-noise baseline, DeepFool-UAP, TLM-UAP, channel-invariant TLM-UAP
//! and a UAP transferred from an affine substitute.
//!
//! `cargo run --release --example experiment_table -- [seed] [folds]`

use uapforge::attacks::{AttackConfig, CraftMethod, UapMode};
use uapforge::eval::{report_csv, run_experiment, AttackSpec, ExperimentDescriptor};
use uapforge::ModelSpec;

fn main() -> uapforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let folds = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let base = ExperimentDescriptor::default();
    let tlm = AttackConfig::tlm();
    let desc = ExperimentDescriptor {
        seed,
        max_folds: Some(folds),
        xi_relative_to_std: true,
        attacks: vec![
            AttackSpec::Noise { name: "noise".into(), config: tlm.clone() },
            AttackSpec::WhiteBox { name: "df_uap".into(), method: CraftMethod::DeepFool, config: AttackConfig::deepfool_uap() },
            AttackSpec::WhiteBox { name: "tlm_uap".into(), method: CraftMethod::Tlm, config: tlm.clone() },
            AttackSpec::WhiteBox {
                name: "tlm_channel_invariant".into(),
                method: CraftMethod::Tlm,
                config: AttackConfig { mode: UapMode::ChannelInvariant, ..tlm.clone() },
            },
            AttackSpec::GrayBox {
                name: "gray_affine_tlm".into(),
                substitute: ModelSpec::affine(base.data.channels, base.data.samples, base.data.num_classes),
                method: CraftMethod::Tlm,
                config: tlm,
            },
        ],
        ..base
    };
    print!("{}", report_csv(&run_experiment(&desc)?));
    Ok(())
}
