//! Attack strength against the perturbation budget: TLM-UAP RCA for a
//! range of xi values (relative to the data std).
//!
//! `cargo run --release --example sweep_xi -- [seed]`

use uapforge::attacks::{AttackConfig, CraftMethod};
use uapforge::eval::{run_experiment, AttackSpec, ExperimentDescriptor};

fn main() -> uapforge::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    println!("xi,clean_rca,rca,asr,spr_db");
    for xi in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let desc = ExperimentDescriptor {
            seed,
            max_folds: Some(1),
            xi_relative_to_std: true,
            attacks: vec![AttackSpec::WhiteBox {
                name: "tlm".into(),
                method: CraftMethod::Tlm,
                config: AttackConfig { xi, ..AttackConfig::tlm() },
            }],
            ..ExperimentDescriptor::default()
        };
        let rows = run_experiment(&desc)?;
        let (clean, tlm) = (&rows[0].report, &rows[1].report);
        println!("{xi},{:.4},{:.4},{:.4},{:.2}", clean.rca, tlm.rca, tlm.asr, tlm.spr_db);
    }
    Ok(())
}
