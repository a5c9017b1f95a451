//! Single-trial DeepFool on a binary affine classifier, checked against the
//! closed-form distance to the decision hyperplane.
//!
//! `cargo run --example deepfool_affine`

use uapforge::attacks::deepfool;
use uapforge::{ModelParams, TrialMatrix};

fn main() -> uapforge::Result<()> {
    let w = [0.5, -1.0, 2.0, 0.25, 1.5, -0.75];
    let b = 0.3;
    let x = [1.0, 0.2, 0.8, -0.4, 0.1, 0.6];
    let params = ModelParams::affine_binary(2, 3, &w, b)?;
    let r = deepfool(&params, &TrialMatrix::new(2, 3, x.to_vec())?, 0.0, 50)?;

    let f = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b;
    let w2 = w.iter().map(|v| v * v).sum::<f64>();
    for (i, (ri, wi)) in r.as_slice().iter().zip(&w).enumerate() {
        println!("r[{i}] = {ri:+.9}   closed form {:+.9}", -f / w2 * wi);
    }
    let moved = w.iter().zip(&x).zip(r.as_slice()).map(|((a, b), c)| a * (b + c)).sum::<f64>() + b;
    println!("w.(x + r) + b = {moved:.3e}");
    Ok(())
}
