//! Weighted mean square of `T_N` over alpha, for growing N.
//!
//! Run: `cargo run --release --example variance_decay`

use lacunary::stats::{vn_estimate, WeightSpec};
use lacunary::{SequenceSpec, WindowParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SequenceSpec::powers_of_two();
    let weight = WeightSpec::bump(1.5, 0.5)?;
    let mut prev: Option<(usize, f64)> = None;
    for n in [128, 256, 512] {
        let w = WindowParams::new(n, 4.0)?;
        let v = vn_estimate(&spec, &w, &weight, 100, 0.5)?;
        print!("N = {n:4}: V_N = {:.4e} +- {:.1e}", v.value, v.mc_std_error);
        if let Some((n0, v0)) = prev {
            let slope = (v.value / v0).ln() / (n as f64 / n0 as f64).ln();
            print!("  local slope {slope:+.2}");
        }
        println!();
        prev = Some((n, v.value));
    }
    Ok(())
}
