//! Distribution of the normalised counting function over window centres.
//!
//! Run: `cargo run --release --example counting_clt`

use lacunary::harness::experiments::{alpha_bits, sample_alpha};
use lacunary::random_model::{iid_points, RngSpec};
use lacunary::stats::{empirical_clt, normal_cdf};
use lacunary::{frac_points, SequenceSpec, WindowParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SequenceSpec::powers_of_two();
    let n = 1 << 14;
    let l = (n as f64).ln().powi(2);
    let w = WindowParams::new(n, l)?;
    let grid = 1 << 20;

    let alpha = sample_alpha(1.0, 2.0, alpha_bits(&spec, n), RngSpec::new(11, 0))?;
    let points = frac_points(&spec, &alpha, n)?;
    let clt = empirical_clt(&points, &w, grid)?;
    println!("N = {n}, L = {l:.2}: KS distance {:.4}", clt.ks_distance);

    for bin in clt.histogram.iter().filter(|b| b.normalized.abs() < 2.0).step_by(3) {
        println!(
            "  z = {:+.2}  mass {:.4}  Phi {:.4}",
            bin.normalized,
            bin.mass,
            normal_cdf(bin.normalized)
        );
    }

    let control = empirical_clt(&iid_points(n, RngSpec::new(11, 1)), &w, grid)?;
    println!("i.i.d. control KS distance {:.4}", control.ks_distance);
    Ok(())
}
