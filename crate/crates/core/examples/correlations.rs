//! Pair and k-level correlations of a lacunary sequence against the
//! i.i.d. expectation `C_k(N) L^(k-1)`.
//!
//! Run: `cargo run --release --example correlations`

use lacunary::harness::experiments::{alpha_bits, sample_alpha};
use lacunary::kernels::ck_factor;
use lacunary::random_model::RngSpec;
use lacunary::stats::{count_moment, k_level_correlation, pair_correlation};
use lacunary::{frac_points, SequenceSpec, WindowParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SequenceSpec::geometric(1.0, 1.5);
    let n = 4096;
    let l = 6.0;
    let w = WindowParams::new(n, l)?;
    let alpha = sample_alpha(1.0, 2.0, alpha_bits(&spec, n), RngSpec::new(3, 0))?;
    let points = frac_points(&spec, &alpha, n)?;

    let r2 = pair_correlation(&points, &w)?;
    println!("R^2 = {:.5} (i.i.d. mean {:.5})", r2.value, ck_factor(2, n)? * l);
    for k in 3..=5 {
        let rk = k_level_correlation(&points, &w, k)?;
        let iid = ck_factor(k, n)? * l.powi(k as i32 - 1);
        println!("R^{k} = {:.4} (i.i.d. mean {:.4})", rk.value, iid);
    }
    for k in 2..=4 {
        println!("E_x[S^{k}] = {:.4}", count_moment(&points, &w, k)?.value);
    }
    Ok(())
}
