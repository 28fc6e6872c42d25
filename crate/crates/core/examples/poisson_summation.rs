//! Real-space pair correlation against its Fourier form
//! `R^2 = L - L/N + T_N`, and the Fejer partial sums.
//!
//! Run: `cargo run --release --example poisson_summation`

use lacunary::harness::experiments::{alpha_bits, sample_alpha};
use lacunary::random_model::RngSpec;
use lacunary::stats::{
    fourier_sum_bound, fourier_sum_check, fourier_sum_extrapolated, pair_correlation, t_n_fourier,
};
use lacunary::{frac_points, SequenceSpec, WindowParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SequenceSpec::powers_of_two();
    let (n, l) = (512, 8.0);
    let w = WindowParams::new(n, l)?;
    for seed in 0..3 {
        let alpha = sample_alpha(1.0, 2.0, alpha_bits(&spec, n), RngSpec::new(seed, 0))?;
        let points = frac_points(&spec, &alpha, n)?;
        let r2 = pair_correlation(&points, &w)?.value;
        let t = t_n_fourier(&spec, &alpha, &w, 0.01)?;
        let gap = (r2 - (l - l / n as f64 + t.value)).abs();
        println!(
            "alpha ~ {:.6}: R^2 = {r2:.6}, T_N = {:.6}, gap = {gap:.2e} <= bound {:.2e}",
            alpha.to_f64(),
            t.value,
            t.truncation_bound
        );
    }

    for (n, l, m) in [(10, 2.0, 10_000u64), (100, 10.0, 100_000), (1000, 25.0, 1_000_000)] {
        let w = WindowParams::new(n, l)?;
        let s = fourier_sum_check(&w, m)?;
        println!(
            "N = {n}, L = {l}, M = {m}: sum = {s:.9}, N/L = {}, bound {:.2e}, extrapolated {:.9}",
            n as f64 / l,
            fourier_sum_bound(&w, m),
            fourier_sum_extrapolated(&w, m)?
        );
    }
    Ok(())
}
