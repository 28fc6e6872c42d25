//! Number variance: exact (through the pair correlation), Monte Carlo,
//! and the i.i.d. reference `L (1 - L/N)`.
//!
//! Run: `cargo run --release --example number_variance`

use lacunary::harness::experiments::{alpha_bits, sample_alpha};
use lacunary::random_model::{binomial_variance_reference, iid_points, RngSpec};
use lacunary::stats::{counting_function, mean_count, number_variance_exact, number_variance_mc};
use lacunary::{frac_points, SequenceSpec, WindowParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SequenceSpec::powers_of_two();
    let n = 1024;
    let w = WindowParams::new(n, 8.0)?;
    let alpha = sample_alpha(1.0, 2.0, alpha_bits(&spec, n), RngSpec::new(7, 0))?;
    let points = frac_points(&spec, &alpha, n)?;

    println!("S_N(0.5) = {}", counting_function(&points, &w, 0.5)?);
    println!("mean count = {}", mean_count(&points, &w)?);

    let exact = number_variance_exact(&points, &w)?;
    let mc = number_variance_mc(&points, &w, 100_000, 1)?;
    println!("Sigma^2 exact = {:.6}", exact.value);
    println!(
        "Sigma^2 MC    = {:.6} +- {:.6} ({} sigma apart)",
        mc.value,
        mc.mc_std_error,
        ((mc.value - exact.value) / mc.mc_std_error).abs()
    );

    let iid = iid_points(n, RngSpec::new(7, 1));
    println!(
        "i.i.d. Sigma^2 = {:.6}, reference L(1 - L/N) = {}",
        number_variance_exact(&iid, &w)?.value,
        binomial_variance_reference(n, 8.0)
    );
    Ok(())
}
