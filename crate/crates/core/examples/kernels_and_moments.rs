//! Tent and Fejer kernels, Stirling numbers and Poisson / normal moments.
//!
//! Run: `cargo run --example kernels_and_moments`

use lacunary::kernels::{
    delta_k, normal_moment, normalized_poisson_mgf, poisson_moment, stirling2, tent, tent_hat,
    MomentTable,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("tent(0.25) = {}, tent_hat(0.5) = {:.6}", tent(0.25), tent_hat(0.5));
    println!("Delta_3(0.1, -0.2, 0.4) = {}", delta_k(&[0.1, -0.2, 0.4])?);

    println!("Stirling numbers S(6, j):");
    for j in 0..=6 {
        print!(" {}", stirling2(6, j)?);
    }
    println!();

    let l = 2.5;
    let table = MomentTable::new(6, l)?;
    println!("k  Poisson(L={l})  normal");
    for k in 1..=6u32 {
        println!(
            "{k}  {:>12.4}  {:>6}",
            table.poisson[k as usize - 1],
            normal_moment(k)
        );
    }
    assert_eq!(poisson_moment(3, l)?, table.poisson[2]);

    // E exp(t (X - L)/sqrt(L)) -> exp(t^2/2) as L grows
    for l in [1.0, 100.0, 1e6] {
        println!(
            "normalized Poisson mgf at t = 1, L = {l:e}: {:.6} (limit {:.6})",
            normalized_poisson_mgf(1.0, l)?,
            0.5f64.exp()
        );
    }
    Ok(())
}
