//! Fractional parts `{alpha a_n}` at guaranteed precision.
//!
//! Run: `cargo run --example fractional_parts`

use lacunary::sequence::{
    build_sequence, fixed_to_decimal, frac_points, parse_alpha, required_precision,
};
use lacunary::{BigFloat, SequenceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SequenceSpec::powers_of_two();
    let n = 2000;

    // A decimal alpha is rounded to as many bits as the first n terms need.
    let alpha = parse_alpha("1.4142135623730950488016887242096980785696", &spec, n)?;
    println!(
        "alpha carries {} significant bits; working precision for N = {n}: {} bits",
        alpha.precision_bits(),
        required_precision(&spec, 2.0, n)
    );

    let points = frac_points(&spec, &alpha, n)?;
    println!("first five sorted points (error <= {:e}):", points.max_abs_error());
    for &v in points.fixed().iter().take(5) {
        println!("  {}", fixed_to_decimal(v, 20));
    }

    // The same alpha read as an f64 is a 53-bit dyadic, and {alpha 2^n}
    // vanishes once n passes its last bit.
    let short = BigFloat::from_f64(std::f64::consts::SQRT_2).unwrap();
    let collapsed = frac_points(&spec, &short, n)?;
    let zeros = collapsed.fixed().iter().filter(|&&v| v == 0).count();
    println!("with an f64 alpha, {zeros} of {n} points sit exactly at 0");

    let other = SequenceSpec::geometric_plus_poly(1.0, 3.0, 2);
    let terms = build_sequence(&other, 5)?;
    let shown: Vec<String> = terms.iter().map(|t| t.to_f64().to_string()).collect();
    println!("a_n = 3^(n-1) + n^2: {}", shown.join(", "));
    Ok(())
}
