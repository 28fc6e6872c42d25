//! The i.i.d. reference suite: sample means against exact finite-N values.
//!
//! Run: `cargo run --release --example oracle_suite`

use lacunary::harness::{parse_config_str, run_oracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config_str("experiment = oracle\nn.list = 256, 1024\nl.kind = const\nl.param = 4\n")?;
    let report = run_oracle(&cfg)?;
    for row in report.checks() {
        println!(
            "{:>5} {:<16} mean {:>10.4}  reference {:>10.4}  z {:+.2}  {}",
            row.n,
            row.statistic,
            row.value,
            row.reference.unwrap_or(f64::NAN),
            row.z_score.unwrap_or(f64::NAN),
            if row.passed == Some(true) { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
