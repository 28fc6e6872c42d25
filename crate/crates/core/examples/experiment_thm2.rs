//! Number variance along N for fixed alpha.
//!
//! Run: `cargo run --release --example experiment_thm2`

use lacunary::harness::{parse_config_str, run_thm2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for schedule in ["power:0.3", "const:4"] {
        let text = format!(
            "experiment = thm2\nalpha.samples = 10\nn.list = 256, 512, 1024, 2048, 4096, 8192\nl.kind = {schedule}\nseed = 5\n"
        );
        let report = run_thm2(&parse_config_str(&text)?)?;
        println!("L schedule {schedule}");
        for row in &report.summary {
            println!("  {:>5} {:<20} {:.4}", row.n, row.statistic, row.value);
        }
    }
    Ok(())
}
