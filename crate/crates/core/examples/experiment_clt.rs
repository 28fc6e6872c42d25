//! Median KS distance to the normal law along N, with an i.i.d. control.
//!
//! Run: `cargo run --release --example experiment_clt`

use lacunary::harness::{parse_config_str, run_clt};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config_str(
        "experiment = clt\nalpha.samples = 5\nn.list = 1024, 4096, 16384\nl.kind = logpow\nl.param = 2\n",
    )?;
    let report = run_clt(&cfg)?;
    for row in &report.summary {
        println!("{:<8} {:>6} {:<22} {:.4}", row.source, row.n, row.statistic, row.value);
    }
    Ok(())
}
