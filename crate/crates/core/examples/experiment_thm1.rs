//! Deviation of the number variance from L over random alpha, written as
//! CSV with a summary file and gnuplot script.
//!
//! Run: `cargo run --release --example experiment_thm1 [OUT_DIR]`

use lacunary::harness::{emit_report, parse_config_str, run_thm1, OutputFormat};

const CONFIG: &str = "\
experiment = thm1
sequence.kind = geometric
sequence.a1 = 2
sequence.ratio = 2
alpha.lo = 1
alpha.hi = 2
alpha.samples = 50
n.list = 256, 1024, 4096
l.kind = power
l.param = 0.4
delta = 0.25
seed = 1
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config_str(CONFIG)?;
    let report = run_thm1(&cfg)?;
    for row in &report.summary {
        println!("{:>5} {:<26} {:.4}", row.n, row.statistic, row.value);
    }
    let dir = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string());
    let path = std::path::Path::new(&dir).join("thm1.csv");
    for p in emit_report(&report, &path, OutputFormat::Csv)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
