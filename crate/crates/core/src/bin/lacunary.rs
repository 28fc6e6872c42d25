//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error,
//! 4 I/O error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lacunary::harness::{
    emit_report, parse_config, run_experiment, run_oracle, ExperimentConfig, ExperimentKind,
    ExperimentReport, HarnessError, OutputFormat,
};
use lacunary::random_model::{iid_points, RngSpec};
use lacunary::sequence::{fixed_to_decimal, frac_points, parse_alpha, SequenceKind, SequenceSpec};
use lacunary::stats::{
    count_moment, counting_function, empirical_clt, k_level_correlation, number_variance_exact,
    number_variance_mc, pair_correlation, t_n_fourier, StatResult, WindowParams,
};
use lacunary::{BigFloat, FracPointSet};

#[derive(Parser)]
#[command(name = "lacunary", version, about = "Statistics of fractional parts of lacunary sequences")]
struct Cli {
    /// Experiment config file (key = value lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the sorted fractional parts {alpha a_n}, n = 1..N.
    Gen(GenArgs),
    /// Compute one statistic of {alpha a_n} (or of i.i.d. points).
    Stat(StatArgs),
    /// Run the experiment described by --config.
    Experiment,
    /// Run the i.i.d. oracle suite (--config optional).
    Oracle,
}

#[derive(Args)]
struct SequenceArgs {
    /// geometric, geometric-plus-poly or custom-ratios.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    poly_degree: Option<u32>,
    /// Comma-separated ratios for custom-ratios.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Multiplier alpha, decimal or hex (0x...p...).
    #[arg(long, default_value = "1")]
    alpha: String,
    /// Use N i.i.d. uniform points (stream --stream) instead of a sequence.
    #[arg(long)]
    iid: bool,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Number of points.
    #[arg(short = 'n', long)]
    n: usize,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    seq: SequenceArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Statistic {
    Count,
    Variance,
    VarianceMc,
    Pair,
    KLevel,
    Moment,
    Tn,
    Clt,
}

#[derive(Args)]
struct StatArgs {
    #[arg(value_enum)]
    statistic: Statistic,
    #[command(flatten)]
    seq: SequenceArgs,
    /// Intensity L (window length L/N).
    #[arg(short = 'l', long)]
    l: f64,
    /// Order for k-level and moment.
    #[arg(short = 'k', long, default_value_t = 2)]
    k: usize,
    /// Window centre for count.
    #[arg(short = 'x', long, default_value_t = 0.0)]
    x: f64,
    /// Monte Carlo samples for variance-mc.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Truncation tolerance for tn.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    /// Grid size for clt.
    #[arg(long, default_value_t = 1 << 20)]
    grid: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| HarnessError::Validation(format!("--threads: {e}")))?;
    }
    let config = cli.config.as_ref().map(parse_config).transpose()?;
    match &cli.command {
        Command::Gen(args) => gen(cli, config.as_ref(), args),
        Command::Stat(args) => stat(cli, config.as_ref(), args),
        Command::Experiment => {
            let cfg = config.ok_or_else(|| {
                HarnessError::Validation("experiment needs --config PATH".into())
            })?;
            let cfg = apply_overrides(cli, cfg)?;
            let report = run_experiment(&cfg)?;
            deliver(cli, &cfg, &report)
        }
        Command::Oracle => {
            let cfg = config.unwrap_or_else(|| ExperimentConfig::defaults(ExperimentKind::Oracle));
            if cfg.experiment != ExperimentKind::Oracle {
                return Err(HarnessError::Validation(format!(
                    "oracle needs `experiment = oracle`, config has `{}`",
                    cfg.experiment.as_str()
                )));
            }
            let cfg = apply_overrides(cli, cfg)?;
            let report = run_oracle(&cfg)?;
            deliver(cli, &cfg, &report)
        }
    }
}

fn apply_overrides(cli: &Cli, mut cfg: ExperimentConfig) -> Result<ExperimentConfig, HarnessError> {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.format = f.into();
    }
    if let Some(out) = &cli.out {
        cfg.output_path = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn deliver(cli: &Cli, cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<(), HarnessError> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for row in report.checks() {
        let verdict = if row.passed == Some(true) { "PASS" } else { "FAIL" };
        eprintln!("{verdict} {} n={} value={}", row.statistic, row.n, row.value);
    }
    match &cfg.output_path {
        Some(path) => {
            for p in emit_report(report, path, cfg.format)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        None => {
            let text = match cfg.format {
                OutputFormat::Csv => report.records_csv()?,
                OutputFormat::Json => report.to_json()?,
            };
            write_out(cli, &text)
        }
    }
}

fn write_out(cli: &Cli, text: &str) -> Result<(), HarnessError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| HarnessError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn format_of(cli: &Cli, config: Option<&ExperimentConfig>) -> OutputFormat {
    cli.format
        .map(OutputFormat::from)
        .or(config.map(|c| c.format))
        .unwrap_or(OutputFormat::Csv)
}

fn sequence_spec(config: Option<&ExperimentConfig>, args: &SequenceArgs) -> Result<SequenceSpec, HarnessError> {
    let mut spec = config.map_or_else(SequenceSpec::powers_of_two, |c| c.sequence.clone());
    if let Some(kind) = &args.kind {
        spec.kind = kind.parse::<SequenceKind>()?;
    }
    if let Some(a1) = args.a1 {
        spec.a1 = a1;
    }
    if let Some(r) = args.ratio {
        spec.ratio = r;
    }
    if let Some(d) = args.poly_degree {
        spec.poly_degree = d;
    }
    if let Some(r) = &args.ratios {
        spec.ratios = r.clone();
    }
    spec.validate()?;
    Ok(spec)
}

struct Points {
    set: FracPointSet,
    spec: Option<SequenceSpec>,
    alpha: Option<BigFloat>,
}

fn points(cli: &Cli, config: Option<&ExperimentConfig>, args: &SequenceArgs) -> Result<Points, HarnessError> {
    if args.n == 0 {
        return Err(HarnessError::Validation("-n must be at least 1".into()));
    }
    if args.iid {
        let seed = cli.seed.or(config.map(|c| c.seed)).unwrap_or(0);
        return Ok(Points {
            set: iid_points(args.n, RngSpec::new(seed, args.stream)),
            spec: None,
            alpha: None,
        });
    }
    let spec = sequence_spec(config, args)?;
    let alpha = parse_alpha(&args.alpha, &spec, args.n)?;
    let set = frac_points(&spec, &alpha, args.n)?;
    Ok(Points {
        set,
        spec: Some(spec),
        alpha: Some(alpha),
    })
}

#[derive(Serialize)]
struct GenJson {
    schema: u32,
    n: usize,
    alpha: Option<String>,
    precision_bits: u32,
    max_abs_error: f64,
    points: Vec<String>,
}

fn gen(cli: &Cli, config: Option<&ExperimentConfig>, args: &GenArgs) -> Result<(), HarnessError> {
    let p = points(cli, config, &args.seq)?;
    let text = match format_of(cli, config) {
        OutputFormat::Csv => p.set.to_csv(),
        OutputFormat::Json => {
            let doc = GenJson {
                schema: 1,
                n: p.set.n_points(),
                alpha: p.alpha.as_ref().map(BigFloat::to_hex),
                precision_bits: p.set.precision_bits(),
                max_abs_error: p.set.max_abs_error(),
                points: p.set.fixed().iter().map(|&v| fixed_to_decimal(v, 20)).collect(),
            };
            json(&doc)?
        }
    };
    write_out(cli, &text)
}

#[derive(Serialize)]
struct StatRow {
    statistic: String,
    n: usize,
    l: f64,
    alpha: String,
    value: f64,
    truncation_bound: f64,
    mc_std_error: f64,
    method: String,
}

fn json<T: Serialize>(v: &T) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn stat(cli: &Cli, config: Option<&ExperimentConfig>, args: &StatArgs) -> Result<(), HarnessError> {
    let p = points(cli, config, &args.seq)?;
    let w = WindowParams::new(args.seq.n, args.l)?;
    let (name, result): (String, StatResult) = match args.statistic {
        Statistic::Count => (
            "count".into(),
            StatResult::exact(counting_function(&p.set, &w, args.x)? as f64),
        ),
        Statistic::Variance => ("number_variance".into(), number_variance_exact(&p.set, &w)?),
        Statistic::VarianceMc => {
            let seed = cli.seed.or(config.map(|c| c.seed)).unwrap_or(0);
            (
                "number_variance_mc".into(),
                number_variance_mc(&p.set, &w, args.samples, seed)?,
            )
        }
        Statistic::Pair => ("r2".into(), pair_correlation(&p.set, &w)?),
        Statistic::KLevel => (
            format!("r{}", args.k),
            k_level_correlation(&p.set, &w, args.k)?,
        ),
        Statistic::Moment => (
            format!("count_moment_{}", args.k),
            count_moment(&p.set, &w, args.k)?,
        ),
        Statistic::Tn => match (&p.spec, &p.alpha) {
            (Some(spec), Some(alpha)) => ("t_n".into(), t_n_fourier(spec, alpha, &w, args.tol)?),
            _ => {
                return Err(HarnessError::Validation(
                    "tn needs a sequence, not --iid".into(),
                ))
            }
        },
        Statistic::Clt => (
            "ks_distance".into(),
            StatResult::exact(empirical_clt(&p.set, &w, args.grid)?.ks_distance),
        ),
    };
    let row = StatRow {
        statistic: name,
        n: args.seq.n,
        l: args.l,
        alpha: p.alpha.as_ref().map(BigFloat::to_hex).unwrap_or_default(),
        value: result.value,
        truncation_bound: result.truncation_bound,
        mc_std_error: result.mc_std_error,
        method: result.method.as_str().into(),
    };
    let text = match format_of(cli, config) {
        OutputFormat::Json => json(&row)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&row)
                .map_err(|e| HarnessError::Serialize(e.to_string()))?;
            let bytes = w
                .into_inner()
                .map_err(|e| HarnessError::Serialize(e.to_string()))?;
            String::from_utf8_lossy(&bytes).into_owned()
        }
    };
    write_out(cli, &text)
}
