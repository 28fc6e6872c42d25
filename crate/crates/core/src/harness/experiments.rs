//! Experiment runners. Each returns an [`ExperimentReport`] whose records
//! appear in config order (replicate-major, then N) whatever the thread
//! count.
//!
//! Random streams, all under the config seed:
//! - alpha draw for replicate `i`: stream `i`;
//! - i.i.d. point set for replicate (or trial) `i` at the `j`-th N:
//!   stream `IID_STREAM_BASE + (j << 32) + i`.

use std::time::Instant;

use num_bigint::{BigInt, BigUint, Sign};
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{ExperimentReport, Record, SummaryRow};
use super::HarnessError;
use crate::bigfloat::BigFloat;
use crate::kernels::{ck_factor, poisson_moment, stirling2};
use crate::random_model::{binomial_variance_reference, iid_points, RngSpec};
use crate::sequence::{
    fractional_parts_wide, narrow, required_precision, wide_precision, FracPointSet, SequenceKind,
    SequenceSpec,
};
use crate::stats::{
    count_moment, empirical_clt, k_level_correlation, number_variance_exact, pair_correlation,
    Method, WindowParams,
};

/// Minimum number of random bits in a sampled alpha.
pub const ALPHA_MIN_BITS: u32 = 256;
/// Random bits in a sampled alpha beyond the precision the largest N needs.
pub const ALPHA_EXTRA_BITS: u32 = 64;
/// First stream used for i.i.d. point sets.
pub const IID_STREAM_BASE: u64 = 1 << 63;

/// Random bits used for alpha when the largest N is `n_max`.
///
/// A dyadic alpha with `b` bits has `{alpha 2^n} = 0` for `n >= b`, so the
/// bit count must grow with `log2 a_N`.
pub fn alpha_bits(spec: &SequenceSpec, n_max: usize) -> u32 {
    (required_precision(spec, 1.0, n_max) + ALPHA_EXTRA_BITS).max(ALPHA_MIN_BITS)
}

/// `lo + (hi - lo) U` with `U` uniform on the dyadic grid of step
/// `2^-bits` (rounded up to a multiple of 64), computed exactly.
pub fn sample_alpha(lo: f64, hi: f64, bits: u32, rng: RngSpec) -> Result<BigFloat, HarnessError> {
    let (lo_b, hi_b) = match (BigFloat::from_f64(lo), BigFloat::from_f64(hi)) {
        (Some(a), Some(b)) if hi > lo => (a, b),
        _ => {
            return Err(HarnessError::Validation(format!(
                "alpha interval [{lo}, {hi}] must be finite with positive length"
            )))
        }
    };
    let words = bits.div_ceil(64) as usize;
    let mut gen = rng.generator();
    let mut digits: Vec<u32> = Vec::with_capacity(2 * words);
    for _ in 0..words {
        let w = gen.next_u64();
        digits.push(w as u32);
        digits.push((w >> 32) as u32);
    }
    let u = BigFloat::from_parts(
        BigInt::from_biguint(Sign::Plus, BigUint::new(digits)),
        -(64 * words as i64),
    );
    Ok(lo_b.add(&hi_b.sub(&lo_b).mul(&u)))
}

/// Short label such as `geometric(a1=2,C=2)`.
pub fn sequence_label(spec: &SequenceSpec) -> String {
    match spec.kind {
        SequenceKind::Geometric => format!("geometric(a1={},C={})", spec.a1, spec.ratio),
        SequenceKind::GeometricPlusPoly => format!(
            "geometric-plus-poly(a1={},C={},d={})",
            spec.a1, spec.ratio, spec.poly_degree
        ),
        SequenceKind::CustomRatios => {
            let r: Vec<String> = spec.ratios.iter().map(|r| r.to_string()).collect();
            format!("custom-ratios(a1={},r={})", spec.a1, r.join(";"))
        }
    }
}

/// Sorted point sets for every N in `n_list` (increasing), computed from
/// one pass at the largest N and its prefixes.
pub fn prefix_point_sets(
    spec: &SequenceSpec,
    alpha: &BigFloat,
    n_list: &[usize],
) -> Result<Vec<FracPointSet>, HarnessError> {
    let n_max = *n_list
        .last()
        .ok_or_else(|| HarnessError::Validation("n.list must not be empty".into()))?;
    let bits = wide_precision(spec, alpha, n_max);
    let bits = u32::try_from(bits).map_err(|_| crate::sequence::SequenceError::PrecisionExhausted {
        requested: bits,
        max: crate::sequence::MAX_PRECISION_BITS,
    })?;
    let wide = fractional_parts_wide(spec, alpha, n_max, bits)?;
    let narrowed: Vec<u64> = wide.into_iter().map(narrow).collect();
    Ok(n_list
        .iter()
        .map(|&n| {
            FracPointSet::from_fixed(narrowed[..n].to_vec())
                .with_alpha(Some(alpha.clone()))
                .with_precision(bits, 2f64.powi(-64))
        })
        .collect())
}

fn iid_stream(n_index: usize, replicate: usize) -> u64 {
    IID_STREAM_BASE + ((n_index as u64) << 32) + replicate as u64
}

/// Fields shared by every record of one cell.
struct CellMeta<'a> {
    cfg: &'a ExperimentConfig,
    source: &'static str,
    sequence: String,
    n: usize,
    l: f64,
    replicate: usize,
    stream: u64,
    alpha: Option<&'a BigFloat>,
    precision_bits: u32,
}

impl CellMeta<'_> {
    fn record(&self, statistic: &str, value: f64, method: Method) -> Record {
        Record {
            experiment: self.cfg.experiment.as_str().into(),
            source: self.source.into(),
            sequence: self.sequence.clone(),
            n: self.n,
            l: self.l,
            replicate: self.replicate,
            seed: self.cfg.seed,
            stream: self.stream,
            alpha: self.alpha.map(|a| a.to_hex()).unwrap_or_default(),
            alpha_approx: self.alpha.map(|a| a.to_f64()),
            precision_bits: self.precision_bits,
            statistic: statistic.into(),
            value,
            reference: None,
            z_score: None,
            error_bound: 0.0,
            method: method.as_str().into(),
            passed: None,
        }
    }
}

fn summary_row(
    cfg: &ExperimentConfig,
    source: &str,
    n: usize,
    l: f64,
    statistic: &str,
    value: f64,
    samples: usize,
) -> SummaryRow {
    SummaryRow {
        experiment: cfg.experiment.as_str().into(),
        source: source.into(),
        n,
        l,
        statistic: statistic.into(),
        value,
        reference: None,
        z_score: None,
        samples,
        passed: None,
        note: String::new(),
    }
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<(), HarnessError> {
    if cfg.experiment != kind {
        return Err(HarnessError::Validation(format!(
            "config is for experiment `{}`, not `{}`",
            cfg.experiment.as_str(),
            kind.as_str()
        )));
    }
    cfg.validate()
}

fn finish(
    cfg: &ExperimentConfig,
    records: Vec<Record>,
    summary: Vec<SummaryRow>,
    start: Instant,
) -> ExperimentReport {
    ExperimentReport {
        config: cfg.clone(),
        records,
        summary,
        warnings: cfg.warnings(),
        wall_time_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn alphas(cfg: &ExperimentConfig) -> Result<Vec<BigFloat>, HarnessError> {
    let n_max = *cfg.n_list.last().unwrap_or(&1);
    let bits = alpha_bits(&cfg.sequence, n_max);
    (0..cfg.alpha_samples)
        .map(|i| {
            sample_alpha(
                cfg.alpha_interval.0,
                cfg.alpha_interval.1,
                bits,
                RngSpec::new(cfg.seed, i as u64),
            )
        })
        .collect()
}

/// `Sigma^2 / L` for one alpha at every N in the list.
fn variance_ratios(
    cfg: &ExperimentConfig,
    replicate: usize,
    alpha: &BigFloat,
) -> Result<Vec<Record>, HarnessError> {
    let sets = prefix_point_sets(&cfg.sequence, alpha, &cfg.n_list)?;
    let label = sequence_label(&cfg.sequence);
    let mut out = Vec::with_capacity(sets.len());
    for (points, &n) in sets.iter().zip(&cfg.n_list) {
        let l = cfg.l_schedule.l_of(n);
        let w = WindowParams::new(n, l)?;
        let sigma2 = number_variance_exact(points, &w)?;
        let meta = CellMeta {
            cfg,
            source: "lacunary",
            sequence: label.clone(),
            n,
            l,
            replicate,
            stream: replicate as u64,
            alpha: Some(alpha),
            precision_bits: points.precision_bits(),
        };
        let ratio = sigma2.value / l;
        let mut r = meta.record("sigma2_over_l", ratio, Method::Exact);
        r.reference = Some(1.0);
        if cfg.experiment == ExperimentKind::Thm1 {
            r.passed = Some((ratio - 1.0).abs() <= cfg.delta);
        }
        out.push(r);
    }
    Ok(out)
}

fn par_replicates<T, F>(count: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// For each N, the fraction of sampled alpha with `|Sigma^2/L - 1| > delta`.
pub fn run_thm1(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    expect_kind(cfg, ExperimentKind::Thm1)?;
    let start = Instant::now();
    let alphas = alphas(cfg)?;
    let per_alpha = par_replicates(alphas.len(), |i| variance_ratios(cfg, i, &alphas[i]))?;
    let records: Vec<Record> = per_alpha.into_iter().flatten().collect();

    let mut summary = Vec::new();
    let mut fractions = Vec::new();
    for &n in &cfg.n_list {
        let cell: Vec<&Record> = records.iter().filter(|r| r.n == n).collect();
        let exceed = cell.iter().filter(|r| r.passed == Some(false)).count();
        let frac = exceed as f64 / cell.len() as f64;
        fractions.push(frac);
        let l = cfg.l_schedule.l_of(n);
        let mut row = summary_row(cfg, "lacunary", n, l, "exceedance_fraction", frac, cell.len());
        row.note = format!("delta = {}", cfg.delta);
        summary.push(row);
        let devs: Vec<f64> = cell.iter().map(|r| (r.value - 1.0).abs()).collect();
        summary.push(summary_row(
            cfg,
            "lacunary",
            n,
            l,
            "median_deviation",
            median(&devs),
            cell.len(),
        ));
    }
    if fractions.len() > 1 {
        let ok = fractions.windows(2).all(|w| w[1] <= w[0]);
        let mut row = summary_row(
            cfg,
            "lacunary",
            0,
            0.0,
            "exceedance_nonincreasing",
            if ok { 1.0 } else { 0.0 },
            cfg.alpha_samples,
        );
        row.passed = Some(ok);
        row.note = "exceedance fraction non-increasing along n.list".into();
        summary.push(row);
    }
    Ok(finish(cfg, records, summary, start))
}

/// For each fixed alpha, `Sigma^2/L` along the N list; compares the worst
/// deviation from 1 over the first half of the list with the tail half.
pub fn run_thm2(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    expect_kind(cfg, ExperimentKind::Thm2)?;
    let start = Instant::now();
    let alphas = alphas(cfg)?;
    let per_alpha = par_replicates(alphas.len(), |i| variance_ratios(cfg, i, &alphas[i]))?;

    let k = cfg.n_list.len();
    let head_len = k / 2;
    let mut head_max = Vec::new();
    let mut tail_max = Vec::new();
    for recs in &per_alpha {
        let devs: Vec<f64> = recs.iter().map(|r| (r.value - 1.0).abs()).collect();
        tail_max.push(devs[head_len..].iter().copied().fold(0.0, f64::max));
        if head_len > 0 {
            head_max.push(devs[..head_len].iter().copied().fold(0.0, f64::max));
        }
    }
    let records: Vec<Record> = per_alpha.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for &n in &cfg.n_list {
        let devs: Vec<f64> = records
            .iter()
            .filter(|r| r.n == n)
            .map(|r| (r.value - 1.0).abs())
            .collect();
        summary.push(summary_row(
            cfg,
            "lacunary",
            n,
            cfg.l_schedule.l_of(n),
            "median_deviation",
            median(&devs),
            devs.len(),
        ));
    }
    let tail = median(&tail_max);
    let mut row = summary_row(cfg, "lacunary", 0, 0.0, "tail_max_deviation", tail, tail_max.len());
    row.note = format!("median over alpha of max |Sigma^2/L - 1| over the last {} N", k - head_len);
    summary.push(row);
    if head_len > 0 {
        let head = median(&head_max);
        let mut row =
            summary_row(cfg, "lacunary", 0, 0.0, "head_max_deviation", head, head_max.len());
        row.note = format!("median over alpha of max |Sigma^2/L - 1| over the first {head_len} N");
        summary.push(row);
        let mut row = summary_row(
            cfg,
            "lacunary",
            0,
            0.0,
            "tail_below_head",
            if tail < head { 1.0 } else { 0.0 },
            head_max.len(),
        );
        row.passed = Some(tail < head);
        summary.push(row);
    }
    Ok(finish(cfg, records, summary, start))
}

/// KS distance of the normalised counting function to N(0, 1) for each
/// alpha replicate and N, with an i.i.d. control at the same (N, L).
pub fn run_clt(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    expect_kind(cfg, ExperimentKind::Clt)?;
    let start = Instant::now();
    let alphas = alphas(cfg)?;
    let label = sequence_label(&cfg.sequence);
    let per_alpha = par_replicates(alphas.len(), |i| {
        let alpha = &alphas[i];
        let sets = prefix_point_sets(&cfg.sequence, alpha, &cfg.n_list)?;
        let mut out = Vec::with_capacity(2 * sets.len());
        for (j, (points, &n)) in sets.iter().zip(&cfg.n_list).enumerate() {
            let l = cfg.l_schedule.l_of(n);
            let w = WindowParams::new(n, l)?;
            let meta = CellMeta {
                cfg,
                source: "lacunary",
                sequence: label.clone(),
                n,
                l,
                replicate: i,
                stream: i as u64,
                alpha: Some(alpha),
                precision_bits: points.precision_bits(),
            };
            let ks = empirical_clt(points, &w, cfg.grid)?.ks_distance;
            out.push(meta.record("ks_distance", ks, Method::Exact));

            let stream = iid_stream(j, i);
            let control = iid_points(n, RngSpec::new(cfg.seed, stream));
            let meta = CellMeta {
                source: "iid",
                sequence: "iid-uniform".into(),
                stream,
                alpha: None,
                precision_bits: 64,
                ..meta
            };
            let ks = empirical_clt(&control, &w, cfg.grid)?.ks_distance;
            out.push(meta.record("ks_distance", ks, Method::Exact));
        }
        Ok(out)
    })?;
    let records: Vec<Record> = per_alpha.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for source in ["lacunary", "iid"] {
        let mut medians = Vec::new();
        for &n in &cfg.n_list {
            let ks: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n && r.source == source)
                .map(|r| r.value)
                .collect();
            let m = median(&ks);
            medians.push(m);
            let mut row =
                summary_row(cfg, source, n, cfg.l_schedule.l_of(n), "median_ks", m, ks.len());
            row.note = format!("grid = {}", cfg.grid);
            summary.push(row);
        }
        if medians.len() > 1 {
            let ok = medians.windows(2).all(|w| w[1] < w[0]);
            let mut row = summary_row(
                cfg,
                source,
                0,
                0.0,
                "median_ks_decreasing",
                if ok { 1.0 } else { 0.0 },
                cfg.alpha_samples,
            );
            row.note = "median KS strictly decreasing along n.list".into();
            if source == "lacunary" {
                row.passed = Some(ok);
            }
            summary.push(row);
        }
    }
    Ok(finish(cfg, records, summary, start))
}

/// Reference values the oracle suite compares against. Replacing a field
/// makes the corresponding property fail, which tests the harness itself.
#[derive(Debug, Clone, Copy)]
pub struct OracleReferences {
    /// Expected number variance at `(N, L)`.
    pub variance: fn(usize, f64) -> f64,
    /// Expected k-level correlation at `(k, N, L)`.
    pub correlation: fn(usize, usize, f64) -> f64,
    /// Expected `k`-th count moment at `(k, N, L)`.
    pub moment: fn(usize, usize, f64) -> f64,
}

fn ck_reference(k: usize, n: usize, l: f64) -> f64 {
    ck_factor(k, n).unwrap_or(f64::NAN) * l.powi(k as i32 - 1)
}

/// `E[S^k]` for N i.i.d. uniform points, i.e. the k-th moment of
/// Binomial(N, L/N): `L + sum_{j=2}^k S(k, j) C_j(N) L^j`.
pub fn binomial_moment_reference(k: usize, n: usize, l: f64) -> f64 {
    let mut acc = l;
    for j in 2..=k.min(n) {
        let s = stirling2(k as u32, j as u32).map_or(f64::NAN, |s| s as f64);
        acc += s * ck_factor(j, n).unwrap_or(f64::NAN) * l.powi(j as i32);
    }
    acc
}

impl Default for OracleReferences {
    fn default() -> Self {
        OracleReferences {
            variance: binomial_variance_reference,
            correlation: ck_reference,
            moment: binomial_moment_reference,
        }
    }
}

/// Z-score threshold of the oracle suite.
pub const ORACLE_Z_LIMIT: f64 = 4.0;

/// The random-model suite with the standard references.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    run_oracle_with(cfg, &OracleReferences::default())
}

/// Properties (per N): mean number variance, mean `R^2`, mean `R^3` and
/// mean count moments `k = 2, 3, 4`, each over `alpha_samples` i.i.d.
/// trials and compared with its reference through a z-score.
pub fn run_oracle_with(
    cfg: &ExperimentConfig,
    refs: &OracleReferences,
) -> Result<ExperimentReport, HarnessError> {
    expect_kind(cfg, ExperimentKind::Oracle)?;
    let start = Instant::now();
    let trials = cfg.alpha_samples;
    if trials < 2 {
        return Err(HarnessError::Validation(
            "oracle needs at least 2 trials for a sample deviation".into(),
        ));
    }
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for (j, &n) in cfg.n_list.iter().enumerate() {
        let l = cfg.l_schedule.l_of(n);
        let w = WindowParams::new(n, l)?;
        let properties: Vec<(&str, f64)> = vec![
            ("number_variance", (refs.variance)(n, l)),
            ("r2", (refs.correlation)(2, n, l)),
            ("r3", (refs.correlation)(3, n, l)),
            ("count_moment_2", (refs.moment)(2, n, l)),
            ("count_moment_3", (refs.moment)(3, n, l)),
            ("count_moment_4", (refs.moment)(4, n, l)),
        ];
        let per_trial = par_replicates(trials, |i| {
            let stream = iid_stream(j, i);
            let points = iid_points(n, RngSpec::new(cfg.seed, stream));
            let values = [
                number_variance_exact(&points, &w)?.value,
                pair_correlation(&points, &w)?.value,
                k_level_correlation(&points, &w, 3)?.value,
                count_moment(&points, &w, 2)?.value,
                count_moment(&points, &w, 3)?.value,
                count_moment(&points, &w, 4)?.value,
            ];
            let meta = CellMeta {
                cfg,
                source: "iid",
                sequence: "iid-uniform".into(),
                n,
                l,
                replicate: i,
                stream,
                alpha: None,
                precision_bits: 64,
            };
            Ok(properties
                .iter()
                .zip(values)
                .map(|(&(name, reference), v)| {
                    let mut r = meta.record(name, v, Method::Exact);
                    r.reference = Some(reference);
                    r
                })
                .collect::<Vec<_>>())
        })?;
        for (p, &(name, reference)) in properties.iter().enumerate() {
            let values: Vec<f64> = per_trial.iter().map(|t| t[p].value).collect();
            let t = values.len() as f64;
            let mean = values.iter().sum::<f64>() / t;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
            let se = (var / t).sqrt();
            let z = if se > 0.0 {
                (mean - reference) / se
            } else if mean == reference {
                0.0
            } else {
                f64::INFINITY
            };
            let ok = z.abs() < ORACLE_Z_LIMIT;
            let mut row = summary_row(cfg, "iid", n, l, name, mean, values.len());
            row.reference = Some(reference);
            row.z_score = Some(z);
            row.passed = Some(ok);
            row.note = format!("standard error {se:e}");
            if let Some(k) = name.strip_prefix("count_moment_") {
                let k: u32 = k.parse().unwrap_or(0);
                if let Ok(pm) = poisson_moment(k, l) {
                    row.note.push_str(&format!("; Poisson limit {pm}"));
                }
            }
            summary.push(row);
        }
        records.extend(per_trial.into_iter().flatten());
    }
    Ok(finish(cfg, records, summary, start))
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    match cfg.experiment {
        ExperimentKind::Thm1 => run_thm1(cfg),
        ExperimentKind::Thm2 => run_thm2(cfg),
        ExperimentKind::Clt => run_clt(cfg),
        ExperimentKind::Oracle => run_oracle(cfg),
    }
}
