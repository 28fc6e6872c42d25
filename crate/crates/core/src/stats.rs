//! Counting statistics of a [`FracPointSet`] in windows of length `L/N`.
//!
//! All real-space work runs on the 64-bit fixed-point representation of
//! the points. The sorted array is read as if duplicated with a shift of
//! one full turn, so a forward scan from any point sees its circular
//! neighbours in order without modular branching.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bigfloat::BigFloat;
use crate::kernels::{self, tent_hat, KernelError};
use crate::sequence::{self, FracPointSet, SequenceError, SequenceSpec};

const TURN: u128 = 1u128 << 64;
const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// Largest supported order for [`k_level_correlation`].
pub const MAX_CORRELATION_ORDER: usize = 5;
/// Largest point count accepted by [`k_level_correlation`].
pub const MAX_CORRELATION_POINTS: usize = 1 << 14;
/// Work limit (scanned pairs) for the correlation sweep.
pub const COST_GUARD: u128 = 1_000_000_000;
/// Largest truncation accepted by [`t_n_fourier`].
pub const MAX_FOURIER_TERMS: u64 = 100_000_000;
/// Exact phases are recomputed every this many frequencies.
const PHASE_RESEED: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("degenerate window: L = {0} (need L > 0)")]
    DegenerateWindow(f64),
    #[error("window too wide: L/N = {0} > 1")]
    WindowTooWide(f64),
    #[error("point count mismatch: window expects {expected}, point set has {actual}")]
    PointCountMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cost guard: {0} scanned pairs exceeds the limit")]
    CostGuard(u128),
    #[error("tolerance {tol} needs {terms} Fourier terms (limit {MAX_FOURIER_TERMS})")]
    TolUnreachable { tol: f64, terms: f64 },
    #[error("degenerate CLT scale (L = 0)")]
    DegenerateScale,
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Window geometry: N points, intensity L, window length L/N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub n_points: usize,
    pub l_value: f64,
    pub window_len: f64,
}

impl WindowParams {
    /// Requires `0 < L <= N`. `L = N` (a full-turn window) is allowed; the
    /// counting function then sums both integer shifts at the antipode.
    pub fn new(n_points: usize, l_value: f64) -> Result<Self, StatsError> {
        if n_points == 0 {
            return Err(StatsError::InvalidArgument("N must be at least 1".into()));
        }
        if !(l_value > 0.0 && l_value.is_finite()) {
            return Err(StatsError::DegenerateWindow(l_value));
        }
        let window_len = l_value / n_points as f64;
        if window_len > 1.0 {
            return Err(StatsError::WindowTooWide(window_len));
        }
        Ok(WindowParams {
            n_points,
            l_value,
            window_len,
        })
    }

    /// Window length as a fraction of 2^64 (floor).
    fn width_fixed(&self) -> u128 {
        (self.window_len * TWO_POW_64) as u128
    }

    /// Half window length as a fraction of 2^64 (floor).
    fn half_width_fixed(&self) -> u128 {
        (0.5 * self.window_len * TWO_POW_64) as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Fourier,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Fourier => "fourier",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// A statistic plus its error metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub value: f64,
    pub truncation_bound: f64,
    pub mc_std_error: f64,
    pub method: Method,
}

impl StatResult {
    pub fn exact(value: f64) -> Self {
        StatResult {
            value,
            truncation_bound: 0.0,
            mc_std_error: 0.0,
            method: Method::Exact,
        }
    }
}

fn check_points(points: &FracPointSet, w: &WindowParams) -> Result<(), StatsError> {
    if points.n_points() != w.n_points {
        return Err(StatsError::PointCountMismatch {
            expected: w.n_points,
            actual: points.n_points(),
        });
    }
    Ok(())
}

/// Number of points (with multiplicity over integer shifts) within
/// half-width `half` of `x`, closed at both ends. Needs `half <= 2^63`.
fn count_fixed(sorted: &[u64], half: u128, x: u64) -> usize {
    let lower = x as u128 + TURN - half;
    let upper = x as u128 + TURN + half;
    let mut total = 0;
    for shift in 0..3u128 {
        let base = shift * TURN;
        if upper < base || lower >= base + TURN {
            continue;
        }
        let lo = lower.saturating_sub(base);
        let hi = (upper - base).min(TURN - 1);
        let start = sorted.partition_point(|&p| (p as u128) < lo);
        let end = sorted.partition_point(|&p| (p as u128) <= hi);
        total += end.saturating_sub(start);
    }
    total
}

fn x_to_fixed(x: f64) -> Result<u64, StatsError> {
    if !(0.0..1.0).contains(&x) {
        return Err(StatsError::InvalidArgument(format!("x = {x} outside [0, 1)")));
    }
    let r = (x * TWO_POW_64).round();
    Ok(if r >= TWO_POW_64 { 0 } else { r as u64 })
}

/// `S_N(L)(x)`: points whose circular distance to `x` is at most `L/(2N)`.
pub fn counting_function(
    points: &FracPointSet,
    w: &WindowParams,
    x: f64,
) -> Result<usize, StatsError> {
    check_points(points, w)?;
    let x = x_to_fixed(x)?;
    Ok(count_fixed(points.fixed(), w.half_width_fixed(), x))
}

/// Mean of `S_N` over the circle: each point contributes one window
/// length, so the mean is `N * (L/N) = L` irrespective of positions.
pub fn mean_count(points: &FracPointSet, w: &WindowParams) -> Result<f64, StatsError> {
    check_points(points, w)?;
    Ok(points.n_points() as f64 * w.window_len)
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Sum over canonical k-point configurations of `tent(spread / w)`.
///
/// A configuration is a set of k lifted points with distinct indices and
/// spread below one window, anchored at its lowest lift `m`. Grouping by
/// the highest lift `q`, there are `C(q - m - 1, k - 2)` choices for the
/// points in between, and the kernel only sees `e_q - e_m`.
fn configuration_sum(sorted: &[u64], w: &WindowParams, k: usize) -> Result<f64, StatsError> {
    let n = sorted.len();
    let width = w.width_fixed();
    if width == 0 || n < k {
        return Ok(0.0);
    }
    let lifted = |i: usize| -> u128 {
        if i < n {
            sorted[i] as u128
        } else {
            sorted[i - n] as u128 + TURN
        }
    };
    // two-pointer pass for the reach of each anchor
    let mut reach = Vec::with_capacity(n);
    let mut end = 1usize;
    let mut work: u128 = 0;
    for m in 0..n {
        let base = lifted(m);
        end = end.max(m + 1);
        while end < m + n && lifted(end) - base < width {
            end += 1;
        }
        reach.push(end);
        work += (end - m - 1) as u128;
    }
    if work > COST_GUARD {
        return Err(StatsError::CostGuard(work));
    }
    // Per anchor the sum of weight * (width - spread) is an exact integer:
    // weight <= C(2^14, 3) < 2^40, width <= 2^64 and at most 2^14 terms.
    let widthf = width as f64;
    let mut total = 0.0;
    let mut carry = 0.0;
    for m in 0..n {
        let base = lifted(m);
        let mut acc: u128 = 0;
        for q in (m + 1)..reach[m] {
            let gap = width - (lifted(q) - base);
            let weight = if k == 2 { 1 } else { binomial_u128(q - m - 1, k - 2) };
            acc += weight * gap;
        }
        // Neumaier compensated summation over anchors
        let term = acc as f64 / widthf;
        let t = total + term;
        carry += if total.abs() >= term.abs() {
            (total - t) + term
        } else {
            (term - t) + total
        };
        total = t;
    }
    let total = total + carry;
    Ok(total)
}

/// k-level correlation `R^k_N(L)` with the tent kernel.
pub fn k_level_correlation(
    points: &FracPointSet,
    w: &WindowParams,
    k: usize,
) -> Result<StatResult, StatsError> {
    check_points(points, w)?;
    if !(2..=MAX_CORRELATION_ORDER).contains(&k) {
        return Err(StatsError::InvalidArgument(format!(
            "k must be in 2..={MAX_CORRELATION_ORDER}, got {k}"
        )));
    }
    if points.n_points() > MAX_CORRELATION_POINTS {
        return Err(StatsError::InvalidArgument(format!(
            "k-level correlation supports N <= {MAX_CORRELATION_POINTS}"
        )));
    }
    let sum = configuration_sum(points.fixed(), w, k)?;
    let k_fact: f64 = (1..=k).map(|i| i as f64).product();
    Ok(StatResult::exact(k_fact * sum / points.n_points() as f64))
}

/// Pair correlation `R^2_N(L)` with the tent kernel.
pub fn pair_correlation(points: &FracPointSet, w: &WindowParams) -> Result<StatResult, StatsError> {
    check_points(points, w)?;
    let sum = configuration_sum(points.fixed(), w, 2)?;
    Ok(StatResult::exact(2.0 * sum / points.n_points() as f64))
}

/// Number variance through `Sigma^2 = L - L^2 + L R^2`.
pub fn number_variance_exact(
    points: &FracPointSet,
    w: &WindowParams,
) -> Result<StatResult, StatsError> {
    let r2 = pair_correlation(points, w)?;
    let l = w.l_value;
    Ok(StatResult::exact(l - l * l + l * r2.value))
}

/// Minimum sample count for [`number_variance_mc`].
pub const MIN_MC_SAMPLES: usize = 1000;

/// Monte Carlo estimate of `integral (S_N(x) - L)^2 dx` over uniform `x`
/// drawn from ChaCha20 seeded with `seed`.
pub fn number_variance_mc(
    points: &FracPointSet,
    w: &WindowParams,
    samples: usize,
    seed: u64,
) -> Result<StatResult, StatsError> {
    check_points(points, w)?;
    if samples < MIN_MC_SAMPLES {
        return Err(StatsError::InvalidArgument(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let half = w.half_width_fixed();
    let l = w.l_value;
    // Welford running moments
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let x = rng.next_u64();
        let d = count_fixed(points.fixed(), half, x) as f64 - l;
        let v = d * d;
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(StatResult {
        value: mean,
        truncation_bound: 0.0,
        mc_std_error: (var / samples as f64).sqrt(),
        method: Method::MonteCarlo,
    })
}

/// `E[S_N^k] = L + L sum_{j=2..k} S(k, j) R^j_N`.
pub fn count_moment(
    points: &FracPointSet,
    w: &WindowParams,
    k: usize,
) -> Result<StatResult, StatsError> {
    if !(2..=MAX_CORRELATION_ORDER).contains(&k) {
        return Err(StatsError::InvalidArgument(format!(
            "k must be in 2..={MAX_CORRELATION_ORDER}, got {k}"
        )));
    }
    let l = w.l_value;
    let mut acc = 0.0;
    for j in 2..=k {
        let s = kernels::stirling2(k as u32, j as u32)? as f64;
        let r = k_level_correlation(points, w, j)?;
        acc += s * r.value;
    }
    Ok(StatResult::exact(l + l * acc))
}

/// Mass of one attained count value on the CLT grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub count: usize,
    /// `(count - L) / sqrt(L)`
    pub normalized: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCltResult {
    pub grid_size: usize,
    pub ks_distance: f64,
    pub histogram: Vec<HistogramBin>,
    pub mean: f64,
    pub scale: f64,
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Minimum grid size for [`empirical_clt`].
pub const MIN_CLT_GRID: usize = 1000;

/// Grid point `(i + 1/2) / grid` as a 64-bit fraction.
fn grid_point(i: usize, grid: usize) -> u64 {
    (((2 * i as u128 + 1) << 64) / (2 * grid as u128)) as u64
}

/// Values of `S_N` on the offset grid `x_i = (i + 1/2) / grid`.
pub fn counts_on_grid(
    points: &FracPointSet,
    w: &WindowParams,
    grid: usize,
) -> Result<Vec<usize>, StatsError> {
    check_points(points, w)?;
    if grid == 0 {
        return Err(StatsError::InvalidArgument("grid must be positive".into()));
    }
    let half = w.half_width_fixed();
    Ok((0..grid)
        .map(|i| count_fixed(points.fixed(), half, grid_point(i, grid)))
        .collect())
}

/// Distribution of `(S_N(x) - L) / sqrt(L)` over a deterministic grid of
/// window centres, and its Kolmogorov-Smirnov distance to N(0, 1).
pub fn empirical_clt(
    points: &FracPointSet,
    w: &WindowParams,
    grid: usize,
) -> Result<EmpiricalCltResult, StatsError> {
    if grid < MIN_CLT_GRID {
        return Err(StatsError::InvalidArgument(format!(
            "grid must be at least {MIN_CLT_GRID}, got {grid}"
        )));
    }
    let l = w.l_value;
    if l <= 0.0 {
        return Err(StatsError::DegenerateScale);
    }
    let counts = counts_on_grid(points, w, grid)?;
    let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
    for c in counts {
        *tally.entry(c).or_insert(0) += 1;
    }
    let scale = l.sqrt();
    let mut histogram = Vec::with_capacity(tally.len());
    let mut ks: f64 = 0.0;
    let mut below = 0usize;
    for (&count, &hits) in &tally {
        let z = (count as f64 - l) / scale;
        let phi = normal_cdf(z);
        let f_before = below as f64 / grid as f64;
        below += hits;
        let f_after = below as f64 / grid as f64;
        ks = ks.max((f_before - phi).abs()).max((f_after - phi).abs());
        histogram.push(HistogramBin {
            count,
            normalized: z,
            mass: hits as f64 / grid as f64,
        });
    }
    Ok(EmpiricalCltResult {
        grid_size: grid,
        ks_distance: ks.min(1.0),
        histogram,
        mean: l,
        scale,
    })
}

/// Frequencies needed so the worst-case tail of the Fourier series of
/// `R^2` stays below `tol`.
///
/// With `| |W(n)|^2 - N | <= N(N-1)` and `tent_hat(x) <= 1/(pi x)^2`, the
/// tail beyond `M` is at most `2 N (N-1) / (pi^2 L M)`.
pub fn fourier_terms_for(w: &WindowParams, tol: f64) -> f64 {
    let n = w.n_points as f64;
    (2.0 * n * (n - 1.0) / (PI * PI * w.l_value * tol)).ceil()
}

/// `sum_{|n| <= M} tent_hat(n L / N)`, summed from the smallest terms up.
pub fn fourier_sum_check(w: &WindowParams, m_max: u64) -> Result<f64, StatsError> {
    let l = w.l_value;
    if !(l >= 1.0 && l < w.n_points as f64) {
        return Err(StatsError::InvalidArgument(format!(
            "needs 1 <= L < N, got L = {l}, N = {}",
            w.n_points
        )));
    }
    Ok(fejer_partial_sum(w, m_max))
}

fn fejer_partial_sum(w: &WindowParams, m_max: u64) -> f64 {
    let ratio = w.window_len;
    let tail: f64 = (1..=m_max).rev().map(|n| tent_hat(n as f64 * ratio)).sum();
    1.0 + 2.0 * tail
}

/// Worst-case bound on `|partial - N/L|` for [`fourier_sum_check`].
pub fn fourier_sum_bound(w: &WindowParams, m_max: u64) -> f64 {
    let n = w.n_points as f64;
    let l = w.l_value;
    2.0 * n * n / (PI * PI * l * l * m_max as f64)
}

/// Richardson estimate of the full sum from cut-offs `M` and `2M`
/// (the tail decays like `1/M`).
pub fn fourier_sum_extrapolated(w: &WindowParams, m_max: u64) -> Result<f64, StatsError> {
    let s1 = fourier_sum_check(w, m_max)?;
    let s2 = fourier_sum_check(w, 2 * m_max)?;
    Ok(2.0 * s2 - s1)
}

/// Fourier side of the pair correlation:
/// `T_N = (L/N^2) sum_{n != 0} tent_hat(nL/N) (|W(n)|^2 - N)` with
/// `W(n) = sum_j e(n alpha a_j)`, truncated so the tail is below `tol`.
///
/// Phases come from 128-bit fractional parts, so `n * {alpha a_j}` mod 1 is
/// exact to about `n * 2^-128`. The reported bound uses the exact tail of
/// the Fejer sum (its total is `N/L`) times the worst case `N(N-1)`.
pub fn t_n_fourier(
    spec: &SequenceSpec,
    alpha: &BigFloat,
    w: &WindowParams,
    tol: f64,
) -> Result<StatResult, StatsError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(StatsError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if w.l_value < 1.0 {
        return Err(StatsError::InvalidArgument(format!(
            "t_n_fourier needs L >= 1, got {}",
            w.l_value
        )));
    }
    let terms = fourier_terms_for(w, tol);
    if terms > MAX_FOURIER_TERMS as f64 {
        return Err(StatsError::TolUnreachable { tol, terms });
    }
    let m_max = (terms as u64).max(1);
    let n = w.n_points;
    let bits = sequence::wide_precision(spec, alpha, n);
    if bits > sequence::MAX_PRECISION_BITS as u64 {
        return Err(SequenceError::PrecisionExhausted {
            requested: bits,
            max: sequence::MAX_PRECISION_BITS,
        }
        .into());
    }
    let phases = sequence::fractional_parts_wide(spec, alpha, n, bits as u32)?;
    let sum = weighted_power_sum(&phases, w.window_len, m_max);
    let nf = n as f64;
    let l = w.l_value;
    let value = l / (nf * nf) * 2.0 * sum;
    let fejer_tail = (nf / l - fejer_partial_sum(w, m_max)).max(0.0) + 1e-12;
    let analytic = 2.0 * nf * (nf - 1.0) / (PI * PI * l * m_max as f64);
    let truncation_bound = (l / (nf * nf) * nf * (nf - 1.0) * fejer_tail).min(analytic);
    Ok(StatResult {
        value,
        truncation_bound,
        mc_std_error: 0.0,
        method: Method::Fourier,
    })
}

/// `sum_{n=1..M} tent_hat(n r) (|W(n)|^2 - N)` for phases given as 128-bit
/// fractions of a turn.
fn weighted_power_sum(phases: &[u128], ratio: f64, m_max: u64) -> f64 {
    let n = phases.len();
    let angle = |p: u128| -> (f64, f64) {
        let turns = (p >> 64) as u64 as f64 / TWO_POW_64;
        let (s, c) = (2.0 * PI * turns).sin_cos();
        (c, s)
    };
    let steps: Vec<(f64, f64)> = phases.iter().map(|&p| angle(p)).collect();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut total = 0.0;
    let mut freq: u64 = 1;
    while freq <= m_max {
        // exact phases at the start of each block
        for (j, &p) in phases.iter().enumerate() {
            let (c, s) = angle(p.wrapping_mul(freq as u128));
            re[j] = c;
            im[j] = s;
        }
        let block_end = (freq + PHASE_RESEED - 1).min(m_max);
        for f in freq..=block_end {
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..n {
                sr += re[j];
                si += im[j];
            }
            let power = sr * sr + si * si - n as f64;
            total += tent_hat(f as f64 * ratio) * power;
            if f < block_end {
                for j in 0..n {
                    let (cr, ci) = steps[j];
                    let (r0, i0) = (re[j], im[j]);
                    re[j] = r0 * cr - i0 * ci;
                    im[j] = r0 * ci + i0 * cr;
                }
            }
        }
        freq = block_end + 1;
    }
    total
}

/// Smooth bump weight `exp(1 - 1/(1 - u^2))`, `u = (alpha - centre)/radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub center: f64,
    pub radius: f64,
}

impl WeightSpec {
    pub fn bump(center: f64, radius: f64) -> Result<Self, StatsError> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            return Err(StatsError::InvalidArgument(format!(
                "bump needs finite centre and radius > 0, got ({center}, {radius})"
            )));
        }
        Ok(WeightSpec { center, radius })
    }

    /// Unnormalized weight at `alpha`.
    pub fn eval(&self, alpha: f64) -> f64 {
        let u = (alpha - self.center) / self.radius;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    }
}

/// Minimum node count for [`vn_estimate`] and [`weighted_quadrature`].
pub const MIN_QUAD_POINTS: usize = 100;

/// `integral f(alpha) rho(alpha) d alpha` with `rho` normalized to unit
/// mass on the same nodes (trapezoid over the support; endpoints carry
/// zero weight). The error estimate is the larger of the change against
/// the half-resolution rule and the weighted sampling error of the nodes.
pub fn weighted_quadrature<F>(
    weight: &WeightSpec,
    quad_points: usize,
    mut f: F,
) -> Result<StatResult, StatsError>
where
    F: FnMut(f64) -> Result<f64, StatsError>,
{
    let grid = QuadGrid::new(weight, quad_points)?;
    let mut nodes = Vec::with_capacity(grid.intervals - 1);
    for i in 1..grid.intervals {
        let alpha = grid.lo + grid.h * i as f64;
        let rho = weight.eval(alpha);
        if rho > 0.0 {
            nodes.push((i, rho, f(alpha)?));
        }
    }
    Ok(combine_nodes(&nodes))
}

struct QuadGrid {
    intervals: usize,
    lo: f64,
    h: f64,
}

impl QuadGrid {
    fn new(weight: &WeightSpec, quad_points: usize) -> Result<Self, StatsError> {
        if quad_points < MIN_QUAD_POINTS {
            return Err(StatsError::InvalidArgument(format!(
                "need at least {MIN_QUAD_POINTS} quadrature points, got {quad_points}"
            )));
        }
        let intervals = quad_points + quad_points % 2;
        Ok(QuadGrid {
            intervals,
            lo: weight.center - weight.radius,
            h: 2.0 * weight.radius / intervals as f64,
        })
    }
}

/// Weighted mean of `(index, rho, value)` nodes with its error estimate.
fn combine_nodes(nodes: &[(usize, f64, f64)]) -> StatResult {
    let combine = |even_only: bool| -> (f64, f64) {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for &(i, rho, v) in nodes {
            if even_only && i % 2 == 1 {
                continue;
            }
            mass += rho;
            acc += rho * v;
        }
        (acc / mass, mass)
    };
    let (full, mass) = combine(false);
    let (half, _) = combine(true);
    let mut spread = 0.0;
    let mut sq_w = 0.0;
    for &(_, rho, v) in nodes {
        let p = rho / mass;
        spread += p * p * (v - full) * (v - full);
        sq_w += p * p;
    }
    // weighted variance of the node values, scaled to the mean's error
    let sampling = if sq_w > 0.0 && sq_w < 1.0 {
        (spread / (1.0 - sq_w)).sqrt()
    } else {
        0.0
    };
    StatResult {
        value: full,
        truncation_bound: 0.0,
        mc_std_error: (full - half).abs().max(sampling),
        method: Method::Fourier,
    }
}

/// Seed of the node offsets used by [`vn_estimate`].
pub const VN_JITTER_SEED: u64 = 0x5eed_0f_a1fa;

/// `alpha0 + h U` with `U` a uniform dyadic of `bits` random bits.
fn jittered_node(alpha0: f64, h: f64, bits: u32, stream: u64) -> BigFloat {
    let mut rng = ChaCha20Rng::seed_from_u64(VN_JITTER_SEED);
    rng.set_stream(stream);
    let words = bits.div_ceil(64) as usize;
    let mut mant = num_bigint::BigUint::default();
    for _ in 0..words {
        mant = (mant << 64usize) + num_bigint::BigUint::from(rng.next_u64());
    }
    let u = BigFloat::from_parts(
        num_bigint::BigInt::from_biguint(num_bigint::Sign::Plus, mant),
        -(64 * words as i64),
    );
    let base = BigFloat::from_f64(alpha0).expect("finite node");
    let step = BigFloat::from_f64(h).expect("finite step");
    base.add(&step.mul(&u))
}

/// `V_N(L) = integral |T_N(L, alpha)|^2 rho(alpha) d alpha`.
///
/// `T_N` varies on scales near `1/a_N`, far below any node spacing, so
/// node `i` is placed uniformly at random inside its cell
/// `[lo + i h, lo + (i + 1) h)` with enough random bits for the first N
/// terms (fixed seed [`VN_JITTER_SEED`], stream `i`). An f64 node would be
/// a short dyadic with `{alpha 2^n} = 0` for large `n`. The rule is thus a
/// stratified sample of the weighted integral; `mc_std_error` carries its
/// error estimate.
pub fn vn_estimate(
    spec: &SequenceSpec,
    w: &WindowParams,
    weight: &WeightSpec,
    quad_points: usize,
    tol: f64,
) -> Result<StatResult, StatsError> {
    let grid = QuadGrid::new(weight, quad_points)?;
    let bound = weight.center.abs() + weight.radius;
    let bits = sequence::required_precision(spec, bound, w.n_points) + 64;
    let mut worst_truncation: f64 = 0.0;
    let mut nodes = Vec::with_capacity(grid.intervals);
    for i in 0..grid.intervals {
        let alpha0 = grid.lo + grid.h * i as f64;
        let alpha = jittered_node(alpha0, grid.h, bits, i as u64);
        let rho = weight.eval(alpha.to_f64());
        if rho <= 0.0 {
            continue;
        }
        let t = t_n_fourier(spec, &alpha, w, tol)?;
        // |T + e|^2 - |T|^2 <= 2|T| e + e^2
        let e = t.truncation_bound;
        worst_truncation = worst_truncation.max(2.0 * t.value.abs() * e + e * e);
        nodes.push((i, rho, t.value * t.value));
    }
    let mut result = combine_nodes(&nodes);
    result.truncation_bound = worst_truncation;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> FracPointSet {
        FracPointSet::from_values(v).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(matches!(WindowParams::new(4, 0.0), Err(StatsError::DegenerateWindow(_))));
        assert!(matches!(WindowParams::new(4, -1.0), Err(StatsError::DegenerateWindow(_))));
        assert!(matches!(WindowParams::new(4, 5.0), Err(StatsError::WindowTooWide(_))));
        assert!(WindowParams::new(4, 4.0).is_ok());
    }

    #[test]
    fn counting_examples() {
        let p = pts(&[0.1, 0.3, 0.6, 0.9]);
        let w = WindowParams::new(4, 0.8).unwrap();
        assert_eq!(w.window_len, 0.2);
        assert_eq!(counting_function(&p, &w, 0.2).unwrap(), 2);

        let zeros = pts(&[0.0; 5]);
        let w = WindowParams::new(5, 0.5).unwrap();
        assert_eq!(counting_function(&zeros, &w, 0.0).unwrap(), 5);

        let anti = pts(&[0.0, 0.5]);
        let w = WindowParams::new(2, 1.0).unwrap();
        assert_eq!(counting_function(&anti, &w, 0.3).unwrap(), 1);
        // closed endpoints: x = 0.25 sees both points
        assert_eq!(counting_function(&anti, &w, 0.25).unwrap(), 2);
    }

    #[test]
    fn counting_wraps_around() {
        let p = pts(&[0.02, 0.97]);
        let w = WindowParams::new(2, 0.2).unwrap();
        assert_eq!(counting_function(&p, &w, 0.0).unwrap(), 2);
        assert_eq!(counting_function(&p, &w, 0.5).unwrap(), 0);
    }

    #[test]
    fn full_turn_window_counts_antipode_twice() {
        let p = pts(&[0.0]);
        let w = WindowParams::new(1, 1.0).unwrap();
        assert_eq!(counting_function(&p, &w, 0.5).unwrap(), 2);
        assert_eq!(counting_function(&p, &w, 0.3).unwrap(), 1);
    }

    #[test]
    fn count_mismatch_rejected() {
        let p = pts(&[0.0, 0.5]);
        let w = WindowParams::new(3, 1.0).unwrap();
        assert!(matches!(
            counting_function(&p, &w, 0.1),
            Err(StatsError::PointCountMismatch { .. })
        ));
    }

    #[test]
    fn mean_count_is_l() {
        let p = pts(&[0.1, 0.2, 0.7, 0.75]);
        let w = WindowParams::new(4, 4.0).unwrap();
        assert_eq!(mean_count(&p, &w).unwrap(), 4.0);
        let w = WindowParams::new(2, 1.0).unwrap();
        assert_eq!(mean_count(&pts(&[0.0, 0.1]), &w).unwrap(), 1.0);
    }

    #[test]
    fn pair_correlation_examples() {
        let w = WindowParams::new(2, 1.0).unwrap();
        assert_eq!(pair_correlation(&pts(&[0.0, 0.5]), &w).unwrap().value, 0.0);
        let w = WindowParams::new(2, 0.8).unwrap();
        let r = pair_correlation(&pts(&[0.0, 0.1]), &w).unwrap();
        assert!((r.value - 0.75).abs() < 1e-15, "{r:?}");
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.truncation_bound, 0.0);
    }

    #[test]
    fn variance_of_antipodal_pair_is_zero() {
        let p = pts(&[0.0, 0.5]);
        let w = WindowParams::new(2, 1.0).unwrap();
        assert_eq!(number_variance_exact(&p, &w).unwrap().value, 0.0);
        let mc = number_variance_mc(&p, &w, 2000, 1).unwrap();
        assert_eq!(mc.value, 0.0);
        assert_eq!(mc.mc_std_error, 0.0);
        assert_eq!(count_moment(&p, &w, 2).unwrap().value, 1.0);
    }

    #[test]
    fn variance_of_coincident_points() {
        // S is N on a window of measure L/N and 0 elsewhere
        let n = 8;
        let l = 2.0;
        let p = pts(&vec![0.25; n]);
        let w = WindowParams::new(n, l).unwrap();
        let q = l / n as f64;
        let nf = n as f64;
        let oracle = q * (nf - l).powi(2) + (1.0 - q) * l * l;
        let got = number_variance_exact(&p, &w).unwrap().value;
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn k_level_examples() {
        let p = pts(&[0.0, 0.01, 0.5]);
        let w = WindowParams::new(3, 0.3).unwrap();
        assert_eq!(k_level_correlation(&p, &w, 3).unwrap().value, 0.0);
        let r2 = pair_correlation(&p, &w).unwrap();
        let k2 = k_level_correlation(&p, &w, 2).unwrap();
        assert_eq!(r2, k2);
        assert!(k_level_correlation(&p, &w, 6).is_err());
        assert!(k_level_correlation(&p, &w, 1).is_err());
    }

    #[test]
    fn clt_of_constant_count() {
        let p = pts(&[0.0, 0.5]);
        let w = WindowParams::new(2, 1.0).unwrap();
        let r = empirical_clt(&p, &w, 1000).unwrap();
        assert!((r.ks_distance - 0.5).abs() < 1e-15);
        assert_eq!(r.histogram.len(), 1);
        assert_eq!(r.histogram[0].count, 1);
        assert_eq!(r.histogram[0].normalized, 0.0);
        assert!(empirical_clt(&p, &w, 999).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((normal_cdf(-1.96) - 0.024_997_895_148_220_4).abs() < 1e-12);
    }

    #[test]
    fn fourier_sum_examples() {
        let w = WindowParams::new(10, 2.0).unwrap();
        let s = fourier_sum_check(&w, 100_000).unwrap();
        assert!((s - 5.0).abs() <= fourier_sum_bound(&w, 100_000));
        let w = WindowParams::new(2, 1.0).unwrap();
        let s = fourier_sum_check(&w, 10_000).unwrap();
        assert!((s - 2.0).abs() <= fourier_sum_bound(&w, 10_000));
        assert!((fourier_sum_extrapolated(&w, 10_000).unwrap() - 2.0).abs() < 1e-8);
        let w = WindowParams::new(100, 10.0).unwrap();
        let s = fourier_sum_check(&w, 100_000).unwrap();
        assert!((s - 10.0).abs() <= 2.1e-4);
        let w = WindowParams::new(10, 0.5).unwrap();
        assert!(fourier_sum_check(&w, 10).is_err());
    }

    #[test]
    fn quadrature_of_constant() {
        let weight = WeightSpec::bump(1.5, 0.5).unwrap();
        let r = weighted_quadrature(&weight, 100, |_| Ok(0.3)).unwrap();
        assert!((r.value - 0.3).abs() < 1e-15);
        assert!(r.mc_std_error < 1e-15);
        assert!(weighted_quadrature(&weight, 99, |_| Ok(0.3)).is_err());
    }

    #[test]
    fn single_point_has_zero_t() {
        let spec = SequenceSpec::powers_of_two();
        let w = WindowParams::new(1, 1.0).unwrap();
        let weight = WeightSpec::bump(1.5, 0.5).unwrap();
        let v = vn_estimate(&spec, &w, &weight, 100, 0.5).unwrap();
        assert!(v.value.abs() < 1e-30);
    }
}
