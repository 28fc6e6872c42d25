//! Lacunary sequences and their fractional parts `{alpha * a_n}`.
//!
//! Terms grow exponentially, so `alpha * a_n` is formed in [`BigFloat`]
//! arithmetic at a precision fixed up front by [`required_precision`].
//! Fractional parts are stored as 64-bit binary fractions of a turn: the
//! stored integer `v` stands for `v / 2^64`, which makes circle arithmetic
//! exact (wrapping subtraction is the signed circular difference).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bigfloat::BigFloat;

/// Guard bits added on top of the error budget in [`required_precision`].
pub const GUARD_BITS: u32 = 4;
/// Upper limit on the working precision.
pub const MAX_PRECISION_BITS: u32 = 1 << 24;
/// Extra bits used internally so fractional parts are known to 2^-128.
pub const WIDE_EXTRA_BITS: u32 = 64;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),
    #[error("lacunarity violated at n = {index}: a_(n+1)/a_n < {constant}")]
    LacunarityViolation { index: usize, constant: f64 },
    #[error("precision of {requested} bits exceeds the supported {max} bits")]
    PrecisionExhausted { requested: u64, max: u32 },
    #[error("invalid point set: {0}")]
    InvalidPoints(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    /// `a_n = a1 * C^(n-1)`
    Geometric,
    /// `a_n = a1 * C^(n-1) + n^d`
    GeometricPlusPoly,
    /// `a_(n+1) = a_n * r_n`, cycling through `ratios`.
    CustomRatios,
}

impl SequenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SequenceKind::Geometric => "geometric",
            SequenceKind::GeometricPlusPoly => "geometric-plus-poly",
            SequenceKind::CustomRatios => "custom-ratios",
        }
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geometric" => Ok(SequenceKind::Geometric),
            "geometric-plus-poly" => Ok(SequenceKind::GeometricPlusPoly),
            "custom-ratios" | "custom" => Ok(SequenceKind::CustomRatios),
            other => Err(SequenceError::InvalidSpec(format!(
                "unknown sequence kind `{other}`"
            ))),
        }
    }
}

/// Parametric description of a positive lacunary sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub a1: f64,
    pub ratio: f64,
    pub poly_degree: u32,
    pub ratios: Vec<f64>,
}

impl SequenceSpec {
    pub fn geometric(a1: f64, ratio: f64) -> Self {
        SequenceSpec {
            kind: SequenceKind::Geometric,
            a1,
            ratio,
            poly_degree: 0,
            ratios: Vec::new(),
        }
    }

    pub fn geometric_plus_poly(a1: f64, ratio: f64, poly_degree: u32) -> Self {
        SequenceSpec {
            kind: SequenceKind::GeometricPlusPoly,
            a1,
            ratio,
            poly_degree,
            ratios: Vec::new(),
        }
    }

    pub fn custom_ratios(a1: f64, ratios: Vec<f64>) -> Self {
        SequenceSpec {
            kind: SequenceKind::CustomRatios,
            a1,
            ratio: 0.0,
            poly_degree: 0,
            ratios,
        }
    }

    /// `a_n = 2^n`.
    pub fn powers_of_two() -> Self {
        Self::geometric(2.0, 2.0)
    }

    pub fn validate(&self) -> Result<(), SequenceError> {
        if !(self.a1.is_finite() && self.a1 > 0.0) {
            return Err(SequenceError::InvalidSpec(format!(
                "a1 must be positive and finite, got {}",
                self.a1
            )));
        }
        match self.kind {
            SequenceKind::Geometric | SequenceKind::GeometricPlusPoly => {
                if !(self.ratio.is_finite() && self.ratio > 1.0) {
                    return Err(SequenceError::InvalidSpec(format!(
                        "ratio C must satisfy C > 1, got {}",
                        self.ratio
                    )));
                }
                if self.poly_degree > 64 {
                    return Err(SequenceError::InvalidSpec(format!(
                        "poly_degree {} is too large",
                        self.poly_degree
                    )));
                }
            }
            SequenceKind::CustomRatios => {
                if self.ratios.is_empty() {
                    return Err(SequenceError::InvalidSpec(
                        "custom-ratios needs at least one ratio".into(),
                    ));
                }
                if let Some(r) = self.ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                    return Err(SequenceError::InvalidSpec(format!(
                        "ratios must be positive and finite, got {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The constant `C` that `a_(n+1) >= C a_n` is checked against.
    ///
    /// Geometric: the ratio itself. Geometric-plus-poly: `(1 + C) / 2`,
    /// since the polynomial term pulls early ratios below `C`.
    /// Custom: the smallest supplied ratio.
    pub fn lacunarity_constant(&self) -> f64 {
        match self.kind {
            SequenceKind::Geometric => self.ratio,
            SequenceKind::GeometricPlusPoly => 0.5 * (1.0 + self.ratio),
            SequenceKind::CustomRatios => {
                self.ratios.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Upper estimate of `log2 a_n`, clamped at 0.
    fn log2_term_upper(&self, n: usize) -> f64 {
        let steps = (n - 1) as f64;
        let geo = self.a1.log2() + steps * self.ratio.log2();
        let v = match self.kind {
            SequenceKind::Geometric => geo,
            SequenceKind::GeometricPlusPoly => {
                let poly = self.poly_degree as f64 * (n as f64).log2();
                geo.max(poly) + 1.0
            }
            SequenceKind::CustomRatios => {
                let len = self.ratios.len();
                let cycle: f64 = self.ratios.iter().map(|r| r.log2()).sum();
                let full = (n - 1) / len;
                let rest: f64 = self.ratios[..(n - 1) % len].iter().map(|r| r.log2()).sum();
                self.a1.log2() + full as f64 * cycle + rest
            }
        };
        v.max(0.0)
    }
}

fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        // tiny upward nudge absorbs rounding in the logarithm
        (x.log2() - 1e-12).ceil().max(0.0) as u32
    }
}

/// Working precision (in bits) under which `{alpha a_n}` has absolute
/// error at most 2^-64 for every `n <= N` and `|alpha| <= alpha_bound`:
/// `ceil(log2 a_N) + ceil(log2(alpha_bound + 1)) + ceil(log2 N) + 64`,
/// plus [`GUARD_BITS`].
pub fn required_precision(spec: &SequenceSpec, alpha_bound: f64, n: usize) -> u32 {
    assert!(n >= 1, "n must be positive");
    let log_a = (spec.log2_term_upper(n) - 1e-12).ceil().max(0.0) as u32;
    let log_alpha = ceil_log2(alpha_bound.abs() + 1.0);
    let log_n = ceil_log2(n as f64);
    log_a + log_alpha + log_n + 64 + GUARD_BITS
}

/// Parses `alpha` for use with the first `n` terms. Hex literals are
/// exact. Decimal literals are rounded to enough bits that the rounding
/// error stays below 2^-64 after multiplication by `a_n`.
pub fn parse_alpha(s: &str, spec: &SequenceSpec, n: usize) -> Result<BigFloat, SequenceError> {
    let coarse: BigFloat = s
        .parse()
        .map_err(|e| SequenceError::InvalidSpec(format!("alpha: {e}")))?;
    let t = s.trim().trim_start_matches(['-', '+']);
    if t.starts_with("0x") || t.starts_with("0X") {
        return Ok(coarse);
    }
    let bits = required_precision(spec, coarse.abs().to_f64(), n.max(1)) as u64
        + WIDE_EXTRA_BITS as u64;
    let bits = check_precision(bits)?;
    BigFloat::parse_decimal(s.trim(), bits)
        .map_err(|e| SequenceError::InvalidSpec(format!("alpha: {e}")))
}

fn check_precision(bits: u64) -> Result<u32, SequenceError> {
    if bits > MAX_PRECISION_BITS as u64 {
        Err(SequenceError::PrecisionExhausted {
            requested: bits,
            max: MAX_PRECISION_BITS,
        })
    } else {
        Ok(bits as u32)
    }
}

fn terms_at(spec: &SequenceSpec, n: usize, bits: u32) -> Result<Vec<BigFloat>, SequenceError> {
    spec.validate()?;
    if n == 0 {
        return Err(SequenceError::InvalidSpec("n must be at least 1".into()));
    }
    let to_big = |x: f64| BigFloat::from_f64(x).expect("validated finite");
    let a1 = to_big(spec.a1);
    let mut out = Vec::with_capacity(n);
    match spec.kind {
        SequenceKind::Geometric | SequenceKind::GeometricPlusPoly => {
            let ratio = to_big(spec.ratio);
            let mut geo = a1.round(bits);
            for i in 1..=n {
                if i > 1 {
                    geo = geo.mul_round(&ratio, bits);
                }
                let term = if spec.kind == SequenceKind::GeometricPlusPoly {
                    let poly = num_bigint::BigInt::from(i).pow(spec.poly_degree);
                    geo.add(&BigFloat::from_parts(poly, 0)).round(bits)
                } else {
                    geo.clone()
                };
                out.push(term);
            }
        }
        SequenceKind::CustomRatios => {
            let ratios: Vec<BigFloat> = spec.ratios.iter().map(|&r| to_big(r)).collect();
            let mut cur = a1.round(bits);
            out.push(cur.clone());
            for i in 1..n {
                cur = cur.mul_round(&ratios[(i - 1) % ratios.len()], bits);
                out.push(cur.clone());
            }
        }
    }
    verify_lacunarity(spec, &out, bits)?;
    Ok(out)
}

fn verify_lacunarity(
    spec: &SequenceSpec,
    terms: &[BigFloat],
    bits: u32,
) -> Result<(), SequenceError> {
    let c = spec.lacunarity_constant();
    if !(c > 1.0) {
        return Err(SequenceError::LacunarityViolation {
            index: 1,
            constant: c,
        });
    }
    // Accept a relative shortfall of a few ulps at the working precision.
    let slack = BigFloat::one().sub(&BigFloat::from_parts(1.into(), 8 - bits as i64));
    let c_low = BigFloat::from_f64(c).expect("finite").mul(&slack);
    for (i, w) in terms.windows(2).enumerate() {
        if w[1] < w[0].mul(&c_low) {
            return Err(SequenceError::LacunarityViolation {
                index: i + 1,
                constant: c,
            });
        }
    }
    Ok(())
}

/// Terms `a_1..a_N`, each rounded to the precision that
/// [`required_precision`] assigns for `alpha_bound = 1`.
pub fn build_sequence(spec: &SequenceSpec, n: usize) -> Result<Vec<BigFloat>, SequenceError> {
    spec.validate()?;
    if n == 0 {
        return Err(SequenceError::InvalidSpec("n must be at least 1".into()));
    }
    let bits = check_precision(required_precision(spec, 1.0, n) as u64)?;
    terms_at(spec, n, bits)
}

/// Unsorted fractional parts `{alpha a_j}`, j = 1..N, as 128-bit binary
/// fractions, computed at `bits` of working precision.
pub fn fractional_parts_wide(
    spec: &SequenceSpec,
    alpha: &BigFloat,
    n: usize,
    bits: u32,
) -> Result<Vec<u128>, SequenceError> {
    let bits = check_precision(bits as u64)?;
    let terms = terms_at(spec, n, bits)?;
    Ok(terms
        .iter()
        .map(|a| alpha.mul_round(a, bits).frac_u128())
        .collect())
}

/// Precision used for [`fractional_parts_wide`] so that the 128-bit
/// fractions are accurate to about 2^-128.
pub fn wide_precision(spec: &SequenceSpec, alpha: &BigFloat, n: usize) -> u64 {
    required_precision(spec, alpha.abs().to_f64(), n) as u64 + WIDE_EXTRA_BITS as u64
}

/// Rounds a 128-bit fraction to the nearest 64-bit one (wrapping 1 to 0).
pub fn narrow(x: u128) -> u64 {
    (x.wrapping_add(1u128 << 63) >> 64) as u64
}

/// Sorted fractional parts `{alpha a_j}` at the default precision.
pub fn frac_points(
    spec: &SequenceSpec,
    alpha: &BigFloat,
    n: usize,
) -> Result<FracPointSet, SequenceError> {
    spec.validate()?;
    if n == 0 {
        return Err(SequenceError::InvalidSpec("n must be at least 1".into()));
    }
    let bits = check_precision(wide_precision(spec, alpha, n))?;
    frac_points_with_precision(spec, alpha, n, bits)
}

/// As [`frac_points`] but at an explicit working precision.
pub fn frac_points_with_precision(
    spec: &SequenceSpec,
    alpha: &BigFloat,
    n: usize,
    bits: u32,
) -> Result<FracPointSet, SequenceError> {
    let wide = fractional_parts_wide(spec, alpha, n, bits)?;
    let mut fixed: Vec<u64> = wide.into_iter().map(narrow).collect();
    fixed.sort_unstable();
    Ok(FracPointSet {
        fixed,
        alpha: Some(alpha.clone()),
        precision_bits: bits,
        // rounding to 64 bits (2^-65) plus the computation error (<< 2^-65)
        max_abs_error: 2f64.powi(-64),
    })
}

/// N sorted points on the circle `[0, 1)`, stored as 64-bit fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct FracPointSet {
    fixed: Vec<u64>,
    alpha: Option<BigFloat>,
    precision_bits: u32,
    max_abs_error: f64,
}

impl FracPointSet {
    /// Builds a point set from raw 64-bit fractions (sorted here).
    pub fn from_fixed(mut fixed: Vec<u64>) -> Self {
        fixed.sort_unstable();
        FracPointSet {
            fixed,
            alpha: None,
            precision_bits: 64,
            max_abs_error: 0.0,
        }
    }

    /// Builds a point set from reals in `[0, 1)`, rounded to 2^-64.
    pub fn from_values(values: &[f64]) -> Result<Self, SequenceError> {
        let mut fixed = Vec::with_capacity(values.len());
        let mut max_err: f64 = 0.0;
        for &v in values {
            if !(0.0..1.0).contains(&v) {
                return Err(SequenceError::InvalidPoints(format!(
                    "value {v} outside [0, 1)"
                )));
            }
            let scaled = v * TWO_POW_64;
            let r = scaled.round();
            if r != scaled {
                max_err = max_err.max((r - scaled).abs() / TWO_POW_64);
            }
            // v < 1 but rounding may reach 2^64; that is the point 0.
            fixed.push(if r >= TWO_POW_64 { 0 } else { r as u64 });
        }
        let mut set = Self::from_fixed(fixed);
        set.max_abs_error = max_err;
        Ok(set)
    }

    pub fn with_alpha(mut self, alpha: Option<BigFloat>) -> Self {
        self.alpha = alpha;
        self
    }

    /// Records the working precision and error bound of the points.
    pub fn with_precision(mut self, bits: u32, max_abs_error: f64) -> Self {
        self.precision_bits = bits;
        self.max_abs_error = max_abs_error;
        self
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.fixed.len()
    }

    pub fn fixed(&self) -> &[u64] {
        &self.fixed
    }

    pub fn value(&self, i: usize) -> f64 {
        self.fixed[i] as f64 / TWO_POW_64
    }

    pub fn values(&self) -> Vec<f64> {
        self.fixed.iter().map(|&v| v as f64 / TWO_POW_64).collect()
    }

    /// `None` for point sets that do not come from a sequence.
    pub fn alpha(&self) -> Option<&BigFloat> {
        self.alpha.as_ref()
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn max_abs_error(&self) -> f64 {
        self.max_abs_error
    }

    /// CSV with header `index,value`; values carry 20 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, &v) in self.fixed.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, fixed_to_decimal(v, 20));
        }
        out
    }
}

/// Exact decimal rendering of `v / 2^64` to `digits` significant digits,
/// rounded half up.
pub fn fixed_to_decimal(v: u64, digits: usize) -> String {
    if v == 0 {
        return format!("0.{}", "0".repeat(digits));
    }
    let mask = (1u128 << 64) - 1;
    let mut r = v as u128;
    let mut leading = 0usize;
    let mut out: Vec<u8> = Vec::with_capacity(digits + 1);
    while out.len() < digits {
        r *= 10;
        let d = (r >> 64) as u8;
        r &= mask;
        if out.is_empty() && d == 0 {
            leading += 1;
        } else {
            out.push(d);
        }
    }
    // round half up on the remainder
    if r >= 1u128 << 63 {
        let mut i = out.len();
        loop {
            if i == 0 {
                // carried past the first significant digit
                if leading == 0 {
                    return format!("1.{}", "0".repeat(digits - 1));
                }
                leading -= 1;
                out.insert(0, 1);
                out.pop();
                break;
            }
            i -= 1;
            if out[i] == 9 {
                out[i] = 0;
            } else {
                out[i] += 1;
                break;
            }
        }
    }
    let body: String = out.iter().map(|d| char::from(b'0' + d)).collect();
    format!("0.{}{}", "0".repeat(leading), body)
}
