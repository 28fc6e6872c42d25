//! Binary floating point with an arbitrary-length mantissa.
//!
//! A [`BigFloat`] is `mantissa * 2^exponent` with a signed big-integer
//! mantissa. Multiplication and addition are exact; [`BigFloat::round`]
//! rounds to a given number of significant bits (nearest, ties to even).
//! Values are kept canonical: the mantissa is odd unless the value is zero.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Bits kept when a decimal literal has no finite binary expansion.
pub const DECIMAL_PARSE_BITS: u32 = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseBigFloatError {
    #[error("empty number")]
    Empty,
    #[error("invalid number literal `{0}`")]
    Invalid(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BigFloat {
    mantissa: BigInt,
    exponent: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        BigFloat {
            mantissa: BigInt::one(),
            exponent: 0,
        }
    }

    /// Builds `mantissa * 2^exponent`, normalizing the representation.
    pub fn from_parts(mantissa: BigInt, exponent: i64) -> Self {
        let mut v = BigFloat { mantissa, exponent };
        v.normalize();
        v
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_parts(BigInt::from(v), 0)
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_parts(BigInt::from(v), 0)
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let m = BigInt::from(m);
        Some(Self::from_parts(if negative { -m } else { m }, e))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Significant bits in the mantissa.
    pub fn precision_bits(&self) -> u64 {
        self.mantissa.bits()
    }

    /// `floor(log2 |x|)`, or `None` for zero.
    pub fn log2_floor(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mantissa.bits() as i64 - 1 + self.exponent)
        }
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.mantissa.magnitude().trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mantissa >>= tz as usize;
            self.exponent += tz as i64;
        }
    }

    pub fn neg(&self) -> Self {
        BigFloat {
            mantissa: -self.mantissa.clone(),
            exponent: self.exponent,
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    pub fn mul(&self, other: &BigFloat) -> BigFloat {
        // Product of odd mantissas is odd: already canonical.
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        BigFloat {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
        }
    }

    pub fn mul_u64(&self, k: u64) -> BigFloat {
        Self::from_parts(&self.mantissa * BigInt::from(k), self.exponent)
    }

    pub fn add(&self, other: &BigFloat) -> BigFloat {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << (self.exponent - e) as usize;
        let b = &other.mantissa << (other.exponent - e) as usize;
        Self::from_parts(a + b, e)
    }

    pub fn sub(&self, other: &BigFloat) -> BigFloat {
        self.add(&other.neg())
    }

    /// Rounds to at most `bits` significant bits, nearest with ties to even.
    pub fn round(&self, bits: u32) -> BigFloat {
        assert!(bits > 0, "precision must be positive");
        let len = self.mantissa.bits();
        if len <= bits as u64 {
            return self.clone();
        }
        let shift = (len - bits as u64) as usize;
        let mag = self.mantissa.magnitude();
        let mut q: BigUint = mag >> shift;
        let rem: BigUint = mag - (&q << shift);
        let half = BigUint::one() << (shift - 1);
        match rem.cmp(&half) {
            Ordering::Greater => q += 1u32,
            Ordering::Equal if q.is_odd() => q += 1u32,
            _ => {}
        }
        let sign = if self.mantissa.is_negative() {
            Sign::Minus
        } else {
            Sign::Plus
        };
        Self::from_parts(BigInt::from_biguint(sign, q), self.exponent + shift as i64)
    }

    pub fn mul_round(&self, other: &BigFloat, bits: u32) -> BigFloat {
        self.mul(other).round(bits)
    }

    /// Fractional part `x - floor(x)` as a 128-bit binary fraction,
    /// rounded to nearest. A result that rounds up to 1 wraps to 0.
    pub fn frac_u128(&self) -> u128 {
        if self.exponent >= 0 || self.is_zero() {
            return 0;
        }
        let scale_bits = (-self.exponent) as usize;
        let modulus = BigInt::one() << scale_bits;
        // mod_floor keeps the residue non-negative for negative values.
        let r = self.mantissa.mod_floor(&modulus);
        let r = r.magnitude();
        let scaled: BigUint = if scale_bits <= 128 {
            r << (128 - scale_bits)
        } else {
            let shift = scale_bits - 128;
            let q: BigUint = r >> shift;
            let rem: BigUint = r - (&q << shift);
            let half = BigUint::one() << (shift - 1);
            if rem >= half {
                q + 1u32
            } else {
                q
            }
        };
        let digits = scaled.to_u64_digits();
        let lo = digits.first().copied().unwrap_or(0) as u128;
        let hi = digits.get(1).copied().unwrap_or(0) as u128;
        // A carry into bit 128 is dropped: frac == 1 wraps to 0.
        lo | (hi << 64)
    }

    /// Nearest `f64` (may lose precision or overflow to infinity).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53);
        let m = r.mantissa.to_f64().unwrap_or(f64::NAN);
        let e = r.exponent;
        // Split the scaling so intermediate powers stay finite.
        let e1 = e.clamp(-1000, 1000);
        let e2 = (e - e1).clamp(-1000, 1000);
        m * 2f64.powi(e1 as i32) * 2f64.powi(e2 as i32)
    }

    /// Exact hexadecimal form `[-]0x<hex mantissa>p<exponent>`.
    pub fn to_hex(&self) -> String {
        let sign = if self.is_negative() { "-" } else { "" };
        format!(
            "{}0x{}p{}",
            sign,
            self.mantissa.magnitude().to_str_radix(16),
            self.exponent
        )
    }

    fn parse_hex(s: &str) -> Result<Self, ParseBigFloatError> {
        let bad = || ParseBigFloatError::Invalid(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let body = body
            .strip_prefix("0x")
            .or_else(|| body.strip_prefix("0X"))
            .ok_or_else(bad)?;
        let (m, e) = match body.find(['p', 'P']) {
            Some(i) => (&body[..i], &body[i + 1..]),
            None => (body, "0"),
        };
        let m = BigUint::parse_bytes(m.as_bytes(), 16).ok_or_else(bad)?;
        let e: i64 = e.parse().map_err(|_| bad())?;
        let m = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, m);
        Ok(Self::from_parts(m, e))
    }

    /// Parses a decimal literal. Dyadic values are exact; others are
    /// rounded to `bits` significant bits.
    pub fn parse_decimal(s: &str, bits: u32) -> Result<Self, ParseBigFloatError> {
        let bad = || ParseBigFloatError::Invalid(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (num_part, exp10) = match body.find(['e', 'E']) {
            Some(i) => (
                &body[..i],
                body[i + 1..].parse::<i64>().map_err(|_| bad())?,
            ),
            None => (body, 0),
        };
        let (int_part, frac_part) = match num_part.find('.') {
            Some(i) => (&num_part[..i], &num_part[i + 1..]),
            None => (num_part, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        let mut den = BigUint::one();
        let exp10 = exp10 - frac_part.len() as i64;
        if exp10.abs() > 100_000 {
            return Err(bad());
        }
        if exp10 >= 0 {
            num *= BigUint::from(10u32).pow(exp10 as u32);
        } else {
            den = BigUint::from(10u32).pow((-exp10) as u32);
        }
        let sign = if neg { Sign::Minus } else { Sign::Plus };
        Ok(Self::from_ratio_big(BigInt::from_biguint(sign, num), &den, bits))
    }

    /// `num / den` rounded to `bits` significant bits (exact when dyadic).
    pub fn from_ratio(num: i64, den: u64, bits: u32) -> Self {
        assert!(den > 0, "zero denominator");
        Self::from_ratio_big(BigInt::from(num), &BigUint::from(den), bits)
    }

    fn from_ratio_big(num: BigInt, den: &BigUint, bits: u32) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        // Pull the power of two out of the denominator first.
        let tz = den.trailing_zeros().unwrap_or(0);
        let odd: BigUint = den >> tz as usize;
        let (q, r) = num.magnitude().div_rem(&odd);
        if r.is_zero() {
            let m = BigInt::from_biguint(num.sign(), q);
            return Self::from_parts(m, -(tz as i64)).round(bits);
        }
        // Long division with a sticky bit so ties cannot be misjudged.
        let shift = (bits as u64 + 2 + odd.bits()).saturating_sub(num.bits()) as usize;
        let (q, r) = (num.magnitude() << shift).div_rem(&odd);
        let mant = (q << 1usize) | BigUint::from(u8::from(!r.is_zero()));
        let m = BigInt::from_biguint(num.sign(), mant);
        Self::from_parts(m, -(tz as i64) - shift as i64 - 1).round(bits)
    }
}

impl FromStr for BigFloat {
    type Err = ParseBigFloatError;

    /// Accepts `[-]0x<hex>p<exp>` (exact) or a decimal literal.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseBigFloatError::Empty);
        }
        let unsigned = s.trim_start_matches(['-', '+']);
        if unsigned.starts_with("0x") || unsigned.starts_with("0X") {
            Self::parse_hex(s)
        } else {
            Self::parse_decimal(s, DECIMAL_PARSE_BITS)
        }
    }
}

impl fmt::Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigFloat({} ~ {:e})", self.to_hex(), self.to_f64())
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.sub(other);
        d.mantissa.sign().cmp(&Sign::NoSign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip() {
        for x in [0.0, 1.0, -1.5, 0.1, 1e-300, 5e-324, 1.7e308, 3.0] {
            let b = BigFloat::from_f64(x).unwrap();
            assert_eq!(b.to_f64(), x, "{x}");
        }
        assert!(BigFloat::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn canonical_form() {
        let a = BigFloat::from_f64(6.0).unwrap();
        assert_eq!(a.mantissa(), &BigInt::from(3));
        assert_eq!(a.exponent(), 1);
        assert_eq!(a, BigFloat::from_parts(BigInt::from(12), -1));
    }

    #[test]
    fn round_ties_to_even() {
        // 1011b -> 101|1, tie, odd -> 110b
        let x = BigFloat::from_i64(11);
        assert_eq!(x.round(3).to_f64(), 12.0);
        let x = BigFloat::from_i64(9);
        assert_eq!(x.round(3).to_f64(), 8.0);
        let x = BigFloat::from_i64(-13);
        assert_eq!(x.round(3).to_f64(), -12.0);
    }

    #[test]
    fn frac_of_negative() {
        let x = BigFloat::from_f64(-0.25).unwrap();
        assert_eq!(x.frac_u128(), 3u128 << 126);
        let x = BigFloat::from_f64(-3.0).unwrap();
        assert_eq!(x.frac_u128(), 0);
    }

    #[test]
    fn frac_rounds_deep_bits() {
        // 3 * 2^-129 sits halfway between 2^-128 and 2^-127
        let x = BigFloat::from_parts(BigInt::from(3), -129);
        assert_eq!(x.frac_u128(), 2);
        let x = BigFloat::from_parts(BigInt::from(1), -130);
        assert_eq!(x.frac_u128(), 0);
    }

    #[test]
    fn parse_forms() {
        let a: BigFloat = "0.375".parse().unwrap();
        assert_eq!(a.to_f64(), 0.375);
        assert_eq!(a.to_hex(), "0x3p-3");
        let b: BigFloat = a.to_hex().parse().unwrap();
        assert_eq!(a, b);
        let c: BigFloat = "-1.25e2".parse().unwrap();
        assert_eq!(c.to_f64(), -125.0);
        let third: BigFloat = "0.1".parse().unwrap();
        assert_eq!(third.precision_bits(), DECIMAL_PARSE_BITS as u64);
        assert_eq!(third.to_f64(), 0.1);
        assert!("abc".parse::<BigFloat>().is_err());
        assert!("".parse::<BigFloat>().is_err());
        assert!("1.2.3".parse::<BigFloat>().is_err());
        let third = BigFloat::from_ratio(1, 3, 64);
        assert_eq!(third.precision_bits(), 64);
        assert!((third.to_f64() - 1.0 / 3.0).abs() < 1e-17);
        assert_eq!(BigFloat::from_ratio(-3, 8, 10).to_f64(), -0.375);
    }

    #[test]
    fn ordering() {
        let a = BigFloat::from_f64(1.5).unwrap();
        let b = BigFloat::from_f64(-2.0).unwrap();
        assert!(b < a);
        assert_eq!(a.cmp(&a.clone()), Ordering::Equal);
    }
}
