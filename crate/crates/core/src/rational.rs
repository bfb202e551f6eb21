//! Exact integer/rational helpers shared by the engine, the bounds and the cache.
//!
//! Rationals are `num_rational::BigRational`, which is kept in lowest terms with
//! a positive denominator by construction.

use std::f64::consts::LN_2;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational;

use crate::error::{Error, Result};

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `n!!` with the convention `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `1/(24^g g!)`, the value of the top ψ power on the one-pointed space.
pub fn psi_top(g: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(24).pow(g) * factorial(g))
}

/// Canonical rendering: `p/q`, or `p` when the denominator is 1.
pub fn format(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_decimal_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Strict parser for the cache value grammar: `<int>` or `<int>/<positive int>`
/// already in lowest terms.
pub fn parse_canonical(s: &str) -> std::result::Result<BigRational, String> {
    match s.split_once('/') {
        None => parse_decimal_int(s)
            .map(BigRational::from_integer)
            .ok_or_else(|| format!("'{s}' is not a decimal integer")),
        Some((n, d)) => {
            let num = parse_decimal_int(n).ok_or_else(|| format!("bad numerator in '{s}'"))?;
            if d.starts_with('-') {
                return Err(format!("denominator in '{s}' must be positive"));
            }
            let den = parse_decimal_int(d).ok_or_else(|| format!("bad denominator in '{s}'"))?;
            if den <= BigInt::zero() {
                return Err(format!("denominator in '{s}' must be positive"));
            }
            if den.is_one() {
                return Err(format!("'{s}' should be written without '/1'"));
            }
            if !num.gcd(&den).is_one() {
                return Err(format!("'{s}' is not in lowest terms"));
            }
            Ok(BigRational::new_raw(num, den))
        }
    }
}

/// Lenient parser for command-line input: accepts `p/q` (any terms), integers
/// and plain decimals such as `11.2`.
pub fn parse_lenient(s: &str) -> Result<BigRational> {
    let bad = || Error::Domain(format!("cannot parse '{s}' as a rational number"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let num = parse_decimal_int(n.trim()).ok_or_else(bad)?;
        let den = parse_decimal_int(d.trim()).ok_or_else(bad)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((i, f)) = s.split_once('.') {
        let neg = i.starts_with('-');
        let whole = if i.is_empty() || i == "-" {
            BigInt::zero()
        } else {
            parse_decimal_int(i).ok_or_else(bad)?.abs()
        };
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = BigInt::from(10).pow(f.len() as u32);
        let frac: BigInt = f.parse().map_err(|_| bad())?;
        let v = BigRational::new(whole * &scale + frac, scale);
        return Ok(if neg { -v } else { v });
    }
    parse_decimal_int(s).map(BigRational::from_integer).ok_or_else(bad)
}

/// `p·2^s / q` truncated to an integer, with `s` picked so the quotient carries
/// about 64 significant bits. Returns the quotient and `s`.
fn scaled_quotient(p: &BigInt, q: &BigInt) -> (BigInt, i64) {
    let s = q.bits() as i64 - p.bits() as i64 + 64;
    let quot = if s >= 0 {
        (p << s as usize) / q
    } else {
        p / (q << (-s) as usize)
    };
    (quot, s)
}

/// Natural logarithm of a positive rational of arbitrary size.
///
/// Numerator and denominator are reduced to a 64-bit mantissa and a binary
/// exponent, so the result keeps full `f64` relative precision even when the
/// operands have millions of bits. Values close to 1 go through `ln_1p` to avoid
/// cancellation.
pub fn ln(r: &BigRational) -> Result<f64> {
    if !r.is_positive() {
        return Err(Error::Domain(format!("logarithm of non-positive value {}", format(r))));
    }
    let (p, q) = (r.numer(), r.denom());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let two = int(2);
    if *r > half && *r < two {
        let diff = p - q;
        if diff.is_zero() {
            return Ok(0.0);
        }
        let (quot, s) = scaled_quotient(&diff.abs(), q);
        let x = quot.to_f64().unwrap_or(f64::NAN) * (-s as f64).exp2();
        let x = if diff.sign() == Sign::Minus { -x } else { x };
        return Ok(x.ln_1p());
    }
    let (quot, s) = scaled_quotient(p, q);
    let mantissa = quot.to_f64().unwrap_or(f64::NAN) * (-64f64).exp2();
    Ok(mantissa.ln() + (64 - s) as f64 * LN_2)
}
