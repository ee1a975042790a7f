//! Exact rational numbers and their textual forms.

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational used for every exponent and slack bound.
pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("empty number")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("number `{0}` is out of range")]
    Overflow(String),
}

/// Builds `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Builds the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// Parses `p`, `p/q` or a finite decimal such as `-0.45` into an exact rational.
///
/// ```
/// use dyadsum::rational::{parse_rational, rat};
/// assert_eq!(parse_rational("-0.45").unwrap(), rat(-9, 20));
/// assert_eq!(parse_rational("5/8").unwrap(), rat(5, 8));
/// ```
pub fn parse_rational(text: &str) -> Result<Rational, RationalError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(RationalError::Empty);
    }
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_decimal(num.trim(), t)?;
        let d = parse_decimal(den.trim(), t)?;
        if d.is_zero() {
            return Err(RationalError::ZeroDenominator(t.to_string()));
        }
        return Ok(n / d);
    }
    parse_decimal(t, t)
}

fn parse_decimal(s: &str, whole: &str) -> Result<Rational, RationalError> {
    let malformed = || RationalError::Malformed(whole.to_string());
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(malformed());
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(malformed());
    }
    let overflow = || RationalError::Overflow(whole.to_string());
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| overflow())? };
    let denom = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(overflow)?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Formats as `p/q`, or `p` for integers.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy conversion used only at the floating-point boundary.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// Least common multiple of the denominators.
pub fn lcm_denominators<'a>(rs: impl IntoIterator<Item = &'a Rational>) -> i64 {
    rs.into_iter().fold(1i64, |acc, r| acc.lcm(r.denom()))
}

/// Floor of a rational as an integer.
pub fn floor_i64(r: &Rational) -> i64 {
    r.floor().to_integer()
}

/// Ceiling of a rational as an integer.
pub fn ceil_i64(r: &Rational) -> i64 {
    r.ceil().to_integer()
}

/// Absolute value.
pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

/// The closest rational with denominator at most `max_den` to a float.
pub fn approximate(x: f64, max_den: i64) -> Rational {
    let mut best = int(x.round() as i64);
    let mut err = (x - to_f64(&best)).abs();
    for d in 1..=max_den {
        let n = (x * d as f64).round() as i64;
        let cand = rat(n, d);
        let e = (x - to_f64(&cand)).abs();
        if e + 1e-15 < err {
            best = cand;
            err = e;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.05").unwrap(), rat(1, 20));
        assert_eq!(parse_rational("-.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("-2/4").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("0.5/2").unwrap(), rat(1, 4));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("-").is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt_rational(&rat(-9, 20)), "-9/20");
        assert_eq!(fmt_rational(&int(4)), "4");
    }

    #[test]
    fn approximation_recovers_grid_values() {
        assert_eq!(approximate(-0.45, 100), rat(-9, 20));
        assert_eq!(approximate(0.55, 100), rat(11, 20));
    }
}
