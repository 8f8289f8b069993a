//! Exact fraction helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"a/b"`, `"a"` or an exact decimal such as `"-0.125"`.
pub fn parse_fraction(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, decimals)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), decimals);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal {s:?}")));
        }
        let n: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?;
        let d = num_traits::pow(BigInt::from(10), decimals.len());
        let r = Rational::new(n, d);
        return Ok(if negative { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))?;
    Ok(Rational::from_integer(n))
}

/// Canonical text form: `"a/b"`, or `"a"` when the denominator is one.
pub fn format_fraction(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator beyond f64 range; fall back to scaled division
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// by continued-fraction convergents and the final semiconvergent.
pub fn approximate(x: f64, max_den: u64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("non-finite value {x}")));
    }
    if max_den == 0 {
        return Err(Error::InvalidArgument("denominator bound must be positive".into()));
    }
    let negative = x < 0.0;
    let target = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut rem = target;
    let max_den = max_den as u128;
    loop {
        let a = rem.floor();
        if a > 1e30 {
            break;
        }
        let a = a as u128;
        let q2 = a * q1 + q0;
        if q2 > max_den {
            // semiconvergent with the largest admissible partial quotient
            let k = (max_den - q0) / q1;
            let (ps, qs) = (k * p1 + p0, k * q1 + q0);
            let cand = ps as f64 / qs as f64;
            let best = p1 as f64 / q1 as f64;
            if (cand - target).abs() < (best - target).abs() {
                p1 = ps;
                q1 = qs;
            }
            break;
        }
        let p2 = a * p1 + p0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac_part = rem - a as f64;
        if frac_part.abs() < 1e-18 {
            break;
        }
        rem = 1.0 / frac_part;
    }
    let r = Rational::new(BigInt::from(p1), BigInt::from(q1));
    Ok(if negative { -r } else { r })
}

/// Reduces a rational phase (fraction of a full turn) into `[0, 1)`.
pub fn reduce_turn(phase: &Rational) -> Rational {
    let floor = phase.floor();
    let r = phase - floor;
    if r.is_negative() {
        r + Rational::one()
    } else {
        r
    }
}

pub mod serde_fraction {
    //! `#[serde(with = ...)]` adapter storing a rational as a fraction string.
    use super::{format_fraction, parse_fraction, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_fraction(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_fraction(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_fraction("3/6").unwrap(), frac(1, 2));
        assert_eq!(parse_fraction("-7").unwrap(), int(-7));
        assert_eq!(parse_fraction("-0.125").unwrap(), frac(-1, 8));
        assert_eq!(parse_fraction(" 4 / -8 ").unwrap(), frac(-1, 2));
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("abc").is_err());
        assert!(parse_fraction("").is_err());
    }

    #[test]
    fn formats_integers_without_denominator() {
        assert_eq!(format_fraction(&int(5)), "5");
        assert_eq!(format_fraction(&frac(4, 10)), "2/5");
    }

    #[test]
    fn approximation_respects_bound() {
        let r = approximate(std::f64::consts::PI, 1000).unwrap();
        assert_eq!(r, frac(355, 113));
        let r = approximate(0.5, 10).unwrap();
        assert_eq!(r, frac(1, 2));
        let r = approximate(-2.0f64.sqrt(), 1_000_000).unwrap();
        assert!(r.denom() <= &BigInt::from(1_000_000));
        assert!((to_f64(&r) + 2.0f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn turns_reduce_into_unit_interval() {
        assert_eq!(reduce_turn(&frac(5, 4)), frac(1, 4));
        assert_eq!(reduce_turn(&frac(-1, 4)), frac(3, 4));
        assert_eq!(reduce_turn(&int(1)), int(0));
    }

    #[test]
    fn lcm_is_minimal_common_denominator() {
        let v = [frac(9, 25), frac(16, 25), frac(1, 10)];
        assert_eq!(lcm_of_denominators(&v), BigInt::from(50));
    }
}
